"""Observables of symmetric-basis trajectories.

The polariton/dark-manifold decomposition is the thermodynamic-limit
zeroth-order one: the bright exciton of species ``j`` with the nuclei left in
the ground vibrational function (the *FC wavepacket*) is the only excitonic
state the photon talks to, and whatever excited-state amplitude is orthogonal
to it is counted as dark.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import linalg

from .dynamics import StateVector, TrajectoryRecord
from .exceptions import NonConverged, OrderMismatch, OrderTooHigh
from .hamiltonian import CavitySpec, HamiltonianMatrix
from .symbasis import CuteBasis, SymmetricState, multiplicity

__all__ = [
    "PolaritonProjector",
    "PopulationRecord",
    "excited_position_expectation",
    "fc_overlap",
    "fc_population",
    "photon_population",
    "polariton_population",
    "dark_manifold_population",
    "species_excited_population",
    "compute_populations",
    "statistical_yield",
    "statistical_yields",
    "fc_statistical_yields",
    "fc_point_matrix",
    "ManyBodyReconstruction",
    "reconstruct_manybody",
]


@dataclass(frozen=True)
class PolaritonProjector:
    """``|P> = c0 |1> + c1 |B>`` with ``|B>`` the bright FC exciton of one species."""

    c0: complex
    c1: complex
    species: Optional[str] = None

    def __post_init__(self):
        n = abs(self.c0) ** 2 + abs(self.c1) ** 2
        if abs(n - 1.0) > 1e-10:
            raise ValueError(f"projector coefficients must be normalised (|c0|^2+|c1|^2 = {n})")

    @classmethod
    def upper(cls, species: Optional[str] = None) -> "PolaritonProjector":
        return cls(1 / math.sqrt(2), 1 / math.sqrt(2), species)

    @classmethod
    def lower(cls, species: Optional[str] = None) -> "PolaritonProjector":
        return cls(1 / math.sqrt(2), -1 / math.sqrt(2), species)


def _amplitudes(v) -> np.ndarray:
    return v.amplitudes if isinstance(v, StateVector) else np.asarray(v, dtype=complex)


def _require_zeroth(basis: CuteBasis) -> None:
    if basis.kappa != 0:
        raise OrderMismatch(f"defined only on a kappa = 0 basis (got kappa = {basis.kappa})")


def _species_indices(basis: CuteBasis, species) -> List[int]:
    if species is None:
        return list(range(len(basis.species)))
    return [basis.species_index(species)]


def _excitonic_block(basis: CuteBasis, j: int, occupation) -> np.ndarray:
    """Indices of species-``j`` excitonic states ``l = 0..m_e-1`` sharing ``occupation``."""
    m_e = basis.species[j].vib.m_e
    return np.array([basis.index_of[SymmetricState(j, l, occupation)] for l in range(m_e)])


def _empty_occ(basis: CuteBasis):
    return tuple(() for _ in basis.species)


def fc_overlap(v, basis: CuteBasis, species=None) -> complex:
    """``<FC_j|Psi>`` summed over the requested species (zero-carrier block)."""
    a = _amplitudes(v)
    total = 0.0j
    for j in _species_indices(basis, species):
        idx = _excitonic_block(basis, j, _empty_occ(basis))
        total += basis.species[j].vib.fc[:, 0] @ a[idx]
    return total


def fc_population(v, basis: CuteBasis, species=None) -> float:
    """``|<FC_j|Psi>|^2``, summed over species when ``species`` is None."""
    _require_zeroth(basis)
    a = _amplitudes(v)
    return float(sum(abs(fc_overlap(a, basis, j)) ** 2 for j in _species_indices(basis, species)))


def photon_population(v, basis: CuteBasis) -> float:
    a = _amplitudes(v)
    return float(np.sum(np.abs(a[basis.photonic_mask()]) ** 2))


def excited_position_expectation(v, basis: CuteBasis, species) -> float:
    """``<Psi|q P_e|Psi>`` for one species in the effective-molecule picture.

    Divide by ``N`` for the per-molecule value.
    """
    j = basis.species_index(species)
    vib = basis.species[j].vib
    x = vib.excited_position_matrix()
    a = _amplitudes(v)
    occs = {s.occupation for s in basis.states if s.species == j}
    total = 0.0
    for occ in sorted(occs):
        blk = a[_excitonic_block(basis, j, occ)]
        total += float(np.real(blk.conj() @ x @ blk))
    return total


def polariton_population(v, basis: CuteBasis, projector: PolaritonProjector) -> float:
    """``|<P|Psi>|^2`` with ``|P> = c0|1> + c1|FC_j>``."""
    _require_zeroth(basis)
    if projector.species is None and len(basis.species) > 1:
        raise ValueError("name the species of the bright state for multi-species bases")
    a = _amplitudes(v)
    a0 = a[basis.index_of[basis.ground_photonic]]
    amp = np.conj(projector.c0) * a0 + np.conj(projector.c1) * fc_overlap(a, basis, projector.species)
    return float(abs(amp) ** 2)


def dark_manifold_population(v, basis: CuteBasis, species=None) -> float:
    """Excited-state weight orthogonal to the FC wavepacket, ``<psi_e|(1 - |phi_0><phi_0|)|psi_e>``."""
    _require_zeroth(basis)
    a = _amplitudes(v)
    total = 0.0
    for j in _species_indices(basis, species):
        idx = _excitonic_block(basis, j, _empty_occ(basis))
        total += float(np.sum(np.abs(a[idx]) ** 2)) - abs(basis.species[j].vib.fc[:, 0] @ a[idx]) ** 2
    return total


def species_excited_population(trajectory: TrajectoryRecord, species) -> np.ndarray:
    basis = trajectory.basis
    return trajectory.populations(basis.species_mask(species))


@dataclass
class PopulationRecord:
    times_fs: np.ndarray
    photon: np.ndarray
    fc: Optional[np.ndarray] = None
    dark: Optional[np.ndarray] = None
    species: Dict[str, np.ndarray] = field(default_factory=dict)
    polaritons: Dict[str, np.ndarray] = field(default_factory=dict)

    def columns(self) -> Dict[str, np.ndarray]:
        cols = {"photon": self.photon}
        if self.fc is not None:
            cols["fc"] = self.fc
            cols["dark"] = self.dark
        cols.update({f"excited_{k}": v for k, v in self.species.items()})
        cols.update({f"polariton_{k}": v for k, v in self.polaritons.items()})
        return cols

    def to_csv(self, path) -> None:
        cols = self.columns()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_fs"] + list(cols))
            for i, t in enumerate(self.times_fs):
                w.writerow([repr(float(t))] + [repr(float(c[i])) for c in cols.values()])


def compute_populations(trajectory: TrajectoryRecord,
                        projectors: Optional[Dict[str, PolaritonProjector]] = None) -> PopulationRecord:
    """Photon and per-species populations; FC/dark split and polaritons at ``kappa = 0``."""
    basis: CuteBasis = trajectory.basis
    amps = trajectory.amplitudes
    rec = PopulationRecord(trajectory.times_fs, trajectory.populations(basis.photonic_mask()))
    for sp in basis.species:
        rec.species[sp.label] = species_excited_population(trajectory, sp.label)
    if basis.kappa == 0:
        rec.fc = np.array([fc_population(a, basis) for a in amps])
        rec.dark = np.array([dark_manifold_population(a, basis) for a in amps])
        for name, p in (projectors or {}).items():
            rec.polaritons[name] = np.array([polariton_population(a, basis, p) for a in amps])
    elif projectors:
        raise OrderMismatch("polariton projectors need a kappa = 0 basis")
    return rec


def _photon_weights(h: HamiltonianMatrix) -> np.ndarray:
    basis = h.basis
    _, vectors = h.eigh()
    return np.abs(vectors[basis.index_of[basis.ground_photonic]]) ** 2


def statistical_yield(h: HamiltonianMatrix, species) -> float:
    """Long-time population of ``species`` after a photonic start, from eigenvector weights."""
    basis: CuteBasis = h.basis
    j = basis.species_index(species)
    _, vectors = h.eigh()
    w1 = _photon_weights(h)
    we = np.sum(np.abs(vectors[basis.species_mask(j)]) ** 2, axis=0)
    if not np.all(np.isfinite(we)):
        raise NonConverged("non-finite eigenvector weights")
    return float(w1 @ we)


def statistical_yields(h: HamiltonianMatrix) -> Dict[str, float]:
    return {sp.label: statistical_yield(h, sp.label) for sp in h.basis.species}


def fc_point_matrix(species: Sequence, cavity: CavitySpec) -> np.ndarray:
    """Photon plus one FC exciton per species.

    Species ``j`` enters with its vertical energy and coupling ``G_j |F_j[:, 0]|``.
    """
    n = len(species)
    h = np.zeros((n + 1, n + 1))
    h[0, 0] = cavity.omega_c
    for j, sp in enumerate(species, start=1):
        f = sp.vib.fc[:, 0]
        h[j, j] = sp.vib.fc_energy()
        h[0, j] = h[j, 0] = sp.collective_coupling * float(np.linalg.norm(f))
    return h


def fc_statistical_yields(species: Sequence, cavity: CavitySpec) -> Dict[str, float]:
    """Yields predicted by the FC-point polaritons alone."""
    values, vectors = linalg.eigh(fc_point_matrix(species, cavity))
    w1 = np.abs(vectors[0]) ** 2
    return {sp.label: float(w1 @ np.abs(vectors[j]) ** 2)
            for j, sp in enumerate(species, start=1)}


@dataclass
class ManyBodyReconstruction:
    """Explicit-molecule amplitudes behind a symmetric-basis state.

    ``terms`` lists, per occupied symmetric state, a representative
    configuration and the amplitude every equivalent configuration carries.
    Configurations are tuples of vibrational levels, one per molecule; the
    sector is 0 for the photon and ``i`` (1-based) when molecule ``i`` is
    electronically excited, in which case its entry is the excited level.
    """

    n_molecules: int
    terms: List[dict]

    def amplitude(self, sector: int, configuration: Sequence[int]) -> complex:
        state = configuration_state(sector, configuration)
        for t in self.terms:
            if t["state"] == state:
                return t["amplitude"]
        return 0.0j


def configuration_state(sector: int, configuration: Sequence[int]) -> SymmetricState:
    """Symmetric state containing an explicit single-species configuration."""
    ground = [k for i, k in enumerate(configuration, start=1) if i != sector]
    counts: Dict[int, int] = {}
    for k in ground:
        if k:
            counts[k] = counts.get(k, 0) + 1
    occ = (tuple(sorted(counts.items())),)
    if sector == 0:
        return SymmetricState(None, 0, occ)
    return SymmetricState(0, int(configuration[sector - 1]), occ)


def _representative(state: SymmetricState, n: int) -> tuple:
    levels = [k for k, c in state.occupation[0] for _ in range(c)]
    if state.is_photonic:
        return 0, tuple(levels + [0] * (n - len(levels)))
    rest = levels + [0] * (n - 1 - len(levels))
    return 1, tuple([state.level] + rest)


def reconstruct_manybody(v, basis: CuteBasis, tol: float = 0.0) -> ManyBodyReconstruction:
    """Undo the renormalisation of a single-species ``kappa <= 1`` state.

    Each symmetric amplitude is shared equally by all ``multiplicity``
    explicit configurations, so the explicit amplitude is the symmetric one
    divided by the square root of that count (``1/sqrt(N)`` for a single
    excitonic carrier-free state, ``1/sqrt(N (N - 1))`` for one exciton plus one
    phonon carrier).
    """
    if basis.kappa > 1:
        raise OrderTooHigh(f"reconstruction is limited to kappa <= 1 (got {basis.kappa})")
    if len(basis.species) != 1 or basis.species[0].is_infinite:
        raise ValueError("reconstruction needs a single species with finite N")
    n = basis.species[0].n_molecules
    a = _amplitudes(v)
    terms = []
    for i, s in enumerate(basis.states):
        if abs(a[i]) <= tol:
            continue
        mult = multiplicity(s, basis.species)
        sector, cfg = _representative(s, n)
        terms.append({"state": s, "sector": sector, "configuration": cfg,
                      "multiplicity": mult, "weight": 1.0 / math.sqrt(mult),
                      "amplitude": complex(a[i]) / math.sqrt(mult)})
    return ManyBodyReconstruction(n, terms)
