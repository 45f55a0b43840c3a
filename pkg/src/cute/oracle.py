"""Brute-force reference over the explicit N-molecule product basis.

Basis elements are ``(sector, configuration)``: sector 0 holds the photon with
every molecule electronically in the ground state, sector ``i`` (1-based) has
molecule ``i`` excited.  ``configuration`` lists one vibrational level per
molecule (the excited level for the excited molecule).  Ordering is
sector-major with configurations in lexicographic order.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from .dynamics import StateVector, TimeGrid, propagate, initial_photonic_state
from .exceptions import DimensionCap, NotSymmetric
from .hamiltonian import CavitySpec, HamiltonianMatrix, _assemble, build
from .observables import configuration_state
from .symbasis import CuteBasis, SpeciesSpec, enumerate_basis, multiplicity
from .vibsolver import VibrationalBasis

__all__ = [
    "OracleBasis",
    "build_oracle",
    "permutation_matrix",
    "symmetrize",
    "unsymmetrize",
    "compare_dynamics",
    "ComparisonReport",
    "leakage_scaling",
    "LeakageScaling",
    "MAX_MOLECULES",
    "MAX_DIMENSION",
]

MAX_MOLECULES = 6
MAX_DIMENSION = 100_000


@dataclass
class OracleBasis:
    n_molecules: int
    m_g: int
    m_e: int
    elements: List[Tuple[int, Tuple[int, ...]]] = field(repr=False, default_factory=list)

    def __post_init__(self):
        if not self.elements:
            N, mg, me = self.n_molecules, self.m_g, self.m_e
            els = [(0, c) for c in itertools.product(range(mg), repeat=N)]
            for i in range(1, N + 1):
                ranges = [range(me) if p == i - 1 else range(mg) for p in range(N)]
                els += [(i, c) for c in itertools.product(*ranges)]
            self.elements = els
        self.index_of = {e: k for k, e in enumerate(self.elements)}

    @staticmethod
    def dimension_for(n_molecules: int, m_g: int, m_e: int) -> int:
        return m_g**n_molecules + n_molecules * m_e * m_g ** (n_molecules - 1)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def ground_photonic(self):
        return (0, (0,) * self.n_molecules)


def build_oracle(n_molecules: int, vib: VibrationalBasis, g: float, omega_c: float,
                 max_dimension: int = MAX_DIMENSION) -> HamiltonianMatrix:
    """Exact first-manifold Hamiltonian for ``n_molecules`` explicit molecules."""
    N = int(n_molecules)
    if N < 1:
        raise ValueError("need at least one molecule")
    dim = OracleBasis.dimension_for(N, vib.m_g, vib.m_e)
    if N > MAX_MOLECULES or dim > max_dimension:
        raise DimensionCap(f"oracle with N={N}, dimension {dim} exceeds caps "
                           f"(N <= {MAX_MOLECULES}, dimension <= {max_dimension})")
    CavitySpec(omega_c)
    basis = OracleBasis(N, vib.m_g, vib.m_e)
    wg, weg, fc = vib.omega_g, vib.omega_eg, vib.fc
    diag = np.empty(dim)
    rows, cols, vals = [], [], []
    for k, (sector, cfg) in enumerate(basis.elements):
        if sector == 0:
            diag[k] = omega_c + sum(wg[c] for c in cfg)
            continue
        p = sector - 1
        diag[k] = weg[cfg[p]] + sum(wg[c] for q, c in enumerate(cfg) if q != p)
        for kg in range(vib.m_g):
            amp = fc[cfg[p], kg]
            if amp == 0.0:
                continue
            partner = basis.index_of[(0, cfg[:p] + (kg,) + cfg[p + 1:])]
            rows.append(partner)
            cols.append(k)
            vals.append(g * amp)
    h = _assemble(np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
                  np.array(vals), diag, basis)
    return h


def permutation_matrix(basis: OracleBasis, a: int, b: int) -> sparse.csr_matrix:
    """Operator exchanging molecules ``a`` and ``b`` (0-based)."""
    n = len(basis)
    target = np.empty(n, dtype=np.int64)
    swap = {a + 1: b + 1, b + 1: a + 1}
    for k, (sector, cfg) in enumerate(basis.elements):
        c = list(cfg)
        c[a], c[b] = c[b], c[a]
        target[k] = basis.index_of[(swap.get(sector, sector), tuple(c))]
    return sparse.csr_matrix((np.ones(n), (target, np.arange(n))), shape=(n, n))


def _mapping(obasis: OracleBasis, cbasis: CuteBasis) -> Tuple[np.ndarray, np.ndarray]:
    """Symmetric-state index (-1 when truncated away) and multiplicity per oracle element."""
    idx = np.empty(len(obasis), dtype=np.int64)
    mult = np.empty(len(obasis))
    for k, (sector, cfg) in enumerate(obasis.elements):
        s = configuration_state(sector, cfg)
        idx[k] = cbasis.index_of.get(s, -1)
        mult[k] = multiplicity(s, cbasis.species)
    return idx, mult


def symmetric_species(obasis: OracleBasis, vib: VibrationalBasis, g: float,
                      label: str = "M") -> SpeciesSpec:
    return SpeciesSpec(label, vib, n_molecules=obasis.n_molecules, g=g)


def _check_symmetric(vec: np.ndarray, obasis: OracleBasis, tol: float) -> None:
    N = obasis.n_molecules
    scale = max(np.linalg.norm(vec), 1.0)
    for a, b in itertools.combinations(range(N), 2):
        err = np.linalg.norm(permutation_matrix(obasis, a, b) @ vec - vec)
        if err > tol * scale:
            raise NotSymmetric(f"vector changes by {err:.3e} under exchange of molecules {a}, {b}")


def symmetrize(vec, obasis: OracleBasis, cbasis: CuteBasis, tol: float = 1e-8,
               check: bool = True) -> StateVector:
    """Map a permutation-symmetric oracle vector onto the symmetric basis.

    Coefficients are summed over each equivalence class and divided by the
    square root of its size; for a symmetric input this is the class
    amplitude times the renormalisation factor.  Classes absent from
    ``cbasis`` are dropped.
    """
    v = np.asarray(vec.amplitudes if isinstance(vec, StateVector) else vec, dtype=complex)
    if check:
        _check_symmetric(v, obasis, tol)
    idx, mult = _mapping(obasis, cbasis)
    keep = idx >= 0
    out = np.zeros(len(cbasis), dtype=complex)
    np.add.at(out, idx[keep], v[keep] / np.sqrt(mult[keep]))
    return StateVector(out, cbasis)


def unsymmetrize(vec, obasis: OracleBasis, cbasis: CuteBasis) -> StateVector:
    """Inverse of :func:`symmetrize` on the symmetric subspace."""
    v = np.asarray(vec.amplitudes if isinstance(vec, StateVector) else vec, dtype=complex)
    idx, mult = _mapping(obasis, cbasis)
    out = np.where(idx >= 0, v[np.maximum(idx, 0)] / np.sqrt(mult), 0.0)
    return StateVector(out, obasis)


def _symmetrize_many(amps: np.ndarray, idx: np.ndarray, mult: np.ndarray, dim: int) -> np.ndarray:
    keep = idx >= 0
    proj = sparse.csr_matrix((1.0 / np.sqrt(mult[keep]), (idx[keep], np.nonzero(keep)[0])),
                             shape=(dim, amps.shape[1]))
    return (proj @ amps.T).T


@dataclass
class ComparisonReport:
    n_molecules: int
    kappa: int
    times_fs: List[float]
    distance: List[float]
    leakage: List[float]
    max_distance: float
    max_leakage: float

    def to_json(self, path=None) -> str:
        text = json.dumps(asdict(self), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def compare_dynamics(n_molecules: int, vib: VibrationalBasis, g: float, omega_c: float,
                     kappa: int, times) -> ComparisonReport:
    """Run oracle and symmetric engine from the photonic state and compare.

    ``distance`` is the 2-norm difference between the symmetrised oracle state
    and the order-``kappa`` state (zero-padded to the exact symmetric basis);
    ``leakage`` is the oracle population carried by classes with more than
    ``kappa`` phonon carriers.
    """
    N = int(n_molecules)
    h_or = build_oracle(N, vib, g, omega_c)
    obasis: OracleBasis = h_or.basis
    species = [SpeciesSpec("M", vib, n_molecules=N, g=g)]
    exact = enumerate_basis(species, N)
    trunc = enumerate_basis(species, min(kappa, N))
    h_cut = build(trunc, CavitySpec(omega_c))

    traj_or = propagate(h_or, initial_photonic_state(obasis), times)
    traj_cut = propagate(h_cut, initial_photonic_state(trunc), times)

    idx, mult = _mapping(obasis, exact)
    sym = _symmetrize_many(traj_or.amplitudes, idx, mult, len(exact))
    padded = np.zeros_like(sym)
    padded[:, :len(trunc)] = traj_cut.amplitudes  # lower orders are a prefix
    dist = np.linalg.norm(sym - padded, axis=1)
    outside = exact.carrier_counts() > kappa
    leak = np.sum(np.abs(sym[:, outside]) ** 2, axis=1)
    return ComparisonReport(N, kappa, [float(t) for t in traj_or.times_fs],
                            [float(x) for x in dist], [float(x) for x in leak],
                            float(dist.max()), float(leak.max()))


@dataclass
class LeakageScaling:
    n_values: List[int]
    leakage: List[float]
    slope: float
    kappa: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def leakage_scaling(n_values: Sequence[int], vib: VibrationalBasis, G: float, omega_c: float,
                    times, kappa: int = 0) -> LeakageScaling:
    """Population beyond ``kappa`` carriers versus N at fixed collective coupling.

    Runs the exact symmetric engine (``kappa = N``) and reports the maximum
    over ``times`` of the leaked population, then the log-log slope.
    """
    leaks = []
    for N in n_values:
        sp = SpeciesSpec("M", vib, n_molecules=int(N), g=G / math.sqrt(N))
        basis = enumerate_basis([sp], int(N))
        h = build(basis, CavitySpec(omega_c))
        traj = propagate(h, initial_photonic_state(basis), times)
        leaks.append(float(np.max(traj.populations(basis.carrier_counts() > kappa))))
    slope = float(np.polyfit(np.log(n_values), np.log(leaks), 1)[0])
    return LeakageScaling([int(n) for n in n_values], leaks, slope, kappa)
