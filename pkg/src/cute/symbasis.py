"""Permutation-symmetric basis of the first excitation manifold.

A state is either photonic (one photon, every molecule electronically in its
ground state) or excitonic (one molecule of a given species electronically
excited in vibrational level ``l``).  Ground-electronic molecules are tracked
only by how many occupy each vibrational level.  Level 0 (the vibrational
ground state) holds the macroscopic remainder and is never stored; molecules in
levels >= 1 are *phonon carriers*.  Truncation order ``kappa`` bounds the
total number of carriers.

Levels are 0-based throughout.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import BasisTooLarge, UnknownSpecies
from .vibsolver import VibrationalBasis

__all__ = [
    "INFINITE",
    "SpeciesSpec",
    "SymmetricState",
    "CuteBasis",
    "enumerate_basis",
    "count_states",
    "renorm_factor",
    "multiplicity",
    "DEFAULT_MAX_DIMENSION",
]

INFINITE = math.inf
DEFAULT_MAX_DIMENSION = 2_000_000

# per species: sorted tuple of (level, count) with level >= 1 and count >= 1
Occupation = Tuple[Tuple[Tuple[int, int], ...], ...]


@dataclass
class SpeciesSpec:
    """One molecular species: how many, how strongly coupled, which levels.

    Give exactly one of ``g`` (single-molecule coupling) or ``G`` (collective
    coupling ``g * sqrt(N)``).  ``n_molecules=INFINITE`` selects the
    thermodynamic limit, where only ``G`` is meaningful.
    """

    label: str
    vib: VibrationalBasis
    n_molecules: float = INFINITE
    g: Optional[float] = None
    G: Optional[float] = None

    def __post_init__(self):
        if (self.g is None) == (self.G is None):
            raise ValueError(f"species {self.label!r}: give exactly one of g or G")
        n = self.n_molecules
        if n != INFINITE:
            if int(n) != n or n < 1:
                raise ValueError(f"species {self.label!r}: n_molecules must be a positive integer")
            self.n_molecules = int(n)
        elif self.G is None:
            raise ValueError(f"species {self.label!r}: infinite N requires the collective G")

    @property
    def is_infinite(self) -> bool:
        return self.n_molecules == INFINITE

    @property
    def collective_coupling(self) -> float:
        if self.G is not None:
            return float(self.G)
        return float(self.g) * math.sqrt(self.n_molecules)

    @property
    def single_coupling(self) -> float:
        """Single-molecule coupling; zero in the thermodynamic limit."""
        if self.g is not None:
            return float(self.g)
        if self.is_infinite:
            return 0.0
        return float(self.G) / math.sqrt(self.n_molecules)


@dataclass(frozen=True)
class SymmetricState:
    """``species`` is None for the photonic state, else the excited species index."""

    species: Optional[int]
    level: int
    occupation: Occupation

    @property
    def is_photonic(self) -> bool:
        return self.species is None

    @property
    def n_carriers(self) -> int:
        return sum(c for occ in self.occupation for _, c in occ)

    def carriers(self, species: int) -> int:
        return sum(c for _, c in self.occupation[species])

    def sort_key(self):
        kind = -1 if self.species is None else self.species
        return (self.n_carriers, kind, self.level, self.occupation)


def _photonic(occ: Occupation) -> SymmetricState:
    return SymmetricState(None, 0, occ)


def _ground_count(species: SpeciesSpec, state: SymmetricState, j: int) -> int:
    n = species.n_molecules
    return n - (1 if state.species == j else 0)


def multiplicity(state: SymmetricState, species: Sequence[SpeciesSpec]) -> int:
    """Number of explicit molecule assignments represented by ``state``."""
    total = 1
    for j, sp in enumerate(species):
        if sp.is_infinite:
            raise ValueError("multiplicity undefined for infinite N")
        n_ground = _ground_count(sp, state, j)
        counts = [c for _, c in state.occupation[j]]
        n0 = n_ground - sum(counts)
        m = math.factorial(n_ground) // math.factorial(n0)
        for c in counts:
            m //= math.factorial(c)
        if state.species == j:
            m *= sp.n_molecules
        total *= m
    return total


def renorm_factor(state: SymmetricState, species: Sequence[SpeciesSpec]) -> float:
    """Square root of :func:`multiplicity`: the factor mapping explicit to renormalised amplitudes."""
    return math.sqrt(multiplicity(state, species))


def _carrier_slots(species: Sequence[SpeciesSpec]) -> List[Tuple[int, int]]:
    return [(j, k) for j, sp in enumerate(species) for k in range(1, sp.vib.m_g)]


def _occupations(species: Sequence[SpeciesSpec], kappa: int,
                 excited: Optional[int]) -> Iterator[Occupation]:
    slots = _carrier_slots(species)
    caps = [sp.n_molecules - (1 if excited == j else 0) for j, sp in enumerate(species)]
    for size in range(kappa + 1):
        for combo in itertools.combinations_with_replacement(slots, size):
            per = [dict() for _ in species]
            for j, k in combo:
                per[j][k] = per[j].get(k, 0) + 1
            if any(sum(p.values()) > caps[j] for j, p in enumerate(per)):
                continue
            yield tuple(tuple(sorted(p.items())) for p in per)


def _count_multisets(species: Sequence[SpeciesSpec], kappa: int, excited: Optional[int]) -> int:
    # polynomial in total carrier number, built species by species
    total = np.zeros(kappa + 1, dtype=object)
    total[0] = 1
    for j, sp in enumerate(species):
        types = sp.vib.m_g - 1
        cap = sp.n_molecules - (1 if excited == j else 0)
        cap = kappa if cap == INFINITE else min(int(cap), kappa)
        poly = np.zeros(kappa + 1, dtype=object)
        for n in range(cap + 1):
            poly[n] = math.comb(n + types - 1, n) if types > 0 else int(n == 0)
        new = np.zeros(kappa + 1, dtype=object)
        for a in range(kappa + 1):
            if total[a]:
                for b in range(kappa + 1 - a):
                    new[a + b] += total[a] * poly[b]
        total = new
    return int(sum(total))


def count_states(species: Sequence[SpeciesSpec], kappa: int) -> int:
    """Basis dimension at order ``kappa`` without enumerating it."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    dim = _count_multisets(species, kappa, None)
    for j, sp in enumerate(species):
        dim += sp.vib.m_e * _count_multisets(species, kappa, j)
    return dim


@dataclass
class CuteBasis:
    states: List[SymmetricState]
    kappa: int
    species: List[SpeciesSpec]
    index_of: Dict[SymmetricState, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.index_of:
            self.index_of = {s: i for i, s in enumerate(self.states)}
        if len(self.index_of) != len(self.states):
            raise ValueError("duplicate states in basis")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dimension(self) -> int:
        return len(self.states)

    @property
    def labels(self) -> List[str]:
        return [sp.label for sp in self.species]

    def species_index(self, label) -> int:
        if isinstance(label, int) and 0 <= label < len(self.species):
            return label
        for j, sp in enumerate(self.species):
            if sp.label == label:
                return j
        raise UnknownSpecies(f"unknown species {label!r}; have {self.labels}")

    @property
    def ground_photonic(self) -> SymmetricState:
        return _photonic(tuple(() for _ in self.species))

    def photonic_mask(self) -> np.ndarray:
        return np.array([s.is_photonic for s in self.states])

    def species_mask(self, label) -> np.ndarray:
        j = self.species_index(label)
        return np.array([s.species == j for s in self.states])

    def carrier_counts(self) -> np.ndarray:
        return np.array([s.n_carriers for s in self.states])

    def renorm_factors(self) -> np.ndarray:
        return np.array([renorm_factor(s, self.species) for s in self.states])

    def describe(self, state: SymmetricState) -> dict:
        occ = {self.species[j].label: {str(k): c for k, c in o}
               for j, o in enumerate(state.occupation) if o}
        if state.is_photonic:
            rec = {"variant": "photonic", "occupation": occ}
        else:
            rec = {"variant": "excitonic", "species": self.species[state.species].label,
                   "level": state.level, "occupation": occ}
        return rec

    def to_jsonl(self, path) -> None:
        finite = all(not sp.is_infinite for sp in self.species)
        with open(path, "w") as fh:
            for i, s in enumerate(self.states):
                rec = {"index": i, **self.describe(s)}
                rec["renorm_factor"] = renorm_factor(s, self.species) if finite else None
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def enumerate_basis(species: Sequence[SpeciesSpec], kappa: int,
                    max_dimension: int = DEFAULT_MAX_DIMENSION) -> CuteBasis:
    """All symmetric states with at most ``kappa`` phonon carriers, canonically ordered.

    The order is by carrier number first, then photonic before excitonic
    (species, excited level, occupation), so a lower-order basis is an exact
    prefix of a higher-order one.
    """
    species = list(species)
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    if not species:
        raise ValueError("need at least one species")
    for sp in species:
        if sp.vib.m_g < 1 or sp.vib.m_e < 1:
            raise ValueError(f"species {sp.label!r} needs m_g >= 1 and m_e >= 1")
    dim = count_states(species, kappa)
    if dim > max_dimension:
        raise BasisTooLarge(dim, max_dimension)
    states = [_photonic(occ) for occ in _occupations(species, kappa, None)]
    for j, sp in enumerate(species):
        occs = list(_occupations(species, kappa, j))
        for level in range(sp.vib.m_e):
            states.extend(SymmetricState(j, level, occ) for occ in occs)
    states.sort(key=SymmetricState.sort_key)
    return CuteBasis(states, kappa, species)
