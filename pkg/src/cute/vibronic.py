"""Effective-molecule models with a linear vibronic harmonic bath.

Bath configurations are stored as sorted tuples of occupied mode indices
(at most one quantum per mode).  Labels are ``(photon, block, m, n)``:

* ``photon`` -- True for the one-photon sector;
* ``block`` -- number of ground-state effective molecules carrying phonons
  (0 or 1);
* ``m`` -- bath configuration of effective molecule 1;
* ``n`` -- bath configuration of effective molecule 2 (first order only).

The cavity is resonant with the zero-phonon exciton (both at ``omega``).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import BathTooLarge
from .hamiltonian import HamiltonianMatrix, _assemble

__all__ = [
    "VibronicBathSpec",
    "FGRBasis",
    "build_vibronic_fgr_model",
    "fgr_eigenstate",
    "ZEROTH",
    "FIRST",
]

ZEROTH = 0
FIRST = 1

Label = Tuple[bool, int, Tuple[int, ...], Tuple[int, ...]]


@dataclass(frozen=True)
class VibronicBathSpec:
    frequencies: Tuple[float, ...]
    huang_rhys: Tuple[float, ...]
    max_phonons: int = 1

    def __init__(self, frequencies, huang_rhys, max_phonons: int = 1):
        w = tuple(float(x) for x in frequencies)
        s = tuple(float(x) for x in huang_rhys)
        if len(w) != len(s):
            raise ValueError("frequencies and huang_rhys differ in length")
        if any(x <= 0 for x in w):
            raise ValueError("bath frequencies must be positive")
        if any(x < 0 for x in s):
            raise ValueError("Huang-Rhys factors must be non-negative")
        if max_phonons < 0:
            raise ValueError("max_phonons must be >= 0")
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "huang_rhys", s)
        object.__setattr__(self, "max_phonons", int(max_phonons))

    @property
    def n_modes(self) -> int:
        return len(self.frequencies)

    @property
    def couplings(self) -> np.ndarray:
        """Linear vibronic coupling ``omega_k * sqrt(s_k)`` per mode."""
        return np.asarray(self.frequencies) * np.sqrt(np.asarray(self.huang_rhys))


@dataclass
class FGRBasis:
    labels: List[Label]
    order: int
    N: int
    index_of: Dict[Label, int]

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, label: Label) -> int:
        return self.index_of[label]


def _configs(n_modes: int, cap: int, nonempty: bool = False) -> Iterable[Tuple[int, ...]]:
    start = 1 if nonempty else 0
    for size in range(start, cap + 1):
        yield from itertools.combinations(range(n_modes), size)


def _full_labels(order: int, bath: VibronicBathSpec) -> List[Label]:
    M, cap = bath.n_modes, bath.max_phonons
    labels: List[Label] = [(True, 0, (), ())]
    labels += [(False, 0, m, ()) for m in _configs(M, cap)]
    if order == FIRST:
        ms = list(_configs(M, cap, nonempty=True))
        labels += [(True, 1, m, ()) for m in ms]
        labels += [(False, 1, m, n) for m in ms for n in _configs(M, cap)]
    return labels


def _toggle(config: Tuple[int, ...], k: int) -> Tuple[Tuple[int, ...], bool]:
    if k in config:
        return tuple(x for x in config if x != k), False
    return tuple(sorted(config + (k,))), True


def _h0_partners(label: Label, order: int, N: int, g: float):
    photon, block, m, n = label
    G = g * math.sqrt(N)
    if block == 0 and not m and not n:
        yield (not photon, 0, (), ()), G
    elif order == FIRST and block == 1 and not n:
        yield (not photon, 1, m, ()), g * math.sqrt(N - 1)
    if order == FIRST and m:
        if not photon and block == 0:
            yield (True, 1, m, ()), g
        elif photon and block == 1:
            yield (False, 0, m, ()), g


def _h1_partners(label: Label, bath: VibronicBathSpec):
    photon, block, m, n = label
    if photon:
        return
    lam = bath.couplings
    for k in range(bath.n_modes):
        if block == 0:
            new, _ = _toggle(m, k)
            if len(new) <= bath.max_phonons:
                yield (False, 0, new, n), lam[k]
        else:
            new, _ = _toggle(n, k)
            if len(new) <= bath.max_phonons:
                yield (False, 1, m, new), lam[k]


def _energy(label: Label, omega: float, freqs) -> float:
    _, _, m, n = label
    return omega + sum(freqs[k] for k in m) + sum(freqs[k] for k in n)


def _closure(seeds: Sequence[Label], step, allowed) -> List[Label]:
    seen = {s: None for s in seeds}
    frontier = list(seeds)
    while frontier:
        nxt = []
        for lab in frontier:
            for p, _ in step(lab):
                if p not in seen and allowed(p):
                    seen[p] = None
                    nxt.append(p)
        frontier = nxt
    return list(seen)


def _allowed(order: int, bath: VibronicBathSpec):
    def ok(label: Label) -> bool:
        photon, block, m, n = label
        if len(m) > bath.max_phonons or len(n) > bath.max_phonons:
            return False
        if order == ZEROTH:
            return block == 0 and not n and (not photon or not m)
        if block == 0:
            return not n and (not photon or not m)
        return bool(m) and (not photon or not n)
    return ok


def build_vibronic_fgr_model(order: int, N: int, g: float, omega: float,
                             bath: VibronicBathSpec, seeds: Optional[Sequence[Label]] = None,
                             max_dimension: int = 250_000
                             ) -> Tuple[HamiltonianMatrix, HamiltonianMatrix]:
    """Unperturbed polariton+bath Hamiltonian ``H0`` and vibronic perturbation ``H1``.

    ``g`` is the single-molecule coupling; the polariton splitting is
    ``2 g sqrt(N)``.  Without ``seeds`` the full truncated space is used.
    With ``seeds``, the space is the set of labels reachable from them by
    ``H0`` couplings, one application of ``H1``, and ``H0`` again: every state
    a golden-rule transition out of the seeds can land in.
    """
    if order not in (ZEROTH, FIRST):
        raise ValueError("order must be 0 (zeroth) or 1 (first)")
    if N < 1 or (order == FIRST and N < 2):
        raise ValueError("first order needs N >= 2")
    allowed = _allowed(order, bath)
    if seeds is None:
        labels = _full_labels(order, bath)
    else:
        h0_step = lambda lab: _h0_partners(lab, order, N, g)  # noqa: E731
        core = _closure(list(seeds), h0_step, allowed)
        grown = dict.fromkeys(core)
        for lab in core:
            for p, _ in _h1_partners(lab, bath):
                if allowed(p):
                    grown.setdefault(p)
        labels = _closure(list(grown), h0_step, allowed)
    if len(labels) > max_dimension:
        raise BathTooLarge(f"vibronic model dimension {len(labels)} exceeds {max_dimension}")
    index_of = {lab: i for i, lab in enumerate(labels)}
    basis = FGRBasis(labels, order, N, index_of)
    freqs = bath.frequencies

    diag = np.array([_energy(lab, omega, freqs) for lab in labels])
    r0, c0, v0 = [], [], []
    r1, c1, v1 = [], [], []
    for i, lab in enumerate(labels):
        for p, amp in _h0_partners(lab, order, N, g):
            j = index_of.get(p)
            if j is not None and j > i:
                r0.append(i), c0.append(j), v0.append(amp)
        for p, amp in _h1_partners(lab, bath):
            j = index_of.get(p)
            if j is not None and j > i and amp != 0.0:
                r1.append(i), c1.append(j), v1.append(amp)
    h0 = _assemble(np.array(r0, dtype=np.int64), np.array(c0, dtype=np.int64),
                   np.array(v0), diag, basis)
    h1 = _assemble(np.array(r1, dtype=np.int64), np.array(c1, dtype=np.int64),
                   np.array(v1), np.zeros(len(labels)), basis)
    return h0, h1


def fgr_eigenstate(basis: FGRBasis, family: str, m: Tuple[int, ...] = (),
                   n: Tuple[int, ...] = ()) -> np.ndarray:
    """Closed-form eigenvector of ``H0`` for one of the named families.

    ``family`` is ``"+"``, ``"-"`` or ``"D"``.  At zeroth order ``|+-,0>``
    are the polaritons and ``|D,m>`` is the phonon-dressed exciton.  At first
    order ``m`` labels effective molecule 1 and ``n`` molecule 2.
    """
    v = np.zeros(len(basis))
    N = basis.N
    sign = {"+": 1.0, "-": -1.0}.get(family)
    if basis.order == ZEROTH or (not m and not n):
        if family == "D":
            if not m:
                raise ValueError("dark family needs a non-empty bath configuration")
            v[basis[(False, 0, tuple(m), ())]] = 1.0
            return v
        if m or n:
            raise ValueError("zeroth-order polaritons carry no phonons")
        v[basis[(True, 0, (), ())]] = 1.0 / math.sqrt(2)
        v[basis[(False, 0, (), ())]] = sign / math.sqrt(2)
        return v
    m = tuple(m)
    if not m:
        raise ValueError("phonon-carrying families need m non-empty")
    if n:
        if family != "D":
            raise ValueError("states with n > 0 belong to the dark family")
        v[basis[(False, 1, m, tuple(n))]] = 1.0
        return v
    a = math.sqrt((N - 1) / N)
    b = 1.0 / math.sqrt(N)
    if family == "D":
        v[basis[(False, 1, m, ())]] = b
        v[basis[(False, 0, m, ())]] = -a
        return v
    v[basis[(True, 1, m, ())]] = 1.0 / math.sqrt(2)
    v[basis[(False, 1, m, ())]] = sign * a / math.sqrt(2)
    v[basis[(False, 0, m, ())]] = sign * b / math.sqrt(2)
    return v
