"""One-dimensional vibrational eigenproblems on a uniform grid.

The kinetic operator uses the Colbert-Miller DVR for an unbounded coordinate
range, so the only discretisation parameters are the grid extent and the
number of points.  Two unit conventions are supported:

* ``UnitMode.natural()``: mass-weighted coordinates with ``mu = 1`` and
  ``hbar = 1``; the kinetic term is ``-(1/2) d^2/dq^2`` and every energy is in
  the same unit (eV by convention).
* ``UnitMode.physical(mass)``: coordinates in angstrom, mass in amu, energies
  in eV.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .exceptions import GridMismatch, GridTooCoarse, NonConvergedEigensolve
from .units import HBAR2_PER_AMU_ANGSTROM2_EV

__all__ = [
    "Grid",
    "UnitMode",
    "Harmonic",
    "DisplacedHarmonic",
    "HuangRhysHarmonic",
    "Exponential",
    "ExponentialWithBump",
    "Tabulated",
    "solve_dvr",
    "franck_condon_matrix",
    "VibrationalStates",
    "VibrationalBasis",
    "colbert_miller_kinetic",
]


@dataclass(frozen=True)
class Grid:
    n_points: int
    q_min: float
    q_max: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 16:
            raise ValueError(f"n_points must be an integer >= 16, got {self.n_points}")
        if not self.q_max > self.q_min:
            raise ValueError("q_max must exceed q_min")

    @property
    def spacing(self) -> float:
        return (self.q_max - self.q_min) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n_points)


@dataclass(frozen=True)
class UnitMode:
    """Unit convention; ``mass`` is None for natural (mass-weighted) units."""

    mass: Optional[float] = None

    def __post_init__(self):
        if self.mass is not None and not self.mass > 0:
            raise ValueError("mass must be positive in physical mode")

    @classmethod
    def natural(cls) -> "UnitMode":
        return cls(None)

    @classmethod
    def physical(cls, mass: float) -> "UnitMode":
        return cls(float(mass))

    @property
    def is_natural(self) -> bool:
        return self.mass is None

    @property
    def kinetic_prefactor(self) -> float:
        """hbar^2 / (2 mu) in energy * coordinate^2."""
        if self.mass is None:
            return 0.5
        return HBAR2_PER_AMU_ANGSTROM2_EV / (2.0 * self.mass)

    def harmonic_curvature(self, omega: float) -> float:
        """Force constant k such that V = k q^2 / 2 has quanta ``omega``."""
        return omega**2 / (2.0 * self.kinetic_prefactor)

    def huang_rhys_displacement(self, omega: float, huang_rhys: float) -> float:
        return float(np.sqrt(4.0 * huang_rhys * self.kinetic_prefactor / omega))

    def huang_rhys_factor(self, omega: float, displacement: float) -> float:
        return displacement**2 * omega / (4.0 * self.kinetic_prefactor)


# -- potentials ---------------------------------------------------------------


@dataclass(frozen=True)
class Harmonic:
    omega: float
    offset: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("harmonic frequency must be positive")

    def __call__(self, q, units: UnitMode = UnitMode()):
        return 0.5 * units.harmonic_curvature(self.omega) * np.asarray(q) ** 2 + self.offset


@dataclass(frozen=True)
class DisplacedHarmonic:
    omega: float
    d: float
    offset: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("harmonic frequency must be positive")

    def __call__(self, q, units: UnitMode = UnitMode()):
        k = units.harmonic_curvature(self.omega)
        return 0.5 * k * (np.asarray(q) - self.d) ** 2 + self.offset


@dataclass(frozen=True)
class HuangRhysHarmonic:
    """Displaced harmonic surface pinned by its dimensionless Huang-Rhys factor."""

    omega: float
    S: float
    offset: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("harmonic frequency must be positive")
        if self.S < 0:
            raise ValueError("Huang-Rhys factor must be non-negative")

    def displacement(self, units: UnitMode = UnitMode()) -> float:
        return units.huang_rhys_displacement(self.omega, self.S)

    def __call__(self, q, units: UnitMode = UnitMode()):
        d = self.displacement(units)
        return DisplacedHarmonic(self.omega, d, self.offset)(q, units)


@dataclass(frozen=True)
class Exponential:
    """Repulsive wall ``exp(-a (q - d)) + offset``."""

    a: float
    d: float
    offset: float = 0.0

    def __call__(self, q, units: UnitMode = UnitMode()):
        return np.exp(-self.a * (np.asarray(q) - self.d)) + self.offset


@dataclass(frozen=True)
class ExponentialWithBump:
    """``exp(-a (q - d1)) + c exp(-b (q - d2)^2) + offset``."""

    a: float
    d1: float
    b: float
    c: float
    d2: float
    offset: float = 0.0

    def __call__(self, q, units: UnitMode = UnitMode()):
        q = np.asarray(q)
        return (np.exp(-self.a * (q - self.d1))
                + self.c * np.exp(-self.b * (q - self.d2) ** 2)
                + self.offset)


@dataclass(frozen=True)
class Tabulated:
    values: tuple

    def __init__(self, values):
        object.__setattr__(self, "values", tuple(float(v) for v in np.ravel(values)))

    def __call__(self, q, units: UnitMode = UnitMode()):
        q = np.asarray(q)
        if q.shape != (len(self.values),):
            raise GridMismatch(
                f"tabulated potential has {len(self.values)} values, grid has {q.size}")
        return np.array(self.values)


# -- solver -------------------------------------------------------------------


def colbert_miller_kinetic(n_points: int, spacing: float, prefactor: float) -> np.ndarray:
    """Colbert-Miller kinetic matrix for a uniform grid on (-inf, inf)."""
    idx = np.arange(n_points)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(divide="ignore"):
        off = 2.0 * np.where(diff % 2 == 0, 1.0, -1.0) / diff.astype(float) ** 2
    np.fill_diagonal(off, np.pi**2 / 3.0)
    return prefactor / spacing**2 * off


@dataclass
class VibrationalStates:
    """Lowest eigenpairs of one surface; ``functions[:, k]`` is state k."""

    energies: np.ndarray
    functions: np.ndarray
    grid: Grid
    boundary_weight: float = 0.0

    @property
    def m(self) -> int:
        return self.energies.size

    def to_csv(self, path) -> None:
        q = self.grid.points
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["q"] + [f"state_{k}" for k in range(self.m)])
            for i in range(q.size):
                w.writerow([repr(float(q[i]))] + [repr(float(x)) for x in self.functions[i]])


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _boundary_fraction(psi: np.ndarray, spacing: float) -> float:
    n = psi.size
    edge = max(1, int(np.ceil(0.05 * n)))
    w = psi**2 * spacing
    return float(w[:edge].sum() + w[-edge:].sum())


def solve_dvr(grid: Grid, potential, units: UnitMode = UnitMode(), m: int = 10,
              boundary_tol: Optional[float] = 0.01) -> VibrationalStates:
    """Return the ``m`` lowest eigenpairs of ``T + V`` on ``grid``.

    Eigenfunctions are normalised under the grid quadrature
    (``sum(psi**2) * dq == 1``) and each has its largest-magnitude sample
    positive.  ``boundary_tol`` bounds the norm fraction of the highest
    retained state inside the outer 5% of points at either end; pass ``None``
    for continuum-like (dissociative or box) problems where boundary weight is
    expected.
    """
    if m < 1 or m > grid.n_points:
        raise ValueError(f"m must lie in [1, {grid.n_points}], got {m}")
    q = grid.points
    v = np.asarray(potential(q, units), dtype=float)
    if v.shape != q.shape or not np.all(np.isfinite(v)):
        raise ValueError("potential must evaluate to finite values on the grid")
    h = colbert_miller_kinetic(grid.n_points, grid.spacing, units.kinetic_prefactor)
    h[np.diag_indices_from(h)] += v
    try:
        energies, vecs = linalg.eigh(h, subset_by_index=[0, m - 1], driver="evr")
    except linalg.LinAlgError as exc:
        raise NonConvergedEigensolve(str(exc)) from exc
    vecs = _fix_signs(vecs) / np.sqrt(grid.spacing)
    frac = _boundary_fraction(vecs[:, -1], grid.spacing)
    if boundary_tol is not None and frac > boundary_tol:
        raise GridTooCoarse(
            f"state {m - 1} carries {frac:.3g} of its norm in the outer 5% of the grid")
    return VibrationalStates(energies, vecs, grid, frac)


def franck_condon_matrix(ground: VibrationalStates, excited: VibrationalStates) -> np.ndarray:
    """Overlaps ``F[l, k] = <excited_l | ground_k>`` by grid quadrature."""
    if ground.grid != excited.grid:
        raise GridMismatch("ground and excited states live on different grids")
    return excited.functions.T @ ground.functions * ground.grid.spacing


@dataclass
class VibrationalBasis:
    """Ground/excited vibrational levels of one species and their FC overlaps.

    ``fc[l, k]`` is the overlap between excited level ``l`` and ground level
    ``k`` (0-based; level 0 is the vibrational ground state).
    """

    ground_energies: np.ndarray
    excited_energies: np.ndarray
    fc: np.ndarray
    ground: Optional[VibrationalStates] = field(default=None, repr=False)
    excited: Optional[VibrationalStates] = field(default=None, repr=False)

    def __post_init__(self):
        self.ground_energies = np.asarray(self.ground_energies, dtype=float)
        self.excited_energies = np.asarray(self.excited_energies, dtype=float)
        self.fc = np.asarray(self.fc, dtype=float)
        if self.fc.shape != (self.m_e, self.m_g):
            raise ValueError(
                f"fc must have shape (m_e, m_g) = ({self.m_e}, {self.m_g}), got {self.fc.shape}")
        if self.m_g < 1 or self.m_e < 1:
            raise ValueError("need at least one ground and one excited level")

    @classmethod
    def from_potentials(cls, grid: Grid, ground_potential, excited_potential,
                        units: UnitMode = UnitMode(), m_g: int = 1, m_e: int = 10,
                        boundary_tol: Optional[float] = 0.01,
                        excited_boundary_tol: Optional[float] = "same") -> "VibrationalBasis":
        if excited_boundary_tol == "same":
            excited_boundary_tol = boundary_tol
        g = solve_dvr(grid, ground_potential, units, m_g, boundary_tol)
        e = solve_dvr(grid, excited_potential, units, m_e, excited_boundary_tol)
        return cls(g.energies, e.energies, franck_condon_matrix(g, e), g, e)

    @classmethod
    def from_arrays(cls, ground_energies: Sequence[float], excited_energies: Sequence[float],
                    fc) -> "VibrationalBasis":
        return cls(np.asarray(ground_energies), np.asarray(excited_energies), np.asarray(fc))

    @property
    def m_g(self) -> int:
        return self.ground_energies.size

    @property
    def m_e(self) -> int:
        return self.excited_energies.size

    @property
    def omega_g(self) -> np.ndarray:
        """Ground-state vibrational excitation energies ``E_g[k] - E_g[0]``."""
        return self.ground_energies - self.ground_energies[0]

    @property
    def omega_eg(self) -> np.ndarray:
        """Vibronic transition energies ``E_e[l] - E_g[0]``."""
        return self.excited_energies - self.ground_energies[0]

    def fc_leakage(self) -> np.ndarray:
        """``1 - sum_l F[l, k]^2`` per ground level: weight lost to truncation."""
        return 1.0 - np.sum(self.fc**2, axis=0)

    def fc_energy(self) -> float:
        """Vertical (Franck-Condon) transition energy from the ground level."""
        f = self.fc[:, 0]
        return float(f @ (self.omega_eg * f) / (f @ f))

    def excited_position_matrix(self) -> np.ndarray:
        """``<excited_l | q | excited_l'>`` by grid quadrature."""
        if self.excited is None:
            raise ValueError("position matrix needs grid eigenfunctions")
        phi = self.excited.functions
        q = self.excited.grid.points
        return phi.T @ (q[:, None] * phi) * self.excited.grid.spacing

    def shifted(self, excited_shift: float) -> "VibrationalBasis":
        """Copy with every excited level moved by ``excited_shift``."""
        exc = self.excited
        if exc is not None:
            exc = VibrationalStates(exc.energies + excited_shift, exc.functions, exc.grid,
                                    exc.boundary_weight)
        return VibrationalBasis(self.ground_energies, self.excited_energies + excited_shift,
                                self.fc, self.ground, exc)
