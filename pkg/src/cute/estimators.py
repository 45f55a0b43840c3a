"""Estimator-style wrappers following the scikit-learn parameter conventions.

``fit`` does the expensive work (a DVR solve, or basis enumeration plus
diagonalisation); the fitted attributes end in an underscore.  Inputs are
not training data, so ``X`` and ``y`` are accepted and ignored by ``fit``.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dynamics import initial_photonic_state, propagate
from .hamiltonian import CavitySpec, build
from .symbasis import DEFAULT_MAX_DIMENSION, enumerate_basis
from .vibsolver import Grid, UnitMode, solve_dvr

__all__ = ["DVRSolver", "CuteModel"]


class DVRSolver(TransformerMixin, BaseEstimator):
    """Lowest vibrational eigenpairs of ``potential`` on a uniform grid.

    ``transform`` projects wavefunctions sampled on the same grid (one per
    row) onto the fitted eigenbasis.
    """

    def __init__(self, potential=None, n_points: int = 256, q_min: float = -10.0,
                 q_max: float = 10.0, n_states: int = 10, units: Optional[UnitMode] = None,
                 boundary_tol: Optional[float] = 0.01):
        self.potential = potential
        self.n_points = n_points
        self.q_min = q_min
        self.q_max = q_max
        self.n_states = n_states
        self.units = units
        self.boundary_tol = boundary_tol

    def fit(self, X=None, y=None):
        if self.potential is None:
            raise ValueError("DVRSolver needs a potential")
        grid = Grid(int(self.n_points), float(self.q_min), float(self.q_max))
        states = solve_dvr(grid, self.potential, self.units or UnitMode.natural(),
                           int(self.n_states), self.boundary_tol)
        self.grid_ = grid
        self.energies_ = states.energies
        self.functions_ = states.functions
        self.boundary_weight_ = states.boundary_weight
        return self

    def transform(self, X):
        check_is_fitted(self, "functions_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.grid_.n_points:
            raise ValueError(f"expected {self.grid_.n_points} grid samples, got {X.shape[1]}")
        return X @ self.functions_ * self.grid_.spacing


class CuteModel(BaseEstimator):
    """Symmetric-basis cavity model; ``predict(times_fs)`` propagates the photonic state."""

    def __init__(self, species: Sequence = (), omega_c: float = 1.0, kappa: int = 0,
                 max_dimension: int = DEFAULT_MAX_DIMENSION):
        self.species = species
        self.omega_c = omega_c
        self.kappa = kappa
        self.max_dimension = max_dimension

    def fit(self, X=None, y=None):
        if not self.species:
            raise ValueError("CuteModel needs at least one species")
        self.basis_ = enumerate_basis(list(self.species), int(self.kappa), self.max_dimension)
        self.hamiltonian_ = build(self.basis_, CavitySpec(float(self.omega_c)))
        self.eigenvalues_, self.eigenvectors_ = self.hamiltonian_.eigh()
        return self

    def _times(self, times_fs) -> np.ndarray:
        return check_array(np.asarray(times_fs, dtype=float).reshape(-1, 1)).ravel()

    def predict(self, times_fs) -> np.ndarray:
        """Amplitudes, one row per requested time."""
        check_is_fitted(self, "hamiltonian_")
        traj = propagate(self.hamiltonian_, initial_photonic_state(self.basis_),
                         self._times(times_fs))
        return traj.amplitudes

    def predict_populations(self, times_fs) -> dict:
        """Photon and per-species excited populations."""
        amps = np.abs(self.predict(times_fs)) ** 2
        out = {"photon": amps[:, self.basis_.photonic_mask()].sum(axis=1)}
        for sp in self.basis_.species:
            out[sp.label] = amps[:, self.basis_.species_mask(sp.label)].sum(axis=1)
        return out
