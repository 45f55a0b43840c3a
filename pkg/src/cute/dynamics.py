"""Time evolution by eigenstate expansion, autocorrelation and linear spectra.

Energies are in eV and times are given in fs; internally the propagator uses
``t / hbar`` with ``hbar`` in eV*fs.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.signal import find_peaks

from .exceptions import BasisMismatch, WindowOutsideNyquist
from .hamiltonian import HamiltonianMatrix
from .units import HBAR_EV_FS, fs_to_internal

__all__ = [
    "TimeGrid",
    "StateVector",
    "TrajectoryRecord",
    "SpectrumResult",
    "initial_photonic_state",
    "propagate",
    "autocorrelation",
    "photon_autocorrelation",
    "spectrum",
    "fourier_linewidth",
    "write_gnuplot_script",
    "fc_autocorrelation",
]

_CHUNK = 256


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``0 .. t_max_fs`` with ``n_steps`` samples (both ends included)."""

    t_max_fs: float
    n_steps: int

    def __post_init__(self):
        if not self.t_max_fs > 0:
            raise ValueError("t_max_fs must be positive")
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")

    @property
    def times_fs(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max_fs, self.n_steps)

    @property
    def internal(self) -> np.ndarray:
        return fs_to_internal(self.times_fs)

    @property
    def step_fs(self) -> float:
        return self.t_max_fs / (self.n_steps - 1)


def _as_times_fs(times) -> np.ndarray:
    if isinstance(times, TimeGrid):
        return times.times_fs
    return np.atleast_1d(np.asarray(times, dtype=float))


@dataclass
class StateVector:
    amplitudes: np.ndarray
    basis: object = None

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalise the zero vector")
        return StateVector(self.amplitudes / n, self.basis)

    def __len__(self) -> int:
        return self.amplitudes.size


@dataclass
class TrajectoryRecord:
    """Amplitudes ``amplitudes[i]`` at ``times_fs[i]``."""

    times_fs: np.ndarray
    amplitudes: np.ndarray
    initial: StateVector
    basis: object = None

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.amplitudes, axis=1)

    def populations(self, mask=None) -> np.ndarray:
        """Summed ``|amplitude|^2`` over ``mask`` (all states when omitted)."""
        p = np.abs(self.amplitudes) ** 2
        return p.sum(axis=1) if mask is None else p[:, np.asarray(mask)].sum(axis=1)

    def state_at(self, i: int) -> StateVector:
        return StateVector(self.amplitudes[i], self.basis)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            n = self.amplitudes.shape[1]
            w.writerow(["time_fs"] + [f"{p}_{k}" for k in range(n) for p in ("re", "im")])
            for t, row in zip(self.times_fs, self.amplitudes):
                vals = [repr(float(x)) for a in row for x in (a.real, a.imag)]
                w.writerow([repr(float(t))] + vals)


def initial_photonic_state(basis) -> StateVector:
    """Unit amplitude on the zero-phonon photonic state.

    Works for a :class:`~cute.symbasis.CuteBasis` (where that state is index 0)
    and for any basis exposing ``ground_photonic`` and ``index_of``.
    """
    idx = basis.index_of.get(basis.ground_photonic)
    if idx is None:
        raise ValueError("basis lacks the zero-phonon photonic state")
    v = np.zeros(len(basis), dtype=complex)
    v[idx] = 1.0
    return StateVector(v, basis)


def _check_basis(h: HamiltonianMatrix, v0: StateVector) -> None:
    if len(v0) != h.dimension:
        raise BasisMismatch(f"state has {len(v0)} components, Hamiltonian {h.dimension}")
    if v0.basis is not None and h.basis is not None and v0.basis is not h.basis:
        raise BasisMismatch("state vector and Hamiltonian refer to different bases")


def propagate(h: HamiltonianMatrix, v0: StateVector, times) -> TrajectoryRecord:
    """``v(t) = sum_n exp(-i E_n t) <n|v0> |n>`` at each requested time."""
    _check_basis(h, v0)
    t_fs = _as_times_fs(times)
    energies, vectors = h.eigh()
    coeff = vectors.conj().T @ v0.amplitudes
    t = fs_to_internal(t_fs)
    out = np.empty((t.size, h.dimension), dtype=complex)
    for start in range(0, t.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        phases = np.exp(-1j * np.outer(t[sl], energies)) * coeff
        out[sl] = phases @ vectors.T
    out[t == 0.0] = v0.amplitudes
    return TrajectoryRecord(t_fs, out, v0, h.basis)


def autocorrelation(trajectory: TrajectoryRecord) -> np.ndarray:
    """``c(t) = <v0|v(t)>``."""
    return trajectory.amplitudes @ trajectory.initial.amplitudes.conj()


def photon_autocorrelation(h: HamiltonianMatrix, v0: StateVector, times) -> np.ndarray:
    """``c(t)`` straight from the spectral weights, without storing amplitudes."""
    _check_basis(h, v0)
    energies, vectors = h.eigh()
    w = np.abs(vectors.conj().T @ v0.amplitudes) ** 2
    t = fs_to_internal(_as_times_fs(times))
    c = np.empty(t.size, dtype=complex)
    for start in range(0, t.size, 4 * _CHUNK):
        sl = slice(start, start + 4 * _CHUNK)
        c[sl] = np.exp(-1j * np.outer(t[sl], energies)) @ w
    return c


def fourier_linewidth(t_max_fs: float) -> float:
    """Energy resolution ``2 pi hbar / T`` of a record of length ``T``."""
    return 2.0 * np.pi * HBAR_EV_FS / t_max_fs


@dataclass
class SpectrumResult:
    frequencies: np.ndarray
    intensities: np.ndarray
    gamma: float

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def normalized(self) -> np.ndarray:
        return self.intensities / np.max(self.intensities)

    def peaks(self, rel_height: float = 0.05) -> Tuple[np.ndarray, np.ndarray]:
        """Local maxima above ``rel_height`` of the global maximum: (positions, heights)."""
        top = float(np.max(self.intensities))
        idx, props = find_peaks(self.intensities, height=rel_height * top)
        return self.frequencies[idx], props["peak_heights"]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["omega_eV", "intensity"])
            for x, y in zip(self.frequencies, self.intensities):
                w.writerow([repr(float(x)), repr(float(y))])


def spectrum(c: np.ndarray, times, gamma: Optional[float] = None,
             window: Tuple[float, float] = (0.0, 5.0), n_points: int = 4001) -> SpectrumResult:
    """Damped half-sided Fourier transform of ``c(t)``.

    ``sigma(omega) = Re int_0^T exp(i omega t) c(t) exp(-gamma t) dt`` with the
    trapezoid rule.  ``gamma`` defaults to :func:`fourier_linewidth` of the
    record.  The result carries units of hbar/eV.
    """
    t_fs = _as_times_fs(times)
    c = np.asarray(c, dtype=complex)
    if c.shape != t_fs.shape:
        raise ValueError("c and times differ in length")
    steps = np.diff(t_fs)
    if t_fs.size < 2 or np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps.mean():
        raise ValueError("c must be sampled on a uniform ascending grid")
    if gamma is None:
        gamma = fourier_linewidth(t_fs[-1] - t_fs[0])
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    lo, hi = map(float, window)
    if not hi > lo:
        raise ValueError("window must satisfy hi > lo")
    dt = fs_to_internal(steps.mean())
    nyquist = np.pi / dt
    if max(abs(lo), abs(hi)) > nyquist:
        raise WindowOutsideNyquist(
            f"window [{lo}, {hi}] eV exceeds the Nyquist limit {nyquist:.4g} eV")
    t = fs_to_internal(t_fs - t_fs[0])
    weights = np.full(t.size, dt)
    weights[[0, -1]] = dt / 2
    f = c * np.exp(-gamma * t) * weights
    omega = np.linspace(lo, hi, n_points)
    sigma = np.empty(n_points)
    for start in range(0, n_points, 64):
        sl = slice(start, start + 64)
        sigma[sl] = (np.exp(1j * np.outer(omega[sl], t)) @ f).real
    return SpectrumResult(omega, sigma, float(gamma))


def write_gnuplot_script(path, data_file: str, columns: Sequence[str],
                         xlabel: str = "time (fs)", ylabel: str = "") -> None:
    """Minimal gnuplot script plotting ``columns`` (1-based after x) of a CSV file."""
    lines = ["set datafile separator ','", "set key autotitle columnhead",
             f"set xlabel '{xlabel}'"]
    if ylabel:
        lines.append(f"set ylabel '{ylabel}'")
    plots = [f"'{data_file}' using 1:{i + 2} with lines" for i in range(len(columns))]
    lines.append("plot " + ", \\\n     ".join(plots))
    Path(path).write_text("\n".join(lines) + "\n")


def fc_autocorrelation(vib, times) -> np.ndarray:
    """Autocorrelation of a vertically excited molecule outside the cavity.

    ``c(t) = sum_l F[l, 0]^2 exp(-i omega_eg[l] t)``: the bare absorption
    signal of one species.
    """
    t = fs_to_internal(_as_times_fs(times))
    w = vib.fc[:, 0] ** 2
    return np.exp(-1j * np.outer(t, vib.omega_eg)) @ w
