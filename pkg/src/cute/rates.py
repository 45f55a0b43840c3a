"""Golden-rule relaxation rates between polariton and dark families.

Three transitions are tracked, labelled ``"D<-+"`` (upper polariton into the
dark family), ``"-<-+"`` (upper into lower polariton) and ``"-<-D"`` (dark
family into the lower polariton).  Rates are returned in 1/fs; internally
they are energies (eV) and converted with hbar.

Analytic values come from closed-form golden-rule sums over the bath;
numerical values come from exponential fits to the survival probability of
the initial ``H0`` eigenstate under ``H0 + H1``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import BandMiss, RecurrenceContamination
from .hamiltonian import diagonalize
from .units import HBAR_EV_FS, fs_to_internal, internal_to_fs
from .vibronic import FIRST, ZEROTH, VibronicBathSpec, build_vibronic_fgr_model, fgr_eigenstate

__all__ = [
    "TRANSITIONS",
    "SpectralDensitySpec",
    "RateResult",
    "DecayFit",
    "fgr_rate",
    "analytic_table",
    "simulate_decay",
    "required_modes",
    "write_rate_table",
    "UPPER_POLARITON",
    "DARK_FC_FAMILY",
]

TRANSITIONS = ("D<-+", "-<-+", "-<-D")
UPPER_POLARITON = "upper_polariton"
DARK_FC_FAMILY = "dark_fc_family"

_ALIASES = {"D←+": "D<-+", "−←+": "-<-+", "-←+": "-<-+", "−←D": "-<-D", "-←D": "-<-D"}


def _transition(label: str) -> str:
    t = _ALIASES.get(label, label)
    if t not in TRANSITIONS:
        raise ValueError(f"unknown transition {label!r}; expected one of {TRANSITIONS}")
    return t


def _order(order) -> int:
    if isinstance(order, str):
        order = {"zeroth": ZEROTH, "first": FIRST}.get(order.lower(), order)
    if order not in (ZEROTH, FIRST):
        raise ValueError("order must be 0/'zeroth' or 1/'first'")
    return int(order)


@dataclass(frozen=True)
class SpectralDensitySpec:
    """Bath modes ``(omega_k, s_k)``, either explicit or a flat band.

    A flat band of strength ``J0`` over ``[lo, hi]`` is sampled by
    ``n_modes`` equally spaced modes with ``omega_k^2 s_k = J0 * spacing``;
    its analytic rates use the continuum limit of that density.
    """

    frequencies: Tuple[float, ...]
    huang_rhys: Tuple[float, ...]
    J0: Optional[float] = None
    band: Optional[Tuple[float, float]] = None

    @classmethod
    def discrete(cls, frequencies: Sequence[float], huang_rhys: Sequence[float]) -> "SpectralDensitySpec":
        w = tuple(float(x) for x in frequencies)
        s = tuple(float(x) for x in huang_rhys)
        if len(w) != len(s) or not w:
            raise ValueError("need equally long, non-empty frequency and Huang-Rhys lists")
        if any(x <= 0 for x in w) or any(x < 0 for x in s):
            raise ValueError("frequencies must be positive and Huang-Rhys factors non-negative")
        return cls(w, s)

    @classmethod
    def flat(cls, J0: float, lo: float, hi: float, n_modes: int = 200) -> "SpectralDensitySpec":
        if J0 < 0:
            raise ValueError("J0 must be >= 0")
        if not 0 < lo < hi:
            raise ValueError("band must satisfy 0 < lo < hi")
        if n_modes < 2:
            raise ValueError("need at least two modes")
        w = np.linspace(lo, hi, n_modes)
        s = J0 * (w[1] - w[0]) / w**2
        return cls(tuple(w), tuple(s), float(J0), (float(lo), float(hi)))

    @classmethod
    def default_flat(cls, J0: float, N: int, g: float, n_modes: int = 200) -> "SpectralDensitySpec":
        """Flat band over ``[0.2, 2.2] * sqrt(N) g``."""
        G = g * math.sqrt(N)
        return cls.flat(J0, 0.2 * G, 2.2 * G, n_modes)

    @property
    def is_flat(self) -> bool:
        return self.J0 is not None

    @property
    def n_modes(self) -> int:
        return len(self.frequencies)

    @property
    def spacing(self) -> float:
        w = np.sort(np.asarray(self.frequencies))
        return float(np.min(np.diff(w))) if w.size > 1 else math.inf

    def weights(self) -> np.ndarray:
        """``omega_k^2 s_k`` per mode."""
        w = np.asarray(self.frequencies)
        return w**2 * np.asarray(self.huang_rhys)

    def to_bath(self, max_phonons: int = 1) -> VibronicBathSpec:
        return VibronicBathSpec(self.frequencies, self.huang_rhys, max_phonons)

    def density(self, x: float, eta: float) -> float:
        """``sum_k omega_k^2 s_k delta_eta(x - omega_k)`` (continuum form for flat bands)."""
        if eta < 0:
            raise ValueError("eta must be >= 0")
        if self.is_flat:
            lo, hi = self.band
            if eta == 0:
                if not lo <= x <= hi:
                    raise BandMiss(f"resonance {x:.4g} eV lies outside band [{lo:.4g}, {hi:.4g}]")
                return self.J0
            if x < lo - 5 * eta or x > hi + 5 * eta:
                raise BandMiss(f"no bath mode within 5*eta of {x:.4g} eV")
            return self.J0 / math.pi * (math.atan((hi - x) / eta) - math.atan((lo - x) / eta))
        if eta == 0:
            raise ValueError("discrete baths need eta > 0")
        w = np.asarray(self.frequencies)
        if np.min(np.abs(w - x)) > 5 * eta:
            raise BandMiss(f"no bath mode within 5*eta of {x:.4g} eV")
        return float(np.sum(self.weights() * eta / math.pi / ((x - w) ** 2 + eta**2)))


@dataclass
class RateResult:
    transition: str
    order: int
    N: int
    eta: float
    analytic: float
    fitted: Optional[float] = None
    residual: Optional[float] = None

    @property
    def analytic_ev(self) -> float:
        return self.analytic * HBAR_EV_FS


def _analytic_ev(order: int, transition: str, N: int, g: float,
                 bath: SpectralDensitySpec, eta: float) -> float:
    G = g * math.sqrt(N)
    if order == ZEROTH:
        if transition == "D<-+":
            return math.pi * bath.density(G, eta)
        return 0.0
    if transition == "D<-+":
        return (N - 1) / N * math.pi * bath.density(G, eta)
    if transition == "-<-+":
        return 2 * math.pi / (4 * N) * bath.density(2 * G, eta)
    return (N - 1) / N**2 * math.pi * bath.density(G, eta)


def fgr_rate(order, transition: str, N: int, g: float, bath: SpectralDensitySpec,
             eta: float = 1e-3) -> RateResult:
    """Golden-rule rate (1/fs) with the delta function replaced by a Lorentzian of half-width ``eta``.

    ``eta = 0`` is allowed for flat bands and gives the sharp continuum value.
    """
    order, transition = _order(order), _transition(transition)
    if N < 1 or (order == FIRST and N < 2):
        raise ValueError("first order needs N >= 2")
    rate = _analytic_ev(order, transition, N, g, bath, eta)
    return RateResult(transition, order, int(N), float(eta), rate / HBAR_EV_FS)


def analytic_table(N: int, g: float, bath: SpectralDensitySpec, eta: float = 0.0) -> List[RateResult]:
    return [fgr_rate(o, t, N, g, bath, eta) for o in (ZEROTH, FIRST) for t in TRANSITIONS]


def required_modes(rate_ev: float, width: float, margin: float = 1.2) -> int:
    """Modes needed across ``width`` so the recurrence time ``2 pi / spacing`` exceeds ``3 / rate``."""
    return int(math.ceil(margin * 3 * width / (2 * math.pi * rate_ev))) + 1


@dataclass
class DecayFit:
    initial: str
    order: int
    N: int
    rate: float
    residual: float
    times_fs: np.ndarray
    survival: np.ndarray
    channels: Dict[str, float] = field(default_factory=dict)
    dimension: int = 0


def _final_family(basis, order: int, family: str, n_modes: int) -> np.ndarray:
    """Analytic one-phonon eigenvectors ``|family, k>`` present in ``basis``."""
    vecs = []
    for k in range(n_modes):
        if (False, 0, (k,), ()) not in basis.index_of:
            continue
        if order == FIRST and family != "D" and (True, 1, (k,), ()) not in basis.index_of:
            continue
        vecs.append(fgr_eigenstate(basis, family, (k,)))
    return np.array(vecs) if vecs else np.zeros((0, len(basis)))


def simulate_decay(order, N: int, g: float, bath: SpectralDensitySpec, initial: str = UPPER_POLARITON,
                   times_fs: Optional[Sequence[float]] = None, omega: float = 2.0,
                   n_fit: int = 60, check_recurrence: bool = True) -> DecayFit:
    """Fit the decay rate (1/fs) of an ``H0`` eigenstate under ``H0 + H1``.

    ``initial`` is the upper polariton ``|+, 0>`` or the dark state ``|D, m>``
    with one phonon in the lowest bath mode, which sits far from every
    resonance and so acts as a spectator.  Without ``times_fs`` the fit window
    is ``[0.1, 1] / Gamma`` for the analytic total rate ``Gamma``.  Survival
    is fitted log-linearly; per-channel rates follow from the populations
    reached in each final family at the end of the window,
    ``Gamma_f = Gamma * P_f / (1 - S)``.
    """
    order = _order(order)
    if initial not in (UPPER_POLARITON, DARK_FC_FAMILY):
        raise ValueError(f"initial must be {UPPER_POLARITON!r} or {DARK_FC_FAMILY!r}")
    if initial == UPPER_POLARITON:
        channels = ["D<-+", "-<-+"]
    else:
        channels = ["-<-D"]
    if times_fs is None:
        expected = sum(_analytic_ev(order, t, N, g, bath, 0.0 if bath.is_flat else 1e-3)
                       for t in channels)
        if expected <= 0:
            raise ValueError("no analytic decay expected; pass times_fs explicitly")
        t_int = np.linspace(0.1, 1.0, n_fit) / expected
        if check_recurrence and 2 * math.pi / bath.spacing < 3.0 / expected:
            raise RecurrenceContamination(
                f"bath spacing {bath.spacing:.3g} eV recurs before 3/Gamma; "
                f"use at least {required_modes(expected, max(bath.frequencies) - min(bath.frequencies))} modes")
    else:
        t_int = fs_to_internal(np.asarray(times_fs, dtype=float))

    spectator = None
    if initial == UPPER_POLARITON:
        vbath = bath.to_bath(1)
        seeds = [(True, 0, (), ()), (False, 0, (), ())]
    else:
        spectator = int(np.argmin(bath.frequencies))
        vbath = bath.to_bath(2 if order == FIRST else 1)
        seeds = [(False, 0, (spectator,), ())]
        if order == FIRST:
            seeds.append((False, 1, (spectator,), ()))
    h0, h1 = build_vibronic_fgr_model(order, N, g, omega, vbath, seeds=seeds)
    basis = h0.basis
    if initial == UPPER_POLARITON:
        v0 = fgr_eigenstate(basis, "+")
    else:
        v0 = fgr_eigenstate(basis, "D", (spectator,))

    energies, vectors = diagonalize(h0 + h1)
    coeff = vectors.T @ v0
    phases = np.exp(-1j * np.outer(t_int, energies)) * coeff
    survival = np.abs(phases @ (vectors.T @ v0)) ** 2
    if check_recurrence:
        running_min = np.minimum.accumulate(survival)
        if np.any(survival > 1.2 * running_min) and np.min(survival) < 1.0:
            raise RecurrenceContamination("survival rebounds by more than 20% inside the fit window")
    logs = np.log(np.maximum(survival, 1e-300))
    slope, intercept = np.polyfit(t_int, logs, 1)
    resid = float(np.sqrt(np.mean((logs - (slope * t_int + intercept)) ** 2)))
    rate_ev = max(-float(slope), 0.0)

    psi_end = phases[-1] @ vectors.T
    lost = 1.0 - survival[-1]
    chan: Dict[str, float] = {}
    if initial == UPPER_POLARITON:
        for label, fam in (("D<-+", "D"), ("-<-+", "-")):
            if order == ZEROTH and fam == "-":
                fam_vecs = fgr_eigenstate(basis, "-")[None, :]
            else:
                fam_vecs = _final_family(basis, order, fam, len(bath.frequencies))
            p = float(np.sum(np.abs(fam_vecs @ psi_end) ** 2))
            chan[label] = float(rate_ev * p / lost / HBAR_EV_FS) if lost > 0 else 0.0
    else:
        chan["-<-D"] = rate_ev / HBAR_EV_FS
    return DecayFit(initial, order, int(N), rate_ev / HBAR_EV_FS, resid,
                    internal_to_fs(t_int), survival, chan, len(basis))


def write_rate_table(results: Sequence[RateResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["transition", "order", "N", "eta_eV", "analytic_per_fs", "fitted_per_fs",
                    "residual"])
        for r in results:
            w.writerow([r.transition, "zeroth" if r.order == ZEROTH else "first", r.N,
                        repr(float(r.eta)), repr(float(r.analytic)),
                        "" if r.fitted is None else repr(float(r.fitted)),
                        "" if r.residual is None else repr(float(r.residual))])
