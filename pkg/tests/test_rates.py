import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cute.exceptions import BandMiss, BathTooLarge, RecurrenceContamination
from cute.rates import (DARK_FC_FAMILY, SpectralDensitySpec, analytic_table,
                        fgr_rate, required_modes, simulate_decay, write_rate_table)
from cute.units import HBAR_EV_FS
from cute.vibronic import (FIRST, ZEROTH, VibronicBathSpec, build_vibronic_fgr_model,
                           fgr_eigenstate)

J0 = 0.004 / math.pi
G = 0.1


def _bath(n=6, lo=0.05, hi=0.3):
    w = np.linspace(lo, hi, n)
    return VibronicBathSpec(w, 0.01 * np.ones(n))


@given(st.integers(2, 12), st.integers(0, 5), st.sampled_from([ZEROTH, FIRST]))
def test_closed_form_eigenstates(N, k, order):
    g, omega = 0.05, 2.0
    bath = _bath()
    h0, _ = build_vibronic_fgr_model(order, N, g, omega, bath)
    m = h0.dense()
    Gc = g * math.sqrt(N)
    w = bath.frequencies[k]
    checks = [("+", (), omega + Gc), ("-", (), omega - Gc), ("D", (k,), omega + w)]
    if order == FIRST:
        checks += [("+", (k,), omega + w + Gc), ("-", (k,), omega + w - Gc),
                   ("D", (k,), omega + w)]
    for fam, mm, energy in checks:
        v = fgr_eigenstate(h0.basis, fam, mm)
        assert np.linalg.norm(v) == pytest.approx(1.0)
        np.testing.assert_allclose(m @ v, energy * v, atol=1e-13)


def test_perturbation_only_touches_excitons():
    h0, h1 = build_vibronic_fgr_model(FIRST, 5, 0.05, 2.0, _bath())
    assert h0.hermiticity_error() == 0.0 and h1.hermiticity_error() == 0.0
    photon = np.array([lab[0] for lab in h1.basis.labels])
    assert np.all(h1.dense()[photon] == 0.0)
    lam = np.asarray(_bath().couplings)
    np.testing.assert_allclose(lam, np.asarray(_bath().frequencies) * 0.1)


def test_seeded_space_is_a_subspace():
    bath = _bath(8)
    full, _ = build_vibronic_fgr_model(FIRST, 5, 0.05, 2.0, bath)
    part, _ = build_vibronic_fgr_model(FIRST, 5, 0.05, 2.0, bath,
                                       seeds=[(True, 0, (), ()), (False, 0, (), ())])
    assert set(part.basis.labels) <= set(full.basis.labels)
    assert len(part.basis) < len(full.basis)


def test_bath_validation_and_cap():
    with pytest.raises(ValueError):
        VibronicBathSpec([0.1, -0.1], [0.1, 0.1])
    with pytest.raises(ValueError):
        VibronicBathSpec([0.1], [0.1, 0.1])
    with pytest.raises(BathTooLarge):
        build_vibronic_fgr_model(FIRST, 5, 0.05, 2.0, _bath(40), max_dimension=100)


@pytest.mark.parametrize("N", [2, 10, 37])
def test_flat_bath_table(N):
    g = G / math.sqrt(N)
    bath = SpectralDensitySpec.default_flat(J0, N, g)
    rate = {(r.order, r.transition): r.analytic_ev for r in analytic_table(N, g, bath, 0.0)}
    assert rate[(FIRST, "D<-+")] == pytest.approx(math.pi * J0 * (N - 1) / N, rel=1e-14)
    assert rate[(FIRST, "-<-+")] == pytest.approx(math.pi * J0 / (2 * N), rel=1e-14)
    assert rate[(FIRST, "-<-D")] == pytest.approx(math.pi * J0 * (N - 1) / N**2, rel=1e-14)
    assert rate[(ZEROTH, "D<-+")] == pytest.approx(math.pi * J0, rel=1e-14)
    assert rate[(ZEROTH, "-<-+")] == 0.0 and rate[(ZEROTH, "-<-D")] == 0.0
    assert rate[(FIRST, "-<-+")] / rate[(FIRST, "D<-+")] == pytest.approx(1 / (2 * (N - 1)))


def test_unit_conversion_and_aliases():
    bath = SpectralDensitySpec.default_flat(J0, 10, G / math.sqrt(10))
    r = fgr_rate("first", "−←+", 10, G / math.sqrt(10), bath, 0.0)
    assert r.transition == "-<-+"
    assert r.analytic == pytest.approx(math.pi * J0 / 20 / HBAR_EV_FS)
    with pytest.raises(ValueError):
        fgr_rate(FIRST, "D<-+", 1, G, bath)


def test_lorentzian_density_converges_linearly():
    bath = SpectralDensitySpec.flat(J0, 0.02, 0.22)
    x = 0.1
    errs = [J0 - bath.density(x, eta) for eta in (4e-3, 2e-3, 1e-3)]
    # O(eta) approach: halving eta halves the error
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.02)
    slope = J0 / math.pi * (1 / (0.22 - x) + 1 / (x - 0.02))
    assert errs[2] == pytest.approx(slope * 1e-3, rel=1e-3)


def test_discrete_density_matches_continuum():
    bath = SpectralDensitySpec.flat(J0, 0.02, 0.22, 400)
    disc = SpectralDensitySpec.discrete(bath.frequencies, bath.huang_rhys)
    assert disc.density(0.1, 5 * bath.spacing) == pytest.approx(bath.density(0.1, 5 * bath.spacing),
                                                                rel=1e-3)


def test_band_miss():
    bath = SpectralDensitySpec.flat(J0, 0.02, 0.22)
    with pytest.raises(BandMiss):
        bath.density(0.5, 0.0)
    with pytest.raises(BandMiss):
        bath.density(0.5, 1e-3)
    with pytest.raises(BandMiss):
        SpectralDensitySpec.discrete([0.1], [0.1]).density(0.2, 1e-3)
    with pytest.raises(ValueError):
        SpectralDensitySpec.discrete([0.1], [0.1]).density(0.1, 0.0)


def test_required_modes():
    n = required_modes(0.004, 0.2)
    assert n == math.ceil(1.2 * 3 * 0.2 / (2 * math.pi * 0.004)) + 1
    assert 2 * math.pi / (0.2 / (n - 1)) >= 3 / 0.004


def test_zeroth_order_decay_and_quartering():
    N = 10
    g = G / math.sqrt(N)
    bath = SpectralDensitySpec.default_flat(J0, N, g, 200)
    fit = simulate_decay(ZEROTH, N, g, bath)
    analytic = fgr_rate(ZEROTH, "D<-+", N, g, bath, 0.0).analytic
    assert fit.rate == pytest.approx(analytic, rel=0.05)
    weak = SpectralDensitySpec.discrete(bath.frequencies, np.asarray(bath.huang_rhys) / 4)
    weak_fit = simulate_decay(ZEROTH, N, g, weak, times_fs=fit.times_fs, check_recurrence=False)
    assert weak_fit.rate == pytest.approx(fit.rate / 4, rel=0.1)


def test_detuned_bath_leaves_polariton_intact():
    N = 10
    g = G / math.sqrt(N)
    bath = SpectralDensitySpec.flat(J0, 0.5, 0.7, 100)
    fit = simulate_decay(ZEROTH, N, g, bath, times_fs=np.linspace(0, 500, 51),
                         check_recurrence=False)
    assert fit.survival.min() > 0.99


def test_first_order_dark_start():
    N = 6
    g = G / math.sqrt(N)
    bath = SpectralDensitySpec.default_flat(J0, N, g, 200)
    fit = simulate_decay(FIRST, N, g, bath, DARK_FC_FAMILY)
    analytic = fgr_rate(FIRST, "-<-D", N, g, bath, 0.0).analytic
    assert fit.channels["-<-D"] == pytest.approx(analytic, rel=0.2)


def test_recurrence_guard():
    N = 10
    g = G / math.sqrt(N)
    with pytest.raises(RecurrenceContamination):
        simulate_decay(ZEROTH, N, g, SpectralDensitySpec.default_flat(J0, N, g, 10))
    with pytest.raises(ValueError):
        simulate_decay(ZEROTH, N, g, SpectralDensitySpec.default_flat(J0, N, g), "nowhere")


def test_rate_table_csv(tmp_path):
    N = 10
    bath = SpectralDensitySpec.default_flat(J0, N, G / math.sqrt(N))
    rows = analytic_table(N, G / math.sqrt(N), bath)
    rows[0].fitted, rows[0].residual = np.float64(0.5), np.float64(0.01)
    write_rate_table(rows, tmp_path / "r.csv")
    with open(tmp_path / "r.csv") as fh:
        data = list(csv.DictReader(fh))
    assert len(data) == 6
    assert data[0]["fitted_per_fs"] == "0.5" and data[1]["fitted_per_fs"] == ""
    assert float(data[3]["analytic_per_fs"]) == pytest.approx(rows[3].analytic)
