import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_vib
from cute.dynamics import TimeGrid, initial_photonic_state, propagate
from cute.exceptions import DimensionCap, NotSymmetric
from cute.hamiltonian import CavitySpec, build
from cute.observables import reconstruct_manybody
from cute.oracle import (OracleBasis, build_oracle, compare_dynamics, leakage_scaling,
                         permutation_matrix, symmetrize, unsymmetrize)
from cute.symbasis import SpeciesSpec, enumerate_basis


def test_oracle_dimension_formula():
    for N, mg, me in [(1, 2, 3), (2, 2, 2), (3, 3, 2), (4, 2, 1)]:
        assert len(OracleBasis(N, mg, me)) == OracleBasis.dimension_for(N, mg, me)


@given(st.integers(0, 10_000), st.integers(2, 3), st.integers(1, 3), st.integers(1, 3))
def test_permutations_commute_with_oracle(seed, N, mg, me):
    vib = random_vib(np.random.default_rng(seed), mg, me)
    h = build_oracle(N, vib, 0.05, 2.0)
    m = h.dense()
    for a, b in itertools.combinations(range(N), 2):
        p = permutation_matrix(h.basis, a, b).toarray()
        np.testing.assert_allclose(p @ m, m @ p, atol=1e-15)
        np.testing.assert_array_equal(p @ p, np.eye(len(h.basis)))


def test_symmetrize_is_an_isometry_on_symmetric_states():
    vib = random_vib(np.random.default_rng(1), 3, 2)
    N = 3
    h = build_oracle(N, vib, 0.05, 2.0)
    cb = enumerate_basis([SpeciesSpec("M", vib, n_molecules=N, g=0.05)], N)
    v = propagate(h, initial_photonic_state(h.basis), [123.0]).amplitudes[0]
    s = symmetrize(v, h.basis, cb)
    assert s.norm == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(unsymmetrize(s, h.basis, cb).amplitudes, v, atol=1e-12)


def test_symmetrize_rejects_asymmetric_vectors():
    vib = random_vib(np.random.default_rng(1), 2, 2)
    h = build_oracle(2, vib, 0.05, 2.0)
    cb = enumerate_basis([SpeciesSpec("M", vib, n_molecules=2, g=0.05)], 2)
    v = np.zeros(len(h.basis))
    v[h.basis.index_of[(1, (0, 0))]] = 1.0
    with pytest.raises(NotSymmetric):
        symmetrize(v, h.basis, cb)


def test_oracle_hamiltonian_maps_onto_symmetric_one():
    vib = random_vib(np.random.default_rng(7), 3, 3)
    N, g = 3, 0.06
    h = build_oracle(N, vib, g, 2.0)
    cb = enumerate_basis([SpeciesSpec("M", vib, n_molecules=N, g=g)], N)
    hc = build(cb, CavitySpec(2.0)).dense()
    # embed the symmetric basis and project the oracle matrix onto it
    cols = np.array([unsymmetrize(np.eye(len(cb))[i], h.basis, cb).amplitudes.real
                     for i in range(len(cb))]).T
    np.testing.assert_allclose(cols.T @ cols, np.eye(len(cb)), atol=1e-12)
    np.testing.assert_allclose(cols.T @ h.dense() @ cols, hc, atol=1e-12)


def test_exact_order_reproduces_oracle():
    vib = random_vib(np.random.default_rng(3), 3, 3)
    rep = compare_dynamics(3, vib, 0.05, 2.0, 3, TimeGrid(500.0, 101))
    assert rep.max_distance < 1e-10
    assert rep.max_leakage == 0.0


def test_higher_order_is_closer_to_oracle():
    vib = random_vib(np.random.default_rng(3), 3, 3)
    r0 = compare_dynamics(4, vib, 0.05, 2.0, 0, TimeGrid(200.0, 41))
    r1 = compare_dynamics(4, vib, 0.05, 2.0, 1, TimeGrid(200.0, 41))
    assert r1.max_distance < r0.max_distance
    assert r1.max_leakage < r0.max_leakage


def test_reconstruction_matches_oracle_amplitudes():
    vib = random_vib(np.random.default_rng(4), 2, 2)
    N, g = 4, 0.05
    h = build_oracle(N, vib, g, 2.0)
    cb = enumerate_basis([SpeciesSpec("M", vib, n_molecules=N, g=g)], 1)
    exact = enumerate_basis([SpeciesSpec("M", vib, n_molecules=N, g=g)], N)
    v = propagate(h, initial_photonic_state(h.basis), [80.0]).amplitudes[0]
    sym = symmetrize(v, h.basis, exact).amplitudes[:len(cb)]
    rec = reconstruct_manybody(sym, cb)
    for sector, cfg in h.basis.elements:
        if sum(1 for i, k in enumerate(cfg, 1) if k and i != sector) <= 1:
            assert rec.amplitude(sector, cfg) == pytest.approx(v[h.basis.index_of[(sector, cfg)]],
                                                               abs=1e-12)


def test_caps():
    vib = random_vib(np.random.default_rng(0), 2, 2)
    with pytest.raises(DimensionCap):
        build_oracle(7, vib, 0.05, 2.0)
    with pytest.raises(DimensionCap):
        build_oracle(5, random_vib(np.random.default_rng(0), 10, 10), 0.05, 2.0)


def test_leakage_falls_with_n(vib_s1):
    res = leakage_scaling([2, 4, 8], vib_s1, 0.1, vib_s1.fc_energy(), TimeGrid(100.0, 101))
    assert res.leakage[0] > res.leakage[1] > res.leakage[2]
    assert res.slope < 0


def test_report_json(tmp_path):
    vib = random_vib(np.random.default_rng(3), 2, 2)
    rep = compare_dynamics(2, vib, 0.05, 2.0, 2, TimeGrid(10.0, 3))
    rep.to_json(tmp_path / "r.json")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["n_molecules"] == 2 and len(data["distance"]) == 3
