import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphot import (
    ProblemParams,
    background_green,
    lattice_graph,
    random_graph,
    robin_to_dirichlet,
    scattering_data,
    simulate,
    solve_direct,
    system_matrix,
)
from graphot.errors import SolverError, ValidationError
from graphot.forward import Measurement

import oracles

P1 = ProblemParams(alpha0=1.0)


def test_dumbbell_direct_background(dumbbell):
    u, v = solve_direct(dumbbell, P1, None, bsrc=[1.0])
    assert u == pytest.approx([1.0], abs=1e-14)
    assert v == pytest.approx([2.0], abs=1e-14)


def test_dumbbell_direct_perturbed(dumbbell):
    u, v = solve_direct(dumbbell, P1, [0.5], bsrc=[1.0])
    assert u == pytest.approx([2 / 3], abs=1e-14)
    assert v == pytest.approx([5 / 3], abs=1e-14)


def test_zero_source_zero_solution(path3_closed):
    u, v = solve_direct(path3_closed, P1, [0.1, 0.2, 0.3])
    assert not u.any() and not v.any()


def test_dumbbell_green(dumbbell_G0):
    np.testing.assert_allclose(dumbbell_G0.G0, [[1, 1], [1, 2]], atol=1e-14)
    np.testing.assert_allclose(dumbbell_G0.block(["b"], ["a"]), [[1.0]])


def test_system_matrix_dumbbell(dumbbell):
    np.testing.assert_array_equal(system_matrix(dumbbell, P1), [[2, -1], [-1, 1]])


def test_path3_green_matches_dense_inverse(path3_closed):
    G0 = background_green(path3_closed, P1)
    np.testing.assert_allclose(G0.G0, oracles.dense_green(path3_closed, 1.0), atol=1e-12)
    np.testing.assert_allclose(G0.VV, G0.G0[:3, :3])


def test_green_blocks_layout(path3_closed):
    G0 = background_green(path3_closed.with_terminals(["r"], ["l", "r"]), P1)
    np.testing.assert_array_equal(G0.RV, G0.block(["l", "r"], ["a", "b", "c"]))
    np.testing.assert_array_equal(G0.VS, G0.block(["a", "b", "c"], ["r"]))
    np.testing.assert_array_equal(G0.RS, G0.block(["l", "r"], ["r"]))


def test_rtd_dumbbell(dumbbell):
    m = robin_to_dirichlet(dumbbell, P1, [0.5])
    np.testing.assert_allclose(m.lam, [[5 / 3]])
    np.testing.assert_allclose(m.background, [[2.0]])
    assert scattering_data(m) == pytest.approx([1 / 3], abs=1e-14)


def test_zero_potential_gives_zero_data(path3_closed):
    m = robin_to_dirichlet(path3_closed, P1, np.zeros(3))
    np.testing.assert_array_equal(m.lam, m.background)
    assert not scattering_data(m).any()


def test_receiver_major_layout(path3_closed):
    m = robin_to_dirichlet(path3_closed, P1, [0.3, 0.0, 0.1])
    phi = scattering_data(m)
    assert phi[1] == pytest.approx(m.background[0, 1] - m.lam[0, 1])
    assert phi[2] == pytest.approx(m.background[1, 0] - m.lam[1, 0])


def test_shape_mismatch_rejected():
    m = Measurement(("r",), ("s",), np.zeros((1, 2)), np.zeros((1, 1)))
    with pytest.raises(ValidationError):
        scattering_data(m)


def test_bad_potential_rejected(dumbbell):
    with pytest.raises(ValidationError):
        simulate(dumbbell, P1, [0.1, 0.2])
    with pytest.raises(ValidationError):
        simulate(dumbbell, P1, [-0.1])
    with pytest.raises(ValidationError):
        simulate(dumbbell, P1, [np.nan])


def test_singular_system_raises(dumbbell):
    # det = 1 + eta for the dumbbell at alpha0 = 1
    with pytest.raises(SolverError):
        solve_direct(dumbbell, P1, [-1.0], bsrc=[1.0], allow_negative=True)


@given(n=st.integers(1, 12), seed=st.integers(0, 2**31), t=st.floats(0, 3),
       alpha=st.floats(0.05, 5))
def test_green_reciprocity_and_dense_oracle(n, seed, t, alpha):
    g = random_graph(n, seed)
    G0 = background_green(g, ProblemParams(alpha, t))
    assert np.max(np.abs(G0.G0 - G0.G0.T)) < 1e-10
    np.testing.assert_allclose(G0.G0, oracles.dense_green(g, alpha, t), rtol=1e-9, atol=1e-12)


@given(n=st.integers(1, 10), seed=st.integers(0, 2**31))
def test_unit_source_columns(n, seed):
    g = random_graph(n, seed)
    p = ProblemParams(0.5, 0.2)
    G0 = background_green(g, p)
    nv, nb = g.n_interior, g.n_boundary
    for j in range(nv + nb):
        e = np.zeros(nv + nb)
        e[j] = 1.0
        u, v = solve_direct(g, p, None, e[:nv], e[nv:])
        np.testing.assert_allclose(np.concatenate([u, v]), G0.G0[:, j], atol=1e-10)


@given(n=st.integers(1, 10), seed=st.integers(0, 2**31))
def test_monotone_in_potential(n, seed):
    g = random_graph(n, seed)
    p = ProblemParams(0.8, 0.1)
    rng = np.random.default_rng(seed)
    eta = rng.uniform(0, 1, n)
    bump = rng.uniform(0, 1, n) * (rng.random(n) < 0.5)
    lo = robin_to_dirichlet(g, p, eta).lam
    hi = robin_to_dirichlet(g, p, eta + bump).lam
    assert np.all(hi <= lo + 1e-12)
    # absorption lowers the signal: phi >= 0
    assert np.all(simulate(g, p, eta) >= -1e-12)


@given(n=st.integers(1, 8), seed=st.integers(0, 2**31))
def test_rtd_matches_dense_oracle(n, seed):
    g = random_graph(n, seed)
    eta = np.random.default_rng(seed).uniform(0, 2, n)
    m = robin_to_dirichlet(g, ProblemParams(0.3, 0.4), eta)
    np.testing.assert_allclose(m.lam, oracles.dense_rtd(g, 0.3, 0.4, eta), rtol=1e-9, atol=1e-12)


def test_lattice_green_symmetric(lattice3_G0):
    assert np.max(np.abs(lattice3_G0.G0 - lattice3_G0.G0.T)) < 1e-10
    assert lattice_graph(3, 3).n_boundary == 12
