import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qwalk_index.lattice import BandedUnitary, CellStructure
from qwalk_index.models import SIGMA1, build_window, decoupler, four_step_model, split_step_model
from qwalk_index.schur import (
    SchurContext,
    SchurConvergenceError,
    dense_overlap_count,
    eigendetect,
    renewal_check,
    schur_eval,
    schur_resolvent,
    schur_series,
)
from qwalk_index.spectral import essential_gap

from helpers import random_unitary


def decoupled(model, name, hw=30, cut=0):
    W = build_window(model, cut - hw, cut + hw - 1, [decoupler(name, "gentle", cut)])
    return SchurContext(W, [(cut - 1, None), (cut, None)], gaps=essential_gap(model.symbol()))


@pytest.fixture(scope="module")
def four_step_ctx():
    return decoupled(four_step_model(2.0, -0.8, -1.6, garnish=True), "four_step")


def test_block_diagonal_walk_gives_constant(rng):
    U0, U1 = random_unitary(rng, 2), random_unitary(rng, 4)
    s = CellStructure.uniform(0, 2)
    W = BandedUnitary.from_dense(s, np.block([[U0, np.zeros((2, 4))], [np.zeros((4, 2)), U1]]))
    ctx = SchurContext(W, [(0, None)])
    for z in (0, 0.3, -0.5j, 0.7 + 0.2j):
        np.testing.assert_allclose(schur_eval(ctx, z), U0, atol=1e-14)


def test_sigma1_one_component_is_z():
    # W e0 = e1 leaves H0, then returns: f(z) = z exactly
    s = CellStructure.uniform(0, 3)
    W = BandedUnitary.from_dense(s, np.kron(np.eye(4), SIGMA1))
    ctx = SchurContext(W, [(1, [0])])
    for z in (0.0, 0.5, -0.4 + 0.3j):
        np.testing.assert_allclose(schur_eval(ctx, z), [[z]], atol=1e-15)
    for t in (1, -1):
        assert eigendetect(ctx, t).dimension == 1 == dense_overlap_count(ctx, t)


def test_sigma1_whole_cell():
    s = CellStructure.uniform(0, 3)
    W = BandedUnitary.from_dense(s, np.kron(np.eye(4), SIGMA1))
    ctx = SchurContext(W, [(2, None)])
    np.testing.assert_allclose(schur_eval(ctx, 0.6), SIGMA1, atol=1e-15)
    d = eigendetect(ctx, 1, gamma=W.dense)
    assert d.dimension == 1 and abs(d.chirality_trace - 1) < 1e-12


def test_context_validation():
    W = BandedUnitary.identity(CellStructure.uniform(0, 3))
    with pytest.raises(ValueError):
        SchurContext(W, [])
    with pytest.raises(ValueError):
        SchurContext(W, [(0, [2])])
    with pytest.raises(ValueError):
        SchurContext(W, [(0, [0]), (0, None)])
    assert SchurContext(W, [(0, None)]).trunc_N == 16


def test_z_domain_checks(four_step_ctx):
    with pytest.raises(ValueError, match="outside"):
        schur_eval(four_step_ctx, 1.1)
    bare = SchurContext(four_step_ctx.W, four_step_ctx.H0)
    with pytest.raises(ValueError, match="gap report"):
        schur_eval(bare, 1.0)
    with pytest.raises(ValueError, match="not in an essential gap"):
        schur_eval(four_step_ctx, 1j)
    with pytest.raises(ValueError):
        schur_eval(four_step_ctx, 0.3, method="magic")


@given(st.floats(0, 0.9), st.floats(0, 2 * np.pi))
def test_contractive(four_step_ctx, r, phi):
    f = schur_eval(four_step_ctx, r * np.exp(1j * phi))
    assert np.linalg.norm(f, 2) <= 1 + 1e-10


def test_contractive_random_points(four_step_ctx, rng):
    for _ in range(20):
        z = 0.9 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        assert np.linalg.norm(schur_eval(four_step_ctx, z), 2) <= 1 + 1e-10


def test_series_matches_resolvent(four_step_ctx, rng):
    for _ in range(10):
        z = 0.9 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        np.testing.assert_allclose(schur_series(four_step_ctx, z), schur_resolvent(four_step_ctx, z), atol=1e-9)


def test_truncation_converged(four_step_ctx):
    z = 0.5 * np.exp(0.7j)
    N = four_step_ctx.trunc_N
    np.testing.assert_allclose(schur_series(four_step_ctx, z, N), schur_series(four_step_ctx, z, 2 * N), atol=1e-10)


def test_short_series_raises(four_step_ctx):
    with pytest.raises(SchurConvergenceError):
        schur_series(four_step_ctx, 0.9, trunc_N=5)


def test_cauchy_riemann(four_step_ctx):
    h = 1e-5
    for z in (0.2 + 0.1j, -0.5j, 0.7):
        dx = (schur_eval(four_step_ctx, z + h) - schur_eval(four_step_ctx, z - h)) / (2 * h)
        dy = (schur_eval(four_step_ctx, z + 1j * h) - schur_eval(four_step_ctx, z - 1j * h)) / (2j * h)
        assert np.abs(dx - dy).max() < 1e-6


def test_four_step_eigendetect(four_step_ctx):
    gamma = np.kron(np.eye(four_step_ctx.W.structure.n_cells), SIGMA1)
    plus = eigendetect(four_step_ctx, 1, gamma=gamma)
    minus = eigendetect(four_step_ctx, -1, gamma=gamma)
    # one state on each side of the cut, opposite chirality
    assert plus.dimension == 2 and abs(plus.chirality_trace) < 1e-8
    assert minus.dimension == 0
    assert plus.singular_values[1] < 1e-6 < 1 < plus.singular_values[2]
    for t, d in ((1, plus), (-1, minus)):
        assert d.dimension == dense_overlap_count(four_step_ctx, t)


@pytest.mark.parametrize("angles, dims", [((0.7, 1.9), (0, 0)), ((1.9, 0.7), (0, 2))])
def test_split_step_eigendetect(angles, dims):
    ctx = decoupled(split_step_model(*angles), "split_step")
    assert tuple(eigendetect(ctx, t).dimension for t in (1, -1)) == dims
    assert tuple(dense_overlap_count(ctx, t) for t in (1, -1)) == dims


def test_eigendetect_rejects_bad_target(four_step_ctx):
    with pytest.raises(ValueError):
        eigendetect(four_step_ctx, 1j)


def test_renewal_identity_is_exact(four_step_ctx):
    r = renewal_check(four_step_ctx, np.eye(4), [0.3, -0.2j])
    assert max(r.deviations.values()) < 1e-12


def test_renewal_i_sigma2(four_step_ctx):
    V = np.kron(np.eye(2), np.array([[0, 1], [-1, 0]], dtype=complex))
    r = renewal_check(four_step_ctx, V, [0.4, 0.1 + 0.5j])
    assert r.deviations[("VW", "V f")] < 1e-10
    assert r.deviations[("WV", "f V")] < 1e-10


def test_renewal_random(four_step_ctx, rng):
    for _ in range(5):
        V = random_unitary(rng, 4)
        zs = [0.9 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform()) for _ in range(2)]
        r = renewal_check(four_step_ctx, V, zs)
        assert r.deviation < 1e-7
        assert (r.walk, r.variant) in {("VW", "V f"), ("WV", "f V")}
        assert r.deviations[("VW", "V f")] < 1e-7 and r.deviations[("WV", "f V")] < 1e-7
        assert r.deviations[("VW", "f V^dagger")] > 1e-3


def test_renewal_rejects_bad_v(four_step_ctx):
    with pytest.raises(ValueError):
        renewal_check(four_step_ctx, np.eye(2), [0.1])
    with pytest.raises(ValueError):
        renewal_check(four_step_ctx, 2 * np.eye(4), [0.1])
