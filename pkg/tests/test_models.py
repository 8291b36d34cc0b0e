import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qwalk_index.lattice import check_unitary
from qwalk_index.models import (
    GARNISH,
    I_SIGMA2,
    SIGMA1,
    CoinProfile,
    DecouplingFailed,
    build_window,
    bulk_model,
    crossover,
    decoupler,
    decoupler_gentle,
    decoupler_reflection,
    four_step,
    four_step_model,
    gentle_path_check,
    linear_path,
    model_from_angles,
    ramp,
    rotation,
    shift_matrix,
    split_step,
    split_step_model,
    verify_decoupled,
)
from qwalk_index.symmetry import check_admissible
from qwalk_index.verification import eta_defect

angles = st.floats(-np.pi, np.pi, allow_nan=False)
FOUR_STEP_EXAMPLE = (2.0, -0.8, -1.6)


def test_rotation_values():
    np.testing.assert_array_equal(rotation(0.0), np.eye(2))
    np.testing.assert_allclose(rotation(np.pi / 2), I_SIGMA2, atol=1e-16)
    assert abs(np.linalg.det(rotation(0.37)) - 1) < 1e-15


def test_rotation_times_sigma1_hermitian(rng):
    for t in rng.uniform(-np.pi, np.pi, 100):
        m = rotation(t) @ SIGMA1
        np.testing.assert_allclose(m, m.conj().T, atol=1e-15)


def test_chiral_shift_identities():
    gamma = np.kron(np.eye(9), SIGMA1)
    up, dn = shift_matrix("up", -4, 4), shift_matrix("dn", -4, 4)
    np.testing.assert_array_equal(gamma @ dn, up.conj().T @ gamma)
    np.testing.assert_array_equal(gamma @ up, dn.conj().T @ gamma)


def test_zero_angles_give_pure_shift():
    ring = split_step_model(0.0, 0.0).ring_matrix(-4, 4)
    np.testing.assert_array_equal(ring, shift_matrix("dn", -4, 4) @ shift_matrix("up", -4, 4))


def test_four_step_zero_angles_is_four_shift():
    ring = four_step_model(0.0, 0.0, 0.0).ring_matrix(-5, 5)
    up, dn = shift_matrix("up", -5, 5), shift_matrix("dn", -5, 5)
    np.testing.assert_array_equal(ring, up @ up @ dn @ dn)


def test_split_step_factor_order():
    t1, t2 = 0.7, -1.3
    B, A = np.kron(np.eye(7), rotation(t1 / 2)), np.kron(np.eye(7), rotation(t2))
    up, dn = shift_matrix("up", -3, 3), shift_matrix("dn", -3, 3)
    np.testing.assert_allclose(split_step_model(t1, t2).ring_matrix(-3, 3), B @ dn @ A @ up @ B, atol=1e-15)


@given(angles, angles)
def test_split_step_admissible_bdi(t1, t2):
    W, rep, S = split_step(CoinProfile({"theta1": t1, "theta2": t2}), -10, 9)
    assert check_unitary(W, 1e-12)[0]
    ok, defects = check_admissible(W, rep, tol=1e-12)
    assert ok, defects
    assert W.L == 1 and S is not None and S.L == 1


@given(angles, angles, angles, st.booleans())
def test_four_step_admissible(a, b, c, garnish):
    W, rep, S = four_step(CoinProfile({"A": a, "B": b, "C": c}), garnish, -10, 9)
    assert check_unitary(W, 1e-12)[0]
    assert check_admissible(W, rep, tol=1e-10)[0]
    assert rep.type.label == ("AIII" if garnish else "BDI")
    assert W.L <= 2


def test_garnished_four_step_breaks_eta():
    W, rep, _ = four_step(CoinProfile(dict(zip("ABC", FOUR_STEP_EXAMPLE))), True, -10, 9)
    assert eta_defect(W, W.structure) > 0.1
    W0, _, _ = four_step(CoinProfile(dict(zip("ABC", FOUR_STEP_EXAMPLE))), False, -10, 9)
    assert eta_defect(W0, W0.structure) < 1e-12


def test_garnish_is_unitary():
    np.testing.assert_allclose(GARNISH @ GARNISH.conj().T, np.eye(2), atol=1e-15)


def test_window_size_limits():
    with pytest.raises(ValueError):
        split_step(CoinProfile({"A": 0.1, "B": 0.2}), 0, 3)
    with pytest.raises(ValueError):
        four_step(CoinProfile({"A": 0.1, "B": 0.2, "C": 0.3}), False, 0, 5)


@pytest.mark.parametrize("name", ["split_step", "four_step"])
@pytest.mark.parametrize("kind", ["gentle", "reflection"])
def test_decouplers_decouple(name, kind):
    m = split_step_model(0.8, 2.0) if name == "split_step" else four_step_model(*FOUR_STEP_EXAMPLE)
    W = build_window(m, -15, 14, [decoupler(name, kind, 0)])
    ok, c = verify_decoupled(W, 0)
    assert ok and c <= 1e-14
    assert check_admissible(W, m.rep(W.structure))[0]


def test_undecoupled_walk_crosses():
    W = build_window(split_step_model(0.8, 2.0), -15, 14)
    ok, c = verify_decoupled(W, 0)
    assert not ok and c > 0.1


def test_recipe_kinds_and_determinants():
    g, r = decoupler_gentle("four_step", 0), decoupler_reflection("four_step", 0)
    assert g.kind == "gentle" and r.kind == "local"
    assert {(lab, x) for lab, x, _ in g.substitutions} == {("A", -1), ("B", -1)}
    np.testing.assert_allclose(g.determinants, [1, 1])
    np.testing.assert_allclose(r.determinants, [-1, -1])
    assert {(lab, x) for lab, x, _ in decoupler_gentle("split_step", 3).substitutions} == {("A", 3)}


def test_substitution_that_does_not_decouple_is_caught():
    from qwalk_index.models import DecouplingRecipe

    bad = DecouplingRecipe(0, (("B", 0, I_SIGMA2),), "local")
    with pytest.raises(DecouplingFailed):
        build_window(split_step_model(0.8, 2.0), -10, 9, [bad])


@pytest.mark.parametrize("name", ["split_step", "four_step"])
def test_gentle_path_admissible(name):
    m = split_step_model(0.8, 2.0) if name == "split_step" else four_step_model(*FOUR_STEP_EXAMPLE, garnish=True)
    assert gentle_path_check(m, decoupler_gentle(name, 0), -12, 11, n_samples=21)


def test_linear_path_fails():
    m = split_step_model(0.8, 2.0)
    assert not gentle_path_check(m, linear_path(decoupler_reflection("split_step", 0)), -12, 11)


def test_path_required():
    with pytest.raises(ValueError):
        gentle_path_check(split_step_model(0.8, 2.0), decoupler_reflection("split_step", 0), -12, 11)


def test_ramp_profile():
    f = ramp(1.0, 3.0, 4.0)
    assert f(-5) == 1.0 and f(5) == 3.0 and f(0) == 2.0
    sharp = ramp(1.0, 3.0, 0.0)
    assert sharp(-1) == 1.0 and sharp(0) == 3.0


def test_crossover_identical_sides_is_translation_invariant():
    a = crossover("split_step", {"A": 0.5, "B": 1.0}, {"A": 0.5, "B": 1.0}, 3.0)
    assert a.profile.constant
    np.testing.assert_array_equal(
        build_window(a, -8, 7).dense, build_window(split_step_model(1.0, 0.5), -8, 7).dense
    )


def test_crossover_interior_matches_bulks():
    m = crossover("split_step", {"A": 0.7, "B": 1.9}, {"A": -2.5, "B": -2.0}, 4.0)
    W = build_window(m, -30, 29)
    assert check_admissible(W, m.rep(W.structure))[0]
    from qwalk_index.lattice import ti_to_banded

    for side, xs in (("left", range(-25, -6)), ("right", range(6, 25))):
        ti, _ = ti_to_banded(bulk_model(m, side).symbol(), -30, 29)
        for x in xs:
            for y in (x - 1, x, x + 1):
                np.testing.assert_allclose(W.block(x, y), ti.block(x, y), atol=1e-15)


def test_model_from_angles_names():
    m = model_from_angles("split_step", {"theta1": 1.2, "theta2": 0.4})
    assert m.profile.angles == {"B": 1.2, "A": 0.4}
    m = model_from_angles("four_step", {"theta_a": 1, "theta_b": 2, "theta_c": 3}, True)
    assert m.garnish and m.profile.angles == {"A": 1.0, "B": 2.0, "C": 3.0}
