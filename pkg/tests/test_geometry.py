import math

import numpy as np
import pytest

from lcslab.geometry import (
    ClosedOneForm,
    CoverModel,
    FormField,
    builtin_scalar_field,
    check_dbeta_squared,
    deck_act_cotangent,
    eval_lichnerowicz,
    form_norm,
    load_cover_model,
    pi_g,
    product_space,
    scalar_form,
    zero_form,
)


@pytest.fixture
def s1_unit():
    return load_cover_model({"circles": 1, "lines": 0, "beta": {"lattice": [1]}})


@pytest.fixture
def t2_first():
    return load_cover_model({"circles": 2, "lines": 0, "beta": {"lattice": [1, 0]}})


def test_model_space_basics():
    sp = product_space(2, 1)
    assert sp.dim == 3
    assert sp.circle_factors == 2 and sp.line_factors == 1
    assert sp.is_periodic(0) and not sp.is_periodic(2)
    reduced = sp.reduce(np.array([1.25, -0.5, 3.0]))
    assert np.allclose(reduced, [0.25, 0.5, 3.0])
    # circle distance folds
    assert sp.distance(np.array([0.05, 0, 0]), np.array([0.95, 0, 0])) == pytest.approx(0.1)


def test_model_space_rejects_empty():
    with pytest.raises(ValueError):
        product_space(0, 0)


def test_closed_one_form_validation():
    sp = product_space(1, 1)
    with pytest.raises(ValueError):
        ClosedOneForm(space=sp, lattice=(1, 2))  # too many coefficients
    with pytest.raises(ValueError):
        ClosedOneForm(space=sp, lattice=(0.5,))  # not an integer
    # non-periodic g0 is rejected by sampling
    from lcslab.geometry import ScalarField
    bad = ScalarField(name="linear", value=lambda p: p[0])
    with pytest.raises(ValueError, match="period-1"):
        ClosedOneForm(space=sp, lattice=(1,), g0=bad)


def test_cover_rank_and_generators(t2_first):
    assert t2_first.rank_r == 1
    assert t2_first.covered == (0,)
    gens = t2_first.generators()
    assert len(gens) == 1 and np.allclose(gens[0], [1, 0])
    kinds = t2_first.cover_space().kinds
    assert kinds == ("line", "circle")


def test_deck_act_identity_and_translation(s1_unit):
    p = np.array([0.3])
    assert np.allclose(s1_unit.deck_act([0], p), p)
    assert np.allclose(s1_unit.deck_act([1], p), [1.3])
    with pytest.raises(ValueError):
        s1_unit.deck_act([1, 0], p)


def test_deck_primitive_increment(s1_unit):
    # dyadic points keep the closed-form identity exact in floats
    for x in (0.25, 0.5, -1.75):
        p = np.array([x])
        assert s1_unit.g(s1_unit.deck_act([1], p)) - s1_unit.g(p) == 1.0
    assert s1_unit.deck_g_increment([3]) == 3


def test_deck_trivial_on_uncovered_factor(t2_first):
    p = np.array([0.3, 0.8])
    q = t2_first.deck_act([1], p)
    assert q[1] == p[1]
    assert np.allclose(t2_first.project(q), t2_first.project(p))


def test_pi_g_examples(s1_unit):
    # g == 0: identity on fibers
    trivial = load_cover_model({"circles": 1, "lines": 0, "beta": {"lattice": [0]}})
    q = np.array([0.4, 2.0])
    assert np.allclose(pi_g(trivial, q), q)
    # g(x) = x: (1, 2) -> (0, 2e)
    out = pi_g(s1_unit, np.array([1.0, 2.0]))
    assert out[0] == pytest.approx(0.0)
    assert out[1] == pytest.approx(2.0 * math.e, rel=1e-14)


def test_pi_g_conformal_deck_compatibility(s1_unit):
    rng = np.random.default_rng(0)
    for _ in range(50):
        q = np.array([rng.uniform(-2, 2), rng.uniform(-3, 3)])
        lhs = pi_g(s1_unit, deck_act_cotangent(s1_unit, [1], q))
        rhs = pi_g(s1_unit, q)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_lichnerowicz_zero_form():
    sp = product_space(1, 1)
    beta = ClosedOneForm(space=sp, lattice=(1,))
    assert eval_lichnerowicz(zero_form(2), beta, np.array([0.1, 0.2])) == {(0, 1): 0.0} or \
        form_norm(eval_lichnerowicz(zero_form(2), beta, np.array([0.1, 0.2]))) == 0.0


def test_lichnerowicz_liouville_form():
    # lambda = xi dtheta, beta = dtheta: d_beta lambda = dxi ^ dtheta
    sp = product_space(1, 1)
    beta = ClosedOneForm(space=sp, lattice=(1,))
    lam = FormField(degree=1, dim=2, coeffs={(0,): lambda p: p[1]})
    val = eval_lichnerowicz(lam, beta, np.array([0.37, 0.81]))
    assert val[(0, 1)] == pytest.approx(-1.0, abs=1e-9)  # dxi^dtheta = -dtheta^dxi


def test_lichnerowicz_constant_function():
    s1 = product_space(1, 0)
    beta = ClosedOneForm(space=s1, lattice=(1,))
    one = scalar_form(1, lambda p: 1.0, grad=lambda p: np.zeros(1))
    val = eval_lichnerowicz(one, beta, np.array([0.9]))
    assert val[(0,)] == pytest.approx(-1.0)


def test_lichnerowicz_dimension_mismatch():
    sp = product_space(1, 1)
    beta = ClosedOneForm(space=sp, lattice=(1,))
    with pytest.raises(ValueError, match="dimension"):
        eval_lichnerowicz(zero_form(3), beta, np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        eval_lichnerowicz(zero_form(2), beta, np.array([0.0, 0.0]), fd_step=-1.0)


def test_form_field_index_validation():
    with pytest.raises(ValueError):
        FormField(degree=1, dim=2, coeffs={(1, 0): lambda p: 1.0})
    with pytest.raises(ValueError):
        FormField(degree=2, dim=2, coeffs={(1, 1): lambda p: 1.0})
    with pytest.raises(ValueError):
        FormField(degree=1, dim=2, coeffs={(3,): lambda p: 1.0})


def test_dbeta_squared_examples():
    sp = product_space(1, 1)
    beta = ClosedOneForm(space=sp, lattice=(1,))
    pts = [np.array([0.13, 0.42]), np.array([0.71, -0.9])]
    assert check_dbeta_squared(zero_form(2), beta, pts) == 0.0
    f = scalar_form(2, lambda p: math.sin(2 * math.pi * p[0]) * math.exp(-p[1] ** 2 / 2))
    assert check_dbeta_squared(f, beta, pts, fd_step=1e-4) < 1e-6
    lam = FormField(degree=1, dim=2, coeffs={(0,): lambda p: p[1]})
    assert check_dbeta_squared(lam, beta, pts, fd_step=1e-4) < 1e-6
    with pytest.raises(ValueError):
        check_dbeta_squared(f, beta, [])


def test_dbeta_squared_with_varying_lee_form():
    sp = product_space(1, 1)
    g0 = builtin_scalar_field("cos_theta1", 2, amplitude=0.5)
    beta = ClosedOneForm(space=sp, lattice=(1,), g0=g0)
    f = scalar_form(2, lambda p: math.cos(2 * math.pi * p[0]) * p[1])
    pts = [np.array([0.2, 0.5]), np.array([0.8, -1.1])]
    res = check_dbeta_squared(f, beta, pts, fd_step=1e-4)
    assert 0.0 < res < 1e-6


def test_richardson_refinement_tightens():
    sp = product_space(1, 1)
    beta = ClosedOneForm(space=sp, lattice=(0,))
    f = scalar_form(2, lambda p: math.sin(3.0 * p[1]))
    p = np.array([0.1, 0.4])
    coarse = eval_lichnerowicz(f, beta, p, fd_step=1e-3)[(1,)]
    refined = eval_lichnerowicz(f, beta, p, fd_step=1e-3, richardson=True)[(1,)]
    exact = 3.0 * math.cos(3.0 * 0.4)
    assert abs(refined - exact) < abs(coarse - exact)


def test_load_cover_model_variants(tmp_path):
    m = load_cover_model({"circles": 1, "lines": 1,
                          "beta": {"lattice": [2], "g0": {"name": "sin_theta1",
                                                          "amplitude": 0.2}}})
    assert m.rank_r == 1
    assert m.beta.lattice == (2,)
    doc = tmp_path / "model.json"
    doc.write_text('{"circles": 2, "lines": 0, "beta": {"lattice": [1, 0]}}')
    m2 = load_cover_model(doc)
    assert m2.base.circle_factors == 2 and m2.rank_r == 1
    with pytest.raises(ValueError):
        load_cover_model({"circles": 1, "beta": {"lattice": [1], "g0": "nope"}})
