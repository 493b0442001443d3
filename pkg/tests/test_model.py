import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vortexlab.model import (
    CaseTag,
    ModelParams,
    Parity,
    classify_params,
    energy_density,
    eval_G,
    eval_g,
    eval_g_prime,
    rhs,
)

reals = st.floats(-5, 5, allow_nan=False)
angles = st.floats(-4 * math.pi, 4 * math.pi, allow_nan=False)
degrees = st.integers(-4, 4).filter(lambda m: m != 0)


def test_params_normalise_degree():
    p = ModelParams(1, 0.5, -3)
    assert p.m == 3
    assert p.m_input == -3
    assert p == ModelParams(1, 0.5, 3)


@pytest.mark.parametrize("bad", [dict(m=0), dict(lam=math.inf), dict(omega=math.nan), dict(m=1.5)])
def test_params_reject_invalid(bad):
    args = dict(lam=1.0, omega=0.5, m=1)
    args.update(bad)
    with pytest.raises(ValueError):
        ModelParams(args["lam"], args["omega"], args["m"])


def test_zero_degree_message():
    with pytest.raises(ValueError, match="m must be nonzero"):
        ModelParams(0, 0, 0)


@pytest.mark.parametrize(
    "lam, omega, h, expected",
    [(1, 0.5, math.pi, 0.0), (0, 1, math.pi / 2, 1.0), (1, 0, math.pi / 4, 0.5)],
)
def test_g_values(lam, omega, h, expected):
    assert eval_g(ModelParams(lam, omega, 1), h) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "lam, omega, h, expected",
    [(1, 0.5, math.pi, 0.5), (1, 0.5, 0.0, 1.5), (0, 0, 1.234, 0.0)],
)
def test_g_prime_values(lam, omega, h, expected):
    assert eval_g_prime(ModelParams(lam, omega, 1), h) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "lam, omega, x, k, expected",
    [(1, 0.5, 0.0, 0, 0.0), (1, 0.5, 0.0, 1, -1.0), (1, 1, math.pi, 0, 2.0)],
)
def test_potential_values(lam, omega, x, k, expected):
    assert eval_G(ModelParams(lam, omega, 1), x, k) == pytest.approx(expected, abs=1e-15)


@given(reals, reals, angles)
def test_g_is_odd(lam, omega, h):
    p = ModelParams(lam, omega, 1)
    assert eval_g(p, -h) == pytest.approx(-eval_g(p, h), abs=1e-14)


@given(reals, reals, st.floats(-2 * math.pi, 2 * math.pi), st.integers(-3, 3))
def test_potential_derivative_is_g(lam, omega, x, k):
    # G(x, k) = -int_x^{k pi} g, so dG/dx = g(x)
    p = ModelParams(lam, omega, 1)
    step = 1e-4
    fd = (eval_G(p, x + step, k) - eval_G(p, x - step, k)) / (2 * step)
    assert fd == pytest.approx(eval_g(p, x), abs=1e-7)


@given(reals, reals, st.floats(-2 * math.pi, 2 * math.pi), st.integers(-3, 3))
def test_g_prime_matches_finite_difference(lam, omega, x, k):
    p = ModelParams(lam, omega, 1)
    step = 1e-4
    fd = (eval_g(p, x + step) - eval_g(p, x - step)) / (2 * step)
    assert fd == pytest.approx(eval_g_prime(p, x), abs=1e-7)


@given(reals, reals)
def test_potential_vanishes_at_its_level(lam, omega):
    p = ModelParams(lam, omega, 1)
    for k in range(-3, 4):
        assert eval_G(p, k * math.pi, k) == pytest.approx(0.0, abs=1e-13)


@given(reals, reals, angles, degrees)
def test_potential_definition_by_quadrature(lam, omega, x, m):
    # -int_x^{k pi} g by Simpson, independent of the closed form
    p = ModelParams(lam, omega, m)
    k = 1
    n = 2000
    a, b = x, k * math.pi
    hstep = (b - a) / n
    s = eval_g(p, a) + eval_g(p, b)
    s += sum((4 if i % 2 else 2) * eval_g(p, a + i * hstep) for i in range(1, n))
    assert eval_G(p, x, k) == pytest.approx(-s * hstep / 3, abs=1e-9)


def test_rhs_values():
    assert rhs(ModelParams(0.3, 0.7, 2), 1.0, (0.0, 0.0)) == (0.0, 0.0)
    dh, d2h = rhs(ModelParams(0, 0, 1), 1.0, (math.pi / 2, 1.0))
    assert (dh, d2h) == (1.0, pytest.approx(-1.0, abs=1e-15))
    dh, d2h = rhs(ModelParams(0, 1, 1), 2.0, (math.pi / 2, 0.0))
    assert (dh, d2h) == (0.0, pytest.approx(1.0, abs=1e-15))


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_rhs_rejects_origin(r):
    with pytest.raises(ValueError):
        rhs(ModelParams(1, 1, 1), r, (0.1, 0.1))


@given(reals, reals, degrees, angles, st.floats(-3, 3))
def test_rhs_autonomous_limit(lam, omega, m, h, dh):
    p = ModelParams(lam, omega, m)
    r = 1e6
    _, d2h = rhs(p, r, (h, dh))
    assert d2h == pytest.approx(eval_g(p, h), abs=(abs(dh) + m * m) / r + 1e-12)


def test_energy_density_values():
    assert energy_density(1, 1.0, 0.0, 0.0) == 0.0
    assert energy_density(1, 2.0, math.pi / 2, 0.0) == pytest.approx(0.5)
    assert energy_density(2, 1.0, math.pi / 2, 1.0) == pytest.approx(5.0)


@given(degrees, st.floats(1e-3, 1e3), angles, st.floats(-10, 10))
def test_energy_density_nonnegative(m, r, h, dh):
    assert energy_density(m, r, h, dh) >= 0.0


@pytest.mark.parametrize(
    "lam, omega, tag, parity, expo",
    [
        (0, 0, CaseTag.CASE_I, Parity.ODD, False),
        (1, 1, CaseTag.CASE_II, Parity.ODD, False),
        (-1, -1, CaseTag.CASE_II, Parity.ODD, False),
        (1, -1, CaseTag.CASE_III, Parity.EVEN, False),
        (-1, 1, CaseTag.CASE_III, Parity.EVEN, False),
        (1, 0.5, CaseTag.CASE_IV, Parity.ODD, True),
        (1, -0.5, CaseTag.CASE_V, Parity.EVEN, True),
        (0, 1, CaseTag.NONE, Parity.NONE, False),
        (1, 0, CaseTag.NONE, Parity.NONE, False),
        (-1, 0.5, CaseTag.NONE, Parity.NONE, False),
        (-1, -0.5, CaseTag.NONE, Parity.NONE, False),
        (0.5, 1, CaseTag.NONE, Parity.NONE, False),
    ],
)
def test_classification_table(lam, omega, tag, parity, expo):
    label = classify_params(lam, omega)
    assert label.tag is tag
    assert label.admissible_limit_parity is parity
    assert label.exponential_tail_guaranteed is expo
    assert label.admits_vortex is (tag is not CaseTag.NONE)


@given(st.floats(1e-3, 10), st.floats(1e-3, 1.0))
def test_classification_parity_swap(lam, frac):
    omega = frac * lam
    a, b = classify_params(lam, omega), classify_params(lam, -omega)
    assert a.admissible_limit_parity is Parity.ODD
    assert b.admissible_limit_parity is Parity.EVEN


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_classification_exponential_only_for_strict_cases(lam, omega):
    label = classify_params(lam, omega)
    assert label.exponential_tail_guaranteed == (label.tag in (CaseTag.CASE_IV, CaseTag.CASE_V))


def test_line_tolerance_widens_diagonals():
    assert classify_params(1.0, 1.0 + 1e-9).tag is CaseTag.NONE
    assert classify_params(1.0, 1.0 + 1e-9, line_tol=1e-6).tag is CaseTag.CASE_II
    assert classify_params(1e-9, -1e-9, line_tol=1e-6).tag is CaseTag.CASE_I
