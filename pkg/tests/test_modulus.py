import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qgmoc.modulus import (
    CertificateConstants,
    KnvModulus,
    default_exponents,
    doubling_deficit,
    gamma_bounds,
    gamma_max,
    growth_comparison_check,
    knv_defect,
    knv_omega,
    knv_omega_prime,
    knv_omega_prime_right,
    require_valid,
    smallness_constant,
    validate_params,
    xi_grid,
)

# hand-evaluated from the defining formulas: 0.01**0.2 = 10**-0.4, 0.01**1.2 = 10**-2.4
OMEGA_DELTA = 0.01 - 10**-2.4  # 6.018928294465028e-3
CONCAVITY_BOUND = 1 - 1.2 * 10**-0.4  # 0.5222713953358...
C_S = 0.5 * math.sqrt(OMEGA_DELTA)  # 3.8790876e-2


@st.composite
def valid_moduli(draw):
    s = draw(st.floats(0.05, 0.45))
    r = draw(st.floats(1 + 0.05 * 2 * s, 1 + 0.95 * 2 * s))
    alpha = draw(st.floats(2 * s + 0.05 * (1 - 2 * s), 1 - 0.05 * (1 - 2 * s)))
    delta = draw(st.floats(1e-4, 1.0)) * 0.5 ** (1 / (r - 1))
    probe = KnvModulus(delta, 1.0, r, alpha, s)
    gamma = draw(st.floats(0.05, 0.95)) * gamma_max(probe)
    return KnvModulus(delta, gamma, r, alpha, s)


def test_omega_reference_values(reference_modulus):
    m = reference_modulus
    assert knv_omega(m, 0.0) == 0.0
    assert knv_omega(m, m.delta) == pytest.approx(OMEGA_DELTA, rel=1e-14)
    assert knv_omega(m, 2 * m.delta) > knv_omega(m, m.delta)
    assert knv_omega(m, 2 * m.delta) - 2 * knv_omega(m, m.delta) < 0


def test_omega_prime_reference_values(reference_modulus):
    m = reference_modulus
    assert knv_omega_prime(m, 0.0) == 1.0
    assert knv_omega_prime(m, m.delta) == pytest.approx(CONCAVITY_BOUND, rel=1e-13)
    assert knv_omega_prime_right(m, m.delta) == pytest.approx(m.gamma, rel=1e-14)


def test_negative_separation_rejected(reference_modulus):
    with pytest.raises(ValueError):
        knv_omega(reference_modulus, -1.0)


def test_reference_bounds(reference_modulus):
    b = gamma_bounds(reference_modulus)
    assert b["concavity"] == pytest.approx(CONCAVITY_BOUND, abs=1e-12)
    assert b["alpha"] == pytest.approx(0.6, abs=1e-12)
    assert b["growth"] == pytest.approx(0.2, abs=1e-12)
    assert b["far_field"] == pytest.approx(0.1, abs=1e-12)
    assert gamma_max(reference_modulus) == pytest.approx(0.1, abs=1e-12)
    assert validate_params(reference_modulus) == []


def test_far_field_violation_only():
    m = KnvModulus(0.01, 0.15, 1.2, 0.6, 0.25)
    names = [v.name for v in validate_params(m)]
    assert names == ["gamma_far_field"]
    assert validate_params(m)[0].margin == pytest.approx(-0.05)


def test_r_range_violation():
    names = [v.name for v in validate_params(KnvModulus(0.01, 0.05, 1.6, 0.6, 0.25))]
    assert "r_range" in names


@pytest.mark.parametrize("kw,name", [
    (dict(s=0.5), "s_range"),
    (dict(alpha=0.4), "alpha_range"),
    (dict(delta=0.5), "delta_small"),
    (dict(gamma=-0.1), "gamma_positive"),
])
def test_individual_violations(kw, name):
    base = dict(delta=0.01, gamma=0.05, r=1.2, alpha=0.6, s=0.25)
    base.update(kw)
    assert name in [v.name for v in validate_params(KnvModulus(**base))]


def test_require_valid_raises():
    with pytest.raises(ValueError, match="gamma_far_field"):
        require_valid(KnvModulus(0.01, 0.15, 1.2, 0.6, 0.25))


@given(valid_moduli())
def test_generated_moduli_are_valid(m):
    assert validate_params(m) == []


@given(valid_moduli(), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_concave_increasing_and_below_diagonal(m, a, b, lam):
    x, y = sorted((m.delta * 10 ** (8 * a - 4), m.delta * 10 ** (8 * b - 4)))
    wx, wy = knv_omega(m, x), knv_omega(m, y)
    z = lam * x + (1 - lam) * y
    assert knv_omega(m, z) >= lam * wx + (1 - lam) * wy - 1e-15 * max(wx, wy)
    assert wy >= wx
    assert wy <= y
    assert knv_defect(m, y) >= -1e-15 * y


@given(valid_moduli())
def test_continuity_and_slope_at_breakpoint(m):
    d = m.delta
    left = d - d**m.r
    right = knv_omega(m, d * (1 + 1e-15))
    assert abs(right - left) <= 1e-14 * left + m.gamma * d * 2e-15
    assert knv_omega_prime(m, d) > knv_omega_prime_right(m, d)
    assert np.all(knv_omega_prime(m, xi_grid(d, 3, 8)) <= 1)


def test_defect_matches_difference(reference_modulus):
    xs = np.geomspace(1e-6, 10, 50)
    m = reference_modulus
    assert np.allclose(knv_defect(m, xs), xs - knv_omega(m, xs), rtol=1e-9, atol=1e-18)


def test_smallness_constant(reference_modulus):
    assert smallness_constant(reference_modulus) == pytest.approx(C_S, rel=1e-14)
    assert smallness_constant(reference_modulus) == pytest.approx(3.8791e-2, rel=1e-4)
    other = KnvModulus(0.01, 0.02, 1.2, 0.8, 0.25)
    assert smallness_constant(other) == smallness_constant(reference_modulus)
    small = [smallness_constant(KnvModulus(d, 0.001, 1.2, 0.6, 0.25)) for d in (1e-2, 1e-4, 1e-8)]
    assert small[0] > small[1] > small[2]


def test_growth_comparison(reference_modulus):
    m = reference_modulus
    xs = xi_grid(m.delta)
    assert growth_comparison_check(m, xs[xs >= m.delta]) <= 0
    # at xi = delta the inequality is gamma <= (1 - alpha)(1 - delta^(r-1))
    lhs = m.delta
    rhs = (1 - m.alpha) / m.gamma * knv_omega(m, m.delta)
    assert (lhs <= rhs) == (m.gamma <= (1 - m.alpha) * (1 - m.delta ** (m.r - 1)))
    with pytest.raises(ValueError):
        growth_comparison_check(m, [m.delta / 2])


def test_growth_comparison_asymptotic_equality():
    # choose gamma so that omega(delta) - gamma delta / (1 - alpha) = 0
    d, r, a = 0.01, 1.2, 0.6
    g = (d - d**r) * (1 - a) / d
    m = KnvModulus(d, g, r, a, 0.25)
    x = np.array([1e3, 1e6, 1e9]) * d
    ratio = (d**a * x ** (1 - a)) / ((1 - a) / g * knv_omega(m, x))
    assert np.allclose(ratio, 1.0, rtol=1e-12)


def test_doubling_deficit(reference_modulus):
    m = reference_modulus
    xs = xi_grid(m.delta)
    c = doubling_deficit(m, xs)
    assert c > 0
    far = doubling_deficit(m, np.array([1e10, 1e12]) * m.delta)
    assert far >= 2 - 2**0.4 - 1e-12
    assert far == pytest.approx(2 - 2**0.4, abs=1e-2)
    closer = doubling_deficit(KnvModulus(0.01, 0.005, 1.2, 0.95, 0.25), np.array([1e12]))
    assert closer > far


def test_default_exponents_midpoints():
    r, a = default_exponents(0.25)
    assert (r, a) == (1.25, 0.75)


def test_xi_grid_layout():
    g = xi_grid(0.01)
    assert g.size == 12 * 64 + 1
    assert g[0] == pytest.approx(1e-8) and g[-1] == pytest.approx(1e4)
    assert 0.01 in g
    assert np.all(np.diff(g) > 0)


def test_certificate_constants_validation():
    with pytest.raises(ValueError):
        CertificateConstants(A=0)
    with pytest.raises(ValueError):
        CertificateConstants(kappa=-1)
    assert CertificateConstants(kappa=0).kappa == 0
