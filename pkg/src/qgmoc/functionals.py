"""Convection and dissipation functionals of a modulus, and the dominance certificate.

The dissipation functional

    D(xi) = int_0^{xi/2} [w(xi+2e) + w(xi-2e) - 2w(xi)] / e^(1+2s) de
          + int_{xi/2}^inf [w(2e+xi) - w(2e-xi) - 2w(xi)] / e^(1+2s) de

annihilates linear functions, so it is evaluated on ``w`` itself for
``xi > delta`` and on the defect ``xi - w`` for ``xi <= delta``.  Either choice
keeps the integrand free of cancellation between O(xi) terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .modulus import (
    CertificateConstants,
    DominanceReport,
    KnvModulus,
    default_exponents,
    gamma_max,
    knv_omega,
    knv_omega_prime,
    knv_omega_prime_right,
    knv_omega_second,
    require_valid,
    validate_params,
    xi_grid,
)

EPS = np.finfo(float).eps
TAYLOR_CUTOFF = 1e-3
TAIL_FACTOR = 50.0


class QuadratureError(RuntimeError):
    def __init__(self, what: str, achieved: float):
        super().__init__(f"{what}: quadrature did not converge (achieved {achieved:.3g})")
        self.achieved = achieved


def _quad(f, a, b, *, epsrel, points=None, what="integral"):
    if b <= a:
        return 0.0, 0.0
    pts = None
    if points:
        pts = sorted(p for p in points if a < p < b) or None
    val, err, info = integrate.quad(
        f, a, b, epsabs=0.0, epsrel=epsrel, limit=400, points=pts, full_output=1
    )[:3]
    if not np.isfinite(val):
        raise QuadratureError(what, float("inf"))
    return val, err


# -- convection -------------------------------------------------------------


def _riesz_knv(m: KnvModulus, xi: float, epsrel: float) -> tuple[float, float]:
    d, r = m.delta, m.r
    b = min(xi, d)
    inner = b - b**r / r  # int_0^b (1 - e^(r-1)) de
    err = 0.0
    if xi > d:
        # int_delta^xi w(e)/e de in log variable
        w = _scalar_omega(m)
        v, e = _quad(lambda t: w(math.exp(t)), math.log(d), math.log(xi),
                     epsrel=epsrel, what="riesz inner")
        inner += v
        err += e
        outer = 0.0
    else:
        outer = math.log(d / xi) - (d ** (r - 1) - xi ** (r - 1)) / (r - 1)
    lo = max(xi, d)
    hi = TAIL_FACTOR * lo
    w = _scalar_omega(m)
    v, e = _quad(lambda t: w(math.exp(t)) * math.exp(-t), math.log(lo),
                 math.log(hi), epsrel=epsrel, what="riesz outer")
    outer += v + m.c0 / hi + m.c1 * hi ** (-m.alpha) / m.alpha
    err += xi * e
    return inner + xi * outer, err


def _riesz_generic(omega: Callable, xi: float, epsrel: float) -> tuple[float, float]:
    v1, e1 = _quad(lambda t: omega(t) / t if t > 0 else 1.0, 0.0, xi, epsrel=epsrel,
                   what="riesz inner")
    v2, e2, *_ = integrate.quad(lambda t: omega(t) / t**2, xi, np.inf, epsabs=0.0,
                                epsrel=epsrel, limit=400)
    return v1 + xi * v2, e1 + xi * e2


def riesz_modulus_with_error(omega, xi: float, A: float = 1.0,
                             epsrel: float = 1e-11) -> tuple[float, float]:
    if xi < 0:
        raise ValueError("separation must be non-negative")
    if xi == 0:
        return 0.0, 0.0
    if isinstance(omega, KnvModulus):
        v, e = _riesz_knv(omega, float(xi), epsrel)
    else:
        v, e = _riesz_generic(omega, float(xi), epsrel)
    return A * v, A * e


def riesz_modulus(omega, xi: float, A: float = 1.0, epsrel: float = 1e-11) -> float:
    """Modulus of continuity of the Riesz velocity of a field with modulus ``omega``.

    ``A * [int_0^xi w(e)/e de + xi * int_xi^inf w(e)/e^2 de]``.  ``omega`` is
    either a :class:`KnvModulus` (analytic near field and tail) or any callable.
    """
    return riesz_modulus_with_error(omega, xi, A, epsrel)[0]


def riesz_modulus_closed_form(m: KnvModulus, xi: float, A: float = 1.0) -> float:
    d, r, a = m.delta, m.r, m.alpha
    if xi <= d:
        inner = xi - xi**r / r
        outer = (math.log(d / xi) - (d ** (r - 1) - xi ** (r - 1)) / (r - 1)
                 + m.c0 / d + m.c1 * d ** (-a) / a)
    else:
        inner = (d - d**r / r + m.c0 * math.log(xi / d)
                 + m.c1 * (xi ** (1 - a) - d ** (1 - a)) / (1 - a))
        outer = m.c0 / xi + m.c1 * xi ** (-a) / a
    return A * (inner + xi * outer)


# -- dissipation ------------------------------------------------------------


def _scalar_omega(m: KnvModulus):
    d, r, c1, wd, q = m.delta, m.r, m.c1, m.omega_delta, 1 - m.alpha
    dq = d**q

    def w(x):
        return x - x**r if x <= d else wd + c1 * (x**q - dq)

    return w


def _scalar_defect(m: KnvModulus):
    w = _scalar_omega(m)
    d, r = m.delta, m.r

    def phi(x):
        return x**r if x <= d else x - w(x)

    return phi


@dataclass(frozen=True)
class DissipationValue:
    value: float
    error: float
    near: float  # integral over (0, xi/2)
    far: float  # integral over (xi/2, inf)


def _far_difference_tail(m: KnvModulus, xi: float, L: float) -> float:
    """``int_L^inf [w(2e+xi) - w(2e-xi)] e^(-1-2s) de`` for ``2L - xi >= delta``."""
    a, s = m.alpha, m.s
    total, coef, j = 0.0, 1 - a, 1
    while True:
        term = (coef * xi**j * 2.0 ** (1 - a - j)
                * L ** (1 - a - j - 2 * s) / (a + j + 2 * s - 1))
        total += term
        if abs(term) <= 1e-17 * abs(total) or j > 60:
            break
        coef *= (1 - a - j) * (1 - a - j - 1) / ((j + 1) * (j + 2))
        j += 2
    return 2 * m.c1 * total


def dissipation_terms(m: KnvModulus, xi: float, epsrel: float = 1e-10) -> DissipationValue:
    if not xi > 0:
        raise ValueError("separation must be positive")
    xi = float(xi)
    s, d = m.s, m.delta
    p = 1 + 2 * s
    g, sign = (_scalar_defect(m), -1.0) if xi <= d else (_scalar_omega(m), 1.0)
    g_xi = g(xi)

    # near integral: Taylor piece on (0, ec), quadrature above
    ec = TAYLOR_CUTOFF * xi
    if xi != d and abs(xi - d) < 4 * ec:
        ec = abs(xi - d) / 4
    jump = knv_omega_prime_right(m, xi) - knv_omega_prime(m, xi)
    curv = knv_omega_second(m, xi, "right") + knv_omega_second(m, xi, "left")
    taylor = 2 * jump * ec ** (1 - 2 * s) / (1 - 2 * s) + 2 * curv * ec ** (2 - 2 * s) / (2 - 2 * s)
    h = 2 * ec / xi
    taylor_err = (abs(2 * jump * ec ** (1 - 2 * s)) * h**2
                  + abs(2 * curv * ec ** (2 - 2 * s)) * h) / (1 - 2 * s)

    def near_integrand(e):
        return (g(xi + 2 * e) + g(xi - 2 * e) - 2 * g_xi) / e**p

    kinks = [abs(xi - d) / 2]
    near, near_err = _quad(near_integrand, ec, xi / 2, epsrel=epsrel, points=kinks,
                           what="dissipation near")
    near = taylor + sign * near

    # far integral: constant part exact, difference part numerically + series tail
    L = TAIL_FACTOR * max(xi, d)

    def far_integrand(t):
        e = math.exp(t)
        return (g(2 * e + xi) - g(2 * e - xi)) * e ** (-2 * s)

    log_kinks = [math.log(k) for k in ((d - xi) / 2, (d + xi) / 2) if k > xi / 2]
    diff, far_err = _quad(far_integrand, math.log(xi / 2), math.log(L), epsrel=epsrel,
                          points=log_kinks, what="dissipation far")
    w_tail = _far_difference_tail(m, xi, L)
    diff_tail = w_tail if sign > 0 else 2 * xi * L ** (-2 * s) / (2 * s) - w_tail
    const = -2 * g_xi * (xi / 2) ** (-2 * s) / (2 * s)
    far = sign * (diff + diff_tail + const)

    scale = max(abs(diff), abs(const), abs(near))
    err = near_err + far_err + taylor_err + 64 * EPS * scale
    return DissipationValue(near + far, err, near, far)


def dissipation_functional(m: KnvModulus, xi: float, epsrel: float = 1e-10) -> float:
    """Upper-bound functional for the dissipation at separation ``xi`` (negative)."""
    return dissipation_terms(m, xi, epsrel).value


# -- dominance --------------------------------------------------------------


def convection_term(m: KnvModulus, xi: float, A: float = 1.0) -> float:
    return riesz_modulus(m, xi, A) * knv_omega_prime(m, xi)


def dominance_margin(m: KnvModulus, xi: float, k: CertificateConstants) -> float:
    return convection_term(m, xi, k.A) + k.kappa * k.C_diss * dissipation_functional(m, xi)


def dominance_report(m: KnvModulus, k: CertificateConstants, grid=None) -> DominanceReport:
    require_valid(m)
    xs = xi_grid(m.delta) if grid is None else np.asarray(grid, dtype=float)
    conv = np.empty_like(xs)
    diss = np.empty_like(xs)
    derr = np.empty_like(xs)
    for i, x in enumerate(xs):
        conv[i] = convection_term(m, x, k.A)
        dv = dissipation_terms(m, x)
        diss[i] = k.kappa * k.C_diss * dv.value
        derr[i] = k.kappa * k.C_diss * dv.error
    return DominanceReport(xs, conv, diss, conv + diss, m, derr)


# -- closed-form case bounds ------------------------------------------------


def convection_constant(m: KnvModulus) -> float:
    """Analytic constant in ``Omega <= A w (C' + log(xi/delta))`` for ``xi > delta``."""
    return 2 + 1 / m.alpha


def fit_convection_constant(m: KnvModulus, grid) -> float:
    xs = np.asarray(grid, dtype=float)
    xs = xs[xs > m.delta]
    ratios = [riesz_modulus(m, x) / knv_omega(m, x) - math.log(x / m.delta) for x in xs]
    return float(max(ratios))


def near_dissipation_constant(m: KnvModulus) -> float:
    """``c`` with ``D(xi) <= -c xi^(r-2s)``, from ``w'' <= w''(2 xi)`` on ``(0, 2 xi)``."""
    r, s = m.r, m.s
    return r * (r - 1) * 2 ** (r + 2 * s - 2) / (2 - 2 * s)


def far_dissipation_constant(m: KnvModulus) -> float:
    """``K`` with ``D(xi) <= -K xi^(-2s) w(xi)`` for ``xi > delta``."""
    s = m.s
    return (2 - 2 ** (1 - m.alpha)) * 2 ** (2 * s) / (2 * s)


def case_bounds(m: KnvModulus, xi: float, k: CertificateConstants,
                c_prime: float | None = None, near_c: float | None = None) -> tuple[float, float]:
    """Closed-form upper bounds ``(convection, dissipation)`` in the regime of ``xi``."""
    d = m.delta
    if xi <= d:
        conv = k.A * xi * (3 + math.log(d / xi))
        c = near_dissipation_constant(m) if near_c is None else near_c
        diss = -k.kappa * k.C_diss * c * xi ** (m.r - 2 * m.s)
    else:
        cp = convection_constant(m) if c_prime is None else c_prime
        w = knv_omega(m, xi)
        conv = k.A * m.gamma * w * (cp + math.log(xi / d)) * (xi / d) ** (-m.alpha)
        diss = -k.kappa * k.C_diss * far_dissipation_constant(m) * xi ** (-2 * m.s) * w
    return conv, diss


def far_margin_bound(m: KnvModulus, xi, k: CertificateConstants, c_prime: float) -> np.ndarray:
    """Bound on ``margin / w(xi)`` for ``xi > delta``."""
    xs = np.asarray(xi, dtype=float)
    x = xs / m.delta
    return (k.A * m.gamma * (c_prime + np.log(x)) * x ** (-m.alpha)
            - k.kappa * k.C_diss * far_dissipation_constant(m) * xs ** (-2 * m.s))


# -- parameter search -------------------------------------------------------


@dataclass
class SearchResult:
    success: bool
    modulus: KnvModulus | None
    report: DominanceReport | None
    best_margin: float
    history: list[tuple[float, float, float]] = field(default_factory=list)

    def __iter__(self):
        yield self.modulus
        yield self.report


def find_admissible(s: float, k: CertificateConstants, budget: int = 24,
                    r: float | None = None, alpha: float | None = None,
                    delta0: float | None = None, shrink: float = 0.5,
                    per_decade: int = 64) -> SearchResult:
    """Geometric descent on ``delta`` with ``gamma`` at half its tightest bound.

    Each candidate is screened on a coarse grid before the full 12-decade grid
    is evaluated.  Exhausting the budget is reported, not raised.
    """
    if not 0 < s < 0.5:
        raise ValueError("s must lie in (0, 1/2)")
    r0, a0 = default_exponents(s)
    r = r0 if r is None else r
    alpha = a0 if alpha is None else alpha
    if delta0 is None:
        delta0 = 0.5 * 0.5 ** (1 / (r - 1))
    best = math.inf
    best_pair = (None, None)
    history = []
    delta = delta0
    for _ in range(budget):
        probe = KnvModulus(delta, 1.0, r, alpha, s)
        m = KnvModulus(delta, 0.5 * gamma_max(probe), r, alpha, s)
        if validate_params(m):
            delta *= shrink
            continue
        coarse = dominance_report(m, k, xi_grid(delta, per_decade=4))
        worst = coarse.worst_margin
        if coarse.passed:
            full = dominance_report(m, k, xi_grid(delta, per_decade=per_decade))
            worst = full.worst_margin
            history.append((delta, m.gamma, worst))
            if full.passed:
                return SearchResult(True, m, full, worst, history)
            if worst < best:
                best, best_pair = worst, (m, full)
        else:
            history.append((delta, m.gamma, worst))
            if worst < best:
                best, best_pair = worst, (m, coarse)
        delta *= shrink
    return SearchResult(False, best_pair[0], best_pair[1], best, history)
