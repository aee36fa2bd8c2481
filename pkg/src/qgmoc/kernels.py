"""Extension-kernel representation of the fractional Laplacian.

The kernel family is

    P_{n,h}(x) = C_{n,s} h / (|x|^2 + 4 s^2 h^(1/s))^(n/2 + s)      ("printed")

and, behind ``variant="standard"``, the usual extension kernel

    P_{n,h}(x) = C_{n,s} h^(2s) / (|x|^2 + h^2)^(n/2 + s).

Both are ``prefactor(h) / (|x|^2 + a(h)^2)^(n/2+s)`` with a width ``a(h)``.

Convolution on the torus is done through the kernel's Fourier transform at
integer wavevectors, which by Poisson summation is the convolution with the
periodised kernel.  The transform is computed by quadrature from the
one-dimensional marginal kernel (a radial kernel's transform along ``k`` only
sees its marginal in that direction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .spectral import (
    RealField,
    SpectralField,
    forward_transform,
    fractional_laplacian_spectral,
    inverse_transform,
)

VARIANTS = ("printed", "standard")


class ExtrapolationError(RuntimeError):
    def __init__(self, message: str, sequence=None):
        super().__init__(message)
        self.sequence = sequence


def _check(n: int, s: float, variant: str):
    if n not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {n}")
    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if variant not in VARIANTS:
        raise ValueError(f"unknown kernel variant {variant!r}")


def kernel_width(h: float, s: float, variant: str = "printed") -> float:
    if variant == "printed":
        return 2 * s * h ** (1 / (2 * s))
    return h


def kernel_prefactor(h: float, s: float, variant: str = "printed") -> float:
    return h if variant == "printed" else h ** (2 * s)


def _power_tail(n: int, beta: float, a: float, R: float) -> float:
    """``int_R^inf rho^(n-1) (rho^2 + a^2)^(-beta) d rho`` by binomial series, ``a < R``."""
    total, coef, j = 0.0, 1.0, 0
    while True:
        term = coef * a ** (2 * j) * R ** (n - 2 * beta - 2 * j) / (2 * beta + 2 * j - n)
        total += term
        if abs(term) <= 1e-18 * abs(total) or j > 200:
            return total
        coef *= (-beta - j) / (j + 1)
        j += 1


def _radial_mass(n: int, s: float, h: float, variant: str) -> float:
    """Integral over R^n of the un-normalised kernel, by quadrature plus analytic tail."""
    beta = n / 2 + s
    a = kernel_width(h, s, variant)
    R = 10 * a
    sphere = 2.0 if n == 1 else 2 * math.pi
    body, err = integrate.quad(lambda r: r ** (n - 1) * (r * r + a * a) ** (-beta), 0, R,
                               epsabs=0.0, epsrel=2e-14, limit=200)
    return sphere * kernel_prefactor(h, s, variant) * (body + _power_tail(n, beta, a, R))


def cs_normalization(n: int, s: float, variant: str = "printed", h: float = 1.0) -> float:
    """Constant making the kernel a probability density; independent of ``h``."""
    _check(n, s, variant)
    if not h > 0:
        raise ValueError("h must be positive")
    return 1.0 / _radial_mass(n, s, h, variant)


def cs_normalization_closed_form(n: int, s: float) -> float:
    """Gamma-function value of the printed kernel's constant."""
    return (2 * s) ** (2 * s) * special.gamma(n / 2 + s) / (math.pi ** (n / 2) * special.gamma(s))


@dataclass(frozen=True)
class CSKernelParams:
    n: int
    s: float
    c_norm: float
    variant: str = "printed"

    def __post_init__(self):
        _check(self.n, self.s, self.variant)
        if not self.c_norm > 0:
            raise ValueError("normalisation constant must be positive")

    @classmethod
    def build(cls, n: int, s: float, variant: str = "printed") -> "CSKernelParams":
        return cls(n, s, cs_normalization(n, s, variant), variant)


def cs_kernel_value(x, h: float, p: CSKernelParams):
    """Kernel density at point(s) ``x``; the last axis holds the ``n`` coordinates
    (a scalar or 1D array is accepted for ``n = 1``)."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    if p.n == 1:
        r2 = x**2 if x.ndim == 0 or x.shape[-1] != 1 else x[..., 0] ** 2
    else:
        r2 = np.sum(x**2, axis=-1)
    a = kernel_width(h, p.s, p.variant)
    out = p.c_norm * kernel_prefactor(h, p.s, p.variant) * (r2 + a * a) ** (-(p.n / 2 + p.s))
    return out if np.ndim(out) else float(out)


def kernel_mass(p: CSKernelParams, h: float) -> float:
    return p.c_norm * _radial_mass(p.n, p.s, h, p.variant)


def marginal_value(x1: float, h: float, p2: CSKernelParams) -> float:
    """``int_R P_{2,h}(x1, x2) dx2`` by quadrature with analytic tail."""
    if p2.n != 2:
        raise ValueError("marginal needs the 2D kernel")
    beta = 1 + p2.s
    a = kernel_width(h, p2.s, p2.variant)
    b2 = x1 * x1 + a * a
    R = 10 * math.sqrt(b2)
    body, _ = integrate.quad(lambda t: (t * t + b2) ** (-beta), 0, R, epsabs=0.0,
                             epsrel=2e-14, limit=200)
    total = 2 * (body + _power_tail(1, beta, math.sqrt(b2), R))
    return p2.c_norm * kernel_prefactor(h, p2.s, p2.variant) * total


def kernel_marginal_check(s: float, h: float, tol: float = 1e-8, x1_samples=None,
                          variant: str = "printed") -> tuple[float, bool]:
    """Sup deviation between the quadrature marginal of ``P_2`` and ``P_1``."""
    if not h > 0:
        raise ValueError("h must be positive")
    p1 = CSKernelParams.build(1, s, variant)
    p2 = CSKernelParams.build(2, s, variant)
    if x1_samples is None:
        a = kernel_width(h, s, variant)
        base = np.concatenate([[0.0], a * np.logspace(-2, 3, 26)])
        x1_samples = np.concatenate([-base[:0:-1], base])
    dev = max(abs(marginal_value(x, h, p2) - cs_kernel_value(x, h, p1)) for x in x1_samples)
    return dev, dev <= tol


# -- Fourier side -----------------------------------------------------------


def symbol_minus_one(kappa: float, h: float, p1: CSKernelParams, epsrel: float = 1e-12) -> float:
    """``int_R P_{1,h}(t) (cos(kappa t) - 1) dt``: kernel transform minus one at ``|k| = kappa``."""
    if kappa == 0:
        return 0.0
    s = p1.s
    beta = 0.5 + s
    a = kernel_width(h, s, p1.variant)
    pref = p1.c_norm * kernel_prefactor(h, s, p1.variant)

    def dens(t):
        return (t * t + a * a) ** (-beta)

    R = max(10 * math.pi / kappa, 10 * a)
    pts = [x for x in (a, 1 / kappa) if x < R]
    body, _ = integrate.quad(lambda t: -2 * dens(t) * math.sin(kappa * t / 2) ** 2, 0, R,
                             points=pts, epsabs=0.0, epsrel=epsrel, limit=400)
    osc, _ = integrate.quad(dens, R, np.inf, weight="cos", wvar=kappa,
                            epsabs=1e-3 * epsrel * abs(body), epsrel=epsrel, limlst=200)
    return 2 * pref * (body + osc - _power_tail(1, beta, a, R))


def symbol_closed_form(kappa: float, h: float, s: float, variant: str = "printed") -> float:
    """Bessel-K value of the normalised kernel's transform."""
    z = kernel_width(h, s, variant) * kappa
    if z == 0:
        return 1.0
    return 2 ** (1 - s) / special.gamma(s) * z**s * special.kv(s, z)


def richardson(hs, values, q: float | None = None, floor: float = 1e-13) -> tuple[float, list[float]]:
    """Extrapolate ``values(h) -> h = 0`` on a geometric ladder, estimating orders.

    Raises :class:`ExtrapolationError` when successive differences do not shrink.
    """
    hs = np.asarray(hs, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(v) < 3:
        raise ValueError("need at least three ladder values")
    q = hs[1] / hs[0] if q is None else q
    if not np.allclose(hs[1:] / hs[:-1], q, rtol=1e-10):
        raise ValueError("ladder must be geometric")
    diffs = np.abs(np.diff(v))
    scale = max(np.max(np.abs(v)), 1e-300)
    if diffs[-1] > floor * scale and not diffs[-1] < diffs[-2]:
        raise ExtrapolationError("difference quotients do not converge as h -> 0", v)
    orders = []
    while len(v) >= 3:
        d = np.diff(v)
        if np.max(np.abs(d[-2:])) <= floor * scale:
            break
        p = math.log(abs(d[-2]) / abs(d[-1])) / math.log(1 / q) if d[-1] != 0 else np.inf
        if not np.isfinite(p) or p <= 0:
            break
        qp = q**p
        orders.append(p)
        v = (v[1:] - qp * v[:-1]) / (1 - qp)
    return float(v[-1]), orders


def default_ladder(h0: float = 0.1, levels: int = 6, q: float = 0.5) -> np.ndarray:
    return h0 * q ** np.arange(levels)


def derivative_symbol(kappa: float, s: float, h_ladder=None, variant: str = "printed",
                      p1: CSKernelParams | None = None) -> float:
    """``d/dh`` at ``h = 0`` of the kernel transform at ``|k| = kappa``."""
    hs = default_ladder() if h_ladder is None else np.asarray(h_ladder, dtype=float)
    if np.any(hs <= 0) or np.any(np.diff(hs) >= 0):
        raise ValueError("h ladder must be positive and strictly decreasing")
    p1 = p1 or CSKernelParams.build(1, s, variant)
    quotients = [symbol_minus_one(kappa, h, p1) / h for h in hs]
    return richardson(hs, quotients)[0]


def cs_fractional_laplacian(theta: RealField, s: float, h_ladder=None,
                            variant: str = "printed") -> RealField:
    """Extrapolated ``d/dh [P_h * theta]`` at ``h = 0``.

    Proportional to ``-(-Delta)^s theta`` with a single positive constant.
    """
    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    F = forward_transform(theta)
    c = F.coefficients
    active = np.abs(c) > 1e-14 * max(np.max(np.abs(c)), 1e-300)
    kmag = F.grid.kmag
    keys = np.round(kmag[active], 12)
    p1 = CSKernelParams.build(1, s, variant)
    mult = np.zeros_like(kmag)
    table = {}
    for key in np.unique(keys):
        table[key] = 0.0 if key == 0 else derivative_symbol(float(key), s, h_ladder, variant, p1)
    idx = np.nonzero(active)
    mult[idx] = [table[k] for k in keys]
    return inverse_transform(SpectralField(F.grid, c * mult))


def representation_constant_closed_form(s: float) -> float:
    """``C`` in ``-(-Delta)^s = C d/dh [P_h *]`` for the printed kernel."""
    return s ** (1 - 2 * s) * special.gamma(s) / special.gamma(1 - s)


@dataclass
class RepresentationFit:
    s: float
    variant: str
    C: float
    residual: float
    per_mode: dict = field(default_factory=dict)
    converged: bool = True
    note: str = ""

    @property
    def mismatch(self) -> bool:
        return not self.converged or not self.residual <= 1e-2


DEFAULT_BASIS = ((1, 0), (2, 0), (0, 2), (1, 1), (2, 1))


def estimate_representation_constant(s: float, variant: str = "printed", n: int = 32,
                                     modes=DEFAULT_BASIS, h_ladder=None) -> RepresentationFit:
    """Least-squares constant between the kernel operator and the spectral one."""
    from .spectral import Grid

    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    grid = Grid(n)
    num = den = ref = 0.0
    pairs = []
    per_mode = {}
    try:
        for k1, k2 in modes:
            theta = RealField.from_function(grid, lambda x, y: np.cos(k1 * x + k2 * y))
            K = cs_fractional_laplacian(theta, s, h_ladder, variant).values
            S = -inverse_transform(fractional_laplacian_spectral(forward_transform(theta), s)).values
            pairs.append((K, S))
            per_mode[(k1, k2)] = float(np.sum(K * S) / np.sum(K * K))
            num += np.sum(K * S)
            den += np.sum(K * K)
            ref += np.sum(S * S)
    except ExtrapolationError as exc:
        return RepresentationFit(s, variant, float("nan"), float("inf"), per_mode, False, str(exc))
    C = num / den
    resid = math.sqrt(sum(np.sum((C * K - S) ** 2) for K, S in pairs) / ref)
    return RepresentationFit(s, variant, float(C), resid, per_mode)
