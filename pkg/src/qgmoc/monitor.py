"""Trajectory diagnostics: empirical modulus, rescaled modulus, breakthrough search.

Separations are measured with the flat torus metric: a lattice displacement
``d`` has length ``dx * sqrt(m1^2 + m2^2)`` with ``m_j = min(|d_j|, n - |d_j|)``.
Displacements ``d`` and ``-d`` give the same differences up to sign, so only a
half-plane of representatives is enumerated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .modulus import KnvModulus, knv_omega, smallness_constant
from .spectral import RealField, forward_transform, gradient

EXACT_LIMIT = 256
NEAR_UNITS = 16
MAX_PRINCIPLE_RTOL = 1e-8
GRADIENT_RTOL = 1e-10


def _values(theta, length: float):
    if isinstance(theta, RealField):
        return theta.values, theta.grid.dx
    v = np.asarray(theta, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError("expected a square array")
    return v, length / v.shape[0]


@lru_cache(maxsize=16)
def _displacements(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Half-plane representatives ``(d1, d2)`` sorted by squared torus length ``m``."""
    h = n // 2
    d1, d2 = np.meshgrid(np.arange(0, h + 1), np.arange(-h + 1, h + 1), indexing="ij")
    d1, d2 = d1.ravel(), d2.ravel()
    keep = ~(((d1 == 0) | (d1 == h)) & (d2 < 0)) & ~((d1 == 0) & (d2 == 0))
    d1, d2 = d1[keep], d2[keep]
    m1 = np.minimum(np.abs(d1), n - np.abs(d1))
    m2 = np.minimum(np.abs(d2), n - np.abs(d2))
    m = m1 * m1 + m2 * m2
    order = np.argsort(m, kind="stable")
    return d1[order], d2[order], m[order]


def _subsample(d1, d2, m, max_units: float):
    """Every displacement within ``NEAR_UNITS`` cells plus a log radial/angular sample."""
    near = m <= NEAR_UNITS**2
    lattice = dict.fromkeys(zip(d1[~near].tolist(), d2[~near].tolist()))
    picks = set()
    if max_units > NEAR_UNITS:
        radii = np.geomspace(NEAR_UNITS, max_units, max(2, int(8 * math.log2(max_units / NEAR_UNITS)) + 1))
        angles = np.linspace(0, math.pi, 65)
        for rho in radii:
            for a in angles:
                p = (int(round(rho * math.cos(a))), int(round(rho * math.sin(a))))
                for q in (p, (-p[0], -p[1])):
                    if q in lattice:
                        picks.add(q)
    sel = near.copy()
    if picks:
        pk = set(picks)
        sel |= np.array([(a, b) in pk for a, b in zip(d1.tolist(), d2.tolist())])
    return d1[sel], d2[sel], m[sel]


def _shift_diff(v: np.ndarray, a: int, b: int) -> np.ndarray:
    """``theta(x + d) - theta(x)`` on the grid for displacement ``d = (a, b)``."""
    return np.roll(v, (-a, -b), axis=(0, 1)) - v


@dataclass
class EmpiricalModulus:
    xi_samples: np.ndarray
    omega_M: np.ndarray
    subsampled: bool = False

    def __call__(self, xi):
        return np.interp(xi, self.xi_samples, self.omega_M)


def empirical_modulus(theta, xi_samples, length: float = 2 * math.pi) -> EmpiricalModulus:
    """``sup |theta(x) - theta(y)|`` over grid pairs with torus distance at most ``xi``.

    ``theta`` is a :class:`RealField` or a square array on a period-``length``
    grid.  Exact for ``n <= 256``; larger grids sample displacements beyond
    16 cells and set the ``subsampled`` flag.
    """
    v, dx = _values(theta, length)
    n = v.shape[0]
    xs = np.asarray(xi_samples, dtype=float)
    if xs.ndim != 1 or np.any(np.diff(xs) < 0) or np.any(xs < 0):
        raise ValueError("xi samples must be non-negative and increasing")
    limits = (xs / dx) ** 2 * (1 + 1e-9)
    d1, d2, m = _displacements(n)
    within = m <= (limits[-1] if xs.size else 0)
    d1, d2, m = d1[within], d2[within], m[within]
    subsampled = n > EXACT_LIMIT
    if subsampled:
        d1, d2, m = _subsample(d1, d2, m, math.sqrt(limits[-1]) if xs.size else 0.0)
    vals = np.array([np.max(np.abs(_shift_diff(v, a, b))) for a, b in zip(d1, d2)])
    running = np.maximum.accumulate(vals) if vals.size else vals
    idx = np.searchsorted(m, limits, side="right")
    out = np.where(idx > 0, running[np.maximum(idx - 1, 0)] if vals.size else 0.0, 0.0)
    return EmpiricalModulus(xs, out.astype(float), subsampled)


def brute_force_modulus(values: np.ndarray, xi_samples, length: float = 2 * math.pi) -> np.ndarray:
    """Reference ``omega_M`` from every pair of grid points; only for tiny grids."""
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    i1, i2 = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    p1, p2, f = i1.ravel(), i2.ravel(), v.ravel()
    a1 = np.abs(p1[:, None] - p1[None, :])
    a2 = np.abs(p2[:, None] - p2[None, :])
    m = np.minimum(a1, n - a1) ** 2 + np.minimum(a2, n - a2) ** 2
    diff = np.abs(f[:, None] - f[None, :])
    dx = length / n
    return np.array([diff[m <= (x / dx) ** 2 * (1 + 1e-9)].max() for x in xi_samples])


# -- rescaled modulus and smallness ------------------------------------------


def gradient_sup(theta: RealField) -> float:
    """``max |grad theta|`` on the grid, with the gradient taken spectrally."""
    g1, g2 = gradient(forward_transform(theta))
    return float(np.max(np.hypot(g1.values, g2.values)))


@dataclass(frozen=True)
class RescaledModulus:
    """``xi -> mu^(2s-1) omega(mu xi)``, the modulus seen by the rescaled solution."""

    modulus: KnvModulus
    mu: float

    @classmethod
    def from_gradient(cls, m: KnvModulus, grad_sup: float) -> "RescaledModulus":
        if not grad_sup > 0:
            raise ValueError("rescaling needs a non-constant initial field")
        return cls(m, (2 * grad_sup) ** (1 / (2 * m.s)))

    def __call__(self, xi):
        m, mu = self.modulus, self.mu
        out = mu ** (2 * m.s - 1) * knv_omega(m, mu * np.asarray(xi, dtype=float))
        return out if np.ndim(out) else float(out)

    @property
    def breakpoint(self) -> float:
        return self.modulus.delta / self.mu

    def slope_at_zero(self) -> float:
        return self.mu ** (2 * self.modulus.s)

    def near_field(self, xi):
        """Closed form ``mu^(2s) xi - mu^(2s-1+r) xi^r`` valid for ``mu xi <= delta``."""
        m, mu = self.modulus, self.mu
        x = np.asarray(xi, dtype=float)
        return mu ** (2 * m.s) * x - mu ** (2 * m.s - 1 + m.r) * x**m.r


def rescaled_modulus(m: KnvModulus, theta0: RealField) -> RescaledModulus:
    return RescaledModulus.from_gradient(m, gradient_sup(theta0))


@dataclass(frozen=True)
class SmallnessCheck:
    product: float
    c_s: float
    passed: bool
    equivalent_passed: bool  # 2 |theta0| < omega_mu(delta / mu)
    degenerate: bool
    sup_norm: float
    grad_sup: float

    @property
    def consistent(self) -> bool:
        return self.passed == self.equivalent_passed


def smallness_check(theta0: RealField, m: KnvModulus) -> SmallnessCheck:
    """``|grad theta0|^(1-2s) |theta0|^(2s) < c_s`` together with its rescaled form."""
    T = theta0.sup_norm()
    g = gradient_sup(theta0)
    c_s = smallness_constant(m)
    product = g ** (1 - 2 * m.s) * T ** (2 * m.s)
    passed = product < c_s
    if g > 0:
        w = RescaledModulus.from_gradient(m, g)
        equiv = 2 * T < w(w.breakpoint)
    else:
        equiv = passed
    return SmallnessCheck(product, c_s, passed, bool(equiv), g == 0 or T == 0, T, g)


# -- breakthrough search ------------------------------------------------------


@dataclass(frozen=True)
class BreakthroughRecord:
    x: tuple[float, float]
    y: tuple[float, float]
    separation: float
    slack: float  # theta(x) - theta(y) - omega(|x - y|)


@dataclass(frozen=True)
class MocScan:
    slack: float  # largest slack over all grid pairs
    record: BreakthroughRecord | None  # pair attaining ``slack``
    flagged: BreakthroughRecord | None  # worst pair not ruled out by the gradient bound


def _record(arg, n: int, dx: float) -> BreakthroughRecord:
    slack, i, a, b, Dv, sep = arg
    i1, i2 = divmod(i, n)
    p = (i1 * dx, i2 * dx)
    q = (((i1 + a) % n) * dx, ((i2 + b) % n) * dx)
    x, y = (q, p) if Dv > 0 else (p, q)
    return BreakthroughRecord(x, y, sep, slack)


def scan_moc(theta, omega: Callable, tol: float = 0.0, grad: float | None = None,
             length: float = 2 * math.pi) -> MocScan:
    """Exact search for the largest ``theta(x) - theta(y) - omega(|x - y|)``.

    Displacements are visited by increasing length; the search stops once
    ``osc(theta) - omega(length)`` can neither beat the best slack nor reach
    ``-tol``.  A separation ``xi`` with ``grad * xi < omega(xi)`` is certified by
    the Lipschitz bound (no pair that far apart, on or off the grid, can reach
    ``omega``), so pairs there are never flagged; they still count towards
    ``slack``.
    """
    v, dx = _values(theta, length)
    n = v.shape[0]
    osc = float(np.max(v) - np.min(v))
    d1, d2, m = _displacements(n)
    best = flag = None
    last_m, w, certified = -1, 0.0, False
    for a, b, mm in zip(d1.tolist(), d2.tolist(), m.tolist()):
        if mm != last_m:
            last_m, sep = mm, dx * math.sqrt(mm)
            w = float(omega(sep))
            top = osc - w
            if (best is not None and top <= best[0]) and top < -tol:
                break
            certified = grad is not None and grad * sep * (1 + GRADIENT_RTOL) < w
        D = _shift_diff(v, a, b)
        i = int(np.argmax(np.abs(D)))
        slack = abs(float(D.flat[i])) - w
        arg = (slack, i, a, b, float(D.flat[i]), sep)
        if best is None or slack > best[0]:
            best = arg
        if not certified and slack >= -tol and (flag is None or slack > flag[0]):
            flag = arg
    if best is None:
        return MocScan(-math.inf, None, None)
    return MocScan(best[0], _record(best, n, dx), flag and _record(flag, n, dx))


def moc_slack(theta, omega: Callable, length: float = 2 * math.pi):
    """``(slack, record)`` for the pair with the largest ``theta(x) - theta(y) - omega``."""
    sc = scan_moc(theta, omega, length=length)
    return sc.slack, sc.record


def default_tolerance(theta: RealField) -> float:
    return gradient_sup(theta) * theta.grid.dx


def check_moc(theta, omega: Callable, tol: float | None = None,
              length: float = 2 * math.pi, grad: float | None = None) -> BreakthroughRecord | None:
    """Near-breakthrough pair if ``omega`` is (almost) saturated, else ``None``.

    ``tol`` defaults to ``|grad theta| * dx``, the resolution of the grid.
    Separations where the gradient bound already keeps pairs strictly below
    ``omega`` are excluded (see :func:`scan_moc`).
    """
    if isinstance(theta, RealField):
        g = gradient_sup(theta) if grad is None else grad
        tol = g * theta.grid.dx if tol is None else tol
    else:
        if tol is None:
            raise ValueError("tolerance must be given for raw arrays")
        g = grad
    return scan_moc(theta, omega, tol, g, length).flagged


def _slope_at_zero(omega) -> float:
    f = getattr(omega, "slope_at_zero", None)
    if f is not None:
        return float(f())
    h = 1e-9
    return float(omega(h)) / h


def omega_prime_zero_bound(theta: RealField, omega, slack: float | None = None) -> bool:
    """``|grad theta| <= omega'(0)`` up to a rounding slack."""
    g = gradient_sup(theta)
    w0 = _slope_at_zero(omega)
    slack = GRADIENT_RTOL * max(abs(w0), g, 1e-300) if slack is None else slack
    return g <= w0 + slack


# -- trajectory report ---------------------------------------------------------


def bkm_accumulate(report_or_times, grad_sup=None) -> float:
    """Trapezoid rule for ``int |grad theta| dt`` over the sampled times."""
    if grad_sup is None:
        times, grad_sup = report_or_times.times, report_or_times.grad_sup
    else:
        times = report_or_times
    t = np.asarray(times, dtype=float)
    g = np.asarray(grad_sup, dtype=float)
    if t.size < 2:
        return 0.0
    if np.any(np.diff(t) < 0):
        raise ValueError("sample times must be non-decreasing")
    return float(np.sum(0.5 * (g[1:] + g[:-1]) * np.diff(t)))


@dataclass
class TrajectoryReport:
    times: np.ndarray
    sup_norm: np.ndarray
    grad_sup: np.ndarray
    l2_norm: np.ndarray
    mean: np.ndarray
    bkm: np.ndarray
    moc_slack: np.ndarray
    breakthroughs: list[tuple[float, BreakthroughRecord]] = field(default_factory=list)
    grad_ref: float | None = None  # initial gradient when the run was resumed

    @property
    def grad0(self) -> float:
        if self.grad_ref is not None:
            return self.grad_ref
        return float(self.grad_sup[0]) if self.grad_sup.size else 0.0

    @property
    def max_principle_ok(self) -> bool:
        if self.sup_norm.size < 2:
            return True
        allowed = MAX_PRINCIPLE_RTOL * self.sup_norm[0] * np.maximum(np.diff(self.times), 1e-300)
        return bool(np.all(np.diff(self.sup_norm) <= allowed + 4 * np.finfo(float).eps * self.sup_norm[0]))

    @property
    def gradient_bound_ok(self) -> bool:
        return gradient_bound_check(self)

    @property
    def no_breakthrough(self) -> bool:
        return not self.breakthroughs

    @property
    def passed(self) -> bool:
        return self.max_principle_ok and self.gradient_bound_ok and self.no_breakthrough

    def flags(self) -> dict[str, bool]:
        return {
            "max_principle": self.max_principle_ok,
            "gradient_bound": self.gradient_bound_ok,
            "no_breakthrough": self.no_breakthrough,
        }


def gradient_bound_check(report: TrajectoryReport, theta0=None) -> bool:
    """``max_t |grad theta| < 2 |grad theta0|`` with a small relative slack."""
    if isinstance(theta0, RealField):
        g0 = gradient_sup(theta0)
    elif theta0 is not None:
        g0 = float(theta0)
    else:
        g0 = report.grad0
    if report.grad_sup.size == 0:
        return True
    if g0 == 0:
        return bool(np.max(report.grad_sup) == 0)
    return bool(np.max(report.grad_sup) < 2 * g0 * (1 + GRADIENT_RTOL))


class TrajectoryMonitor:
    """Collects per-sample diagnostics; optionally searches for breakthroughs.

    With a ``modulus``, the rescaled modulus is fixed from the initial field
    (``reference`` when resuming, else the first observed field) and every
    sample is searched for near-breakthrough pairs as in :func:`check_moc`.
    """

    def __init__(self, modulus: KnvModulus | None = None, tol: float | None = None,
                 reference: RealField | None = None):
        self.modulus = modulus
        self.tol = tol
        self.omega_mu: RescaledModulus | None = None
        self.grad_ref = None if reference is None else gradient_sup(reference)
        if modulus is not None and self.grad_ref:
            self.omega_mu = RescaledModulus.from_gradient(modulus, self.grad_ref)
        self.final_state = None
        self._rows: list[tuple] = []
        self._events: list[tuple[float, BreakthroughRecord]] = []
        self._bkm = 0.0

    @property
    def started(self) -> bool:
        return bool(self._rows)

    @property
    def initial_sup(self) -> float:
        return self._rows[0][1] if self._rows else 0.0

    def observe(self, state) -> None:
        theta = state.real()
        sup = theta.sup_norm()
        g = gradient_sup(theta)
        l2 = math.sqrt(state.theta.energy())
        mean = state.theta.coefficient(0, 0).real
        if self._rows:
            t0, g_prev = self._rows[-1][0], self._rows[-1][2]
            self._bkm += 0.5 * (g + g_prev) * (state.t - t0)
        slack = math.nan
        if self.modulus is not None:
            if self.omega_mu is None and g > 0:
                self.omega_mu = RescaledModulus.from_gradient(self.modulus, g)
            if self.omega_mu is not None:
                tol = g * theta.grid.dx if self.tol is None else self.tol
                sc = scan_moc(theta, self.omega_mu, tol, g)
                slack = sc.slack
                if sc.flagged is not None:
                    self._events.append((state.t, sc.flagged))
        self._rows.append((state.t, sup, g, l2, mean, self._bkm, slack))

    def report(self) -> TrajectoryReport:
        cols = list(zip(*self._rows)) if self._rows else [()] * 7
        arr = [np.asarray(c, dtype=float) for c in cols]
        return TrajectoryReport(*arr, breakthroughs=list(self._events), grad_ref=self.grad_ref)
