"""The piecewise modulus of continuity and its algebraic constraints.

Near field (``xi <= delta``): ``omega = xi - xi**r``.
Far field: ``omega' = gamma * (xi/delta)**(-alpha)``, integrated from ``omega(delta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class KnvModulus:
    delta: float
    gamma: float
    r: float
    alpha: float
    s: float

    # far field written as omega = c0 + c1 * xi**(1 - alpha)
    @property
    def c1(self) -> float:
        return self.gamma * self.delta**self.alpha / (1 - self.alpha)

    @property
    def omega_delta(self) -> float:
        return self.delta - self.delta**self.r

    @property
    def c0(self) -> float:
        return self.omega_delta - self.gamma * self.delta / (1 - self.alpha)

    def __call__(self, xi):
        return knv_omega(self, xi)

    def slope_at_zero(self) -> float:
        return 1.0


@dataclass(frozen=True)
class Violation:
    name: str
    margin: float  # negative: by how much the constraint is missed
    detail: str = ""


def knv_omega(m: KnvModulus, xi):
    x = np.asarray(xi, dtype=float)
    if np.any(x < 0):
        raise ValueError("separation must be non-negative")
    near = x <= m.delta
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(
            near,
            x - x**m.r,
            m.omega_delta + m.c1 * (x ** (1 - m.alpha) - m.delta ** (1 - m.alpha)),
        )
    return out if out.ndim else float(out)


def knv_defect(m: KnvModulus, xi):
    """``xi - omega(xi)``, evaluated without cancelling the linear part."""
    x = np.asarray(xi, dtype=float)
    d = m.delta
    with np.errstate(invalid="ignore", divide="ignore"):
        far = x - m.omega_delta - m.c1 * (x ** (1 - m.alpha) - d ** (1 - m.alpha))
        out = np.where(x <= d, x**m.r, far)
    return out if out.ndim else float(out)


def knv_omega_prime(m: KnvModulus, xi):
    """Slope; on ``[0, delta]`` the near-field formula (left derivative at delta)."""
    x = np.asarray(xi, dtype=float)
    if np.any(x < 0):
        raise ValueError("separation must be non-negative")
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(
            x <= m.delta,
            1 - m.r * x ** (m.r - 1),
            m.gamma * (x / m.delta) ** (-m.alpha),
        )
    return out if out.ndim else float(out)


def knv_omega_prime_right(m: KnvModulus, xi):
    x = np.asarray(xi, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(
            x < m.delta,
            1 - m.r * x ** (m.r - 1),
            m.gamma * (x / m.delta) ** (-m.alpha),
        )
    return out if out.ndim else float(out)


def knv_omega_second(m: KnvModulus, xi, side: str = "left"):
    """Second derivative; ``side`` picks the branch at the breakpoint."""
    x = np.asarray(xi, dtype=float)
    near = x <= m.delta if side == "left" else x < m.delta
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(
            near,
            -m.r * (m.r - 1) * x ** (m.r - 2),
            -m.gamma * m.alpha * m.delta**m.alpha * x ** (-m.alpha - 1),
        )
    return out if out.ndim else float(out)


def gamma_bounds(m: KnvModulus) -> dict[str, float]:
    """Upper bounds on ``gamma``: concavity, tail log, growth comparison, far-field sign."""
    return {
        "concavity": 1 - m.r * m.delta ** (m.r - 1),
        "alpha": m.alpha,
        "growth": (1 - m.alpha) / 2,
        "far_field": m.delta ** (2 * m.s),
    }


def gamma_max(m: KnvModulus) -> float:
    return min(gamma_bounds(m).values())


def validate_params(m: KnvModulus) -> list[Violation]:
    out: list[Violation] = []

    def check(name, margin, strict, detail):
        if margin < 0 or (strict and margin == 0) or not np.isfinite(margin):
            out.append(Violation(name, float(margin), detail))

    check("s_range", min(m.s, 0.5 - m.s), True, f"s={m.s} not in (0, 1/2)")
    check("delta_positive", m.delta, True, f"delta={m.delta}")
    check("gamma_positive", m.gamma, True, f"gamma={m.gamma}")
    check("r_range", min(m.r - 1, 1 + 2 * m.s - m.r), True,
          f"r={m.r} not in (1, {1 + 2 * m.s:g})")
    check("alpha_range", min(m.alpha - 2 * m.s, 1 - m.alpha), True,
          f"alpha={m.alpha} not in ({2 * m.s:g}, 1)")
    if m.delta > 0 and m.r > 1:
        # omega(delta) > delta/2; also needed for the rescaled near-field chain
        check("delta_small", 0.5 - m.delta ** (m.r - 1), False,
              f"delta^(r-1)={m.delta ** (m.r - 1):.6g} exceeds 1/2")
        strict = {"concavity": True, "alpha": False, "growth": True, "far_field": False}
        for name, bound in gamma_bounds(m).items():
            check(f"gamma_{name}", bound - m.gamma, strict[name],
                  f"gamma={m.gamma:.6g} vs bound {bound:.6g}")
    return out


def require_valid(m: KnvModulus):
    bad = validate_params(m)
    if bad:
        names = ", ".join(v.name for v in bad)
        raise ValueError(f"invalid modulus parameters: {names}")


def smallness_constant(m: KnvModulus) -> float:
    return 0.5 * (m.delta - m.delta**m.r) ** (2 * m.s)


def growth_comparison_check(m: KnvModulus, xi_grid) -> float:
    """Worst ``delta^a xi^(1-a) - ((1-a)/gamma) omega(xi)`` over ``xi > delta``."""
    x = np.asarray(xi_grid, dtype=float)
    x = x[x > m.delta]
    if x.size == 0:
        raise ValueError("grid has no points beyond delta")
    lhs = m.delta**m.alpha * x ** (1 - m.alpha)
    rhs = (1 - m.alpha) / m.gamma * knv_omega(m, x)
    return float(np.max(lhs - rhs))


def doubling_deficit(m: KnvModulus, xi_grid) -> float:
    """Largest ``C`` with ``omega(2 xi) - 2 omega(xi) <= -C omega(xi)`` on the grid."""
    x = np.asarray(xi_grid, dtype=float)
    x = x[x > m.delta]
    if x.size == 0:
        raise ValueError("grid has no points beyond delta")
    return float(np.min(2 - knv_omega(m, 2 * x) / knv_omega(m, x)))


def default_exponents(s: float) -> tuple[float, float]:
    """Midpoints of the admissible ``r`` and ``alpha`` ranges."""
    return 1 + s, (2 * s + 1) / 2


def xi_grid(delta: float, decades_each_side: int = 6, per_decade: int = 64) -> np.ndarray:
    """Log grid centred on ``delta`` that contains ``delta`` exactly."""
    j = np.arange(-decades_each_side * per_decade, decades_each_side * per_decade + 1)
    g = delta * 10.0 ** (j / per_decade)
    g[decades_each_side * per_decade] = delta
    return g


@dataclass(frozen=True)
class CertificateConstants:
    A: float = 1.0
    C_diss: float = 1.0
    C_prime: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("A", "C_diss", "C_prime"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")


@dataclass
class DominanceReport:
    xi_grid: np.ndarray
    convection: np.ndarray
    dissipation: np.ndarray
    margin: np.ndarray
    modulus: KnvModulus | None = None
    dissipation_error: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def passed(self) -> bool:
        return bool(np.all(np.isfinite(self.margin)) and np.all(self.margin < 0))

    @property
    def worst_margin(self) -> float:
        return float(np.max(self.margin))

    @property
    def worst_xi(self) -> float:
        return float(self.xi_grid[int(np.argmax(self.margin))])
