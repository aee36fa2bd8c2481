"""Seeded, band-limited initial data with prescribed sup and gradient norms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .monitor import gradient_sup
from .spectral import Grid, RealField, SpectralField, inverse_transform

KINDS = ("single", "random")


@dataclass(frozen=True)
class InitialDataSpec:
    """``kind="single"``: ``amplitude * cos(k.x + phase)`` with ``k = (modes, 0)``.

    ``kind="random"``: a trigonometric sum over ``1 <= max(|k1|, |k2|) <= modes``
    with Gaussian amplitudes decaying like ``|k|^-2``, rescaled so that the sup
    norm equals ``amplitude`` and (if given) the gradient sup norm equals
    ``grad_target``.
    """

    kind: str = "random"
    modes: int = 3
    amplitude: float = 1.0
    grad_target: float | None = None
    seed: int = 0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown initial data kind {self.kind!r}")
        if self.modes < 1:
            raise ValueError("modes must be at least 1")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if self.grad_target is not None and not self.grad_target > 0:
            raise ValueError("gradient target must be positive")


def targets_for_product(product: float, ratio: float, s: float) -> tuple[float, float]:
    """``(sup, grad)`` with ``grad / sup = ratio`` and ``grad^(1-2s) sup^(2s) = product``."""
    sup = product / ratio ** (1 - 2 * s)
    return sup, ratio * sup


def _field(grid: Grid, coeffs: dict) -> np.ndarray:
    c = np.zeros((grid.n, grid.n), dtype=complex)
    for (k1, k2), z in coeffs.items():
        c[k1 % grid.n, k2 % grid.n] += z / 2
        c[-k1 % grid.n, -k2 % grid.n] += np.conj(z) / 2
    return inverse_transform(SpectralField(grid, c)).values


def _random_parts(grid: Grid, spec: InitialDataSpec):
    """Lowest shell and the remaining modes as two separate fields."""
    rng = np.random.default_rng(spec.seed)
    low, high = {}, {}
    K = spec.modes
    for k1 in range(0, K + 1):
        for k2 in range(-K, K + 1):
            if k1 == 0 and k2 <= 0:
                continue
            kk = math.hypot(k1, k2)
            z = complex(rng.standard_normal(), rng.standard_normal()) / kk**2
            (low if max(abs(k1), abs(k2)) == 1 else high)[(k1, k2)] = z
    return _field(grid, low), _field(grid, high) if high else None


def _ratio(v: np.ndarray, grid: Grid) -> float:
    f = RealField(grid, v)
    return gradient_sup(f) / f.sup_norm()


def generate_initial_data(spec: InitialDataSpec, n: int) -> RealField:
    grid = Grid(n)
    if spec.modes > n / 3:
        raise ValueError(f"modes={spec.modes} exceed the dealiased band n/3={n / 3:.1f}")
    if spec.kind == "single":
        k = spec.modes
        v = np.cos(k * grid.mesh[0] + spec.phase)
        if spec.grad_target is not None and not math.isclose(spec.grad_target, spec.amplitude * k,
                                                             rel_tol=1e-2):
            raise ValueError(f"single mode fixes grad/sup = {k}; target is "
                             f"{spec.grad_target / spec.amplitude:.4g}")
        f = RealField(grid, v)
        return RealField(grid, spec.amplitude * v / f.sup_norm())
    low, high = _random_parts(grid, spec)
    v = low
    if spec.grad_target is not None:
        want = spec.grad_target / spec.amplitude
        if high is None:
            lo = hi = _ratio(low, grid)
        else:
            lo, hi = _ratio(low, grid), _ratio(high, grid)
        if not min(lo, hi) * (1 - 1e-2) <= want <= max(lo, hi) * (1 + 1e-2):
            raise ValueError(f"gradient/sup ratio {want:.4g} unreachable; feasible range "
                             f"[{min(lo, hi):.4g}, {max(lo, hi):.4g}]")
        if high is not None and not math.isclose(want, lo, rel_tol=1e-12):
            # blend w in [0, 1]: (1 - w) low + w high
            def gap(w):
                return _ratio((1 - w) * low + w * high, grid) - want

            if gap(0.0) * gap(1.0) > 0:
                w = 0.0 if abs(gap(0.0)) < abs(gap(1.0)) else 1.0
            else:
                w = optimize.brentq(gap, 0.0, 1.0, xtol=1e-14)
            v = (1 - w) * low + w * high
    f = RealField(grid, v - np.mean(v))
    return RealField(grid, spec.amplitude * f.values / f.sup_norm())
