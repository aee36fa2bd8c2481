"""Pseudo-spectral integration of the dissipative SQG equation.

    theta_t + u . grad(theta) = -kappa (-Delta)^s theta,   u = (-R2 theta, R1 theta)

The linear term is integrated exactly per mode through an integrating factor;
the advection term is treated with classical RK4.  With ``E = exp(-kappa
|k|^(2s) dt / 2)`` one step reads

    a = N(th)               th1 = E (th + dt/2 a)
    b = N(th1)              th2 = E th + dt/2 b
    c = N(th2)              th3 = E^2 th + dt E c
    d = N(th3)              th' = E^2 th + dt/6 (E^2 a + 2 E (b + c) + d)
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np
import scipy.fft as sfft

from .spectral import (
    Grid,
    RealField,
    SpectralField,
    _workers,
    forward_transform,
    riesz_symbols,
)

VELOCITY_FLOOR = 1e-12
BLOWUP_FACTOR = 10.0


@dataclass(frozen=True)
class SolverConfig:
    s: float = 0.25
    kappa: float = 1.0
    n: int = 128
    t_end: float = 1.0
    cfl: float = 0.4
    dt_max: float = 0.05
    dealias: bool = True

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        Grid(self.n)  # validates n
        if self.comparison_run:
            warnings.warn(f"s={self.s} is outside the super-critical range (0, 1/2); "
                          "running as a comparison case", stacklevel=3)

    @property
    def comparison_run(self) -> bool:
        """True when ``s`` lies outside the super-critical range."""
        return not self.s < 0.5

    @property
    def grid(self) -> Grid:
        return Grid(self.n)


@dataclass(frozen=True)
class State:
    theta: SpectralField
    t: float = 0.0

    @classmethod
    def from_real(cls, theta: RealField, t: float = 0.0) -> "State":
        return cls(forward_transform(theta), float(t))

    def real(self) -> RealField:
        return _to_real(self.theta.grid, self.theta.coefficients)


class BlowUpError(RuntimeError):
    """Raised when the solution becomes non-finite or exceeds the growth threshold."""

    def __init__(self, t: float, sup_norm: float, report=None):
        super().__init__(f"blow-up detected at t={t:.6g} (sup norm {sup_norm:.6g})")
        self.t = t
        self.sup_norm = sup_norm
        self.report = report


def _to_real(grid: Grid, c: np.ndarray) -> RealField:
    return RealField(grid, sfft.ifft2(c * grid.n**2, workers=_workers()).real)


def _ifft_real(c: np.ndarray, n: int) -> np.ndarray:
    return sfft.ifft2(c * n**2, workers=_workers()).real


def hermitian_part(c: np.ndarray) -> np.ndarray:
    """Project coefficients onto those of a real field."""
    mirror = np.conj(np.roll(c[::-1, ::-1], 1, axis=(0, 1)))
    return 0.5 * (c + mirror)


class _Operators:
    """Per-grid multipliers, cached for a given configuration."""

    def __init__(self, cfg: SolverConfig):
        g = cfg.grid
        self.n = g.n
        k1, k2 = g.odd_wavevectors
        self.ik1, self.ik2 = 1j * k1, 1j * k2
        r1, r2 = riesz_symbols(g)
        self.u1, self.u2 = -r2, r1
        self.linear = cfg.kappa * g.kmag ** (2 * cfg.s)
        self.mask = g.dealias_mask if cfg.dealias else None
        self.dx = g.dx

    def velocity(self, c):
        n = self.n
        return _ifft_real(self.u1 * c, n), _ifft_real(self.u2 * c, n)

    def nonlinear(self, c):
        n = self.n
        u1, u2 = self.velocity(c)
        t1 = _ifft_real(self.ik1 * c, n)
        t2 = _ifft_real(self.ik2 * c, n)
        adv = sfft.fft2(u1 * t1 + u2 * t2, workers=_workers()) / n**2
        if self.mask is not None:
            adv = np.where(self.mask, adv, 0.0)
        return -adv

    def factor(self, dt):
        return np.exp(-self.linear * (0.5 * dt))


_OPS_CACHE: dict[SolverConfig, _Operators] = {}


def _ops(cfg: SolverConfig) -> _Operators:
    key = replace(cfg, t_end=0.0, cfl=1.0, dt_max=1.0)
    op = _OPS_CACHE.get(key)
    if op is None:
        if len(_OPS_CACHE) > 8:
            _OPS_CACHE.clear()
        op = _OPS_CACHE[key] = _Operators(cfg)
    return op


def cfl_dt(u: tuple, grid: Grid, cfg: SolverConfig) -> float:
    """``min(dt_max, cfl * dx / max(|u1|, |u2|, floor))``."""
    vals = [np.asarray(getattr(c, "values", c)) for c in u]
    if not all(np.all(np.isfinite(v)) for v in vals):
        raise ValueError("velocity has non-finite values")
    speed = max(float(np.max(np.abs(v))) for v in vals)
    return min(cfg.dt_max, cfg.cfl * grid.dx / max(speed, VELOCITY_FLOOR))


def step(state: State, cfg: SolverConfig, dt: float | None = None) -> State:
    """Advance one integrating-factor RK4 step (CFL step size unless ``dt`` given)."""
    op = _ops(cfg)
    c = state.theta.coefficients
    if dt is None:
        dt = cfl_dt(op.velocity(c), state.theta.grid, cfg)
    E = op.factor(dt)
    E2 = E * E
    a = op.nonlinear(c)
    b = op.nonlinear(E * (c + 0.5 * dt * a))
    cc = op.nonlinear(E * c + 0.5 * dt * b)
    d = op.nonlinear(E2 * c + dt * E * cc)
    new = E2 * c + dt / 6 * (E2 * a + 2 * E * (b + cc) + d)
    new = hermitian_part(new)
    t = state.t + dt
    if not np.all(np.isfinite(new)):
        raise BlowUpError(t, float("inf"))
    return State(SpectralField(state.theta.grid, new), t)


# -- driver -----------------------------------------------------------------


def sample_times(t_start: float, t_end: float, interval: float) -> list[float]:
    """Sample instants ``k * interval`` in ``(t_start, t_end]``, always ending at ``t_end``."""
    if not interval > 0:
        raise ValueError("sample interval must be positive")
    k0 = math.floor(t_start / interval + 1e-9) + 1
    out = []
    k = k0
    while k * interval < t_end * (1 - 1e-12):
        out.append(k * interval)
        k += 1
    if t_end > t_start:
        out.append(t_end)
    return out


def run(theta0: RealField | State, cfg: SolverConfig, monitor=None,
        hooks: Iterable[Callable[[State], None]] = (), sample_interval: float | None = None):
    """Integrate to ``cfg.t_end``, observing the state at every sample instant.

    ``theta0`` may be a :class:`State` (resuming a run, with ``t`` taken from it).
    ``monitor`` defaults to a :class:`~qgmoc.monitor.TrajectoryMonitor` without a
    modulus; its report is returned.  Blow-up raises :class:`BlowUpError` whose
    ``report`` attribute holds the diagnostics gathered so far.
    """
    from .monitor import TrajectoryMonitor

    state = theta0 if isinstance(theta0, State) else State.from_real(theta0)
    if state.theta.grid.n != cfg.n:
        raise ValueError(f"initial data has n={state.theta.grid.n}, config has n={cfg.n}")
    monitor = TrajectoryMonitor() if monitor is None else monitor
    hooks = list(hooks)
    interval = sample_interval or max(cfg.t_end / 20, 1e-12)

    def observe(st: State):
        monitor.observe(st)
        for h in hooks:
            h(st)

    if not monitor.started:
        observe(state)
    op = _ops(cfg)
    sup0 = monitor.initial_sup
    for target in sample_times(state.t, cfg.t_end, interval):
        while state.t < target:
            dt = cfl_dt(op.velocity(state.theta.coefficients), state.theta.grid, cfg)
            last = target - state.t <= dt * (1 + 1e-9)
            if last:
                dt = target - state.t
            try:
                state = step(state, cfg, dt)
            except BlowUpError as exc:
                raise BlowUpError(exc.t, exc.sup_norm, monitor.report()) from None
            if last:
                state = State(state.theta, target)
            sup = state.real().sup_norm()
            if not np.isfinite(sup) or sup > BLOWUP_FACTOR * max(sup0, 1e-300):
                raise BlowUpError(state.t, sup, monitor.report())
        observe(state)
    monitor.final_state = state
    return monitor.report()
