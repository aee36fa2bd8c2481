"""Periodic 2D grids, FFT transforms and Fourier-multiplier operators.

Arrays are indexed ``[i1, i2]`` with ``x1 = i1 * dx`` along axis 0 and
``x2 = i2 * dx`` along axis 1.  Spectral coefficients are stored in numpy FFT
order and normalised so that ``f(x) = sum_k c_k exp(i k.x)``; a constant field
``c`` therefore has ``c_(0,0) = c``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

THREADS_ENV = "QGMOC_THREADS"


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid:
    """Square periodic grid with ``n`` points per side and period ``length``."""

    n: int
    length: float = 2 * np.pi

    def __post_init__(self):
        if self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be even and >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"domain period must be positive, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def coords(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.coords, self.coords, indexing="ij")

    @cached_property
    def integer_modes(self) -> np.ndarray:
        """Integer frequencies in FFT order, spanning ``[-n/2, n/2)``."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    @cached_property
    def wavevectors(self) -> tuple[np.ndarray, np.ndarray]:
        k = self.integer_modes * (2 * np.pi / self.length)
        return np.meshgrid(k, k, indexing="ij")

    @cached_property
    def kmag(self) -> np.ndarray:
        k1, k2 = self.wavevectors
        return np.hypot(k1, k2)

    @cached_property
    def odd_wavevectors(self) -> tuple[np.ndarray, np.ndarray]:
        # Nyquist row/column dropped so odd-order multipliers keep fields real.
        k1, k2 = (k.copy() for k in self.wavevectors)
        nyq = self.integer_modes == -self.n // 2
        k1[nyq, :] = 0.0
        k2[:, nyq] = 0.0
        return k1, k2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        m = np.abs(self.integer_modes)
        keep = m <= self.n / 3
        return keep[:, None] & keep[None, :]


@dataclass(frozen=True, eq=False)
class RealField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n, self.grid.n):
            if v.size != self.grid.n**2:
                raise ValueError(f"expected {self.grid.n**2} values, got {v.size}")
            v = v.reshape(self.grid.n, self.grid.n)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, func) -> "RealField":
        x1, x2 = grid.mesh
        return cls(grid, np.broadcast_to(func(x1, x2), x1.shape).astype(float))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid
    coefficients: np.ndarray

    def coefficient(self, k1: int, k2: int) -> complex:
        n = self.grid.n
        return complex(self.coefficients[k1 % n, k2 % n])

    def hermitian_defect(self) -> float:
        c = self.coefficients
        flipped = np.conj(np.roll(c[::-1, ::-1], 1, axis=(0, 1)))
        return float(np.max(np.abs(c - flipped)))

    def energy(self) -> float:
        """Mean square of the represented field (Parseval)."""
        return float(np.sum(np.abs(self.coefficients) ** 2))


def forward_transform(f: RealField) -> SpectralField:
    if not np.all(np.isfinite(f.values)):
        bad = int(np.count_nonzero(~np.isfinite(f.values)))
        raise ValueError(f"field has {bad} non-finite values")
    c = sfft.fft2(f.values, workers=_workers()) / f.grid.n**2
    return SpectralField(f.grid, c)


def inverse_transform(F: SpectralField) -> RealField:
    v = sfft.ifft2(F.coefficients * F.grid.n**2, workers=_workers())
    return RealField(F.grid, v.real)


def apply_multiplier(F: SpectralField, symbol: np.ndarray) -> SpectralField:
    return SpectralField(F.grid, F.coefficients * symbol)


def gradient(F: SpectralField) -> tuple[RealField, RealField]:
    k1, k2 = F.grid.odd_wavevectors
    return (
        inverse_transform(apply_multiplier(F, 1j * k1)),
        inverse_transform(apply_multiplier(F, 1j * k2)),
    )


def _check_power(s: float, upper: float = 1.0):
    if not 0 < s < upper:
        raise ValueError(f"fractional power must lie in (0, {upper:g}), got {s}")


def fractional_symbol(grid: Grid, s: float) -> np.ndarray:
    _check_power(s)
    return grid.kmag ** (2 * s)


def fractional_laplacian_spectral(F: SpectralField, s: float) -> SpectralField:
    """Apply ``(-Delta)^s`` as the multiplier ``|k|^(2s)``."""
    return apply_multiplier(F, fractional_symbol(F.grid, s))


def riesz_symbols(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    k1, k2 = grid.odd_wavevectors
    kmag = np.hypot(k1, k2)
    with np.errstate(invalid="ignore", divide="ignore"):
        r1 = np.where(kmag > 0, 1j * k1 / kmag, 0.0)
        r2 = np.where(kmag > 0, 1j * k2 / kmag, 0.0)
    return r1, r2


def riesz_velocity_spectral(F: SpectralField) -> tuple[SpectralField, SpectralField]:
    r1, r2 = riesz_symbols(F.grid)
    return apply_multiplier(F, -r2), apply_multiplier(F, r1)


def riesz_velocity(F: SpectralField) -> tuple[RealField, RealField]:
    """SQG velocity ``u = (-R2 theta, R1 theta)``; the mean mode maps to zero."""
    u1, u2 = riesz_velocity_spectral(F)
    return inverse_transform(u1), inverse_transform(u2)


def spectral_divergence(u1: SpectralField, u2: SpectralField) -> float:
    k1, k2 = u1.grid.odd_wavevectors
    div = 1j * k1 * u1.coefficients + 1j * k2 * u2.coefficients
    return float(np.max(np.abs(div)))


def dealias(F: SpectralField) -> SpectralField:
    """2/3 rule: zero every mode with ``max(|k1|, |k2|) > n/3``."""
    return SpectralField(F.grid, np.where(F.grid.dealias_mask, F.coefficients, 0.0))


def resample(f: RealField, n: int) -> RealField:
    """Trigonometric interpolation onto an ``n``-point grid (modes above both Nyquists dropped)."""
    new = Grid(n, f.grid.length)
    c = forward_transform(f).coefficients
    keep = min(n, f.grid.n) // 2
    idx = np.r_[0:keep, -keep + 1:0]
    out = np.zeros((n, n), dtype=complex)
    out[np.ix_(idx % n, idx % n)] = c[np.ix_(idx % f.grid.n, idx % f.grid.n)]
    return inverse_transform(SpectralField(new, out))
