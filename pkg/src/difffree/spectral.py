"""Fourier helpers for one periodic direction (x in the channel, theta in the annulus).

Arrays are laid out ``(periodic, wall_normal)``; spectral arrays hold the
``rfft`` half spectrum, so real physical fields have conjugate-symmetric
coefficients by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def wavenumbers(n: int, period: float) -> np.ndarray:
    """Non-negative wavenumbers ``2 pi m / period`` of the rfft half spectrum."""
    return 2.0 * np.pi * np.arange(n // 2 + 1) / period


def full_wavenumbers(n: int, period: float) -> np.ndarray:
    """Signed wavenumbers for ``m = -n/2 + 1, ..., n/2``."""
    m = np.arange(-n // 2 + 1, n // 2 + 1)
    return 2.0 * np.pi * m / period


def dealias_mask(n: int) -> np.ndarray:
    """2/3-rule mask: keep modes with ``m < n/3``."""
    m = np.arange(n // 2 + 1)
    return 3 * m < n


def to_spectral(f: np.ndarray) -> np.ndarray:
    return np.fft.rfft(f, axis=0)


def to_physical(fh: np.ndarray, n: int) -> np.ndarray:
    return np.fft.irfft(fh, n=n, axis=0)


def periodic_mean(fh: np.ndarray, n: int) -> np.ndarray:
    """Mean over the periodic direction from the zero mode."""
    return fh[0].real / n


@dataclass(frozen=True)
class Field2D:
    """Real scalar field in physical layout ``(n_periodic, n_wall)``.

    ``grid`` is any grid exposing ``n_periodic``.
    """

    values: np.ndarray
    grid: object

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_spectral(cls, coeffs: np.ndarray, grid) -> "Field2D":
        return cls(to_physical(coeffs, grid.n_periodic), grid)

    def spectral(self) -> np.ndarray:
        return to_spectral(self.values)
