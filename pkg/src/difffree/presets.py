"""Named, versioned initial conditions.

A preset builds the initial vorticity on a given grid; annulus presets also
fix the default circulation around the inner circle. Tests and the CLI refer
to presets by name so that an experiment is reproducible from its manifest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from difffree.diagnostics import shear_profile


@dataclass(frozen=True)
class Preset:
    name: str
    version: int
    geometry: str  # "heat", "channel" or "annulus"
    build: Callable
    gamma: float = 0.0
    description: str = ""


def _fig1(grid):
    return np.exp(-grid.y)


def _compatible_channel(grid):
    X, Y = grid.mesh()
    return np.cos(np.pi * Y) * (1.0 + 0.5 * np.cos(2.0 * np.pi * X / grid.Lx))


def shear_derivative(y):
    y = np.asarray(y, dtype=float)
    return 5.0 * y**4 - 20.0 / 3.0 * y**3 - 5.0 / 3.0


def _shear(grid):
    _, Y = grid.mesh()
    return -shear_derivative(Y)


def _cosine(grid):
    _, Y = grid.mesh()
    return np.cos(np.pi * Y)


def _sine(grid):
    _, Y = grid.mesh()
    return np.sin(np.pi * Y)


def _annulus_vortex(grid, centre_radius=None, width=None, amplitude=5.0):
    rc = 0.5 * (grid.a + grid.b) if centre_radius is None else centre_radius
    s = 0.15 * (grid.b - grid.a) if width is None else width
    X, Y = grid.cartesian()
    return amplitude * np.exp(-((X - rc) ** 2 + Y**2) / s**2)


def _curl_free(grid):
    return np.zeros(grid.shape)


PRESETS = {
    p.name: p
    for p in (
        Preset("fig1", 1, "heat", _fig1, description="u0 = exp(-y) on the half-line"),
        Preset("compatible-channel", 1, "channel", _compatible_channel,
               description="cos(pi y) (1 + cos(2 pi x / Lx) / 2); satisfies d_y omega = 0 at the walls"),
        Preset("shear", 1, "channel", _shear,
               description="omega = -U'(y) for U = y^5 - 5/3 y^4 - 5/3 y + 1 (zero flux, U'' = 0 at walls)"),
        Preset("cosine", 1, "channel", _cosine, description="cos(pi y)"),
        Preset("sine", 1, "channel", _sine, description="sin(pi y); vanishes on the walls"),
        Preset("annulus-vortex", 1, "annulus", _annulus_vortex, gamma=1.0,
               description="Gaussian blob centred mid-gap, inner circulation 1"),
        Preset("curl-free", 1, "annulus", _curl_free, gamma=1.0,
               description="omega = 0 with inner circulation 1: u_theta = 1 / (2 pi r)"),
    )
}


def get(name: str, geometry: str | None = None) -> Preset:
    try:
        p = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None
    if geometry is not None and p.geometry != geometry:
        raise ValueError(f"preset {name!r} is for the {p.geometry}, not the {geometry}")
    return p


def names(geometry: str | None = None) -> list[str]:
    return sorted(n for n, p in PRESETS.items() if geometry in (None, p.geometry))


def build(name: str, grid, geometry: str | None = None) -> np.ndarray:
    return get(name, geometry).build(grid)


__all__ = ["Preset", "PRESETS", "get", "names", "build", "shear_profile", "shear_derivative"]
