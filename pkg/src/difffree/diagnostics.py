"""Conserved and monotone quantities, balance identities, power-law fits.

Quadrature follows the solvers: trapezoid in the wall-normal direction (y or
r), exact periodic sums in the Fourier direction, and the cell-difference
gradient that the finite-volume diffusion operator is built from. With one
quadrature everywhere the discrete enstrophy balance closes to scheme order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

CSV_COLUMNS = (
    "t",
    "enstrophy",
    "palinstrophy_integral",
    "energy",
    "mean_vorticity",
    "l1",
    "l2",
    "l4",
    "circ_inner",
    "circ_outer",
    "boundary_stress_work",
    "bulk_dissipation",
)


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit of ``log(amplitude) = intercept + slope * log(nu)``."""

    slope: float
    intercept: float
    max_rel_residual: float

    def predict(self, nu):
        return np.exp(self.intercept) * np.asarray(nu, dtype=float) ** self.slope


def fit_power_law(nus, amplitudes) -> ScalingFit:
    nus = np.asarray(nus, dtype=float)
    amps = np.asarray(amplitudes, dtype=float)
    if nus.shape != amps.shape or nus.ndim != 1:
        raise ValueError("nus and amplitudes must be 1D and of equal length")
    if nus.size < 3:
        raise ValueError(f"need at least 3 samples for a scaling fit, got {nus.size}")
    if not (np.all(nus > 0) and np.all(amps > 0)):
        raise ValueError("scaling fit needs strictly positive nu and amplitude")
    if not (np.all(np.isfinite(nus)) and np.all(np.isfinite(amps))):
        raise ValueError("scaling fit inputs must be finite")
    x, y = np.log(nus), np.log(amps)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    return ScalingFit(float(slope), float(intercept), float(np.max(np.abs(np.expm1(resid)))))


@dataclass
class DiagnosticsRecord:
    """One row of the diagnostics ledger.

    ``circ_inner``/``circ_outer`` are None for geometries without holes and
    are written as empty CSV fields.
    """

    t: float
    enstrophy: float
    palinstrophy_integral: float
    energy: float
    mean_vorticity: float
    l1: float
    l2: float
    l4: float
    circ_inner: float | None = None
    circ_outer: float | None = None
    boundary_stress_work: float = 0.0
    bulk_dissipation: float = 0.0
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def lp_norms(self) -> tuple[float, float, float]:
        return (self.l1, self.l2, self.l4)

    @property
    def circulations(self) -> tuple[float | None, float | None]:
        return (self.circ_inner, self.circ_outer)

    def as_row(self) -> list:
        d = asdict(self)
        return [d[c] for c in CSV_COLUMNS]

    def is_finite(self) -> bool:
        vals = [v for v in self.as_row() if v is not None]
        return all(math.isfinite(v) for v in vals)


def record(state, nu: float, palinstrophy_integral: float = 0.0) -> DiagnosticsRecord:
    """Evaluate every ledger quantity on a channel or annulus state.

    The cumulative dissipation cannot be recovered from a snapshot, so the
    running value is passed in by the caller (``run`` keeps it).
    """
    import importlib

    kinds = {"ChannelState": "difffree.channel2d", "AnnulusState": "difffree.annulus2d"}
    name = type(state).__name__
    if name not in kinds:
        raise TypeError(f"no diagnostics for {name}")
    q = importlib.import_module(kinds[name]).integral_quantities(state, nu)
    return DiagnosticsRecord(t=state.t, palinstrophy_integral=palinstrophy_integral, **q)


def shear_profile(z):
    """The diffusion-free compatible shear ``U(z) = z^5 - 5/3 z^4 - 5/3 z + 1``."""
    z = np.asarray(z, dtype=float)
    return z**5 - 5.0 / 3.0 * z**4 - 5.0 / 3.0 * z + 1.0


def shear_profile_d2(z):
    z = np.asarray(z, dtype=float)
    return 20.0 * z**3 - 20.0 * z**2


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class EnergyGrowth:
    analytic: float
    quadrature: float
    wall_curvature: tuple[float, float]
    flux: float

    @property
    def rel_error(self) -> float:
        if self.analytic == 0:
            return abs(self.quadrature)
        return abs(self.quadrature - self.analytic) / abs(self.analytic)


def energy_growth_check(Lx: float, nu: float, nr: int = 256) -> EnergyGrowth:
    """Initial energy rate ``nu * int(Lap u0 . u0)`` for the shear ``(U(z), 0)``.

    ``analytic`` is ``20 nu Lx / 63``; ``quadrature`` integrates ``U'' U``
    with composite Simpson on ``nr`` intervals, exact for this degree-8
    integrand up to the Simpson error term (the fourth derivative is not
    constant, so nr controls it). Also returns ``U''(0), U''(1)`` and the
    flux ``int U``, which all vanish.
    """
    if nr < 32:
        raise ValueError("nr must be >= 32 to resolve the profile")
    from scipy.integrate import simpson

    n = nr + (nr % 2)
    z = np.linspace(0.0, 1.0, n + 1)
    U = shear_profile(z)
    quad = nu * Lx * simpson(shear_profile_d2(z) * U, x=z)
    flux = simpson(U, x=z)
    curv = (float(shear_profile_d2(0.0)), float(shear_profile_d2(1.0)))
    return EnergyGrowth(20.0 * nu * Lx / 63.0, float(quad), curv, float(flux))


@dataclass(frozen=True)
class BalanceReport:
    enstrophy_residual: float
    energy_residual: float
    enstrophy_residuals: np.ndarray
    energy_residuals: np.ndarray


def balance_residuals(series) -> BalanceReport:
    """Worst violation of the enstrophy and kinetic-energy identities.

    Enstrophy: ``enstrophy(t) + palinstrophy_integral(t) - enstrophy(0)``.
    Energy: ``dE/dt - (boundary_stress_work - bulk_dissipation)`` with dE/dt
    by centred differences on interior records (one-sided at the ends).
    """
    series = list(series)
    if len(series) < 3:
        raise ValueError("need at least 3 records")
    t = np.array([r.t for r in series])
    if np.any(np.diff(t) <= 0):
        raise ValueError("records must be strictly increasing in t")
    ens = np.array([r.enstrophy for r in series])
    pal = np.array([r.palinstrophy_integral for r in series])
    E = np.array([r.energy for r in series])
    rate = np.array([r.boundary_stress_work - r.bulk_dissipation for r in series])
    ens_res = ens + pal - (ens[0] + pal[0])
    dEdt = np.gradient(E, t, edge_order=2)
    en_res = dEdt - rate
    return BalanceReport(
        float(np.max(np.abs(ens_res))), float(np.max(np.abs(en_res))), ens_res, en_res
    )


def lp_increases(series, reference=None) -> dict[int, float]:
    """Largest step-to-step increase of each Lp norm, relative to ``reference``.

    ``reference`` defaults to the first record's norms.
    """
    series = list(series)
    norms = np.array([r.lp_norms for r in series])
    ref = np.asarray(reference if reference is not None else norms[0], dtype=float)
    ref = np.where(ref > 0, ref, 1.0)
    if len(series) < 2:
        return {1: 0.0, 2: 0.0, 4: 0.0}
    inc = np.max(np.diff(norms, axis=0), axis=0) / ref
    return {p: float(max(v, 0.0)) for p, v in zip((1, 2, 4), inc)}


def decay_rate(times, values) -> float:
    """Least-squares slope of ``-log(values)`` against time."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 2 or np.any(values <= 0):
        raise ValueError("need >= 2 positive samples")
    return float(-np.polyfit(times, np.log(values), 1)[0])
