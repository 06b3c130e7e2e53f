"""1D shear-flow model: the heat equation on a truncated half-line.

A shear flow ``(u(t, y), 0)`` over a flat wall reduces Navier-Stokes to
``u_t = nu * u_yy`` for y > 0. The three wall conditions act through a ghost
point at y = -dy:

    no-slip          u(0) = 0                 (Dirichlet row)
    stress-free      u_y(0) = 0               u[-1] = u[1]
    diffusion-free   u_yy(0) = 0              u[-1] = 2 u[0] - u[1]

The diffusion-free ghost value makes the wall second difference vanish, so the
wall value is frozen at its initial value. Inviscid (outer) evolution of
``u0 = exp(-y)`` is ``exp(nu t - y)``; the gap to it is the wall corrector.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from difffree.bc import BoundaryCondition
from difffree.diagnostics import ScalingFit, fit_power_law
from difffree.tridiag import Tridiagonal

PASSIVE_TOL = 1e-12


@dataclass(frozen=True)
class Field1D:
    """Samples of a scalar on the uniform grid ``y_j = j * dy``, 0 <= y <= L."""

    values: np.ndarray
    dy: float
    L: float

    def __post_init__(self):
        if not (self.dy > 0 and self.L > 0):
            raise ValueError("dy and L must be positive")
        values = np.asarray(self.values, dtype=float)
        expected = math.floor(self.L / self.dy + 1e-9) + 1
        if values.ndim != 1 or values.size != expected:
            raise ValueError(
                f"Field1D needs {expected} values for L={self.L}, dy={self.dy}; "
                f"got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def on_grid(cls, L: float, ny: int, values=None) -> "Field1D":
        if ny < 3:
            raise ValueError("need at least 3 grid points")
        dy = L / (ny - 1)
        if values is None:
            values = np.zeros(ny)
        elif callable(values):
            values = values(np.linspace(0.0, L, ny))
        return cls(np.asarray(values, dtype=float), dy, L)

    @property
    def ny(self) -> int:
        return self.values.size

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.ny)

    def same_grid(self, other: "Field1D") -> bool:
        return self.ny == other.ny and math.isclose(self.L, other.L, rel_tol=1e-12)

    def integral(self) -> float:
        """Trapezoidal integral over [0, L]."""
        v = self.values
        return float(self.dy * (v.sum() - 0.5 * (v[0] + v[-1])))


@dataclass(frozen=True)
class Heat1DConfig:
    nu: float
    dt: float
    bc: BoundaryCondition = BoundaryCondition.DIFFUSION_FREE
    t_end: float = 0.1
    L: float = 30.0
    ny: int = 3001
    # backward-Euler substeps replacing the first Crank-Nicolson step; damps
    # the undamped high-frequency response of CN to incompatible initial data
    startup_substeps: int = 2

    def __post_init__(self):
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))
        if not (self.nu >= 0 and math.isfinite(self.nu)):
            raise ValueError(f"nu must be finite and >= 0, got {self.nu}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.L <= 0 or self.ny < 3:
            raise ValueError("need L > 0 and ny >= 3")
        if self.startup_substeps < 0:
            raise ValueError("startup_substeps must be >= 0")

    @property
    def dy(self) -> float:
        return self.L / (self.ny - 1)

    @property
    def diffusion_number(self) -> float:
        return self.nu * self.dt / self.dy**2


def check_far_field(u0: Field1D, tol: float = PASSIVE_TOL) -> None:
    """Raise unless u0 and its first two differences are negligible at y = L."""
    v = u0.values
    tail = (abs(v[-1]), abs(v[-1] - v[-2]) / u0.dy, abs(v[-1] - 2 * v[-2] + v[-3]) / u0.dy**2)
    if max(tail) >= tol:
        raise ValueError(
            f"far boundary is not passive: |u0|, |u0'|, |u0''| at y=L = "
            f"{tail[0]:.3e}, {tail[1]:.3e}, {tail[2]:.3e} (need < {tol:g}); increase L"
        )


def _second_difference_bands(ny: int, dy: float, bc: BoundaryCondition):
    """Bands of the discrete d_yy with the wall ghost point folded in.

    Rows 0 (wall) and ny-1 (far end) are returned as zero rows for Dirichlet;
    the caller turns them into identity rows.
    """
    inv = 1.0 / dy**2
    lower = np.full(ny - 1, inv)
    diag = np.full(ny, -2.0 * inv)
    upper = np.full(ny - 1, inv)
    if bc is BoundaryCondition.STRESS_FREE:
        upper[0] = 2.0 * inv
    elif bc in (BoundaryCondition.DIFFUSION_FREE, BoundaryCondition.NO_SLIP):
        diag[0] = 0.0
        upper[0] = 0.0
    diag[-1] = 0.0
    lower[-1] = 0.0
    return lower, diag, upper


def apply_second_difference(u: np.ndarray, dy: float, bc: BoundaryCondition) -> np.ndarray:
    lower, diag, upper = _second_difference_bands(u.size, dy, bc)
    out = diag * u
    out[1:] += lower * u[:-1]
    out[:-1] += upper * u[1:]
    return out


def wall_ghost(u: np.ndarray, bc: BoundaryCondition) -> float:
    """Ghost value u[-1] implied by the wall condition."""
    bc = BoundaryCondition.parse(bc)
    if bc is BoundaryCondition.NO_SLIP:
        return -u[1]
    if bc is BoundaryCondition.STRESS_FREE:
        return u[1]
    return 2.0 * u[0] - u[1]


def _implicit_matrix(ny, dy, bc, coef) -> Tridiagonal:
    # I - coef * A, with identity rows where A has Dirichlet (zero) rows
    lower, diag, upper = _second_difference_bands(ny, dy, bc)
    return Tridiagonal(-coef * lower, 1.0 - coef * diag, -coef * upper)


def solve_heat1d(u0: Field1D, cfg: Heat1DConfig) -> Field1D:
    """Advance ``u_t = nu u_yy`` from u0 to ``cfg.t_end`` with Crank-Nicolson.

    The wall condition lives inside the tridiagonal system. The far end is
    Dirichlet with ``u(L, t) = u0(L) * exp(nu t)``, the exact outer evolution
    of an exponential tail, which is below ``PASSIVE_TOL`` by construction.
    """
    if not u0.same_grid(Field1D.on_grid(cfg.L, cfg.ny)):
        raise ValueError("u0 is not on the configured grid")
    if not np.all(np.isfinite(u0.values)):
        raise ValueError("u0 contains non-finite values")
    check_far_field(u0)

    u = u0.values.copy()
    bc, nu, dy = cfg.bc, cfg.nu, cfg.dy
    if bc is BoundaryCondition.NO_SLIP:
        u[0] = 0.0
    far0 = u0.values[-1]
    if cfg.t_end == 0 or nu == 0:
        return Field1D(u, dy, cfg.L)

    nsteps = max(1, int(math.ceil(cfg.t_end / cfg.dt - 1e-9)))
    dt = cfg.t_end / nsteps
    cn = _implicit_matrix(cfg.ny, dy, bc, 0.5 * nu * dt)

    t = 0.0

    def implicit_step(u, t_new, coef_expl, system):
        rhs = u + coef_expl * apply_second_difference(u, dy, bc) if coef_expl else u.copy()
        if bc is BoundaryCondition.NO_SLIP:
            rhs[0] = 0.0
        elif bc is BoundaryCondition.DIFFUSION_FREE:
            rhs[0] = u[0]
        rhs[-1] = far0 * math.exp(nu * t_new)
        return system.solve(rhs)

    start = 0
    if cfg.startup_substeps:
        sub = dt / cfg.startup_substeps
        be = _implicit_matrix(cfg.ny, dy, bc, nu * sub)
        for _ in range(cfg.startup_substeps):
            t += sub
            u = implicit_step(u, t, 0.0, be)
        start = 1
    for n in range(start, nsteps):
        t = (n + 1) * dt
        u = implicit_step(u, t, 0.5 * nu * dt, cn)
    return Field1D(u, dy, cfg.L)


def outer_reference(t: float, grid: Field1D, nu: float) -> Field1D:
    """Inviscid-limit reference ``exp(nu t - y)`` (whole-line heat flow of e^-y)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return Field1D(np.exp(nu * t - grid.y), grid.dy, grid.L)


def corrector_amplitude(u: Field1D, ref: Field1D) -> float:
    """Sup-norm of the wall corrector ``u - ref``."""
    if not u.same_grid(ref):
        raise ValueError("fields live on different grids")
    return float(np.max(np.abs(u.values - ref.values)))


def scaling_exponent(samples) -> ScalingFit:
    """Fit ``amplitude ~ C * nu**slope`` to ``(nu, amplitude)`` pairs."""
    samples = list(samples)
    return fit_power_law([s[0] for s in samples], [s[1] for s in samples])


def fig1_initial(grid: Field1D) -> Field1D:
    return Field1D(np.exp(-grid.y), grid.dy, grid.L)


@dataclass
class HeatComparison:
    """Solutions of the three wall conditions against the outer reference."""

    y: np.ndarray
    outer: np.ndarray
    solutions: dict = field(default_factory=dict)
    amplitudes: dict = field(default_factory=dict)


def compare_conditions(nu=0.1, t_end=0.1, ny=3001, L=30.0, dt=None, bcs=None) -> HeatComparison:
    """Compare the three wall conditions for ``u0 = exp(-y)``."""
    bcs = [BoundaryCondition.parse(b) for b in (bcs or list(BoundaryCondition))]
    if dt is None:
        dt = t_end / 100 if t_end > 0 else 1.0
    grid = Field1D.on_grid(L, ny)
    u0 = fig1_initial(grid)
    ref = outer_reference(t_end, grid, nu)
    out = HeatComparison(y=grid.y, outer=ref.values)
    for bc in bcs:
        cfg = Heat1DConfig(nu=nu, dt=dt, bc=bc, t_end=t_end, L=L, ny=ny)
        sol = solve_heat1d(u0, cfg)
        out.solutions[bc] = sol.values
        out.amplitudes[bc] = corrector_amplitude(sol, ref)
    return out


def layer_resolving_grid(nu: float, t: float, L: float = 30.0, points_per_layer: float = 8.0,
                         min_ny: int = 3001) -> int:
    """Point count giving ``points_per_layer`` nodes across ``sqrt(nu t)``."""
    thickness = math.sqrt(nu * t)
    if thickness == 0:
        return min_ny
    return max(min_ny, int(math.ceil(L * points_per_layer / thickness)) + 1)


def sweep_amplitude(nu: float, bc, t_end: float = 0.1, L: float = 30.0,
                    points_per_layer: float = 8.0, nsteps: int = 200) -> float:
    """Corrector amplitude for one sweep member; the grid follows the layer."""
    ny = layer_resolving_grid(nu, t_end, L, points_per_layer)
    grid = Field1D.on_grid(L, ny)
    cfg = Heat1DConfig(nu=nu, dt=t_end / nsteps, bc=bc, t_end=t_end, L=L, ny=ny)
    sol = solve_heat1d(fig1_initial(grid), cfg)
    return corrector_amplitude(sol, outer_reference(t_end, grid, nu))


def heat_sweep(nus, bcs=None, t_end=0.1, L=30.0, points_per_layer=8.0, nsteps=200,
               workers: int = 1):
    """Amplitudes for every (nu, bc) pair and the fitted power law per bc.

    Returns ``(rows, fits)`` with rows ``(nu, amplitude, bc)`` in input order.
    Members share no state, so ``workers > 1`` gives identical numbers.
    """
    bcs = [BoundaryCondition.parse(b) for b in (bcs or list(BoundaryCondition))]
    jobs = [(nu, bc) for bc in bcs for nu in nus]

    def one(job):
        nu, bc = job
        return sweep_amplitude(nu, bc, t_end, L, points_per_layer, nsteps)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            amps = list(pool.map(one, jobs))
    else:
        amps = [one(j) for j in jobs]
    rows = [(nu, a, bc) for (nu, bc), a in zip(jobs, amps)]
    fits = {}
    for bc in bcs:
        pairs = [(nu, a) for nu, a, b in rows if b is bc]
        if len(pairs) >= 3:
            fits[bc] = scaling_exponent(pairs)
    return rows, fits
