"""Vorticity-streamfunction solver on the periodic channel [0, Lx) x [0, 1].

Fourier in x, second-order finite differences in y on nodes that include both
walls. Per Fourier mode every implicit problem is one tridiagonal system, and
the three wall conditions are edits of its first and last rows:

    diffusion-free   d_y omega = 0       ghost-point (finite-volume) Neumann rows
    stress-free      omega = 0           Dirichlet rows (Lions' condition, flat wall)
    no-slip          u = 0               Dirichlet rows whose values come from
                                         the influence-matrix solve

Time stepping is Crank-Nicolson for diffusion and AB2 for advection (a Heun
step starts the run). Advection is in flux form, ``d_x(u w) + d_y(v w)``, so
the trapezoidal mean of the vorticity is conserved to round-off.

The vorticity fixes the velocity only up to a uniform stream ``(gamma, 0)``.
``gamma`` (the bulk velocity) follows the x-averaged momentum balance
``d gamma/dt = -nu (mean omega(y=1) - mean omega(y=0))``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from difffree.bc import BoundaryCondition
from difffree.errors import CFLViolation, NonFiniteState
from difffree.spectral import Field2D, dealias_mask, full_wavenumbers, to_physical, to_spectral, wavenumbers
from difffree.tridiag import TridiagonalBatch

CFL_LIMIT = 0.5


@dataclass(frozen=True)
class ChannelGrid:
    nx: int
    ny: int
    Lx: float = 1.0

    def __post_init__(self):
        if self.nx < 4 or self.nx % 2:
            raise ValueError(f"nx must be even and >= 4, got {self.nx}")
        if self.ny < 8:
            raise ValueError(f"ny must be >= 8, got {self.ny}")
        if not self.Lx > 0:
            raise ValueError("Lx must be positive")

    @property
    def n_periodic(self) -> int:
        return self.nx

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return self.Lx / self.nx

    @property
    def dy(self) -> float:
        return 1.0 / (self.ny - 1)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def k(self) -> np.ndarray:
        return wavenumbers(self.nx, self.Lx)

    @property
    def k_full(self) -> np.ndarray:
        return full_wavenumbers(self.nx, self.Lx)

    @property
    def area(self) -> float:
        return self.Lx

    def y_weights(self) -> np.ndarray:
        w = np.full(self.ny, self.dy)
        w[0] = w[-1] = 0.5 * self.dy
        return w


@dataclass(frozen=True)
class ChannelState:
    """Spectral vorticity, bulk velocity and clock.

    ``nl_prev`` is the advection term of the previous step (AB2 history);
    None before the first step.
    """

    grid: ChannelGrid
    omega_hat: np.ndarray
    bulk_velocity: float = 0.0
    t: float = 0.0
    step: int = 0
    nl_prev: np.ndarray | None = None

    @property
    def omega(self) -> Field2D:
        return Field2D.from_spectral(self.omega_hat, self.grid)

    @classmethod
    def from_physical(cls, grid: ChannelGrid, omega, bulk_velocity: float = 0.0, t: float = 0.0):
        values = omega.values if isinstance(omega, Field2D) else np.asarray(omega, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"omega shape {values.shape} != grid shape {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("initial vorticity is not finite")
        return cls(grid, to_spectral(values), float(bulk_velocity), float(t))


@dataclass(frozen=True)
class ChannelConfig:
    nu: float
    dt: float
    grid: ChannelGrid
    bc: BoundaryCondition = BoundaryCondition.DIFFUSION_FREE
    t_end: float = 1.0
    dealias: bool = True

    def __post_init__(self):
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))
        if not (self.nu >= 0 and math.isfinite(self.nu)):
            raise ValueError("nu must be finite and >= 0")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")

    @property
    def inviscid(self) -> bool:
        return self.nu == 0


# -- spatial operators -------------------------------------------------------


def ddy(fh: np.ndarray, dy: float) -> np.ndarray:
    """Centred d/dy inside, second-order one-sided at the walls."""
    return np.gradient(fh, dy, axis=-1, edge_order=2)


def wall_flux_ddy(gh: np.ndarray, dy: float) -> np.ndarray:
    """d/dy of a flux that vanishes on both walls, in conservative form.

    Interior rows are centred; a wall row uses its half cell,
    ``(g[1] + g[0]) / dy`` at y = 0 with ``g[0] = 0`` (equivalently an odd
    ghost value). Trapezoidal sums of the result telescope to zero.
    """
    out = np.empty_like(gh)
    out[..., 1:-1] = (gh[..., 2:] - gh[..., :-2]) / (2 * dy)
    out[..., 0] = (gh[..., 1] + gh[..., 0]) / dy
    out[..., -1] = -(gh[..., -2] + gh[..., -1]) / dy
    return out


def neumann_laplacian(fh: np.ndarray, grid: ChannelGrid) -> np.ndarray:
    """``d_yy - k^2`` per mode with ghost-point Neumann rows at both walls."""
    dy2 = grid.dy**2
    out = np.empty_like(fh)
    out[..., 1:-1] = (fh[..., 2:] - 2 * fh[..., 1:-1] + fh[..., :-2]) / dy2
    out[..., 0] = 2 * (fh[..., 1] - fh[..., 0]) / dy2
    out[..., -1] = 2 * (fh[..., -2] - fh[..., -1]) / dy2
    k2 = grid.k**2
    return out - k2[:, None] * fh


@dataclass
class ImplicitSystem:
    """Bands of ``I - coef (d_yy - k^2)`` for every mode plus the right-hand side."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray | None
    coef: float
    k2: np.ndarray
    dy: float


def assemble_implicit(grid: ChannelGrid, coef: float, rhs=None) -> ImplicitSystem:
    nk, ny = grid.nx // 2 + 1, grid.ny
    c = coef / grid.dy**2
    k2 = grid.k**2
    lower = np.full((nk, ny), -c)
    upper = np.full((nk, ny), -c)
    diag = 1.0 + coef * (2.0 / grid.dy**2 + k2[:, None]) * np.ones((nk, ny))
    return ImplicitSystem(lower, diag, upper, rhs, coef, k2, grid.dy)


def apply_vorticity_bc(system: ImplicitSystem, bc: BoundaryCondition, wall_values=None) -> ImplicitSystem:
    """Rewrite the wall rows of an implicit diffusion system in place.

    DIFFUSION_FREE gets the ghost-point Neumann rows; STRESS_FREE gets
    ``omega = 0``; NO_SLIP gets ``omega = wall_values`` (shape ``(nk, 2)``,
    zero if omitted) as chosen by the influence-matrix solve.
    """
    bc = BoundaryCondition.parse(bc)
    s = system
    if bc is BoundaryCondition.DIFFUSION_FREE:
        c2 = 2.0 * s.coef / s.dy**2
        s.diag[:, 0] = 1.0 + c2 + s.coef * s.k2
        s.upper[:, 0] = -c2
        s.diag[:, -1] = 1.0 + c2 + s.coef * s.k2
        s.lower[:, -1] = -c2
        return s
    s.diag[:, 0] = s.diag[:, -1] = 1.0
    s.upper[:, 0] = s.lower[:, -1] = 0.0
    if s.rhs is not None:
        if bc is BoundaryCondition.STRESS_FREE or wall_values is None:
            s.rhs[:, 0] = s.rhs[:, -1] = 0.0
        else:
            wall_values = np.asarray(wall_values)
            s.rhs[:, 0] = wall_values[:, 0]
            s.rhs[:, -1] = wall_values[:, 1]
    return s


@lru_cache(maxsize=32)
def _poisson(grid: ChannelGrid) -> TridiagonalBatch:
    nk, ny = grid.nx // 2 + 1, grid.ny
    inv = 1.0 / grid.dy**2
    lower = np.full((nk, ny), inv)
    upper = np.full((nk, ny), inv)
    diag = -2.0 * inv - (grid.k**2)[:, None] * np.ones((nk, ny))
    diag[:, 0] = diag[:, -1] = 1.0
    upper[:, 0] = lower[:, -1] = 0.0
    return TridiagonalBatch(lower, diag, upper)


def streamfunction_hat(omega_hat: np.ndarray, grid: ChannelGrid) -> np.ndarray:
    """Solve ``psi'' - k^2 psi = omega`` with ``psi = 0`` on both walls, per mode."""
    rhs = omega_hat.astype(complex).copy()
    rhs[:, 0] = rhs[:, -1] = 0.0
    psi = _poisson(grid).solve(rhs)
    # exact zeros on the walls, whatever round-off pivoting left behind
    psi[:, 0] = psi[:, -1] = 0.0
    return psi


def velocity_hat(omega_hat: np.ndarray, bulk_velocity: float, grid: ChannelGrid):
    """Spectral ``(u, v) = (-d_y psi + gamma, d_x psi)``."""
    psi = streamfunction_hat(omega_hat, grid)
    uh = -ddy(psi, grid.dy)
    uh[0] += bulk_velocity * grid.nx
    vh = 1j * grid.k[:, None] * psi
    return uh, vh


def velocity_from_vorticity(state: ChannelState) -> tuple[Field2D, Field2D]:
    uh, vh = velocity_hat(state.omega_hat, state.bulk_velocity, state.grid)
    return Field2D.from_spectral(uh, state.grid), Field2D.from_spectral(vh, state.grid)


def divergence_hat(uh: np.ndarray, vh: np.ndarray, grid: ChannelGrid) -> np.ndarray:
    return 1j * grid.k[:, None] * uh + ddy(vh, grid.dy)


def nonlinear_hat(omega_hat, uh, vh, grid: ChannelGrid, dealias: bool = True) -> np.ndarray:
    """Spectral ``d_x(u w) + d_y(v w)``, with 2/3-rule truncation if requested."""
    n = grid.nx
    if dealias:
        mask = dealias_mask(n)[:, None]
        omega_hat, uh, vh = omega_hat * mask, uh * mask, vh * mask
    w = to_physical(omega_hat, n)
    u = to_physical(uh, n)
    v = to_physical(vh, n)
    flux_x = to_spectral(u * w)
    flux_y = to_spectral(v * w)
    out = 1j * grid.k[:, None] * flux_x + wall_flux_ddy(flux_y, grid.dy)
    if dealias:
        out *= mask
    return out


def wall_velocity_hat(omega_hat, bulk_velocity, grid: ChannelGrid) -> np.ndarray:
    """Spectral tangential velocity on the walls, shape ``(nk, 2)``."""
    uh, _ = velocity_hat(omega_hat, bulk_velocity, grid)
    return uh[:, [0, -1]]


# -- time stepping -----------------------------------------------------------


class _Stepper:
    """Factored per-mode systems for one (grid, nu, dt, bc)."""

    def __init__(self, grid: ChannelGrid, nu: float, dt: float, bc: BoundaryCondition):
        self.grid, self.nu, self.dt, self.bc = grid, nu, dt, bc
        self.coef = 0.5 * nu * dt
        if nu == 0:
            self.system = None
            return
        s = apply_vorticity_bc(assemble_implicit(grid, self.coef), bc)
        self.system = TridiagonalBatch(s.lower, s.diag, s.upper)
        if bc is BoundaryCondition.NO_SLIP:
            self._build_influence()

    def _build_influence(self):
        grid = self.grid
        nk, ny = grid.nx // 2 + 1, grid.ny
        unit = np.zeros((nk, ny))
        unit[:, 0] = 1.0
        phi_a = self.system.solve(unit)
        unit = np.zeros((nk, ny))
        unit[:, -1] = 1.0
        phi_b = self.system.solve(unit)
        self.phi = (phi_a, phi_b)
        # tangential wall velocity produced by each homogeneous solution
        wa = wall_velocity_hat(phi_a.astype(complex), 0.0, grid).real
        wb = wall_velocity_hat(phi_b.astype(complex), 0.0, grid).real
        self.influence = []
        for m in range(nk):
            if m == 0:
                c = self.coef
                A = np.array([
                    [wa[m, 0], wb[m, 0], 1.0],
                    [wa[m, 1], wb[m, 1], 1.0],
                    [-c, c, 1.0],
                ])
            else:
                A = np.array([[wa[m, 0], wb[m, 0]], [wa[m, 1], wb[m, 1]]])
            self.influence.append(np.linalg.inv(A))

    def diffuse(self, omega_hat, gamma, forcing):
        """One CN solve of ``(w_new - w)/dt = nu L (w_new + w)/2 - forcing``."""
        grid = self.grid
        n = grid.nx
        if self.system is None:
            return omega_hat - self.dt * forcing, gamma
        rhs = omega_hat + self.coef * neumann_laplacian(omega_hat, grid) - self.dt * forcing
        if self.bc is BoundaryCondition.DIFFUSION_FREE:
            new = self.system.solve(rhs)
        else:
            rhs[:, 0] = rhs[:, -1] = 0.0
            new = self.system.solve(rhs)
        if self.bc is BoundaryCondition.NO_SLIP:
            return self._pin_wall_velocity(omega_hat, gamma, new)
        old_jump = (omega_hat[0, -1].real - omega_hat[0, 0].real) / n
        new_jump = (new[0, -1].real - new[0, 0].real) / n
        return new, gamma - self.coef * (old_jump + new_jump)

    def _pin_wall_velocity(self, omega_old, gamma, particular):
        grid = self.grid
        n = grid.nx
        wp = wall_velocity_hat(particular, 0.0, grid)
        phi_a, phi_b = self.phi
        new = particular.copy()
        gamma_new = gamma
        for m, inv in enumerate(self.influence):
            if m == 0:
                old = omega_old[0].real / n
                rhs = np.array([
                    -wp[0, 0].real / n,
                    -wp[0, 1].real / n,
                    gamma - self.coef * (old[-1] - old[0]),
                ])
                a, b, gamma_new = inv @ rhs
                new[0] += n * (a * phi_a[0] + b * phi_b[0])
            else:
                a, b = inv @ (-wp[m])
                new[m] += a * phi_a[m] + b * phi_b[m]
        return new, float(gamma_new)


@lru_cache(maxsize=32)
def _stepper(grid, nu, dt, bc) -> _Stepper:
    return _Stepper(grid, nu, dt, bc)


def cfl_number(uh, vh, grid: ChannelGrid, dt: float) -> float:
    u = to_physical(uh, grid.nx)
    v = to_physical(vh, grid.nx)
    speed = float(np.max(np.sqrt(u * u + v * v)))
    return speed * dt / min(grid.dx, grid.dy)


def step_imex(state: ChannelState, cfg: ChannelConfig) -> ChannelState:
    """Advance one time step; returns a new state."""
    grid = cfg.grid
    stepper = _stepper(grid, cfg.nu, cfg.dt, cfg.bc)
    wh, gamma = state.omega_hat, state.bulk_velocity
    uh, vh = velocity_hat(wh, gamma, grid)
    cfl = cfl_number(uh, vh, grid, cfg.dt)
    if cfl >= CFL_LIMIT:
        raise CFLViolation(cfl, CFL_LIMIT, state.step)
    nl = nonlinear_hat(wh, uh, vh, grid, cfg.dealias)
    if state.nl_prev is None:
        w1, g1 = stepper.diffuse(wh, gamma, nl)
        u1, v1 = velocity_hat(w1, g1, grid)
        nl1 = nonlinear_hat(w1, u1, v1, grid, cfg.dealias)
        new, gamma_new = stepper.diffuse(wh, gamma, 0.5 * (nl + nl1))
    else:
        new, gamma_new = stepper.diffuse(wh, gamma, 1.5 * nl - 0.5 * state.nl_prev)
    if not (np.all(np.isfinite(new)) and math.isfinite(gamma_new)):
        raise NonFiniteState(state.step + 1)
    return ChannelState(grid, new, gamma_new, state.t + cfg.dt, state.step + 1, nl)


# -- diagnostics kernels -----------------------------------------------------


def _area_integral(f: np.ndarray, grid: ChannelGrid) -> float:
    return float(grid.dx * np.sum(f * grid.y_weights()[None, :]))


def gradient_norm_sq(omega_hat: np.ndarray, grid: ChannelGrid) -> float:
    """``||grad omega||^2`` matching the Neumann diffusion operator.

    x part spectral with trapezoid weights in y; y part from cell differences,
    so ``<w, L w> = -||grad w||^2`` holds exactly for the Neumann operator.
    """
    wx = to_physical(1j * grid.k[:, None] * omega_hat, grid.nx)
    w = to_physical(omega_hat, grid.nx)
    dwy = np.diff(w, axis=1) / grid.dy
    return _area_integral(wx * wx, grid) + float(grid.dx * grid.dy * np.sum(dwy * dwy))


def integral_quantities(state: ChannelState, nu: float) -> dict:
    grid = state.grid
    n = grid.nx
    w = to_physical(state.omega_hat, n)
    uh, vh = velocity_hat(state.omega_hat, state.bulk_velocity, grid)
    u, v = to_physical(uh, n), to_physical(vh, n)
    ik = 1j * grid.k[:, None]
    ux, vx = to_physical(ik * uh, n), to_physical(ik * vh, n)
    uy, vy = to_physical(ddy(uh, grid.dy), n), to_physical(ddy(vh, grid.dy), n)
    a = abs(w)
    bulk = nu * _area_integral(2 * ux**2 + 2 * vy**2 + (uy + vx) ** 2, grid)
    # D(u) n . u on y=1 (n = +e_y) minus y=0 (n = -e_y). v vanishes along the
    # walls, so D(u)n.u = n_y * (-omega/2) * u there exactly.
    wall_work = -0.5 * w * u
    wall = grid.dx * (np.sum(wall_work[:, -1]) - np.sum(wall_work[:, 0]))
    return dict(
        enstrophy=0.5 * _area_integral(w * w, grid),
        energy=0.5 * _area_integral(u * u + v * v, grid),
        mean_vorticity=_area_integral(w, grid) / grid.area,
        l1=_area_integral(a, grid),
        l2=math.sqrt(_area_integral(a**2, grid)),
        l4=_area_integral(a**4, grid) ** 0.25,
        boundary_stress_work=2.0 * nu * float(wall),
        bulk_dissipation=bulk,
    )


def wall_slip(state: ChannelState) -> float:
    """Largest tangential velocity on either wall (physical space)."""
    uw = to_physical(wall_velocity_hat(state.omega_hat, state.bulk_velocity, state.grid), state.grid.nx)
    return float(np.max(np.abs(uw)))


def max_divergence(state: ChannelState) -> float:
    uh, vh = velocity_hat(state.omega_hat, state.bulk_velocity, state.grid)
    return float(np.max(np.abs(to_physical(divergence_hat(uh, vh, state.grid), state.grid.nx))))


def max_speed(state: ChannelState) -> float:
    u, v = velocity_from_vorticity(state)
    return float(np.max(np.hypot(u.values, v.values)))


# -- driver ------------------------------------------------------------------


def run(cfg: ChannelConfig, omega0, callbacks=(), diag_stride: int = 1, bulk_velocity: float = 0.0):
    """Step ``omega0`` to ``cfg.t_end``; returns ``(final_state, records)``.

    Records are taken at t = 0, every ``diag_stride`` steps and at the end.
    Each callback is called as ``cb(state, record)`` on recorded steps. The
    dissipation integral is accumulated every step from the midpoint vorticity,
    which is what the Crank-Nicolson update dissipates.
    """
    from difffree.diagnostics import record

    if isinstance(omega0, ChannelState):
        state = omega0
    else:
        state = ChannelState.from_physical(cfg.grid, omega0, bulk_velocity)
    if diag_stride < 1:
        raise ValueError("diag_stride must be >= 1")
    records = [record(state, cfg.nu, 0.0)]
    for cb in callbacks:
        cb(state, records[-1])
    if cfg.t_end == 0:
        return state, records
    nsteps = max(1, int(math.ceil(cfg.t_end / cfg.dt - 1e-9)))
    if not math.isclose(nsteps * cfg.dt, cfg.t_end, rel_tol=1e-9):
        cfg = dataclasses.replace(cfg, dt=cfg.t_end / nsteps)
    dissipated = 0.0
    for i in range(nsteps):
        new = step_imex(state, cfg)
        if cfg.nu:
            mid = 0.5 * (state.omega_hat + new.omega_hat)
            dissipated += cfg.nu * cfg.dt * gradient_norm_sq(mid, cfg.grid)
        state = new
        if (i + 1) % diag_stride == 0 or i + 1 == nsteps:
            rec = record(state, cfg.nu, dissipated)
            records.append(rec)
            for cb in callbacks:
                cb(state, rec)
    return state, records


def l2_distance(a: ChannelState, b: ChannelState) -> float:
    if a.grid != b.grid:
        raise ValueError("states live on different grids")
    d = to_physical(a.omega_hat - b.omega_hat, a.grid.nx)
    return math.sqrt(_area_integral(d * d, a.grid))
