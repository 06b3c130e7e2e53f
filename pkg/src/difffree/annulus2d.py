"""Vorticity-streamfunction solver on the annulus a < r < b.

Fourier in theta, finite volumes in r on nodes that include both circles.
The radial operators are written in flux form,

    (1/r) d_r (r d_r f)  ->  [r_{j+1/2}(f_{j+1} - f_j) - r_{j-1/2}(f_j - f_{j-1})] / (r_j dr^2)

with half cells at the walls, so trapezoidal integrals against ``r dr dtheta``
telescope: the total vorticity is conserved under the Neumann condition and
the discrete Stokes identity ``Gamma(b) - Gamma(a) = int omega`` is exact.

The annulus is not simply connected, so the velocity is fixed by the
vorticity *and* the circulation around the inner circle,

    u = grad_perp psi0 + c grad_perp Psi1,     Psi1 = log(r / b) / (2 pi),

with ``psi0 = 0`` on both circles. ``grad_perp Psi1 = e_theta / (2 pi r)`` has
unit counter-clockwise circulation; ``c`` tops up the circulation of
``grad_perp psi0`` to the prescribed ``gamma``. ``gamma`` is a constant of
motion for the diffusion-free and Lions conditions and is never evolved.

Circulations are counter-clockwise: ``Gamma(r) = int_0^2pi u_theta(r) r dtheta``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from difffree.bc import BoundaryCondition
from difffree.errors import CFLViolation, NonFiniteState
from difffree.spectral import Field2D, dealias_mask, to_physical, to_spectral
from difffree.tridiag import TridiagonalBatch

CFL_LIMIT = 0.5


@dataclass(frozen=True)
class AnnulusGrid:
    ntheta: int
    nr: int
    a: float = 1.0
    b: float = 2.0

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise ValueError(f"need 0 < a < b, got a={self.a}, b={self.b}")
        if self.ntheta < 4 or self.ntheta % 2:
            raise ValueError("ntheta must be even and >= 4")
        if self.nr < 4:
            raise ValueError("nr must be >= 4")

    @property
    def n_periodic(self) -> int:
        return self.ntheta

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ntheta, self.nr)

    @property
    def dr(self) -> float:
        return (self.b - self.a) / (self.nr - 1)

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.ntheta

    @property
    def r(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.nr)

    @property
    def r_half(self) -> np.ndarray:
        """Cell faces ``r_{j+1/2}``, length nr - 1."""
        r = self.r
        return 0.5 * (r[1:] + r[:-1])

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.ntheta) * self.dtheta

    @property
    def m(self) -> np.ndarray:
        return np.arange(self.ntheta // 2 + 1, dtype=float)

    def mesh(self):
        return np.meshgrid(self.theta, self.r, indexing="ij")

    def cartesian(self):
        th, r = self.mesh()
        return r * np.cos(th), r * np.sin(th)

    def area_weights(self) -> np.ndarray:
        """Radial trapezoid weights times r (multiply by dtheta and sum over theta)."""
        w = np.full(self.nr, self.dr)
        w[0] = w[-1] = 0.5 * self.dr
        return w * self.r

    @property
    def area(self) -> float:
        return np.pi * (self.b**2 - self.a**2)


@dataclass(frozen=True)
class AnnulusState:
    grid: AnnulusGrid
    omega_hat: np.ndarray
    gamma: float = 0.0
    t: float = 0.0
    step: int = 0
    nl_prev: np.ndarray | None = None

    @property
    def omega(self) -> Field2D:
        return Field2D.from_spectral(self.omega_hat, self.grid)

    @classmethod
    def from_physical(cls, grid: AnnulusGrid, omega, gamma: float = 0.0, t: float = 0.0):
        values = omega.values if isinstance(omega, Field2D) else np.asarray(omega, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"omega shape {values.shape} != grid shape {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("initial vorticity is not finite")
        return cls(grid, to_spectral(values), float(gamma), float(t))


@dataclass(frozen=True)
class AnnulusConfig:
    nu: float
    dt: float
    grid: AnnulusGrid
    bc: BoundaryCondition = BoundaryCondition.DIFFUSION_FREE
    t_end: float = 1.0
    dealias: bool = True

    def __post_init__(self):
        bc = BoundaryCondition.parse(self.bc)
        if bc is BoundaryCondition.NO_SLIP:
            raise ValueError("the annulus offers only the diffusion-free and Lions conditions")
        object.__setattr__(self, "bc", bc)
        if not (self.nu >= 0 and math.isfinite(self.nu)):
            raise ValueError("nu must be finite and >= 0")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")


# -- spatial operators -------------------------------------------------------


def _laplacian_bands(grid: AnnulusGrid, neumann_walls: bool):
    """Bands of the polar Laplacian per mode, shape ``(nm, nr)``.

    With ``neumann_walls`` the wall rows are half-cell balances with zero
    wall flux; otherwise they are left as zero rows for the caller.
    """
    r, rh, dr = grid.r, grid.r_half, grid.dr
    nm, nr = grid.ntheta // 2 + 1, grid.nr
    m2 = (grid.m**2)[:, None]
    lower = np.zeros(nr)
    upper = np.zeros(nr)
    diag = np.zeros(nr)
    lower[1:-1] = rh[:-1] / (r[1:-1] * dr**2)
    upper[1:-1] = rh[1:] / (r[1:-1] * dr**2)
    diag[1:-1] = -(lower[1:-1] + upper[1:-1])
    if neumann_walls:
        upper[0] = 2.0 * rh[0] / (r[0] * dr**2)
        diag[0] = -upper[0]
        lower[-1] = 2.0 * rh[-1] / (r[-1] * dr**2)
        diag[-1] = -lower[-1]
    lower = np.broadcast_to(lower, (nm, nr)).copy()
    upper = np.broadcast_to(upper, (nm, nr)).copy()
    diag = diag[None, :] - m2 / r[None, :] ** 2
    if not neumann_walls:
        diag[:, 0] = diag[:, -1] = 0.0
    return lower, diag, upper


def neumann_laplacian(fh: np.ndarray, grid: AnnulusGrid) -> np.ndarray:
    lower, diag, upper = _laplacian_bands(grid, True)
    out = diag * fh
    out[:, 1:] += lower[:, 1:] * fh[:, :-1]
    out[:, :-1] += upper[:, :-1] * fh[:, 1:]
    return out


@lru_cache(maxsize=32)
def _poisson(grid: AnnulusGrid) -> TridiagonalBatch:
    lower, diag, upper = _laplacian_bands(grid, False)
    diag[:, 0] = diag[:, -1] = 1.0
    upper[:, 0] = lower[:, -1] = 0.0
    return TridiagonalBatch(lower, diag, upper)


def streamfunction_hat(omega_hat: np.ndarray, grid: AnnulusGrid) -> np.ndarray:
    """``psi0`` with ``Lap psi0 = omega`` and ``psi0 = 0`` on both circles."""
    rhs = omega_hat.astype(complex).copy()
    rhs[:, 0] = rhs[:, -1] = 0.0
    psi = _poisson(grid).solve(rhs)
    # exact zeros on the walls, whatever round-off pivoting left behind
    psi[:, 0] = psi[:, -1] = 0.0
    return psi


def radial_derivative(psi_hat, omega_hat, grid: AnnulusGrid) -> np.ndarray:
    """``d_r psi`` for a Dirichlet streamfunction.

    Centred inside. On a circle the half-cell balance of
    ``d_r(r d_r psi) = r (omega + m^2 psi / r^2)`` gives the wall value, which
    is what makes the discrete Stokes identity exact.
    """
    r, rh, dr = grid.r, grid.r_half, grid.dr
    m2 = (grid.m**2)[:, None]
    src = omega_hat + m2 * psi_hat / r**2
    out = np.empty_like(psi_hat)
    out[:, 1:-1] = (psi_hat[:, 2:] - psi_hat[:, :-2]) / (2 * dr)
    out[:, 0] = (rh[0] * (psi_hat[:, 1] - psi_hat[:, 0]) / dr - 0.5 * dr * r[0] * src[:, 0]) / r[0]
    out[:, -1] = (rh[-1] * (psi_hat[:, -1] - psi_hat[:, -2]) / dr + 0.5 * dr * r[-1] * src[:, -1]) / r[-1]
    return out


def harmonic_streamfunction(grid: AnnulusGrid) -> np.ndarray:
    """``Psi1(r) = log(r/b) / (2 pi)``: harmonic, zero on r = b, unit circulation."""
    return np.log(grid.r / grid.b) / (2.0 * np.pi)


def velocity_hat(omega_hat, gamma, grid: AnnulusGrid):
    """Spectral ``(u_r, u_theta)`` with inner circulation ``gamma``."""
    n = grid.ntheta
    psi = streamfunction_hat(omega_hat, grid)
    dpsi = radial_derivative(psi, omega_hat, grid)
    ur = -1j * grid.m[:, None] * psi / grid.r
    ut = dpsi
    circ_psi0 = 2.0 * np.pi * grid.a * dpsi[0, 0].real / n
    c = gamma - circ_psi0
    ut[0] += n * c / (2.0 * np.pi * grid.r)
    return ur, ut


def annulus_velocity(state: AnnulusState) -> tuple[Field2D, Field2D]:
    ur, ut = velocity_hat(state.omega_hat, state.gamma, state.grid)
    return Field2D.from_spectral(ur, state.grid), Field2D.from_spectral(ut, state.grid)


def circulation(u_theta: np.ndarray, grid: AnnulusGrid, which: str = "inner") -> float:
    """Counter-clockwise line integral of ``u_theta`` on r = a or r = b."""
    j, r = (0, grid.a) if which == "inner" else (-1, grid.b)
    return float(r * grid.dtheta * np.sum(u_theta[:, j]))


def total_vorticity(omega: np.ndarray, grid: AnnulusGrid) -> float:
    return float(grid.dtheta * np.sum(omega * grid.area_weights()[None, :]))


def _wall_flux_ddr(fh: np.ndarray, dr: float) -> np.ndarray:
    out = np.empty_like(fh)
    out[:, 1:-1] = (fh[:, 2:] - fh[:, :-2]) / (2 * dr)
    out[:, 0] = (fh[:, 1] + fh[:, 0]) / dr
    out[:, -1] = -(fh[:, -2] + fh[:, -1]) / dr
    return out


def nonlinear_hat(omega_hat, ur_hat, ut_hat, grid: AnnulusGrid, dealias: bool = True) -> np.ndarray:
    """Spectral ``(1/r) d_r(r u_r w) + (1/r) d_theta(u_theta w)``."""
    n = grid.ntheta
    if dealias:
        mask = dealias_mask(n)[:, None]
        omega_hat, ur_hat, ut_hat = omega_hat * mask, ur_hat * mask, ut_hat * mask
    w = to_physical(omega_hat, n)
    ur = to_physical(ur_hat, n)
    ut = to_physical(ut_hat, n)
    r = grid.r
    radial = _wall_flux_ddr(to_spectral(r * ur * w), grid.dr) / r
    angular = 1j * grid.m[:, None] * to_spectral(ut * w) / r
    out = radial + angular
    if dealias:
        out *= mask
    return out


def potential_flow(U: float, a: float, r, theta):
    """Irrotational flow past a disc of radius a with speed U at infinity."""
    ur = U * (1.0 - a**2 / r**2) * np.cos(theta)
    ut = -U * (1.0 + a**2 / r**2) * np.sin(theta)
    return ur, ut


def potential_flow_bc_residual(U: float, a: float, grid: AnnulusGrid) -> float:
    """``max |(Lap u) . tau|`` on r = a for the potential flow past the disc.

    The vector Laplacian is discretised with centred second differences in r
    (the analytic field is sampled one node inside r = a) and exact Fourier
    derivatives in theta. The field is harmonic, so the result is pure
    truncation error, second order in dr.
    """
    if grid.a > a + 1e-12 * a:
        raise ValueError("grid must cover r >= a")
    dr = grid.dr
    theta = grid.theta
    rs = np.array([a - dr, a, a + dr])
    ur, ut = potential_flow(U, a, rs[None, :], theta[:, None])
    d2 = (ut[:, 2] - 2 * ut[:, 1] + ut[:, 0]) / dr**2
    d1 = (ut[:, 2] - ut[:, 0]) / (2 * dr)
    m = grid.m[:, None]
    n = grid.ntheta
    ut_tt = to_physical(-(m**2) * to_spectral(ut[:, [1]]), n)[:, 0]
    ur_t = to_physical(1j * m * to_spectral(ur[:, [1]]), n)[:, 0]
    lap_t = d2 + d1 / a - ut[:, 1] / a**2 + ut_tt / a**2 + 2.0 * ur_t / a**2
    return float(np.max(np.abs(lap_t)))


# -- time stepping -----------------------------------------------------------


class _Stepper:
    def __init__(self, grid: AnnulusGrid, nu: float, dt: float, bc: BoundaryCondition):
        self.grid, self.nu, self.dt, self.bc = grid, nu, dt, bc
        self.coef = 0.5 * nu * dt
        if nu == 0:
            self.system = None
            return
        lower, diag, upper = _laplacian_bands(grid, bc is BoundaryCondition.DIFFUSION_FREE)
        lower, diag, upper = -self.coef * lower, 1.0 - self.coef * diag, -self.coef * upper
        if bc is BoundaryCondition.STRESS_FREE:
            diag[:, 0] = diag[:, -1] = 1.0
            upper[:, 0] = lower[:, -1] = 0.0
        self.system = TridiagonalBatch(lower, diag, upper)

    def diffuse(self, omega_hat, forcing):
        if self.system is None:
            return omega_hat - self.dt * forcing
        rhs = omega_hat + self.coef * neumann_laplacian(omega_hat, self.grid) - self.dt * forcing
        if self.bc is BoundaryCondition.STRESS_FREE:
            rhs[:, 0] = rhs[:, -1] = 0.0
        return self.system.solve(rhs)


@lru_cache(maxsize=32)
def _stepper(grid, nu, dt, bc) -> _Stepper:
    return _Stepper(grid, nu, dt, bc)


def cfl_number(ur_hat, ut_hat, grid: AnnulusGrid, dt: float) -> float:
    ur = to_physical(ur_hat, grid.ntheta)
    ut = to_physical(ut_hat, grid.ntheta)
    speed = float(np.max(np.sqrt(ur * ur + ut * ut)))
    return speed * dt / min(grid.dr, grid.a * grid.dtheta)


def annulus_step(state: AnnulusState, cfg: AnnulusConfig) -> AnnulusState:
    """IMEX step (CN diffusion, AB2 advection with a Heun start)."""
    grid = cfg.grid
    stepper = _stepper(grid, cfg.nu, cfg.dt, cfg.bc)
    wh = state.omega_hat
    ur, ut = velocity_hat(wh, state.gamma, grid)
    cfl = cfl_number(ur, ut, grid, cfg.dt)
    if cfl >= CFL_LIMIT:
        raise CFLViolation(cfl, CFL_LIMIT, state.step)
    nl = nonlinear_hat(wh, ur, ut, grid, cfg.dealias)
    if state.nl_prev is None:
        w1 = stepper.diffuse(wh, nl)
        ur1, ut1 = velocity_hat(w1, state.gamma, grid)
        new = stepper.diffuse(wh, 0.5 * (nl + nonlinear_hat(w1, ur1, ut1, grid, cfg.dealias)))
    else:
        new = stepper.diffuse(wh, 1.5 * nl - 0.5 * state.nl_prev)
    if not np.all(np.isfinite(new)):
        raise NonFiniteState(state.step + 1)
    return AnnulusState(grid, new, state.gamma, state.t + cfg.dt, state.step + 1, nl)


# -- diagnostics kernels -----------------------------------------------------


def _area_integral(f: np.ndarray, grid: AnnulusGrid) -> float:
    return float(grid.dtheta * np.sum(f * grid.area_weights()[None, :]))


def gradient_norm_sq(omega_hat: np.ndarray, grid: AnnulusGrid) -> float:
    """``||grad omega||^2`` in the form the finite-volume operator dissipates."""
    n = grid.ntheta
    w = to_physical(omega_hat, n)
    wt = to_physical(1j * grid.m[:, None] * omega_hat, n) / grid.r
    dwr = np.diff(w, axis=1) / grid.dr
    radial = grid.dtheta * grid.dr * float(np.sum(grid.r_half[None, :] * dwr * dwr))
    return _area_integral(wt * wt, grid) + radial


def integral_quantities(state: AnnulusState, nu: float) -> dict:
    grid = state.grid
    n = grid.ntheta
    w = to_physical(state.omega_hat, n)
    urh, uth = velocity_hat(state.omega_hat, state.gamma, grid)
    ur, ut = to_physical(urh, n), to_physical(uth, n)
    r = grid.r
    im = 1j * grid.m[:, None]
    ur_r = to_physical(np.gradient(urh, grid.dr, axis=1, edge_order=2), n)
    ut_r = to_physical(np.gradient(uth, grid.dr, axis=1, edge_order=2), n)
    ur_t = to_physical(im * urh, n)
    ut_t = to_physical(im * uth, n)
    # strain components in the polar frame
    d_rr = ur_r
    d_tt = (ut_t + ur) / r
    d_rt = 0.5 * (ut_r - ut / r + ur_t / r)
    bulk = 2.0 * nu * _area_integral(d_rr**2 + d_tt**2 + 2 * d_rt**2, grid)
    # D(u)n.u with n = +e_r on r=b and -e_r on r=a; u_r = 0 there, and
    # d_r u_theta - u_theta/r = omega - 2 u_theta/r on the circles
    rt_b = 0.5 * (w[:, -1] - 2 * ut[:, -1] / grid.b) * ut[:, -1]
    rt_a = 0.5 * (w[:, 0] - 2 * ut[:, 0] / grid.a) * ut[:, 0]
    wall = grid.dtheta * (grid.b * np.sum(rt_b) - grid.a * np.sum(rt_a))
    a = abs(w)
    return dict(
        enstrophy=0.5 * _area_integral(w * w, grid),
        energy=0.5 * _area_integral(ur * ur + ut * ut, grid),
        mean_vorticity=_area_integral(w, grid) / grid.area,
        l1=_area_integral(a, grid),
        l2=math.sqrt(_area_integral(a**2, grid)),
        l4=_area_integral(a**4, grid) ** 0.25,
        circ_inner=circulation(ut, grid, "inner"),
        circ_outer=circulation(ut, grid, "outer"),
        boundary_stress_work=2.0 * nu * float(wall),
        bulk_dissipation=bulk,
    )


def run(cfg: AnnulusConfig, omega0, gamma: float = 0.0, callbacks=(), diag_stride: int = 1):
    """Step to ``cfg.t_end``; returns ``(final_state, records)`` (see channel2d.run)."""
    from difffree.diagnostics import record

    if isinstance(omega0, AnnulusState):
        state = omega0
    else:
        state = AnnulusState.from_physical(cfg.grid, omega0, gamma)
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
        new = annulus_step(state, cfg)
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
