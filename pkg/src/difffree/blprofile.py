"""Boundary-layer vorticity profile on the half-line.

Solves

    Omega_t + U0(t, x) Omega_x + z dVdy(t, x) Omega_z - Omega_zz = G(t, x, z)
    Omega_z(t, x, 0) = H(t, x),   Omega(t, x, z_max) = 0,   Omega(0) = 0

with z the stretched wall-normal coordinate, increasing away from the wall.
Fourier in x, compact fourth-order differences in z with a ghost-point
Neumann row, Crank-Nicolson diffusion, AB2 for the transport terms.

Sign convention: with a constant positive flux ``H = h`` the solution is
negative, ``Omega = -2 h sqrt(t) ierfc(z / (2 sqrt(t)))``, and the velocity
profile ``U(z) = -int_z^inf Omega`` is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erfc

from difffree.errors import DecayViolation, NonFiniteState
from difffree.tridiag import Tridiagonal

DECAY_FACTOR = 1e3


def _zero(*args):
    return 0.0


@dataclass(frozen=True)
class BLProfileProblem:
    """Data of one profile equation.

    ``U0_wall`` and ``dVdy_wall`` take ``(t, x)``; ``H`` takes ``(t, x)``;
    ``G`` takes ``(t, x, z)`` with ``x`` shaped ``(nx, 1)`` and ``z`` shaped
    ``(1, nz)``. All must broadcast. The default is the zero-data problem.
    """

    U0_wall: Callable = _zero
    dVdy_wall: Callable = _zero
    G: Callable = _zero
    H: Callable = _zero
    z_max: float = 30.0
    nz: int = 1024
    nx: int = 1
    Lx: float = 2.0 * np.pi
    weight_exponent: int = 2
    dt: float = 1e-3

    def __post_init__(self):
        if self.nz < 8:
            raise ValueError("nz must be >= 8")
        if self.nx < 1 or (self.nx > 1 and self.nx % 2):
            raise ValueError("nx must be 1 or even")
        if not (self.dt > 0 and self.z_max > 0 and self.Lx > 0):
            raise ValueError("dt, z_max and Lx must be positive")
        if math.exp(-self.z_max**2 / 4) >= 1e-14:
            raise ValueError(f"z_max = {self.z_max} too small: need exp(-z_max^2/4) < 1e-14")

    @property
    def dz(self) -> float:
        return self.z_max / (self.nz - 1)

    @property
    def z(self) -> np.ndarray:
        return np.linspace(0.0, self.z_max, self.nz)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.Lx / self.nx

    @property
    def weight(self) -> np.ndarray:
        return (1.0 + self.z) ** self.weight_exponent


@dataclass
class BLProfileResult:
    t: float
    x: np.ndarray
    z: np.ndarray
    omega: np.ndarray  # (nx, nz)
    times: np.ndarray
    weighted_norms: np.ndarray
    max_abs: np.ndarray
    mass: np.ndarray = field(default=None)  # trapezoid int Omega dz per x, per sample


def ierfc(x):
    """First repeated integral of erfc."""
    x = np.asarray(x, dtype=float)
    return np.exp(-x * x) / np.sqrt(np.pi) - x * erfc(x)


def neumann_flux_similarity(z, t: float, h: float):
    """Half-line heat solution with zero data and wall flux ``Omega_z(0) = h``."""
    if t == 0:
        return np.zeros_like(np.asarray(z, dtype=float))
    s = math.sqrt(t)
    return -2.0 * h * s * ierfc(np.asarray(z) / (2.0 * s))


def _operators(nz: int, dz: float):
    """Compact fourth-order pair ``(M, A)`` with ``M u_zz = A u``.

    Interior rows are the Numerov stencil. Row 0 uses the even extension of
    ``u`` about the wall corrected by the flux ``H`` and ``D = u_zzz(0)``
    (those terms are added by the caller). The far row is left for a
    Dirichlet condition.
    """
    ml = np.full(nz - 1, 1.0 / 12)
    mu = np.full(nz - 1, 1.0 / 12)
    md = np.full(nz, 10.0 / 12)
    al = np.full(nz - 1, 1.0 / dz**2)
    au = np.full(nz - 1, 1.0 / dz**2)
    ad = np.full(nz, -2.0 / dz**2)
    mu[0] = 2.0 / 12
    au[0] = 2.0 / dz**2
    ml[-1] = md[-1] = al[-1] = ad[-1] = 0.0
    return (ml, md, mu), (al, ad, au)


def _apply(bands, w):
    lower, diag, upper = bands
    out = diag * w
    out[:, 1:] += lower * w[:, :-1]
    out[:, :-1] += upper * w[:, 1:]
    return out


def _eval(fn, *args, shape):
    return np.broadcast_to(np.asarray(fn(*args), dtype=float), shape).copy()


def _ddz(w, dz):
    """Fourth-order centred z-derivative, second order next to the ends."""
    out = np.zeros_like(w)
    out[:, 1:-1] = (w[:, 2:] - w[:, :-2]) / (2 * dz)
    out[:, 2:-2] = (8 * (w[:, 3:-1] - w[:, 1:-3]) - (w[:, 4:] - w[:, :-4])) / (12 * dz)
    return out


def _ddx(f, p: "BLProfileProblem"):
    if p.nx == 1:
        return np.zeros_like(f)
    k = 2 * np.pi * np.fft.rfftfreq(p.nx, d=p.Lx / p.nx)
    return np.fft.irfft(1j * k[:, None] * np.fft.rfft(f, axis=0), n=p.nx, axis=0)


def _transport(w, t, p: BLProfileProblem, xs, zs):
    """``U0 Omega_x + z dVdy Omega_z`` (zero on the far Dirichlet node)."""
    out = np.zeros_like(w)
    if p.nx > 1:
        out += _eval(p.U0_wall, t, xs, shape=(p.nx, 1)) * _ddx(w, p)
    dv = _eval(p.dVdy_wall, t, xs, shape=(p.nx, 1))
    if np.any(dv):
        out += zs * dv * _ddz(w, p.dz)
    out[:, -1] = 0.0
    return out


def solve_bl_profile(problem: BLProfileProblem, t_end: float, samples: int = 50,
                     startup_substeps: int = 4, startup_correction: bool = True) -> BLProfileResult:
    """March the profile from zero data to ``t_end``.

    In z the scheme is the compact fourth-order (Numerov) one, ``M u_t = A u +
    M (G - transport)``, so the whole step stays tridiagonal. At the wall the
    ghost value comes from the Taylor expansion with ``u_z(0) = H`` and
    ``u_zzz(0) = H_t + U0 H_x + dVdy H - G_z(0)`` (differentiate the equation
    once in z at the wall), which keeps the closure consistent with the
    interior order.

    The first step is split into ``startup_substeps`` backward-Euler steps so
    that the jump between zero data and nonzero wall flux does not excite the
    undamped Crank-Nicolson mode. Raises DecayViolation when the weighted norm
    ``max (1+z)^n |Omega|`` exceeds ``1e3`` times the data bound.
    """
    p = problem
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    nsteps = max(1, int(math.ceil(t_end / p.dt - 1e-9))) if t_end > 0 else 0
    dt = t_end / nsteps if nsteps else p.dt
    dz = p.dz
    xs = p.x[:, None]
    zs = p.z[None, :]
    shape = (p.nx, p.nz)
    M, A = _operators(p.nz, dz)

    def source(t):
        g = _eval(p.G, t, xs, zs, shape=shape)
        g[:, -1] = 0.0
        return g

    def wall_terms(t):
        """Boundary contribution to row 0 of ``A u + b`` (H and D terms)."""
        h = _eval(p.H, t, xs, shape=(p.nx, 1))[:, 0]
        eps = 1e-5 * max(1.0, t)
        h_t = (_eval(p.H, t + eps, xs, shape=(p.nx, 1)) - _eval(p.H, max(t - eps, 0.0), xs, shape=(p.nx, 1)))[:, 0]
        h_t /= t + eps - max(t - eps, 0.0)
        u0 = _eval(p.U0_wall, t, xs, shape=(p.nx, 1))[:, 0]
        dv = _eval(p.dVdy_wall, t, xs, shape=(p.nx, 1))[:, 0]
        g = _eval(p.G, t, xs, zs[:, :5], shape=(p.nx, 5))
        g_z = (-25 * g[:, 0] + 48 * g[:, 1] - 36 * g[:, 2] + 16 * g[:, 3] - 3 * g[:, 4]) / (12 * dz)
        d = h_t + u0 * _ddx(h[:, None], p)[:, 0] + dv * h - g_z
        b = np.zeros(shape)
        # -2H/dz - (dz/3) D from the ghost value, + (dz/6) D from the M row
        b[:, 0] = -2.0 * h / dz - dz / 6.0 * d
        return b

    def system(c):
        lower = M[0] - c * A[0]
        diag = M[1] - c * A[1]
        upper = M[2] - c * A[2]
        diag[-1] = 1.0
        return Tridiagonal(lower, diag, upper)

    wts = p.weight
    bound = 1.0
    for tt in np.linspace(0.0, t_end, 5):
        data = np.max(np.abs(source(tt)) * wts) + np.max(np.abs(wall_terms(tt)[:, 0])) * dz
        bound = max(bound, float(data) * max(t_end, 1.0))

    w = np.zeros(shape)
    if startup_correction and nsteps:
        # Zero data with H(0) != 0 is incompatible. The scheme conserves the
        # trapezoid mass exactly (w^T M = w^T on these rows), but the trapezoid
        # mass of the true solution is int Omega - H dz^2 / 12 for t > 0, so
        # seed that offset at the wall node.
        w[:, 0] = -_eval(p.H, 0.0, xs, shape=(p.nx, 1))[:, 0] * dz / 6.0
    t = 0.0
    stride = max(1, nsteps // max(samples, 1))
    trap = np.full(p.nz, dz)
    trap[0] = trap[-1] = 0.5 * dz
    times, wnorm, mx, mass = [0.0], [0.0], [0.0], [np.zeros(p.nx)]

    sub = max(1, startup_substeps)
    be = system(dt / sub)
    cn = system(0.5 * dt)
    prev = None
    for n in range(nsteps):
        tr = _transport(w, t, p, xs, zs)
        if n == 0:
            ws = w
            tau = dt / sub
            for s in range(sub):
                ts = t + (s + 1) * tau
                rhs = _apply(M, ws) + tau * (wall_terms(ts) + _apply(M, source(ts) - tr))
                rhs[:, -1] = 0.0
                ws = be.solve(rhs.T).T
            new = ws
        else:
            adv = 1.5 * tr - 0.5 * prev
            rhs = (_apply(M, w) + 0.5 * dt * _apply(A, w)
                   + 0.5 * dt * (wall_terms(t) + wall_terms(t + dt))
                   + dt * _apply(M, 0.5 * (source(t) + source(t + dt)) - adv))
            rhs[:, -1] = 0.0
            new = cn.solve(rhs.T).T
        prev = tr
        w = new
        t = (n + 1) * dt
        if not np.all(np.isfinite(w)):
            raise NonFiniteState(n + 1, "boundary-layer profile")
        wn = float(np.max(np.abs(w) * wts))
        if wn > DECAY_FACTOR * bound:
            raise DecayViolation(f"weighted norm {wn:.3e} exceeds {DECAY_FACTOR:g} x data bound {bound:.3e} at t={t:.4g}")
        if (n + 1) % stride == 0 or n + 1 == nsteps:
            times.append(t)
            wnorm.append(wn)
            mx.append(float(np.max(np.abs(w))))
            mass.append(w @ trap)
    return BLProfileResult(t, p.x, p.z, w, np.array(times), np.array(wnorm), np.array(mx), np.array(mass))


def reconstruct_ubl(omega, z) -> np.ndarray:
    """``U(z) = -int_z^{z_max} Omega`` via a quintic interpolating spline.

    ``omega`` may be 1D or ``(nx, nz)``; integration runs along the last axis.
    """
    from scipy.interpolate import make_interp_spline

    omega = np.asarray(omega, dtype=float)
    z = np.asarray(z, dtype=float)
    if omega.shape[-1] != z.size:
        raise ValueError("omega and z lengths differ")
    anti = make_interp_spline(z, omega, k=5, axis=-1).antiderivative()
    vals = anti(z)
    return vals - vals[..., -1:]


PRESETS = ("zero", "neumann-flux")


def preset_problem(name: str, nz: int = 1024, z_max: float = 30.0, h: float = 1.0,
                   dt: float = 1e-3) -> BLProfileProblem:
    if name == "zero":
        return BLProfileProblem(z_max=z_max, nz=nz, dt=dt)
    if name == "neumann-flux":
        return BLProfileProblem(U0_wall=lambda t, x: 1.0, H=lambda t, x: h, z_max=z_max, nz=nz, dt=dt)
    raise ValueError(f"unknown blprofile preset {name!r}; choose from {PRESETS}")
