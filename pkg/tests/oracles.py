"""Independent reference solutions used by the tests.

Nothing here imports the solvers: the half-line heat oracles are image-method
closed forms (or a Duhamel quadrature), the discrete ones go through a dense
matrix exponential.
"""

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.sparse import diags
from scipy.sparse.linalg import expm_multiply
from scipy.special import erfc, erfcx


def _image_terms(y, tau):
    y = np.asarray(y, dtype=float)
    s = 2.0 * np.sqrt(tau)
    direct = 0.5 * np.exp(tau - y) * erfc((2.0 * tau - y) / s)
    # erfcx keeps the reflected term finite for large (y + 2 tau) / s
    mirror = 0.5 * erfcx((y + 2.0 * tau) / s) * np.exp(-(y**2) / (4.0 * tau))
    return direct, mirror


def heat_dirichlet_exp(y, nu, t):
    """u_t = nu u_yy on y > 0, u(0) = 0, u0 = exp(-y)."""
    d, m = _image_terms(y, nu * t)
    return d - m


def heat_neumann_exp(y, nu, t):
    """As above with u_y(0) = 0."""
    d, m = _image_terms(y, nu * t)
    return d + m


def heat_frozen_wall_exp(y, nu, t):
    """u_yy(0) = 0 for the heat equation means u(0, t) = u0(0) = 1.

    Outer solution exp(nu t - y) plus the Dirichlet corrector with wall data
    1 - exp(nu s), by Duhamel's formula (scalar quadrature per point).
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.exp(nu * t - y)
    for i, yi in enumerate(y):
        if yi == 0:
            out[i] = 1.0
            continue
        f = lambda s: -nu * np.exp(nu * s) * erfc(yi / (2.0 * np.sqrt(nu * (t - s))))
        out[i] += quad(f, 0.0, t, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
    return out


def dense_from_bands(lower, diag, upper):
    return np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)


def expm_evolve(A, u0, t):
    """u(t) = exp(t A) u0 for the semi-discrete system u' = A u."""
    return expm(t * A) @ u0


def expm_evolve_banded(lower, diag, upper, u0, t):
    """Same as expm_evolve for a tridiagonal A, without forming it densely."""
    A = diags([lower, diag, upper], [-1, 0, 1], format="csr")
    return expm_multiply(t * A, u0)
