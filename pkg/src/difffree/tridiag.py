"""Pre-factored tridiagonal solves, batched over independent systems.

The solvers reuse one matrix for many right-hand sides (fixed time step), so
the LU factors from LAPACK ``?gttrf`` are kept and ``?gttrs`` is called per
solve. Complex right-hand sides are split into real and imaginary columns.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve


class Tridiagonal:
    """Factored real tridiagonal matrix of size n.

    Parameters
    ----------
    lower, diag, upper : array_like
        Sub-diagonal (n-1), diagonal (n) and super-diagonal (n-1).
    """

    def __init__(self, lower, diag, upper):
        dl = np.array(lower, dtype=float)
        d = np.array(diag, dtype=float)
        du = np.array(upper, dtype=float)
        if d.ndim != 1 or dl.shape != (d.size - 1,) or du.shape != (d.size - 1,):
            raise ValueError("inconsistent tridiagonal band shapes")
        self.n = d.size
        self._bands = (dl.copy(), d.copy(), du.copy())
        self._dense = None
        if self.n < 3:
            # the LAPACK wrapper rejects these sizes; a dense LU does the job
            self._dense = lu_factor(self.dense(), check_finite=False)
            if np.any(np.diag(self._dense[0]) == 0):
                raise np.linalg.LinAlgError("singular tridiagonal system")
            return
        dl, d, du, du2, ipiv, info = lapack.dgttrf(dl, d, du)
        if info != 0:
            raise np.linalg.LinAlgError(f"singular tridiagonal system (info={info})")
        self._lu = (dl, d, du, du2, ipiv)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs)
        if np.iscomplexobj(rhs):
            b = np.stack([rhs.real, rhs.imag], axis=-1)
            x = self._solve_real(b)
            return x[:, 0] + 1j * x[:, 1]
        return self._solve_real(rhs)

    def _solve_real(self, b: np.ndarray) -> np.ndarray:
        b = np.asfortranarray(b, dtype=float)
        if self._dense is not None:
            return lu_solve(self._dense, b)
        x, info = lapack.dgttrs(*self._lu, b)
        if info != 0:
            raise np.linalg.LinAlgError(f"dgttrs failed (info={info})")
        return x

    def matvec(self, x: np.ndarray) -> np.ndarray:
        dl, d, du = self._bands
        y = d * x
        y[1:] += dl * x[:-1]
        y[:-1] += du * x[1:]
        return y

    def dense(self) -> np.ndarray:
        dl, d, du = self._bands
        return np.diag(d) + np.diag(dl, -1) + np.diag(du, 1)


class TridiagonalBatch:
    """One factored tridiagonal system per row of the band arrays.

    Band arrays have shape ``(nb, n)``; ``lower[:, 0]`` and ``upper[:, -1]``
    are ignored. Used for the per-Fourier-mode solves in the 2D solvers.
    """

    def __init__(self, lower, diag, upper):
        lower = np.atleast_2d(lower)
        diag = np.atleast_2d(diag)
        upper = np.atleast_2d(upper)
        self.systems = [
            Tridiagonal(lo[1:], d, up[:-1]) for lo, d, up in zip(lower, diag, upper)
        ]

    def __len__(self) -> int:
        return len(self.systems)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        out = np.empty_like(rhs)
        for i, system in enumerate(self.systems):
            out[i] = system.solve(rhs[i])
        return out
