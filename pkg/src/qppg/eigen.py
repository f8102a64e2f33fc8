"""Symmetric tridiagonal eigensolver (implicit-shift QL).

The Schrodinger operator assembled in :mod:`qppg.scsa` is symmetric
tridiagonal, so no Householder reduction is needed; eigenpairs come straight
from QL sweeps with implicit Wilkinson shifts. Two jitted kernels are
provided: an eigenvalue-only variant for cheap bound-state counting and a
full variant that accumulates eigenvectors. Both apply the exact same
rotation sequence, so their eigenvalues agree bit-for-bit.

Eigenvectors are accumulated as *rows* of the work matrix (contiguous
updates; the rotation at step i touches rows i and i+1 only).
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Iteration budget per eigenvalue before the solve is declared failed.
SWEEP_BUDGET = 64

_EPS = float(np.finfo(np.float64).eps)
_TINY = 1e-300


class EigenSolverNoConvergence(RuntimeError):
    """QL sweeps exceeded the per-eigenvalue budget.

    ``index`` is the (0-based) eigenvalue position that failed to deflate.
    """

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"eigenvalue {index} did not converge within {SWEEP_BUDGET} QL sweeps")


@njit(cache=True)
def _ql_values(d, e, budget):
    """In-place implicit-shift QL on (d, e); d receives eigenvalues.

    e[0] is unused padding; e[1:] holds the subdiagonal on entry. Returns 0
    on success or l+1 where eigenvalue l exceeded the sweep budget.
    """
    n = d.shape[0]
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd or abs(e[m]) < _TINY:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > budget:
                return l + 1
            # Wilkinson-style shift from the leading 2x2.
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            sgn = r if g >= 0.0 else -r
            g = d[m] - d[l] + e[l] / (g + sgn)
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


@njit(cache=True)
def _ql_vectors(d, e, z, budget):
    """Same sweep as _ql_values but accumulates rotations into z rows."""
    n = d.shape[0]
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd or abs(e[m]) < _TINY:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > budget:
                return l + 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            sgn = r if g >= 0.0 else -r
            g = d[m] - d[l] + e[l] / (g + sgn)
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                for k in range(n):
                    f2 = z[i + 1, k]
                    z[i + 1, k] = s * z[i, k] + c * f2
                    z[i, k] = c * z[i, k] - s * f2
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return 0


def tridiag_eigh(diag, offdiag, vectors: bool = True):
    """Full eigendecomposition of a symmetric tridiagonal matrix.

    Parameters
    ----------
    diag : (n,) main diagonal.
    offdiag : (n-1,) sub/superdiagonal.
    vectors : also compute eigenvectors (default) or eigenvalues only.

    Returns
    -------
    (w, z) with eigenvalues ``w`` sorted ascending and ``z[k]`` the
    (unit-norm) eigenvector row belonging to ``w[k]``; ``z`` is None when
    ``vectors=False``. Ties keep the kernel's deflation order (stable sort).

    Raises
    ------
    EigenSolverNoConvergence
        if any eigenvalue fails to deflate within SWEEP_BUDGET sweeps.
    """
    d = np.ascontiguousarray(diag, dtype=np.float64).copy()
    n = d.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    e = np.zeros(n, dtype=np.float64)
    if n > 1:
        e[1:] = offdiag
    if not vectors:
        info = _ql_values(d, e, SWEEP_BUDGET)
        if info != 0:
            raise EigenSolverNoConvergence(info - 1)
        order = np.argsort(d, kind="stable")
        return d[order], None
    z = np.eye(n, dtype=np.float64)
    info = _ql_vectors(d, e, z, SWEEP_BUDGET)
    if info != 0:
        raise EigenSolverNoConvergence(info - 1)
    order = np.argsort(d, kind="stable")
    return d[order], z[order]
