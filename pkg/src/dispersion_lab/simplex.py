"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Meant for the tiny equality-form programs that show up when optimizing a
linear functional over a capacity-achieving polytope (a handful of rows and
columns), where determinism matters more than speed.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DispersionLabError


class Infeasible(DispersionLabError, RuntimeError):
    pass


class Unbounded(DispersionLabError, RuntimeError):
    pass


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    fun: float
    basis: tuple
    iterations: int


def _pivot(T, row, col):
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]


def _run(T, basis, ncols, tol, max_iter):
    """Iterate on tableau ``T`` (last row = reduced costs, last column = rhs).

    Only the first ``ncols`` columns may enter.  Returns iteration count.
    """
    m = T.shape[0] - 1
    for it in range(max_iter):
        reduced = T[m, :ncols]
        candidates = np.flatnonzero(reduced < -tol)
        if candidates.size == 0:
            return it
        col = int(candidates[0])  # Bland: lowest index enters
        column = T[:m, col]
        positive = np.flatnonzero(column > tol)
        if positive.size == 0:
            raise Unbounded(f"column {col} unbounded")
        ratios = T[positive, -1] / column[positive]
        best = ratios.min()
        ties = positive[ratios <= best + tol * max(1.0, abs(best))]
        # Bland: among tied rows, the one whose basic variable has lowest index
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
    raise RuntimeError("simplex iteration limit reached")


def linprog_eq(c, A_eq, b_eq, tol=1e-10, max_iter=10_000):
    """Minimize ``c @ x`` subject to ``A_eq @ x == b_eq`` and ``x >= 0``.

    Redundant equality rows are detected in phase I and dropped.

    Raises
    ------
    Infeasible
        If phase I cannot drive the artificial variables to zero.
    Unbounded
        If the objective is unbounded below on the feasible set.
    """
    c = np.asarray(c, dtype=float)
    A = np.array(A_eq, dtype=float, ndmin=2)
    b = np.array(b_eq, dtype=float).ravel()
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("shape mismatch between c, A_eq and b_eq")
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    # phase I: artificial columns n..n+m-1
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(n, n + m))
    iters = _run(T, basis, n + m, tol, max_iter)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if -T[m, -1] > tol * scale * 10:
        raise Infeasible(f"phase I residual {-T[m, -1]:.3e}")

    keep = []
    for r in range(m):
        if basis[r] < n:
            keep.append(r)
            continue
        nonzero = np.flatnonzero(np.abs(T[r, :n]) > tol)
        if nonzero.size:
            _pivot(T, r, int(nonzero[0]))
            basis[r] = int(nonzero[0])
            keep.append(r)
        # otherwise the row is a linear combination of the others
    T2 = np.zeros((len(keep) + 1, n + 1))
    T2[:-1, :n] = T[keep, :n]
    T2[:-1, -1] = T[keep, -1]
    basis = [basis[r] for r in keep]
    cb = c[basis]
    T2[-1, :n] = c - cb @ T2[:-1, :n]
    T2[-1, -1] = -cb @ T2[:-1, -1]
    iters += _run(T2, basis, n, tol, max_iter)

    x = np.zeros(n)
    x[basis] = T2[:-1, -1]
    x[np.abs(x) < tol] = 0.0
    return LPResult(x=x, fun=float(c @ x), basis=tuple(basis), iterations=iters)
