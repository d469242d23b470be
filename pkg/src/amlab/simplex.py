"""Dense two-phase tableau simplex with Bland's rule.

Solves  min c.x  s.t.  A x = b, x >= 0.  Pivoting is fully deterministic:
the entering column is the lowest-index column with negative reduced cost and
ratio-test ties leave by the lowest basic variable index, so the method
cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class LPInfeasible(RuntimeError):
    def __init__(self, rows: Sequence[int], message: str = ""):
        self.rows = list(rows)
        super().__init__(message or f"infeasible; violated rows {self.rows}")


class LPUnbounded(RuntimeError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    duals: np.ndarray
    basis: np.ndarray
    pivots: int


def _pivot(T: np.ndarray, r: int, j: int) -> None:
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _bland_loop(T, basis, n_allowed, eps, max_pivots):
    """Minimise the objective held in the last tableau row; columns >= n_allowed never enter."""
    m = T.shape[0] - 1
    pivots = 0
    while True:
        red = T[-1, :n_allowed]
        entering = np.flatnonzero(red < -eps)
        if len(entering) == 0:
            return pivots
        j = int(entering[0])
        col = T[:m, j]
        pos = np.flatnonzero(col > eps)
        if len(pos) == 0:
            raise LPUnbounded(f"column {j} is an unbounded direction")
        ratios = T[pos, -1] / col[pos]
        best = ratios.min()
        tied = pos[ratios <= best + eps * max(1.0, abs(best))]
        r = int(tied[np.argmin(basis[tied])])
        _pivot(T, r, j)
        basis[r] = j
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("simplex pivot limit reached")


def simplex(
    c: np.ndarray,
    A: np.ndarray,
    b: np.ndarray,
    eps: float = 1e-11,
    max_pivots: int = 100_000,
    row_names: Optional[Sequence[str]] = None,
) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    # tableau: [A | I | b] with the phase-1 objective in the last row
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    pivots = _bland_loop(T, basis, n, eps, max_pivots)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if -T[-1, -1] > 1e3 * eps * scale:
        bad = [int(basis[i] - n) for i in range(m) if basis[i] >= n and T[i, -1] > 1e3 * eps * scale]
        names = [row_names[i] for i in bad] if row_names else bad
        raise LPInfeasible(bad, f"phase 1 ended with residual {-T[-1, -1]:.3e}; violated: {names}")

    # drive remaining artificials out of the basis; rows that cannot pivot are redundant
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] >= n:
            cand = np.flatnonzero(np.abs(T[i, :n]) > 1e-9)
            if len(cand):
                _pivot(T, i, int(cand[0]))
                basis[i] = int(cand[0])
            else:
                keep[i] = False

    T[-1] = 0.0
    T[-1, :n] = c
    for i in range(m):
        if keep[i]:
            T[-1] -= c[basis[i]] * T[i]
    T_act = np.vstack([T[:m][keep], T[-1:]])
    basis_act = basis[keep]
    pivots += _bland_loop(T_act, basis_act, n, eps, max_pivots)

    x = np.zeros(n)
    x[basis_act] = T_act[:-1, -1]
    B = A[np.flatnonzero(keep)][:, basis_act]
    y_act = np.linalg.solve(B.T, c[basis_act])
    duals = np.zeros(m)
    duals[keep] = y_act
    duals[flip] *= -1
    return LPResult(x, float(c @ x), duals, basis_act, pivots)
