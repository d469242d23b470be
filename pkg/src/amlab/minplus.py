"""Min-plus algebra on dense matrices and on edge lists.

Dense products are the workhorse of the Peierls barrier; the edge-list
routines (segmented argmin, Howard policy iteration) back the Lax-Oleinik
operator and the cycle-mean pricing of the occupation-measure LP.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

INF = np.inf


@numba.njit(cache=True)
def _matmul(A, B):
    n, m = A.shape
    p = B.shape[1]
    out = np.full((n, p), np.inf)
    for i in range(n):
        row = out[i]
        for k in range(m):
            a = A[i, k]
            if a == np.inf:
                continue
            Bk = B[k]
            for j in range(p):
                v = a + Bk[j]
                if v < row[j]:
                    row[j] = v
    return out


def matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """(A (x) B)[i, j] = min_k A[i, k] + B[k, j]."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[0]:
        raise ValueError(f"shape mismatch {A.shape} x {B.shape}")
    return _matmul(A, B)


def identity(n: int) -> np.ndarray:
    out = np.full((n, n), INF)
    np.fill_diagonal(out, 0.0)
    return out


def power(A: np.ndarray, n: int) -> np.ndarray:
    """A^(x)n by repeated squaring; A^0 is the min-plus identity."""
    if n < 0:
        raise ValueError("negative power")
    result = None
    base = np.array(A, dtype=np.float64)
    while n:
        if n & 1:
            result = base if result is None else matmul(result, base)
        n >>= 1
        if n:
            base = matmul(base, base)
    return identity(A.shape[0]) if result is None else result


def window_diagonal(A: np.ndarray, n_min: int, n_max: int) -> np.ndarray:
    """min over n in [n_min, n_max] of diag(A^n).

    Uses A^n_min (x) (I + A)^(n_max - n_min), where I + A keeps a zero-cost
    "stop" on the diagonal so the second factor covers all shorter lengths.
    """
    if not 0 <= n_min <= n_max:
        raise ValueError("need 0 <= n_min <= n_max")
    head = power(A, n_min)
    stay = np.array(A, dtype=np.float64)
    np.fill_diagonal(stay, np.minimum(np.diag(stay), 0.0))
    tail = power(stay, n_max - n_min)
    return np.min(head + tail.T, axis=1)


# ------------------------------------------------------------ edge lists


@dataclass(frozen=True)
class TargetIndex:
    """Edges grouped by target node, each group in increasing edge index."""

    order: np.ndarray
    starts: np.ndarray
    seg: np.ndarray  # target of order[i], i.e. segment id in sorted position

    @classmethod
    def build(cls, tgt: np.ndarray, n_nodes: int) -> "TargetIndex":
        order = np.argsort(tgt, kind="stable")
        counts = np.bincount(tgt, minlength=n_nodes)
        if np.any(counts == 0):
            raise ValueError("every node needs at least one incoming edge")
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        return cls(order, starts, tgt[order])

    def segment_min(self, values: np.ndarray) -> np.ndarray:
        return np.minimum.reduceat(values[self.order], self.starts)

    def segment_argmin(self, values: np.ndarray, tol: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Per target: min value and the smallest edge index within ``tol`` of it."""
        sv = values[self.order]
        mins = np.minimum.reduceat(sv, self.starts)
        cand = sv <= mins[self.seg] + tol
        pos = np.where(cand, np.arange(len(sv)), len(sv))
        first = np.minimum.reduceat(pos, self.starts)
        return mins, self.order[first]


@dataclass
class CycleMeanResult:
    """Min mean cycle of an edge-weighted digraph.

    ``eta`` is the minimal mean weight per edge, ``bias`` solves
    bias[y] = min_{e: x->y} bias[x] + w_e - eta, ``policy`` is the argmin edge
    per node and ``cycles`` lists the edge-index cycles of the final policy
    graph together with their means.
    """

    eta: float
    bias: np.ndarray
    policy: np.ndarray
    cycles: list[tuple[float, np.ndarray]]
    iterations: int

    def critical_cycles(self, tol: float = 1e-12) -> list[np.ndarray]:
        return [c for m, c in self.cycles if m <= self.eta + tol]


def _policy_cycles(pred: np.ndarray) -> list[np.ndarray]:
    """Cycles of the functional graph y -> pred[y], each as a node array."""
    n = len(pred)
    state = np.zeros(n, dtype=np.int8)  # 0 new, 1 on current path, 2 done
    cycles = []
    for start in range(n):
        if state[start]:
            continue
        path = []
        y = start
        while state[y] == 0:
            state[y] = 1
            path.append(y)
            y = pred[y]
        if state[y] == 1:
            k = path.index(y)
            cycles.append(np.array(path[k:]))
        for p in path:
            state[p] = 2
    return cycles


def _evaluate(pred: np.ndarray, wy: np.ndarray):
    n = len(pred)
    eta = np.full(n, np.nan)
    bias = np.full(n, np.nan)
    cycles = _policy_cycles(pred)
    frontier = []
    means = []
    for cyc in cycles:
        m = float(wy[cyc].mean())
        means.append(m)
        # cyc lists nodes in predecessor order: cyc[i+1] = pred[cyc[i]]
        root = int(cyc.min())
        k = int(np.flatnonzero(cyc == root)[0])
        ring = np.roll(cyc, -k)
        eta[ring] = m
        bias[root] = 0.0
        for y in ring[:0:-1]:
            bias[y] = bias[pred[y]] + wy[y] - m
        frontier.extend(ring.tolist())
    children_order = np.argsort(pred, kind="stable")
    child_counts = np.bincount(pred, minlength=n)
    child_starts = np.concatenate(([0], np.cumsum(child_counts)))
    stack = frontier
    while stack:
        x = stack.pop()
        for y in children_order[child_starts[x]:child_starts[x + 1]]:
            if np.isnan(bias[y]):
                eta[y] = eta[x]
                bias[y] = bias[x] + wy[y] - eta[x]
                stack.append(int(y))
    return eta, bias, cycles, means


def howard(
    src: np.ndarray,
    tgt: np.ndarray,
    w: np.ndarray,
    n_nodes: int,
    index: TargetIndex | None = None,
    max_iter: int = 10_000,
) -> CycleMeanResult:
    """Howard policy iteration for the min-plus spectral problem.

    Policies pick one incoming edge per node. The graph must give every node
    an incoming edge; on a strongly connected graph ``eta`` is constant.
    """
    src = np.asarray(src)
    w = np.asarray(w, dtype=np.float64)
    index = index or TargetIndex.build(np.asarray(tgt), n_nodes)
    eps = 1e-12 * (1.0 + float(np.abs(w).max()))
    _, policy = index.segment_argmin(w)
    order = index.order
    seg = index.seg
    for it in range(1, max_iter + 1):
        pred = src[policy]
        eta, bias, cycles, means = _evaluate(pred, w[policy])

        # first improve the cycle mean reached
        eta_src = eta[src]
        m_eta, arg_eta = index.segment_argmin(eta_src, eps)
        better = m_eta < eta - eps
        if np.any(better):
            # among edges attaining the best mean, take the best bias value
            val = bias[src] + w - eta_src
            sv = np.where(eta_src[order] <= m_eta[seg] + eps, val[order], np.inf)
            mins = np.minimum.reduceat(sv, index.starts)
            pos = np.where(sv <= mins[seg] + eps, np.arange(len(sv)), len(sv))
            arg = order[np.minimum.reduceat(pos, index.starts)]
            policy = np.where(better, arg, policy)
            continue

        # then the bias, among edges whose source reaches an equally good cycle
        val = np.where(eta_src <= eta[tgt] + eps, bias[src] + w - eta[tgt], np.inf)
        m_val, arg_val = index.segment_argmin(val, eps)
        better = m_val < bias - eps
        if not np.any(better):
            edge_cycles = []
            for cyc, m in zip(cycles, means):
                # node order along the cycle in the direction of the edges
                edge_cycles.append((m, policy[cyc[::-1]]))
            return CycleMeanResult(float(eta.min()), bias, policy, edge_cycles, it)
        policy = np.where(better, arg_val, policy)
    raise RuntimeError("Howard policy iteration did not terminate")
