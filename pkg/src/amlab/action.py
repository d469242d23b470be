"""Discrete weak-KAM machinery on a torus grid.

A run lives on a lifted edge graph: nodes are grid points, an edge carries
a straight segment of duration tau whose displacement fixes its lift class.
Edge costs stand in for the action potential h_tau; the Lax-Oleinik
operator is the min-plus product with that cost matrix.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from . import minplus
from .lagrangian import LagrangianSpec, OneFormSpec, VelocityCap, default_cap, eval_L, eval_oneform, oneform

TIE_WINDOW = 1e-9


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceGrid:
    d: int
    N: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ConfigurationError(f"grid dimension must be 1 or 2, got {self.d}")
        if self.N < 8:
            raise ConfigurationError(f"need N >= 8 nodes per axis, got {self.N}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.N

    @property
    def n_nodes(self) -> int:
        return self.N**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    def multi_index(self, idx) -> np.ndarray:
        return np.stack(np.unravel_index(np.asarray(idx), self.shape), axis=-1)

    def flat_index(self, multi: np.ndarray) -> np.ndarray:
        multi = np.asarray(multi) % self.N
        return np.ravel_multi_index(tuple(np.moveaxis(multi, -1, 0)), self.shape)

    def coords(self, idx=None) -> np.ndarray:
        if idx is None:
            idx = np.arange(self.n_nodes)
        return self.multi_index(idx) / self.N

    def torus_distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Pairwise torus distances between coordinate arrays (n, d) and (m, d)."""
        diff = np.abs(np.asarray(a)[:, None, :] - np.asarray(b)[None, :, :]) % 1.0
        diff = np.minimum(diff, 1.0 - diff)
        return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True)
class LiftedEdge:
    index: int
    source: int
    target: int
    lift: tuple[int, ...]
    displacement: tuple[float, ...]
    tau: float


@dataclass(eq=False)
class EdgeSet:
    """All lifted edges of a grid, sorted by (source, target, lift)."""

    grid: SpaceGrid
    tau: float
    cap: VelocityCap
    src: np.ndarray
    tgt: np.ndarray
    lift: np.ndarray
    offset: np.ndarray

    def __len__(self) -> int:
        return len(self.src)

    @cached_property
    def disp(self) -> np.ndarray:
        return self.offset * self.grid.spacing

    @cached_property
    def velocity(self) -> np.ndarray:
        return self.disp / self.tau

    @cached_property
    def by_target(self) -> minplus.TargetIndex:
        return minplus.TargetIndex.build(self.tgt, self.grid.n_nodes)

    @cached_property
    def is_loop(self) -> np.ndarray:
        return np.all(self.offset == 0, axis=1)

    def edge(self, i: int) -> LiftedEdge:
        return LiftedEdge(
            int(i),
            int(self.src[i]),
            int(self.tgt[i]),
            tuple(int(k) for k in self.lift[i]),
            tuple(float(a) for a in self.disp[i]),
            self.tau,
        )


def build_edges(grid: SpaceGrid, tau: float, cap: VelocityCap) -> EdgeSet:
    if not tau > 0:
        raise ConfigurationError("time step must be positive")
    reach = cap.R * tau
    if reach < grid.spacing * (1 - 1e-12):
        raise ConfigurationError(
            f"R*tau = {reach:g} is below the grid spacing {grid.spacing:g}; no neighbour is reachable"
        )
    if reach >= 1.0:
        raise ConfigurationError(f"R*tau = {reach:g} must stay below one period so lifts lie in {{-1,0,1}}")
    kmax = int(np.floor(reach / grid.spacing + 1e-9))
    offsets = np.array(list(itertools.product(range(-kmax, kmax + 1), repeat=grid.d)), dtype=np.int64)
    keep = np.linalg.norm(offsets, axis=1) * grid.spacing <= reach * (1 + 1e-12)
    offsets = offsets[keep]

    multi = grid.multi_index(np.arange(grid.n_nodes))
    raw = multi[:, None, :] + offsets[None, :, :]
    lift = np.floor_divide(raw, grid.N)
    tgt = grid.flat_index(raw % grid.N)
    src = np.broadcast_to(np.arange(grid.n_nodes)[:, None], tgt.shape)

    src = src.reshape(-1)
    tgt = tgt.reshape(-1)
    lift = lift.reshape(-1, grid.d)
    off = np.broadcast_to(offsets[None], (grid.n_nodes,) + offsets.shape).reshape(-1, grid.d)
    keys = [lift[:, j] for j in reversed(range(grid.d))] + [tgt, src]
    order = np.lexsort(keys)
    return EdgeSet(
        grid,
        float(tau),
        cap,
        np.ascontiguousarray(src[order]),
        np.ascontiguousarray(tgt[order]),
        np.ascontiguousarray(lift[order].astype(np.int8)),
        np.ascontiguousarray(off[order]),
    )


@dataclass(eq=False)
class EdgeCostMatrix:
    edges: EdgeSet
    cost: np.ndarray
    omega: OneFormSpec
    lagrangian: Optional[LagrangianSpec] = None

    @property
    def tau(self) -> float:
        return self.edges.tau

    @property
    def grid(self) -> SpaceGrid:
        return self.edges.grid

    def with_class(self, c) -> "EdgeCostMatrix":
        """Costs for the constant one-form c.dx added to this matrix's form.

        Exact: the straight-segment integral of c.v over time tau is c.disp.
        """
        c = np.atleast_1d(np.asarray(c, dtype=float))
        new = oneform(np.asarray(self.omega.c) + c, self.omega.exact)
        return EdgeCostMatrix(self.edges, self.cost - self.edges.disp @ c, new, self.lagrangian)

    def dense(self, shift: float = 0.0) -> np.ndarray:
        """Node-to-node matrix of the cheapest lifted edge, plus ``shift``."""
        n = self.grid.n_nodes
        A = np.full((n, n), np.inf)
        np.minimum.at(A, (self.edges.src, self.edges.tgt), self.cost + shift)
        return A


def _simpson_points(edges: EdgeSet):
    x0 = edges.grid.coords(edges.src)
    d = edges.disp
    return (x0, x0 + 0.5 * d, x0 + d), edges.velocity


def edge_costs(L: LagrangianSpec, omega: Optional[OneFormSpec], edges: EdgeSet, chunk: int = 1 << 18) -> EdgeCostMatrix:
    """Simpson three-point action of (L - omega) along every straight edge."""
    if omega is None:
        omega = oneform(np.zeros(edges.grid.d))
    if L.d != edges.grid.d or omega.d != edges.grid.d:
        raise ConfigurationError("dimension mismatch between Lagrangian, one-form and grid")
    tau = edges.tau
    cost = np.empty(len(edges))
    for lo in range(0, len(edges), chunk):
        sl = slice(lo, lo + chunk)
        x0 = edges.grid.coords(edges.src[sl])
        d = edges.disp[sl]
        v = d / tau
        acc = np.zeros(len(x0))
        for wgt, x in ((1.0, x0), (4.0, x0 + 0.5 * d), (1.0, x0 + d)):
            acc += wgt * (eval_L(L, x, v) - eval_oneform(omega, x, v))
        cost[sl] = tau * acc / 6.0
    return EdgeCostMatrix(edges, cost, omega, L)


def edge_cost(L: LagrangianSpec, omega: Optional[OneFormSpec], e: LiftedEdge, grid: SpaceGrid) -> float:
    if omega is None:
        omega = oneform(np.zeros(grid.d))
    x0 = grid.coords(e.source)
    d = np.asarray(e.displacement)
    v = d / e.tau
    acc = 0.0
    for wgt, x in ((1.0, x0), (4.0, x0 + 0.5 * d), (1.0, x0 + d)):
        acc += wgt * float(eval_L(L, x, v) - eval_oneform(omega, x, v))
    return e.tau * acc / 6.0


def lax_oleinik(u: np.ndarray, costs: EdgeCostMatrix) -> np.ndarray:
    """(T u)(y) = min over edges x -> y of u(x) + cost."""
    e = costs.edges
    return e.by_target.segment_min(u[e.src] + costs.cost)


@dataclass
class WeakKamSolution:
    u: np.ndarray
    lam: float
    residual: float
    iterations: int
    converged: bool
    tau: float
    tol: float

    @property
    def alpha(self) -> float:
        return self.lam


def solve_critical(
    costs: EdgeCostMatrix,
    tol: float = 1e-9,
    max_iter: int = 20_000,
    u0: Optional[np.ndarray] = None,
    init: str = "policy",
) -> WeakKamSolution:
    """Min-plus fixed point u with T u + lam*tau = u, lam ~ alpha(c).

    The iteration is u <- T u - min T u with lam read off as minus the
    midpoint of the largest and smallest per-node decrement. It stops once
    the oscillation of the decrement is below tol*tau. ``init="policy"``
    seeds u with the bias of Howard policy iteration, which removes the
    periodic regime that plain iteration exhibits when critical cycles have
    a common length divisor; ``init="zero"`` starts from u = 0.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    tau = costs.tau
    n = costs.grid.n_nodes
    if u0 is not None:
        u = np.asarray(u0, dtype=float).copy()
    elif init == "policy":
        e = costs.edges
        u = minplus.howard(e.src, e.tgt, costs.cost, n, e.by_target).bias
    elif init == "zero":
        u = np.zeros(n)
    else:
        raise ValueError(f"unknown init {init!r}")
    u = u - u.min()

    best = None
    for it in range(1, max_iter + 1):
        Tu = lax_oleinik(u, costs)
        dec = Tu - u
        hi, lo = float(dec.max()), float(dec.min())
        osc = hi - lo
        lam = -0.5 * (hi + lo) / tau
        if best is None or osc < best[2]:
            best = (u, lam, osc, it)
        if osc <= tol * tau:
            return WeakKamSolution(u - u.min(), lam, osc / tau, it, True, tau, tol)
        u = Tu - Tu.min()
    u, lam, osc, it = best
    return WeakKamSolution(u - u.min(), lam, osc / tau, max_iter, False, tau, tol)


def alpha(costs: EdgeCostMatrix, **kw) -> float:
    return solve_critical(costs, **kw).lam


@dataclass
class PeierlsDiagonal:
    values: np.ndarray
    n_min: int
    n_max: int
    lam: float
    short_window: bool


def hop_diameter(edges: EdgeSet) -> int:
    """Largest BFS hop distance from node 0 (the edge graph is translation invariant)."""
    n = edges.grid.n_nodes
    dist = np.full(n, -1)
    dist[0] = 0
    frontier = np.array([0])
    order = np.argsort(edges.src, kind="stable")
    starts = np.searchsorted(edges.src[order], np.arange(n + 1))
    level = 0
    while len(frontier):
        level += 1
        nxt = np.concatenate([edges.tgt[order[starts[x]:starts[x + 1]]] for x in frontier])
        nxt = np.unique(nxt[dist[nxt] < 0])
        dist[nxt] = level
        frontier = nxt
    return int(dist.max())


def peierls_diag(
    costs: EdgeCostMatrix,
    lam: float,
    n_min: Optional[int] = None,
    n_max: Optional[int] = None,
) -> PeierlsDiagonal:
    """Windowed liminf of the n-step diagonal at the critical level.

    Entry x is min over n in [n_min, n_max] of the cheapest closed n-step walk
    through x with edge costs c + lam*tau. Defaults: n_min = 4N, n_max = 16N.
    """
    N = costs.grid.N
    n_min = 4 * N if n_min is None else int(n_min)
    n_max = 16 * N if n_max is None else int(n_max)
    short = n_min < hop_diameter(costs.edges)
    if short:
        warnings.warn(f"n_min={n_min} is below the hop diameter of the edge graph", RuntimeWarning)
    A = costs.dense(shift=lam * costs.tau)
    return PeierlsDiagonal(minplus.window_diagonal(A, n_min, n_max), n_min, n_max, lam, short)


@dataclass
class AubrySetEstimate:
    nodes: np.ndarray
    h_diag: np.ndarray
    tol: float
    window: tuple[int, int]

    def __contains__(self, node) -> bool:
        return int(node) in set(self.nodes.tolist())

    def __len__(self) -> int:
        return len(self.nodes)


def aubry_set(h: PeierlsDiagonal, tol_A: float) -> AubrySetEstimate:
    nodes = np.flatnonzero(h.values <= tol_A)
    return AubrySetEstimate(nodes, h.values, float(tol_A), (h.n_min, h.n_max))


def default_tol_A(grid: SpaceGrid, tau: float) -> float:
    return 5.0 * (grid.spacing + tau)


def minimizer_velocity(sol: WeakKamSolution, costs: EdgeCostMatrix, x: int, tie: float = TIE_WINDOW) -> np.ndarray:
    """Distinct velocities of the edges into x that attain (T u)(x) within ``tie``."""
    e = costs.edges
    idx = np.flatnonzero(e.tgt == x)
    vals = sol.u[e.src[idx]] + costs.cost[idx]
    win = idx[vals <= vals.min() + tie]
    return np.unique(np.round(e.velocity[win], 12), axis=0)


def velocity_multiplicity(sol: WeakKamSolution, costs: EdgeCostMatrix, tie: float = TIE_WINDOW) -> np.ndarray:
    """Number of distinct minimizing velocities at every node."""
    e = costs.edges
    vals = sol.u[e.src] + costs.cost
    mins = e.by_target.segment_min(vals)
    win = np.flatnonzero(vals <= mins[e.tgt] + tie)
    pairs = np.unique(np.column_stack([e.tgt[win], e.offset[win]]), axis=0)
    return np.bincount(pairs[:, 0], minlength=costs.grid.n_nodes)


@dataclass(eq=False)
class Discretization:
    """A Lagrangian on a grid with its edge graph and one-form free costs."""

    lagrangian: LagrangianSpec
    grid: SpaceGrid
    tau: float
    cap: VelocityCap
    edges: EdgeSet
    costs: EdgeCostMatrix

    @property
    def spacing(self) -> float:
        return self.grid.spacing

    def costs_for(self, c) -> EdgeCostMatrix:
        return self.costs.with_class(c)

    def critical(self, c, **kw) -> WeakKamSolution:
        return solve_critical(self.costs_for(c), **kw)

    def alpha(self, c, **kw) -> float:
        return self.critical(c, **kw).lam


def discretize(L: LagrangianSpec, N: int, tau: float, cap: Optional[VelocityCap] = None) -> Discretization:
    grid = SpaceGrid(L.d, N)
    cap = cap or default_cap(L)
    edges = build_edges(grid, tau, cap)
    return Discretization(L, grid, tau, cap, edges, edge_costs(L, None, edges))


def node_hausdorff(grid: SpaceGrid, a, b) -> float:
    """Hausdorff distance on the torus between two node sets."""
    a, b = np.asarray(a), np.asarray(b)
    if len(a) == 0 or len(b) == 0:
        return float("inf") if len(a) or len(b) else 0.0
    D = grid.torus_distance(grid.coords(a), grid.coords(b))
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


# ------------------------------------------------------------ alpha side


@dataclass(eq=False)
class AlphaScan:
    cs: np.ndarray
    alphas: np.ndarray
    solutions: list

    def function(self):
        from .convex_core import convexify

        return convexify(self.cs, self.alphas, self.cs.shape[1])


def alpha_scan(D: Discretization, cs) -> AlphaScan:
    cs = np.asarray(cs, dtype=float)
    cs = cs[:, None] if cs.ndim == 1 else cs
    sols = [D.critical(c) for c in cs]
    return AlphaScan(cs, np.array([s.lam for s in sols]), sols)


def _critical_cycle_line(D: Discretization, c: np.ndarray, u: np.ndarray):
    """alpha along c + s u near s = 0 as the affine map of one critical cycle.

    alpha(c) = max over cycles C of (c.D_C - cost_C) / (n_C tau); returns
    the slope and value at s = 0 of the term of a critical cycle.
    """
    e = D.edges
    costs = D.costs_for(c)
    res = minplus.howard(e.src, e.tgt, costs.cost, D.grid.n_nodes, e.by_target)
    best = None
    for cyc in res.critical_cycles(1e-12 * (1 + abs(res.eta))):
        n = len(cyc)
        slope = float(e.disp[cyc].sum(axis=0) @ u) / (n * D.tau)
        if best is None or slope > best[0]:
            best = (slope, -res.eta / D.tau)
    return best


def alpha_flat_endpoint(D: Discretization, c0, u, s_out: float, tol: float = 1e-12, max_iter: int = 100) -> float:
    """End of the flat of alpha through c0 in direction u.

    alpha is constant near c0 along u and has grown by s = s_out. Newton
    steps on the max-of-affine structure (each iterate is the crossing of the
    flat level with the line of the cycle critical at the previous iterate)
    land exactly on the endpoint after finitely many steps.
    """
    c0 = np.atleast_1d(np.asarray(c0, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    level = D.alpha(c0)
    s = float(s_out)
    for _ in range(max_iter):
        slope, val = _critical_cycle_line(D, c0 + s * u, u)
        if val <= level + tol or slope <= 0:
            return s
        s_new = s - (val - level) / slope
        if abs(s_new - s) <= tol * max(1.0, abs(s)):
            return s_new
        s = s_new
    raise RuntimeError("flat endpoint refinement did not converge")
