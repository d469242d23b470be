"""Minimizing measures as optimal discrete occupation measures.

The LP lives on the lifted edge graph: nonnegative edge masses with total
mass one, zero divergence at every node, and average velocity equal to the
target rotation vector h. Its value is beta_disc(h).

Every closed probability measure on the graph is a convex combination of
uniform measures on simple cycles, so the LP is solved by column generation
over cycles: a small master LP (mass and rotation rows only) is solved by
the Bland simplex, and new columns come from the minimal mean cycle for the
master's dual prices. That pricing problem is exactly the discrete alpha at
the dual cohomology class, which is why the final rotation duals lie in the
subdifferential of beta_disc at h.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import minplus
from .action import (
    AlphaScan,
    AubrySetEstimate,
    Discretization,
    EdgeCostMatrix,
    EdgeSet,
    WeakKamSolution,
    aubry_set,
    default_tol_A,
    node_hausdorff,
    peierls_diag,
    solve_critical,
)
from .convex_core import (
    DegenerateSamples,
    PLConvexFunction,
    RadialFlatInterval,
    SamplePoint,
    convexify,
    radial_flat,
    subdifferential,
)
from .polytope import Polytope
from .simplex import simplex

ROW_CLASSES = ("mass", "divergence", "rotation")
RESIDUE_WARN = 1e-6
LP_FLAT_TOL = 1e-7


class InfeasibleRotation(ValueError):
    """The requested rotation vector cannot be realised by the edge set."""


@dataclass(eq=False)
class HolonomicLP:
    costs: EdgeCostMatrix
    h: np.ndarray

    @property
    def edges(self) -> EdgeSet:
        return self.costs.edges

    @property
    def objective(self) -> np.ndarray:
        """Action per unit time of each edge when it carries unit mass."""
        return self.costs.cost / self.costs.tau

    def constraint_matrix(self) -> tuple[sp.csr_matrix, np.ndarray, list[str]]:
        """Full edge formulation: mass row, one divergence row per node, d rotation rows."""
        e = self.edges
        n = e.grid.n_nodes
        E = len(e)
        d = e.grid.d
        cols = np.arange(E)
        rows = [np.zeros(E, dtype=int), 1 + e.src, 1 + e.tgt]
        vals = [np.ones(E), np.ones(E), -np.ones(E)]
        vel = e.velocity
        for k in range(d):
            rows.append(np.full(E, 1 + n + k))
            vals.append(vel[:, k])
        A = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.tile(cols, 3 + d))), shape=(1 + n + d, E)
        )
        b = np.concatenate(([1.0], np.zeros(n), self.h))
        names = ["mass"] + [f"divergence[{i}]" for i in range(n)] + [f"rotation[{k}]" for k in range(d)]
        return A, b, names


def build_lp(costs: EdgeCostMatrix, h) -> HolonomicLP:
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if h.shape != (costs.grid.d,):
        raise ValueError(f"rotation target must have dimension {costs.grid.d}")
    R = costs.edges.cap.R
    if np.linalg.norm(h) > R * (1 + 1e-12):
        raise InfeasibleRotation(f"|h| = {np.linalg.norm(h):g} exceeds the velocity cap R = {R:g}")
    if np.any(costs.omega.c) or costs.omega.exact is not None:
        raise ValueError("the rotation LP expects one-form free edge costs")
    return HolonomicLP(costs, h)


@dataclass(eq=False)
class MinimizingMeasure:
    edges: EdgeSet
    mass: np.ndarray
    action: float
    rotation: np.ndarray
    target: np.ndarray
    duals: np.ndarray  # (mass dual, rotation duals)
    cycles: list = field(default_factory=list)
    cycle_weights: Optional[np.ndarray] = None
    iterations: int = 0

    @property
    def beta(self) -> float:
        return self.action

    @property
    def cohomology(self) -> np.ndarray:
        """Rotation duals: a class c with alpha(c) + beta(h) = <c, h>."""
        return self.duals[1:]

    def support(self, mass_tol: Optional[float] = None) -> np.ndarray:
        if mass_tol is None:
            mass_tol = default_mass_tol(self.edges)
        return np.flatnonzero(self.mass > mass_tol)


def default_mass_tol(edges: EdgeSet) -> float:
    return 1e-6 / len(edges)


def rotation_vector(mu: MinimizingMeasure) -> np.ndarray:
    return mu.mass @ mu.edges.velocity


def _cycle_column(cyc: np.ndarray, obj: np.ndarray, vel: np.ndarray):
    return float(obj[cyc].mean()), vel[cyc].mean(axis=0)


def _seed_cycles(edges: EdgeSet, obj: np.ndarray) -> list[np.ndarray]:
    """Cheapest self-loop: a feasible column for h = 0 and a warm start otherwise."""
    loops = np.flatnonzero(edges.is_loop)
    return [loops[[int(np.argmin(obj[loops]))]]]


def solve_lp(lp: HolonomicLP, tol: float = 1e-10, max_rounds: int = 500, max_new: int = 16) -> MinimizingMeasure:
    """Optimal occupation measure by cycle column generation.

    Phase one minimises the artificial residual of the mass and rotation
    rows; phase two minimises the action. Each round prices all edges with
    the master duals and adds the most negative policy cycles.
    """
    e = lp.edges
    d = e.grid.d
    n_nodes = e.grid.n_nodes
    obj = lp.objective
    vel = e.velocity
    h = lp.h
    b = np.concatenate(([1.0], h))
    scale = 1.0 + float(np.abs(obj).max())

    cycles: list[np.ndarray] = []
    seen: set[bytes] = set()
    cols_a: list[float] = []
    cols_r: list[np.ndarray] = []

    def add(cyc):
        key = np.sort(cyc).tobytes()
        if key in seen:
            return False
        seen.add(key)
        a, r = _cycle_column(cyc, obj, vel)
        cycles.append(cyc)
        cols_a.append(a)
        cols_r.append(r)
        return True

    for cyc in _seed_cycles(e, obj):
        add(cyc)

    def price(y0, y, phase_one):
        w = (-(e.disp @ y) if phase_one else lp.costs.cost - e.disp @ y) / e.tau
        res = minplus.howard(e.src, e.tgt, w, n_nodes, e.by_target)
        cand = sorted((m - y0, tuple(c.tolist())) for m, c in res.cycles)
        return res.eta - y0, [np.array(c) for red, c in cand if red < -tol * scale][:max_new]

    rounds = 0
    # phase one
    while True:
        rounds += 1
        k = len(cycles)
        A = np.zeros((1 + d, k + 1 + 2 * d))
        A[0, :k] = 1.0
        A[1:, :k] = np.array(cols_r).T
        A[0, k] = 1.0
        A[1:, k + 1:k + 1 + d] = np.eye(d)
        A[1:, k + 1 + d:] = -np.eye(d)
        c = np.zeros(A.shape[1])
        c[k:] = 1.0
        res = simplex(c, A, b)
        if res.objective <= tol:
            break
        red_min, new = price(res.duals[0], res.duals[1:], True)
        if not new or not any(add(cyc) for cyc in new):
            raise InfeasibleRotation(
                f"rotation target {h.tolist()} is outside the rotation set of the edge graph "
                f"(phase-one residual {res.objective:.3e} on rows {ROW_CLASSES[0]}/{ROW_CLASSES[2]})"
            )
        if rounds > max_rounds:
            raise RuntimeError("column generation phase one did not converge")

    # phase two
    while True:
        rounds += 1
        k = len(cycles)
        A = np.zeros((1 + d, k))
        A[0] = 1.0
        A[1:] = np.array(cols_r).T
        res = simplex(np.array(cols_a), A, b)
        red_min, new = price(res.duals[0], res.duals[1:], False)
        if red_min >= -tol * scale or not new:
            break
        if not any(add(cyc) for cyc in new):
            break
        if rounds > max_rounds:
            raise RuntimeError("column generation did not converge")

    lam = res.x
    mass = np.zeros(len(e))
    used = []
    for j in np.flatnonzero(lam > 0):
        cyc = cycles[j]
        np.add.at(mass, cyc, lam[j] / len(cyc))
        used.append((cyc, float(lam[j])))
    action = float(mass @ obj)
    return MinimizingMeasure(
        e,
        mass,
        action,
        mass @ vel,
        h.copy(),
        res.duals.copy(),
        cycles=[c for c, _ in used],
        cycle_weights=np.array([w for _, w in used]),
        iterations=rounds,
    )


# ----------------------------------------------------------------- scans


@dataclass(eq=False)
class BetaScan:
    hs: np.ndarray
    betas: np.ndarray
    measures: list
    function: Optional[PLConvexFunction]

    def samples(self) -> list[SamplePoint]:
        return [SamplePoint(tuple(h.tolist()), float(b)) for h, b in zip(self.hs, self.betas)]


def beta_scan(D: Discretization, hs, convex: bool = True) -> BetaScan:
    """One LP per rotation target; the samples are convexified when they span."""
    hs = np.atleast_2d(np.asarray(hs, dtype=float))
    if D.grid.d == 1 and hs.shape[0] == 1 and hs.shape[1] != 1:
        hs = hs.T
    measures = [solve_lp(build_lp(D.costs, h)) for h in hs]
    betas = np.array([m.beta for m in measures])
    f = None
    if convex:
        try:
            f = convexify(hs, betas, D.grid.d)
        except DegenerateSamples:
            f = None
    return BetaScan(hs, betas, measures, f)


@dataclass(eq=False)
class RayScan:
    """beta along the ray t -> t h, as a PL function of t."""

    h: np.ndarray
    ts: np.ndarray
    measures: list
    function: PLConvexFunction

    @property
    def betas(self) -> np.ndarray:
        return np.array([m.beta for m in self.measures])

    def measure_at(self, t: float) -> MinimizingMeasure:
        return self.measures[int(np.argmin(np.abs(self.ts - t)))]


def ray_grid(t_step: float, t_max: float) -> np.ndarray:
    """Grid through t = 1 with pitch t_step on [0, t_max]."""
    k_lo = -int(np.floor(1.0 / t_step + 1e-9))
    k_hi = int(np.floor((t_max - 1.0) / t_step + 1e-9))
    ts = 1.0 + t_step * np.arange(k_lo, k_hi + 1)
    return np.round(np.clip(ts, 0.0, None), 12)


def ray_scan(D: Discretization, h, ts) -> RayScan:
    h = np.atleast_1d(np.asarray(h, dtype=float))
    ts = np.asarray(ts, dtype=float)
    measures = [solve_lp(build_lp(D.costs, t * h)) for t in ts]
    f = convexify(ts[:, None], [m.beta for m in measures], 1)
    return RayScan(h, ts, measures, f)


def radial_flat_of(scan: RayScan, t_step: float, tol_flat: float) -> RadialFlatInterval:
    r = radial_flat(scan.function, np.array([1.0]), t_step, tol_flat)
    return RadialFlatInterval(tuple(scan.h.tolist()), r.t_min, r.t_max, t_step, tol_flat)


def default_tol_flat(D: Discretization) -> float:
    """Velocity-quantization error of beta_disc: mixing neighbouring lattice
    speeds of pitch dv = spacing / tau overestimates |v|^2 / 2 by <= dv^2 / 8."""
    dv = D.spacing / D.tau
    return dv * dv / 8.0


# --------------------------------------------------------------- supports


@dataclass
class SupportCycle:
    edges: np.ndarray
    mass: float  # occupation mass carried per edge of the cycle
    displacement: np.ndarray  # lifted total displacement (integer vector)

    @property
    def is_fixed_point(self) -> bool:
        return len(self.edges) == 1 and not np.any(self.displacement)

    @property
    def primitive_class(self) -> np.ndarray:
        k = np.rint(self.displacement).astype(int)
        g = int(np.gcd.reduce(np.abs(k))) if np.any(k) else 1
        return k // g


@dataclass
class SupportDecomposition:
    nodes: np.ndarray
    edges: np.ndarray
    cycles: list
    residue: float
    warning: bool

    def classes(self) -> list[tuple]:
        return sorted({tuple(c.primitive_class.tolist()) for c in self.cycles})


def mather_support(mu: MinimizingMeasure, mass_tol: Optional[float] = None) -> SupportDecomposition:
    """Support nodes and a greedy cycle decomposition of the support flow."""
    e = mu.edges
    if mass_tol is None:
        mass_tol = default_mass_tol(e)
    sup = mu.support(mass_tol)
    remaining = {int(i): float(mu.mass[i]) for i in sup}
    out_edges: dict[int, list[int]] = {}
    for i in sup:
        out_edges.setdefault(int(e.src[i]), []).append(int(i))
    cycles = []
    while True:
        live = [i for i, m in remaining.items() if m > mass_tol]
        if not live:
            break
        start = max(live, key=lambda i: (remaining[i], -i))
        path = [start]
        seen = {int(e.src[start]): 0}
        node = int(e.tgt[start])
        closed = False
        while True:
            if node in seen:
                closed = True
                break
            seen[node] = len(path)
            nxt = [i for i in out_edges.get(node, []) if remaining[i] > mass_tol]
            if not nxt:
                break
            j = max(nxt, key=lambda i: (remaining[i], -i))
            path.append(j)
            node = int(e.tgt[j])
        if not closed:
            remaining[start] = 0.0  # cannot be closed: counts as residue
            continue
        cyc = np.array(path[seen[node]:])
        m = min(remaining[i] for i in cyc)
        for i in cyc:
            remaining[i] -= m
        cycles.append(SupportCycle(cyc, m, e.disp[cyc].sum(axis=0)))
    residue = float(max(mu.mass.sum() - sum(c.mass * len(c.edges) for c in cycles), 0.0))
    nodes = np.unique(np.concatenate([e.src[sup], e.tgt[sup]]))
    warn = residue > RESIDUE_WARN
    if warn:
        warnings.warn(f"support decomposition leaves residue mass {residue:.3e}", RuntimeWarning, stacklevel=2)
    return SupportDecomposition(nodes, sup, cycles, residue, warn)


def support_velocity_multiplicity(mu: MinimizingMeasure, mass_tol: Optional[float] = None) -> np.ndarray:
    """Per support node, the number of distinct velocities among outgoing support edges."""
    e = mu.edges
    sup = mu.support(mass_tol)
    pairs = np.unique(np.column_stack([e.src[sup], e.offset[sup]]), axis=0)
    nodes, counts = np.unique(pairs[:, 0], return_counts=True)
    return counts


# ------------------------------------------------------------ singularity


@dataclass
class SingularityReport:
    h: tuple
    verdict: str  # "singular", "nonsingular" or "undetermined"
    radial: Optional[RadialFlatInterval]
    min_speed: list  # per scanned t: (t, smallest support speed, mass on slow edges)
    v_tol: float
    mass_tol: float


def is_singular(
    D: Discretization,
    h,
    scan: Optional[RayScan] = None,
    t_step: Optional[float] = None,
    tol_flat: Optional[float] = None,
    v_tol: Optional[float] = None,
    mass_tol: Optional[float] = None,
) -> SingularityReport:
    """Look for fixed points in the supports of minimizing measures along R_h.

    Edges slower than v_tol (strictly) count as rest; on the grid these are
    exactly the self-loops since the slowest moving edge has speed
    spacing / tau. A verdict is undetermined when the slow mass falls in the
    band between mass_tol / 1000 and mass_tol.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    v_tol = D.spacing / D.tau if v_tol is None else v_tol
    mass_tol = default_mass_tol(D.edges) if mass_tol is None else mass_tol
    speed = np.linalg.norm(D.edges.velocity, axis=1)
    slow = speed < v_tol * (1 - 1e-9)

    if not np.any(h):
        mu = solve_lp(build_lp(D.costs, h))
        slow_mass = float(mu.mass[slow].sum())
        verdict = "singular" if slow_mass > mass_tol else ("undetermined" if slow_mass > mass_tol * 1e-3 else "nonsingular")
        return SingularityReport(tuple(h.tolist()), verdict, None, [(0.0, _min_speed(mu, speed, mass_tol), slow_mass)], v_tol, mass_tol)

    if scan is None:
        t_step = t_step or 0.1 / float(np.linalg.norm(h))
        t_max = min(2.0, 0.999 * D.cap.R / float(np.linalg.norm(h)))
        scan = ray_scan(D, h, ray_grid(t_step, t_max))
    t_step = t_step or float(np.min(np.diff(scan.ts)))
    tol_flat = default_tol_flat(D) if tol_flat is None else tol_flat
    R = radial_flat_of(scan, t_step, tol_flat)
    rows = []
    worst = 0.0
    for t, mu in zip(scan.ts, scan.measures):
        if not R.contains(t):
            continue
        slow_mass = float(mu.mass[slow].sum())
        worst = max(worst, slow_mass)
        rows.append((float(t), _min_speed(mu, speed, mass_tol), slow_mass))
    if worst > mass_tol:
        verdict = "singular"
    elif worst > mass_tol * 1e-3:
        verdict = "undetermined"
    else:
        verdict = "nonsingular"
    return SingularityReport(tuple(h.tolist()), verdict, R, rows, v_tol, mass_tol)


def _min_speed(mu: MinimizingMeasure, speed: np.ndarray, mass_tol: float) -> float:
    sup = mu.support(mass_tol)
    return float(speed[sup].min()) if len(sup) else float("nan")


# ----------------------------------------------------------- duality checks


def duality_gap(D: Discretization, h, c, beta: float) -> float:
    """alpha(c) + beta(h) - <c, h>; nonnegative, zero exactly on Legendre pairs."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return D.alpha(c) + beta - float(c @ h)


def beta_from_alpha(alpha_scan: AlphaScan, h) -> tuple[float, np.ndarray]:
    """The alpha-side value max over scanned c of <c, h> - alpha(c), with its maximiser."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    vals = alpha_scan.cs @ h - alpha_scan.alphas
    k = int(np.argmax(vals))
    return float(vals[k]), alpha_scan.cs[k]


# ---------------------------------------------------------------- theorem


class TheoremStageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")


@dataclass
class TheoremTolerances:
    tol_A: Optional[float] = None  # default 5 (spacing + tau)
    tol_flat: float = LP_FLAT_TOL  # flats of beta_disc itself, which is exactly PL
    hausdorff: Optional[float] = None  # default 2 spacing
    mass_tol: Optional[float] = None
    v_tol: Optional[float] = None
    scan_step: float = 0.1  # pitch of the rotation scan around h
    scan_radius: int = 2  # scan h + scan_step * k, |k_i| <= scan_radius
    t_max: float = 2.0

    def resolved(self, D: Discretization) -> "TheoremTolerances":
        return TheoremTolerances(
            default_tol_A(D.grid, D.tau) if self.tol_A is None else self.tol_A,
            self.tol_flat,
            2 * D.spacing if self.hausdorff is None else self.hausdorff,
            default_mass_tol(D.edges) if self.mass_tol is None else self.mass_tol,
            D.spacing / D.tau if self.v_tol is None else self.v_tol,
            self.scan_step,
            self.scan_radius,
            self.t_max,
        )


@dataclass(eq=False)
class TheoremReport:
    h: tuple
    verdict: str  # "pass", "fail", "singular-skipped" or "error"
    tolerances: TheoremTolerances
    singularity: Optional[SingularityReport] = None
    flat_L: Optional[Polytope] = None
    c: Optional[np.ndarray] = None
    alpha_c: Optional[float] = None
    radial: Optional[RadialFlatInterval] = None
    aubry: Optional[AubrySetEstimate] = None
    weak_kam: Optional[WeakKamSolution] = None
    mather_nodes: Optional[np.ndarray] = None
    decompositions: list = field(default_factory=list)  # (t, SupportDecomposition)
    hausdorff: Optional[float] = None
    failed_stage: Optional[str] = None
    message: str = ""
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def cycles(self) -> list:
        return [c for _, dec in self.decompositions for c in dec.cycles]


def _scan_points(h: np.ndarray, step: float, radius: int, R: float) -> np.ndarray:
    ks = np.arange(-radius, radius + 1)
    if len(h) == 1:
        offs = ks[:, None] * step
    else:
        offs = np.array([[a, b] for a in ks for b in ks], dtype=float) * step
    pts = np.round(h + offs, 12)
    return pts[np.linalg.norm(pts, axis=1) <= R]


def verify_theorem(D: Discretization, h, tolerances: Optional[TheoremTolerances] = None) -> TheoremReport:
    """Aubry set of L(h) against the Mather set of the radial flat R_h.

    Stages: ray scan and singularity gate; beta scan around h and L(h) as
    the subdifferential of its convexification; c = vertex barycenter of
    L(h); Aubry estimate at c; Mather nodes as the union of LP supports over
    the scanned points of R_h; comparison and cycle decomposition.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    tol = (tolerances or TheoremTolerances()).resolved(D)
    rep = TheoremReport(tuple(h.tolist()), "error", tol)
    stage = "singularity"
    try:
        hn = float(np.linalg.norm(h))
        if hn == 0:
            rep.singularity = is_singular(D, h, v_tol=tol.v_tol, mass_tol=tol.mass_tol)
        else:
            t_step = tol.scan_step / hn
            t_max = min(tol.t_max, 0.999 * D.cap.R / hn)
            ray = ray_scan(D, h, ray_grid(t_step, t_max))
            rep.singularity = is_singular(
                D, h, scan=ray, t_step=t_step, tol_flat=tol.tol_flat, v_tol=tol.v_tol, mass_tol=tol.mass_tol
            )
            rep.radial = rep.singularity.radial
        if rep.singularity.verdict != "nonsingular":
            rep.verdict = "singular-skipped"
            rep.message = f"singularity verdict: {rep.singularity.verdict}"
            return rep

        stage = "legendre"
        pts = _scan_points(h, tol.scan_step, tol.scan_radius, D.cap.R)
        scan = beta_scan(D, pts)
        if scan.function is None:
            raise ValueError("rotation scan around h is degenerate")
        rep.flat_L = subdifferential(scan.function, h)
        rep.c = rep.flat_L.barycenter

        stage = "aubry"
        costs = D.costs_for(rep.c)
        sol = solve_critical(costs)
        if not sol.converged:
            raise RuntimeError(f"critical value iteration did not converge (residual {sol.residual:.3e})")
        rep.weak_kam = sol
        rep.alpha_c = sol.lam
        rep.aubry = aubry_set(peierls_diag(costs, sol.lam), tol.tol_A)

        stage = "mather"
        nodes = []
        for t, mu in zip(ray.ts, ray.measures):
            if rep.radial.contains(t):
                dec = mather_support(mu, tol.mass_tol)
                rep.decompositions.append((float(t), dec))
                nodes.append(dec.nodes)
        rep.mather_nodes = np.unique(np.concatenate(nodes))

        stage = "compare"
        rep.hausdorff = node_hausdorff(D.grid, rep.aubry.nodes, rep.mather_nodes)
        residue = max(dec.residue for _, dec in rep.decompositions)
        fixed = any(c.is_fixed_point for c in rep.cycles)
        rep.checks = {
            "hausdorff_ok": rep.hausdorff <= tol.hausdorff + 1e-12,
            "zero_residue": residue <= RESIDUE_WARN,
            "no_fixed_points": not fixed,
            "max_residue": residue,
        }
        ok = rep.checks["hausdorff_ok"] and rep.checks["zero_residue"] and rep.checks["no_fixed_points"]
        rep.verdict = "pass" if ok else "fail"
        return rep
    except Exception as exc:
        err = TheoremStageError(stage, exc)
        rep.failed_stage = stage
        rep.message = str(err)
        rep.verdict = "error"
        return rep
