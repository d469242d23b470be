"""Piecewise-linear convex functions on boxes in dimension 1 or 2.

A function is given by samples; its lower convex hull is stored as a list of
affine pieces (slope, intercept) and evaluates as their maximum. Everything
else (conjugates, subdifferentials, exposed faces, flats) is computed from
the pieces and the hull vertices.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .polytope import GEOM_TOL, Polytope

EXACT_TOL = 1e-9
AFFINE_SAMPLES = 129


class DegenerateSamples(ValueError):
    pass


class OutOfDomain(ValueError):
    pass


class FlatConsistencyError(ValueError):
    pass


@dataclass(frozen=True)
class SamplePoint:
    point: tuple
    value: float


@dataclass(frozen=True, eq=False)
class PLConvexFunction:
    d: int
    points: np.ndarray  # (n, d) sample locations
    values: np.ndarray  # (n,)
    slopes: np.ndarray  # (m, d) hull pieces
    intercepts: np.ndarray  # (m,)
    box: tuple[np.ndarray, np.ndarray]
    vertex_idx: np.ndarray  # samples that are hull vertices
    truncated: bool = False

    @property
    def samples(self) -> list[SamplePoint]:
        return [SamplePoint(tuple(p), float(v)) for p, v in zip(self.points, self.values)]

    @property
    def vertices(self) -> np.ndarray:
        return self.points[self.vertex_idx]

    @property
    def vertex_values(self) -> np.ndarray:
        return self.values[self.vertex_idx]

    @property
    def scale(self) -> float:
        return 1.0 + float(np.abs(self.values).max())

    def __call__(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        if self.d == 1 and x.ndim <= 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        out = (x @ self.slopes.T + self.intercepts).max(axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def in_box(self, x, tol: float = EXACT_TOL) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.box
        return bool(np.all(x >= lo - tol) and np.all(x <= hi + tol))

    def to_dict(self) -> dict:
        return {
            "dimension": self.d,
            "samples": [[p.tolist(), float(v)] for p, v in zip(self.points, self.values)],
            "hull": [[s.tolist(), float(b)] for s, b in zip(self.slopes, self.intercepts)],
            "box": [self.box[0].tolist(), self.box[1].tolist()],
            "vertices": self.vertex_idx.tolist(),
            "truncated": bool(self.truncated),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PLConvexFunction":
        d = int(data["dimension"])
        pts = np.array([p for p, _ in data["samples"]], dtype=float).reshape(-1, d)
        vals = np.array([v for _, v in data["samples"]], dtype=float)
        box = (np.array(data["box"][0], dtype=float), np.array(data["box"][1], dtype=float))
        f = convexify(pts, vals, d, box=box)
        if data.get("truncated"):
            f = _with_flag(f, True)
        return f


def _with_flag(f: PLConvexFunction, truncated: bool) -> PLConvexFunction:
    return PLConvexFunction(f.d, f.points, f.values, f.slopes, f.intercepts, f.box, f.vertex_idx, truncated)


# ------------------------------------------------------------------ hulls


def lower_hull_1d(x: np.ndarray, y: np.ndarray, tol: float = EXACT_TOL) -> np.ndarray:
    """Indices of lower-hull vertices, left to right.

    Among equal abscissae only the lowest value can be a vertex. A point is
    dropped when it lies within ``tol`` of the chord of its neighbours.
    """
    order = np.lexsort((y, x))
    keep = np.ones(len(order), dtype=bool)
    keep[1:] = x[order][1:] != x[order][:-1]
    order = order[keep]
    out: list[int] = []
    for i in order:
        while len(out) >= 2:
            a, b = out[-2], out[-1]
            chord = y[a] + (y[i] - y[a]) * (x[b] - x[a]) / (x[i] - x[a])
            if y[b] >= chord - tol:
                out.pop()
            else:
                break
        out.append(int(i))
    return np.array(out, dtype=int)


def _convexify_1d(P, v, tol):
    x = P[:, 0]
    idx = lower_hull_1d(x, v, tol)
    xs, ys = x[idx], v[idx]
    slopes = np.diff(ys) / np.diff(xs)
    intercepts = ys[:-1] - slopes * xs[:-1]
    return slopes[:, None], intercepts, idx


def _coplanar_groups(planes: np.ndarray, P: np.ndarray, v: np.ndarray, tris: np.ndarray, tol: float) -> list[list[int]]:
    """Partition facets into coplanar groups.

    Planes are hashed on a coarse lattice; facets in the same or a
    neighbouring cell are merged when each plane fits the other's points.
    """
    q = 1e-7 * (1.0 + np.abs(planes).max())
    keys = np.round(planes / q).astype(np.int64)
    cells: dict[tuple, list[int]] = {}
    for i, k in enumerate(map(tuple, keys)):
        cells.setdefault(k, []).append(i)
    parent = list(range(len(planes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def fits(i, j):
        pts = tris[j]
        return np.abs(P[pts] @ planes[i][:2] + planes[i][2] - v[pts]).max() <= tol

    offsets = list(itertools.product((-1, 0, 1), repeat=3))
    for k, members in cells.items():
        for off in offsets:
            other = cells.get((k[0] + off[0], k[1] + off[1], k[2] + off[2]))
            if other is None:
                continue
            for i in members:
                for j in other:
                    if i < j and find(i) != find(j) and fits(i, j) and fits(j, i):
                        parent[find(j)] = find(i)
    comps: dict[int, list[int]] = {}
    for i in range(len(planes)):
        comps.setdefault(find(i), []).append(i)
    return sorted(comps.values())


def _convexify_2d(P, v, tol):
    centered = P - P.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-12 * (1.0 + np.abs(P).max())) < 2:
        raise DegenerateSamples("sample points are affinely dependent (collinear)")
    top = np.concatenate([P.mean(axis=0), [v.max() + 1.0 + np.ptp(v)]])
    lifted = np.vstack([np.column_stack([P, v]), top])
    try:
        hull = ConvexHull(lifted)
    except QhullError as exc:  # pragma: no cover - guarded by the rank test
        raise DegenerateSamples(str(exc)) from exc
    eq = hull.equations
    lower = np.flatnonzero(eq[:, 2] < -1e-10)
    scale = 1.0 + np.abs(v).max()

    # exact plane of every lower facet, then group coplanar facets into pieces
    planes = []
    for k in lower:
        tri = hull.simplices[k]
        M = np.column_stack([P[tri], np.ones(3)])
        planes.append(np.linalg.solve(M, v[tri]))
    groups = _coplanar_groups(np.array(planes), P, v, hull.simplices[lower], tol * scale)
    out_s, out_b, verts = [], [], set()
    for grp in groups:
        on = np.unique(hull.simplices[lower[grp]].ravel())
        M = np.column_stack([P[on], np.ones(len(on))])
        sol = np.linalg.lstsq(M, v[on], rcond=None)[0] if len(on) > 3 else np.linalg.solve(M, v[on])
        out_s.append(sol[:2])
        out_b.append(sol[2])
        ext = Polytope.hull(P[on], tol=1e-12).vertices
        for q in ext:
            hit = on[np.flatnonzero(np.all(P[on] == q, axis=1))]
            verts.add(int(hit[np.argmin(v[hit])]))
    return np.array(out_s), np.array(out_b), np.array(sorted(verts), dtype=int)


def convexify(
    points,
    values,
    d: Optional[int] = None,
    box: Optional[tuple] = None,
    tol: float = EXACT_TOL,
) -> PLConvexFunction:
    """Lower convex hull of the samples as a PL convex function."""
    P = np.asarray(points, dtype=float)
    if d is None:
        d = 1 if P.ndim == 1 else P.shape[1]
    P = P.reshape(-1, d)
    v = np.asarray(values, dtype=float).ravel()
    if len(P) != len(v):
        raise ValueError("points and values differ in length")
    if d not in (1, 2):
        raise ValueError("dimension must be 1 or 2")
    if not np.all(np.isfinite(v)) or not np.all(np.isfinite(P)):
        raise ValueError("samples must be finite")
    if len(np.unique(P, axis=0)) < d + 1:
        raise DegenerateSamples(f"need at least {d + 1} affinely independent points")
    if box is None:
        box = (P.min(axis=0), P.max(axis=0))
    box = (np.asarray(box[0], dtype=float).reshape(d), np.asarray(box[1], dtype=float).reshape(d))
    if np.any(P < box[0] - EXACT_TOL) or np.any(P > box[1] + EXACT_TOL):
        raise ValueError("samples lie outside the declared box")
    if d == 1:
        slopes, intercepts, idx = _convexify_1d(P, v, tol)
    else:
        slopes, intercepts, idx = _convexify_2d(P, v, tol)
    return PLConvexFunction(d, P, v, slopes, intercepts, box, idx)


def convexify_samples(samples: Sequence[SamplePoint], d: int, **kw) -> PLConvexFunction:
    return convexify([s.point for s in samples], [s.value for s in samples], d, **kw)


# ------------------------------------------------------------- conjugates


def _grid(lo: np.ndarray, hi: np.ndarray, step: float) -> np.ndarray:
    axes = []
    for a, b in zip(lo, hi):
        n = int(np.floor((b - a) / step + 1e-9))
        ax = a + step * np.arange(n + 1)
        if ax[-1] < b - 1e-12:
            ax = np.append(ax, b)
        axes.append(ax)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _envelope_breaks(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Kinks of s -> max_i (a_i s + c_i)."""
    idx = lower_hull_1d(a, -c, tol=0.0)
    a, c = a[idx], c[idx]
    return -np.diff(c) / np.diff(a)


def _box_breakpoints(X: np.ndarray, fx: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> list:
    """Points on the box boundary where y -> max_x (<y,x> - f(x)) has a kink."""
    out = []
    corners = [np.array([lo[0], lo[1]]), np.array([hi[0], lo[1]]), np.array([hi[0], hi[1]]), np.array([lo[0], hi[1]])]
    for k in range(4):
        p, q = corners[k], corners[(k + 1) % 4]
        u = q - p
        length = float(np.abs(u).max())
        if length == 0:
            continue
        a = X @ u
        c = X @ p - fx
        for s in _envelope_breaks(a, c):
            if 0.0 < s < 1.0:
                out.append(p + s * u)
    return out


def _dedupe(Y: np.ndarray, quantum: float = 1e-10) -> np.ndarray:
    """Drop points within rounding distance of an earlier one (grid points come first)."""
    _, first = np.unique(np.round(Y / quantum).astype(np.int64), axis=0, return_index=True)
    return Y[np.sort(first)]


def conjugate_values(f: PLConvexFunction, Y: np.ndarray) -> np.ndarray:
    """max over hull vertices x of <y, x> - f(x)."""
    X, fx = f.vertices, f.vertex_values
    return (np.atleast_2d(Y) @ X.T - fx).max(axis=1)


def _snap_pieces(g: PLConvexFunction, slopes: np.ndarray, intercepts: np.ndarray) -> PLConvexFunction:
    """Replace fitted pieces by the exact affine maps they approximate."""
    S, B = g.slopes.copy(), g.intercepts.copy()
    for k in range(len(S)):
        err = np.abs(slopes - S[k]).max(axis=1)
        j = int(np.argmin(err))
        if err[j] <= 1e-7 and abs(intercepts[j] - B[k]) <= 1e-7 * g.scale:
            S[k], B[k] = slopes[j], intercepts[j]
    return PLConvexFunction(g.d, g.points, g.values, S, B, g.box, g.vertex_idx, g.truncated)


def fenchel_transform(f: PLConvexFunction, dual_box: tuple, dual_step: float) -> PLConvexFunction:
    """Conjugate of f sampled on a dual grid and convexified.

    The dual samples also include every hull slope of f and the kinks of the
    conjugate on the boundary of the dual box, so the result is the exact
    conjugate restricted to the box. If some slopes of f fall outside the
    box, the result carries ``truncated=True``.
    """
    d = f.d
    lo = np.asarray(dual_box[0], dtype=float).reshape(d)
    hi = np.asarray(dual_box[1], dtype=float).reshape(d)
    if dual_step <= 0 or np.any(hi <= lo):
        raise ValueError("invalid dual box or step")
    Y = [_grid(lo, hi, dual_step)]
    inside = np.all((f.slopes >= lo - EXACT_TOL) & (f.slopes <= hi + EXACT_TOL), axis=1)
    truncated = not bool(inside.all())
    Y.append(f.slopes[inside])
    if d == 2:
        extra = _box_breakpoints(f.vertices, f.vertex_values, lo, hi)
        if extra:
            Y.append(np.array(extra))
    Y = _dedupe(np.clip(np.vstack(Y), lo, hi))
    g = _snap_pieces(convexify(Y, conjugate_values(f, Y), d, box=(lo, hi)), f.vertices, -f.vertex_values)
    if truncated:
        warnings.warn("dual box does not cover the slope range; conjugate is truncated", RuntimeWarning, stacklevel=2)
    return _with_flag(g, truncated)


def slope_range(f: PLConvexFunction) -> tuple[np.ndarray, np.ndarray]:
    return f.slopes.min(axis=0), f.slopes.max(axis=0)


# ----------------------------------------------------- faces and flats


def active_pieces(f: PLConvexFunction, x, tol: float = EXACT_TOL) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    vals = f.slopes @ x + f.intercepts
    return np.flatnonzero(vals >= vals.max() - tol * f.scale)


def subdifferential(f: PLConvexFunction, x, tol: float = EXACT_TOL) -> Polytope:
    """Convex hull of the slopes of the hull pieces active at x."""
    if not f.in_box(x):
        raise OutOfDomain(f"point {np.atleast_1d(x).tolist()} lies outside the box")
    return Polytope.hull(f.slopes[active_pieces(f, x, tol)], tol=1e-12)


def face_of_slope(f: PLConvexFunction, y, tol: float = EXACT_TOL) -> Polytope:
    """Face exposed by y: hull vertices maximizing <y, x> - f(x) within tol."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    X, fx = f.vertices, f.vertex_values
    score = X @ y - fx
    return Polytope.hull(X[score >= score.max() - tol], tol=1e-12)


def is_affine_on(f: PLConvexFunction, a, b, tol: float = EXACT_TOL, samples: int = AFFINE_SAMPLES) -> bool:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    s = np.linspace(0.0, 1.0, samples)
    pts = a + s[:, None] * (b - a)
    chord = (1 - s) * f(a) + s * f(b)
    return bool(np.abs(f(pts) - chord).max() <= tol)


def flat_F(
    f: PLConvexFunction,
    g_dual: Optional[PLConvexFunction],
    flat: Polytope,
    tol: float = EXACT_TOL,
) -> Polytope:
    """Intersection of the subdifferentials over the vertices of a flat.

    Raises FlatConsistencyError when f is not affine on the flat (empty
    intersection) or when the intersection differs from the subdifferential
    at the vertex barycenter. With ``g_dual`` the Fenchel equality
    f(x) + g(y) = <x, y> is also checked on the result.
    """
    out = None
    for v in flat.vertices:
        sd = subdifferential(f, v, tol)
        out = sd if out is None else out.intersect(sd, GEOM_TOL)
        if out is None:
            raise FlatConsistencyError("f is not affine on the given set: subdifferentials do not meet")
    center = subdifferential(f, flat.barycenter, tol)
    if not out.equals(center, 1e-7):
        raise FlatConsistencyError(
            f"intersection {out.to_list()} differs from the subdifferential at the barycenter {center.to_list()}"
        )
    if g_dual is not None:
        for y in out.vertices:
            if not g_dual.in_box(y):
                continue
            for x in flat.vertices:
                gap = f(x) + g_dual(y) - float(x @ y)
                if abs(gap) > 1e-7 * (f.scale + g_dual.scale):
                    raise FlatConsistencyError(f"Fenchel equality fails by {gap:.3e} at x={x.tolist()}, y={y.tolist()}")
    return out


def maximal_flat_through(f: PLConvexFunction, x0, tol: float = EXACT_TOL) -> Polytope:
    """Largest flat of f containing x0 in its relative interior.

    It is the face exposed by any slope in the relative interior of the
    subdifferential at x0; the barycenter of its vertices is such a slope.
    """
    sd = subdifferential(f, x0, tol)
    return face_of_slope(f, sd.barycenter, tol)


@dataclass(frozen=True)
class RadialFlatInterval:
    h: tuple
    t_min: float
    t_max: float
    t_step: float
    tol: float

    def contains(self, t: float) -> bool:
        return self.t_min - 1e-12 <= t <= self.t_max + 1e-12

    def grid(self) -> np.ndarray:
        n = int(round((self.t_max - self.t_min) / self.t_step))
        return self.t_min + self.t_step * np.arange(n + 1)


def radial_flat(f: PLConvexFunction, h, t_step: float, tol_flat: float = EXACT_TOL) -> RadialFlatInterval:
    """Maximal t-interval around 1 on which t -> f(t h) is affine within tol_flat.

    Candidate endpoints lie on the grid 1 + k t_step with t >= 0 and t h in
    the box. Among grid intervals containing t = 1 that pass
    ``is_affine_on``, the longest wins; several longest candidates are
    intersected, so a sampled kink at t = 1 gives the degenerate [1, 1].
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if not np.any(h):
        raise ValueError("direction must be nonzero")
    if not f.in_box(h):
        raise OutOfDomain("t = 1 lies outside the box")

    def ok(k):
        t = 1.0 + t_step * k
        return t >= -1e-12 and f.in_box(t * h)

    def affine(a, b):
        return a == b or is_affine_on(f, (1.0 + t_step * a) * h, (1.0 + t_step * b) * h, tol_flat)

    k_lo = 0
    while ok(k_lo - 1):
        k_lo -= 1
    k_hi = 0
    while ok(k_hi + 1):
        k_hi += 1
    # chord deviation of a convex function shrinks on subintervals, so the
    # best right end only moves left as the left end does
    best: list[tuple[int, int]] = []
    b = k_hi
    for a in range(0, k_lo - 1, -1):
        if not affine(a, 0):
            break
        while b > 0 and not affine(a, b):
            b -= 1
        if not best or b - a > best[0][1] - best[0][0]:
            best = [(a, b)]
        elif b - a == best[0][1] - best[0][0]:
            best.append((a, b))
    a = max(p[0] for p in best)
    b = min(p[1] for p in best)
    return RadialFlatInterval(tuple(h.tolist()), max(0.0, 1.0 + t_step * a), 1.0 + t_step * b, t_step, tol_flat)
