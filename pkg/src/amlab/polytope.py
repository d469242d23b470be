"""Small convex polytopes in dimension 1 or 2.

A polytope is kept as its list of extreme points: one point, the two ends of
a segment, or the vertices of a polygon in counter-clockwise order.
Intersections clip one vertex ring against the other's half-planes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

GEOM_TOL = 1e-9


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _extreme_points_2d(P: np.ndarray, tol: float) -> np.ndarray:
    """Extreme points of a 2-d point cloud, in the order described above."""
    P = np.unique(P, axis=0)
    if len(P) == 1:
        return P
    span = float(np.ptp(P, axis=0).max())
    if span <= tol:
        return P[:1]
    centered = P - P.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s[1] <= tol * max(1.0, np.sqrt(len(P))) and np.abs(centered @ vt[1]).max() <= tol:
        proj = centered @ vt[0]
        ends = P[[int(np.argmin(proj)), int(np.argmax(proj))]]
        return ends[np.lexsort(ends.T[::-1])]
    # Andrew's monotone chain, dropping points within tol of an edge
    pts = P[np.lexsort(P.T[::-1])]
    ctol = tol * span

    def chain(seq):
        out: list = []
        for p in seq:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= ctol:
                out.pop()
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(pts[::-1])
    ring = np.array(lower[:-1] + upper[:-1])
    return ring


@dataclass(frozen=True, eq=False)
class Polytope:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "vertices", v)

    @classmethod
    def hull(cls, points, tol: float = 1e-12) -> "Polytope":
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if P.ndim != 2 or P.shape[0] == 0:
            raise ValueError("need at least one point")
        d = P.shape[1]
        if d == 1:
            lo, hi = float(P.min()), float(P.max())
            return cls(np.array([[lo]]) if hi - lo <= tol else np.array([[lo], [hi]]))
        if d == 2:
            return cls(_extreme_points_2d(P, tol))
        raise ValueError("polytopes are supported in dimension 1 and 2 only")

    @property
    def d(self) -> int:
        return self.vertices.shape[1]

    @property
    def dim(self) -> int:
        """Dimension of the affine hull."""
        return min(len(self.vertices) - 1, self.d)

    @property
    def barycenter(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"Polytope({self.vertices.tolist()})"

    def to_list(self) -> list:
        return self.vertices.tolist()

    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows (a, b) with a.x <= b describing the polytope; normals have unit length."""
        return self._hrep

    @cached_property
    def _hrep(self) -> tuple[np.ndarray, np.ndarray]:
        V = self.vertices
        if self.d == 1:
            return np.array([[1.0], [-1.0]]), np.array([V[:, 0].max(), -V[:, 0].min()])
        if len(V) == 1:
            A = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
            p = V[0]
            return A, np.array([p[0], -p[0], p[1], -p[1]])
        if len(V) == 2:
            a, b = V
            u = (b - a) / np.hypot(*(b - a))
            n = np.array([-u[1], u[0]])
            A = np.array([n, -n, u, -u])
            return A, np.array([n @ a, -(n @ a), u @ b, -(u @ a)])
        E = np.roll(V, -1, axis=0) - V
        N = np.column_stack([E[:, 1], -E[:, 0]]) / np.hypot(E[:, 0], E[:, 1])[:, None]
        return N, np.einsum("ij,ij->i", N, V)

    def contains_point(self, p, tol: float = GEOM_TOL) -> bool:
        A, b = self.halfspaces()
        return bool(np.all(A @ np.asarray(p, dtype=float) <= b + tol))

    def contains(self, other: "Polytope", tol: float = GEOM_TOL) -> bool:
        """Vertex containment of ``other`` within ``tol``."""
        A, b = self.halfspaces()
        return bool(np.all(other.vertices @ A.T <= b + tol))

    def equals(self, other: "Polytope", tol: float = GEOM_TOL) -> bool:
        return self.contains(other, tol) and other.contains(self, tol)

    def in_relint(self, p, tol: float = GEOM_TOL) -> bool:
        p = np.asarray(p, dtype=float)
        V = self.vertices
        if len(V) == 1:
            return bool(np.linalg.norm(p - V[0]) <= tol)
        if self.d == 1:
            return bool(V.min() + tol < p[0] < V.max() - tol)
        if len(V) == 2:
            a, b = V
            u = (b - a) / np.linalg.norm(b - a)
            n = np.array([-u[1], u[0]])
            return bool(abs(n @ (p - a)) <= tol and u @ a + tol < u @ p < u @ b - tol)
        A, rhs = self.halfspaces()
        return bool(np.all(A @ p < rhs - tol))

    def intersect(self, other: "Polytope", tol: float = GEOM_TOL) -> Optional["Polytope"]:
        """Intersection, or None when empty (beyond ``tol``)."""
        if self.d != other.d:
            raise ValueError("dimension mismatch")
        if self.d == 1:
            lo = max(self.vertices.min(), other.vertices.min())
            hi = min(self.vertices.max(), other.vertices.max())
            if lo > hi + tol:
                return None
            return Polytope.hull([[lo], [max(lo, hi)]])
        ring = [v for v in self.vertices]
        A, b = other.halfspaces()
        for a, beta in zip(A, b):
            if not ring:
                return None
            out = []
            k = len(ring)
            for i in range(k):
                p, q = ring[i], ring[(i + 1) % k]
                fp, fq = a @ p - beta, a @ q - beta
                if fp <= tol:
                    out.append(p)
                if (fp < -tol and fq > tol) or (fp > tol and fq < -tol):
                    s = fp / (fp - fq)
                    out.append(p + s * (q - p))
            ring = out
        if not ring:
            return None
        return Polytope.hull(np.array(ring), tol=tol)

