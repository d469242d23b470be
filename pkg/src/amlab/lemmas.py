"""Randomized property battery for the convex core.

Each instance is a random PL convex function (a max of affine maps plus
random lifts of some samples). For every instance we check biconjugation,
that the intersection of subdifferentials over an exposed face equals the
subdifferential at its barycenter, that the maximal flat through a point
contains every face having that point in its relative interior, the
Fenchel inequality/equality, and monotonicity of faces.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .convex_core import (
    PLConvexFunction,
    convexify,
    face_of_slope,
    fenchel_transform,
    flat_F,
    maximal_flat_through,
    radial_flat,
    subdifferential,
)
from .polytope import Polytope

BICONJ_TOL = 1e-12


def random_pl(rng: np.random.Generator, d: int) -> PLConvexFunction:
    """A random PL convex function on [-1, 1]^d.

    Half the instances live on a dyadic lattice with integer slopes so that
    many samples share hull pieces and ridges; the rest use scattered points.
    """
    lattice = rng.random() < 0.5
    k = int(rng.integers(2, 6))
    if d == 1:
        if lattice:
            P = np.linspace(-1, 1, 17)[:, None]
        else:
            cells = -1 + (np.arange(18) + rng.uniform(0.2, 0.8, 18)) / 9
            P = np.concatenate([[-1.0, 1.0], cells])[:, None]
    else:
        if lattice:
            g = np.linspace(-1, 1, 9)
            P = np.array([[a, b] for a in g for b in g])
        else:
            # boundary ring plus one jittered point per interior cell, which
            # keeps hull facets well shaped
            ring = np.linspace(-1, 1, 5)
            border = {(a, b) for a in ring for b in ring if abs(a) == 1 or abs(b) == 1}
            cell = -1 + (np.arange(6) + 0.5) / 3
            jitter = rng.uniform(-0.3, 0.3, (36, 2)) / 3
            inner = np.array([[a, b] for a in cell for b in cell]) + jitter
            P = np.vstack([np.array(sorted(border)), inner])
    if lattice:
        S = rng.integers(-3, 4, (k, d)).astype(float)
        B = rng.integers(-2, 3, k) / 4.0
    else:
        S = rng.uniform(-3, 3, (k, d))
        B = rng.uniform(-1, 1, k)
    v = (P @ S.T + B).max(axis=1)
    lift = rng.random(len(P)) < 0.2
    v = v + lift * rng.uniform(0.05, 0.5, len(P))
    return convexify(P, v, d, box=(-np.ones(d), np.ones(d)))


def exposed_faces(f: PLConvexFunction) -> list[tuple[np.ndarray, Polytope]]:
    """Every exposed face with one exposing slope, found from the normal fan."""
    seen: list[Polytope] = []
    out = []

    def add(y):
        F = face_of_slope(f, y)
        if not any(F.equals(G, 1e-9) for G in seen):
            seen.append(F)
            out.append((np.asarray(y, dtype=float), F))

    for s in f.slopes:
        add(s)
    for x in f.vertices:
        sd = subdifferential(f, x)
        add(sd.barycenter)
        V = sd.vertices
        if len(V) > 2:
            for i in range(len(V)):
                add(0.5 * (V[i] + V[(i + 1) % len(V)]))
    return out


@dataclass
class LemmaReport:
    instances: int = 0
    biconj_max_err: float = 0.0
    biconj_vertex_mismatch: int = 0
    interior_face_failures: int = 0
    extension_failures: int = 0
    fenchel_failures: int = 0
    monotonicity_failures: int = 0
    radial_failures: int = 0
    faces_checked: int = 0
    seconds: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.biconj_max_err <= BICONJ_TOL
            and self.biconj_vertex_mismatch == 0
            and self.interior_face_failures == 0
            and self.extension_failures == 0
            and self.fenchel_failures == 0
            and self.monotonicity_failures == 0
            and self.radial_failures == 0
        )

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def _same_points(A: np.ndarray, B: np.ndarray, tol: float = 1e-9) -> bool:
    if len(A) != len(B):
        return False
    D = np.abs(A[:, None, :] - B[None, :, :]).max(axis=-1)
    return bool(D.min(axis=1).max() <= tol and D.min(axis=0).max() <= tol)


def check_instance(f: PLConvexFunction, rng: np.random.Generator, report: LemmaReport) -> None:
    d = f.d
    lo, hi = f.slopes.min(axis=0) - 0.5, f.slopes.max(axis=0) + 0.5
    g = fenchel_transform(f, (lo, hi), float((hi - lo).max()) / 8)
    ff = fenchel_transform(g, f.box, 0.25)
    if _same_points(ff.vertices, f.vertices):
        D = np.abs(ff.vertices[:, None, :] - f.vertices[None]).max(axis=-1)
        err = float(np.abs(ff.vertex_values[D.argmin(axis=0)] - f.vertex_values).max())
        report.biconj_max_err = max(report.biconj_max_err, err)
    else:
        report.biconj_vertex_mismatch += 1

    faces = exposed_faces(f)
    report.faces_checked += len(faces)
    flats = []
    for y, F in faces:
        try:
            FF = flat_F(f, g, F)
        except ValueError:
            report.interior_face_failures += 1
            continue
        if not FF.equals(subdifferential(f, F.barycenter), 1e-7) or not FF.contains_point(y, 1e-7):
            report.interior_face_failures += 1
        flats.append((F, FF))

    for _, F in faces:
        x0 = F.barycenter
        M = maximal_flat_through(f, x0)
        if not M.in_relint(x0, 1e-10) and M.dim > 0:
            report.extension_failures += 1
        for _, G in faces:
            if G.dim > 0 and G.in_relint(x0, 1e-10) and not M.contains(G, 1e-9):
                report.extension_failures += 1

    for F1, FF1 in flats:
        for F2, FF2 in flats:
            if F2.contains(F1, 1e-10) and not FF1.contains(FF2, 1e-7):
                report.monotonicity_failures += 1

    # Fenchel inequality on random pairs, equality exactly on subdifferentials
    X = rng.uniform(-1, 1, (20, d))
    for x in X:
        sd = subdifferential(f, x)
        for c in np.vstack([rng.uniform(lo, hi, (5, d)), sd.vertices, sd.barycenter[None]]):
            gap = f(x) + g(c) - float(c @ x)
            if gap < -1e-9:
                report.fenchel_failures += 1
            elif (abs(gap) <= 1e-9) != sd.contains_point(c, 1e-7):
                if abs(gap) > 1e-7:  # ignore the boundary band of the tolerances
                    report.fenchel_failures += 1

    # radial flats: where <c, h> is constant over L(h), L(h) grows along R_h
    for x in X[:5]:
        if not np.any(np.abs(x) > 1e-6):
            continue
        sd = subdifferential(f, x)
        if np.ptp(sd.vertices @ x) > 1e-9:
            continue
        R = radial_flat(f, x, 0.05)
        for t in R.grid():
            if not f.in_box(t * x) or t == 0:
                continue
            if not subdifferential(f, t * x).contains(sd, 1e-9):
                report.radial_failures += 1


def run_battery(n_per_dim: int = 100, seed: int = 0) -> LemmaReport:
    rng = np.random.default_rng(seed)
    report = LemmaReport()
    t0 = time.perf_counter()
    for d in (1, 2):
        for _ in range(n_per_dim):
            f = random_pl(rng, d)
            check_instance(f, rng, report)
            report.instances += 1
    report.seconds = time.perf_counter() - t0
    return report
