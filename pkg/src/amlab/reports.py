"""Deterministic CSV/JSON output and the run manifest.

Floats are written with ``repr`` (shortest round-trip form), JSON keys are
sorted and every file ends with a newline, so identical inputs give
identical bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .action import AubrySetEstimate, EdgeCostMatrix, SpaceGrid, WeakKamSolution
from .convex_core import PLConvexFunction, RadialFlatInterval
from .mather import MinimizingMeasure, SupportDecomposition, TheoremReport
from .polytope import Polytope


def fmt(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if v == 0.0:
        return "0.0"  # no negative zeros
    return repr(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return path


def to_jsonable(obj: Any) -> Any:
    if obj is None or isinstance(obj, (str, bool)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return repr(v)
        return 0.0 if v == 0.0 else v
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, Polytope):
        return {"vertices": to_jsonable(obj.vertices), "dim": obj.dim}
    if isinstance(obj, PLConvexFunction):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Path, obj: Any) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ------------------------------------------------------------------ rows


def _axes(d: int, prefix: str) -> list[str]:
    return [f"{prefix}{i + 1}" for i in range(d)]


def write_edges(path: Path, costs: EdgeCostMatrix) -> Path:
    e = costs.edges
    d = e.grid.d
    header = ["source", "target", *_axes(d, "lift"), "cost"]
    rows = ([int(e.src[i]), int(e.tgt[i]), *e.lift[i].tolist(), costs.cost[i]] for i in range(len(e)))
    return write_csv(path, header, rows)


def write_grid_function(path: Path, grid: SpaceGrid, columns: dict[str, np.ndarray]) -> Path:
    header = ["node", *_axes(grid.d, "x"), *columns]
    X = grid.coords()
    cols = [np.asarray(v) for v in columns.values()]
    rows = ([i, *X[i].tolist(), *(c[i] for c in cols)] for i in range(grid.n_nodes))
    return write_csv(path, header, rows)


def write_measure(path: Path, mu: MinimizingMeasure, mass_tol: Optional[float] = None, extra: Optional[dict] = None) -> Path:
    """Support edges of a measure: (source, target, lift, mass) plus optional leading columns."""
    e = mu.edges
    d = e.grid.d
    extra = extra or {}
    header = [*extra, "source", "target", *_axes(d, "lift"), "mass"]
    rows = [[*extra.values(), int(e.src[i]), int(e.tgt[i]), *e.lift[i].tolist(), mu.mass[i]] for i in mu.support(mass_tol)]
    return write_csv(path, header, rows)


def aubry_columns(sol: WeakKamSolution, aubry: AubrySetEstimate, multiplicity: np.ndarray) -> dict[str, np.ndarray]:
    member = np.zeros(len(sol.u), dtype=bool)
    member[aubry.nodes] = True
    return {"u": sol.u, "peierls": aubry.h_diag, "in_aubry": member, "velocities": multiplicity}


def decomposition_summary(dec: SupportDecomposition) -> dict:
    return {
        "nodes": dec.nodes,
        "residue": dec.residue,
        "cycles": [
            {"length": len(c.edges), "mass": c.mass, "displacement": c.displacement, "class": c.primitive_class, "fixed_point": c.is_fixed_point}
            for c in dec.cycles
        ],
    }


def radial_summary(r: Optional[RadialFlatInterval]) -> Optional[dict]:
    if r is None:
        return None
    return {"h": r.h, "t_min": r.t_min, "t_max": r.t_max, "t_step": r.t_step, "tol_flat": r.tol}


def theorem_summary(rep: TheoremReport) -> dict:
    sing = rep.singularity
    return {
        "h": rep.h,
        "verdict": rep.verdict,
        "failed_stage": rep.failed_stage,
        "message": rep.message,
        "tolerances": rep.tolerances,
        "singularity": None if sing is None else {"verdict": sing.verdict, "min_speed": sing.min_speed, "v_tol": sing.v_tol, "mass_tol": sing.mass_tol},
        "radial_flat": radial_summary(rep.radial),
        "legendre_flat": rep.flat_L,
        "c": rep.c,
        "alpha_c": rep.alpha_c,
        "aubry_nodes": None if rep.aubry is None else rep.aubry.nodes,
        "mather_nodes": rep.mather_nodes,
        "hausdorff": rep.hausdorff,
        "checks": rep.checks,
        "supports": [dict(t=t, **decomposition_summary(dec)) for t, dec in rep.decompositions],
    }


# -------------------------------------------------------------- manifest


@dataclasses.dataclass
class RunManifest:
    command: str
    config: dict
    version: str = __version__
    status: str = "ok"  # "ok", "tolerance-failed" or "error"
    exit_code: int = 0
    stages: dict = dataclasses.field(default_factory=dict)  # stage -> wall-clock seconds
    checks: dict = dataclasses.field(default_factory=dict)
    files: list = dataclasses.field(default_factory=list)
    error: Optional[dict] = None

    def inventory(self, out: Path, names: Iterable[str]) -> None:
        self.files = [
            {"name": n, "bytes": (Path(out) / n).stat().st_size, "sha256": sha256(Path(out) / n)} for n in sorted(names)
        ]

    def write(self, out: Path) -> Path:
        return write_json(Path(out) / "manifest.json", self)
