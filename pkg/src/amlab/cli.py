"""Command line front end: ``amlab <command> --config run.json [--out dir] [--set key=value]``.

A config is a JSON object with a ``schema`` field. Each command reads the
keys it needs, writes CSV/JSON results plus ``manifest.json`` into the
output directory, and exits 0 only when every declared expectation holds.

Exit codes: 0 ok, 1 an expectation failed, 2 bad config, 3 a stage raised.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import traceback
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import reports
from .action import (
    Discretization,
    alpha_flat_endpoint,
    alpha_scan,
    aubry_set,
    default_tol_A,
    discretize,
    node_hausdorff,
    peierls_diag,
    solve_critical,
    velocity_multiplicity,
)
from .convex_core import maximal_flat_through
from .lagrangian import LagrangianSpec, VelocityCap, catalog
from .lemmas import run_battery
from .mather import (
    TheoremTolerances,
    beta_scan,
    build_lp,
    default_mass_tol,
    default_tol_flat,
    is_singular,
    mather_support,
    radial_flat_of,
    ray_grid,
    ray_scan,
    solve_lp,
    support_velocity_multiplicity,
    verify_theorem,
)

SCHEMA = "amlab-run/1"
COMMANDS = ("alpha", "beta", "aubry", "mather", "flats", "singular", "verify-theorem", "lemma-suite")

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, field: str, message: str, line: Optional[int] = None):
        self.field = field
        self.line = line
        where = f"line {line}, " if line else ""
        super().__init__(f"{where}field '{field}': {message}")


# ---------------------------------------------------------------- config


def _key_line(text: str, field: str) -> Optional[int]:
    key = f'"{field.split(".")[-1]}"'
    for i, line in enumerate(text.splitlines(), 1):
        if key in line:
            return i
    return None


def parse_config(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", exc.msg, exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("<document>", "top level must be an object", 1)
    return data


def apply_overrides(cfg: dict, sets: list[str]) -> dict:
    """Apply ``key.sub=value`` overrides; values are parsed as JSON when possible."""
    cfg = json.loads(json.dumps(cfg))
    for item in sets:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(key, f"'{p}' is not an object")
        node[parts[-1]] = value
    return cfg


@dataclass
class RunConfig:
    raw: dict
    text: str = ""

    def fail(self, field: str, message: str):
        raise ConfigError(field, message, _key_line(self.text, field))

    def get(self, field: str, default: Any = None) -> Any:
        node: Any = self.raw
        for p in field.split("."):
            if not isinstance(node, dict) or p not in node:
                return default
            node = node[p]
        return node

    def number(self, field: str, default: Optional[float] = None, positive: bool = True) -> Optional[float]:
        v = self.get(field, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(field, f"expected a number, got {v!r}")
        if positive and not v > 0:
            self.fail(field, f"must be positive, got {v!r}")
        return float(v)

    def integer(self, field: str, default: Optional[int] = None) -> Optional[int]:
        v = self.get(field, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
            self.fail(field, f"expected a positive integer, got {v!r}")
        return int(v)

    def vector(self, field: str, d: int, default: Any = None) -> Optional[np.ndarray]:
        v = self.get(field, default)
        if v is None:
            return None
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            v = [v]
        if not isinstance(v, list) or len(v) != d or not all(isinstance(a, (int, float)) and not isinstance(a, bool) for a in v):
            self.fail(field, f"expected a list of {d} numbers, got {v!r}")
        return np.array(v, dtype=float)

    def require(self, field: str) -> Any:
        v = self.get(field)
        if v is None:
            self.fail(field, "is required for this command")
        return v


def load_config(path: Path, sets: Optional[list[str]] = None) -> RunConfig:
    text = Path(path).read_text()
    cfg = RunConfig(apply_overrides(parse_config(text), sets or []), text)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    schema = cfg.get("schema")
    if schema != SCHEMA:
        cfg.fail("schema", f"expected '{SCHEMA}', got {schema!r}")
    if cfg.get("lagrangian") is not None:
        resolve_lagrangian(cfg)
    cfg.integer("grid.N")
    cfg.number("grid.tau")
    cfg.number("grid.cap")
    tol = cfg.get("tolerances", {})
    if not isinstance(tol, dict):
        cfg.fail("tolerances", "expected an object")
    for k in tol:
        cfg.number(f"tolerances.{k}")


def resolve_lagrangian(cfg: RunConfig) -> LagrangianSpec:
    lag = cfg.get("lagrangian")
    if lag is None:
        cfg.fail("lagrangian", "is required")
    cat = catalog()
    try:
        if isinstance(lag, str):
            return cat.get(lag)
        if isinstance(lag, dict) and "preset" in lag:
            params = {k: v for k, v in lag.items() if k != "preset"}
            return cat.get(lag["preset"], **params)
        if isinstance(lag, dict):
            return LagrangianSpec.from_dict(lag)
    except (KeyError, TypeError, ValueError) as exc:
        cfg.fail("lagrangian", str(exc))
    cfg.fail("lagrangian", "expected a preset name or an object")


def build_discretization(cfg: RunConfig) -> Discretization:
    L = resolve_lagrangian(cfg)
    N = cfg.integer("grid.N")
    tau = cfg.number("grid.tau")
    if N is None or tau is None:
        cfg.fail("grid", "needs N and tau")
    R = cfg.number("grid.cap")
    return discretize(L, N, tau, None if R is None else VelocityCap(R))


def scan_points(cfg: RunConfig, field: str, d: int) -> np.ndarray:
    """Box grid lo..hi with pitch step, optionally cut to a Euclidean ball."""
    lo = cfg.vector(f"{field}.lo", d)
    hi = cfg.vector(f"{field}.hi", d)
    step = cfg.number(f"{field}.step")
    if lo is None or hi is None or step is None:
        cfg.fail(field, "needs lo, hi and step")
    if np.any(hi < lo):
        cfg.fail(field, "hi must be >= lo")
    axes = [np.round(a + step * np.arange(int(np.floor((b - a) / step + 1e-9)) + 1), 12) for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    radius = cfg.number(f"{field}.radius")
    if radius is not None:
        pts = pts[np.linalg.norm(pts, axis=1) <= radius + 1e-12]
    return pts


# ------------------------------------------------------------- execution


class Run:
    """Output directory, manifest and timing for one command."""

    def __init__(self, command: str, cfg: RunConfig, out: Path):
        self.command = command
        self.cfg = cfg
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self.manifest = reports.RunManifest(command, cfg.raw)
        self.summary: dict = {}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.manifest.stages[name] = round(time.perf_counter() - t0, 3)

    def path(self, name: str) -> Path:
        if name not in self.files:
            self.files.append(name)
        return self.out / name

    def check(self, name: str, ok: bool, value: Any = None, limit: Any = None) -> None:
        self.manifest.checks[name] = {"ok": bool(ok), "value": value, "limit": limit}

    def expect(self, key: str) -> Any:
        return self.cfg.get(f"expect.{key}")


def _fraction_single(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.mean(m == 1)) if len(m) else 1.0


def _support_fraction(mu, mass_tol: Optional[float] = None) -> float:
    return _fraction_single(support_velocity_multiplicity(mu, mass_tol))


def _cmd_alpha(run: Run, D: Discretization) -> None:
    cfg, d = run.cfg, D.grid.d
    cs = scan_points(cfg, "c_scan", d)
    with run.stage("scan"):
        sc = alpha_scan(D, cs)
    reports.write_csv(
        run.path("alpha.csv"),
        [*[f"c{i + 1}" for i in range(d)], "alpha", "converged"],
        ([*c.tolist(), a, s.converged] for c, a, s in zip(sc.cs, sc.alphas, sc.solutions)),
    )
    run.check("converged", all(s.converged for s in sc.solutions))
    c0 = cfg.vector("c0", d, [0.0] * d)
    with run.stage("flat"):
        f = sc.function()
        F = maximal_flat_through(f, c0)
        flat: dict = {"through": c0, "scan_flat": F, "function": f}
        if d == 1 and F.dim == 1:
            step = cfg.number("c_scan.step")
            hi = alpha_flat_endpoint(D, c0, [1.0], float(F.vertices.max() - c0[0]) + step)
            lo = alpha_flat_endpoint(D, c0, [-1.0], float(c0[0] - F.vertices.min()) + step)
            flat["endpoints"] = [float(c0[0] - lo), float(c0[0] + hi)]
            flat["width"] = float(hi + lo)
        else:
            flat["width"] = float(np.ptp(F.vertices, axis=0).max())
    reports.write_json(run.path("flats.json"), {"alpha_flat": flat})
    run.summary.update(width=flat["width"], endpoints=flat.get("endpoints"))

    w = run.expect("flat_width")
    if w is not None:
        err = abs(flat["width"] / w["value"] - 1)
        run.check("flat_width", err <= w["rel"], flat["width"], w)
    q = run.expect("quadratic_abs")
    if q is not None:
        dev = float(np.abs(sc.alphas - 0.5 * np.sum(sc.cs**2, axis=1)).max())
        run.check("quadratic_abs", dev <= q, dev, q)


def _cmd_beta(run: Run, D: Discretization) -> None:
    cfg, d = run.cfg, D.grid.d
    hs = scan_points(cfg, "h_scan", d)
    with run.stage("lp"):
        sc = beta_scan(D, hs)
    with run.stage("duality"):
        alphas = np.array([D.alpha(mu.cohomology) for mu in sc.measures])
        gaps = np.array([a + mu.beta - float(mu.cohomology @ h) for a, mu, h in zip(alphas, sc.measures, sc.hs)])
    header = [*[f"h{i + 1}" for i in range(d)], "beta", *[f"c{i + 1}" for i in range(d)], "alpha_c", "gap", "single_velocity"]
    reports.write_csv(
        run.path("beta.csv"),
        header,
        (
            [*h.tolist(), mu.beta, *mu.cohomology.tolist(), a, g, _support_fraction(mu)]
            for h, mu, a, g in zip(sc.hs, sc.measures, alphas, gaps)
        ),
    )
    if sc.function is not None:
        reports.write_json(run.path("flats.json"), {"beta_function": sc.function})
    tol_gap = cfg.number("tolerances.duality", 1e-7)
    run.check("fenchel_inequality", bool(gaps.min() >= -tol_gap), float(gaps.min()), -tol_gap)
    g = run.expect("duality_gap")
    if g is not None:
        run.check("duality_gap", bool(gaps.max() <= g), float(gaps.max()), g)
    q = run.expect("quadratic_abs")
    if q is not None:
        dev = float(np.abs(sc.betas - 0.5 * np.sum(sc.hs**2, axis=1)).max())
        run.check("quadratic_abs", dev <= q, dev, q)


def _cmd_aubry(run: Run, D: Discretization) -> None:
    cfg, d = run.cfg, D.grid.d
    c = cfg.vector("c", d, [0.0] * d)
    tol_A = cfg.number("tolerances.tol_A", default_tol_A(D.grid, D.tau))
    costs = D.costs_for(c)
    with run.stage("weak_kam"):
        sol = solve_critical(costs)
    with run.stage("peierls"):
        A = aubry_set(peierls_diag(costs, sol.lam), tol_A)
    mult = velocity_multiplicity(sol, costs)
    reports.write_grid_function(run.path("aubry.csv"), D.grid, reports.aubry_columns(sol, A, mult))
    coverage = len(A.nodes) / D.grid.n_nodes
    graph = _fraction_single(mult[A.nodes])
    reports.write_json(
        run.path("aubry.json"),
        {"c": c, "alpha": sol.lam, "tol_A": tol_A, "nodes": A.nodes, "coverage": coverage, "single_velocity_fraction": graph},
    )
    run.summary.update(nodes=A.nodes.tolist(), coverage=coverage, alpha=sol.lam, graph=graph)
    run.check("converged", sol.converged, sol.residual)
    for key, ok, value in (
        ("min_coverage", lambda v: coverage >= v, coverage),
        ("max_nodes", lambda v: len(A.nodes) <= v, len(A.nodes)),
        ("graph_fraction", lambda v: graph >= v, graph),
    ):
        lim = run.expect(key)
        if lim is not None:
            run.check(key, ok(lim), value, lim)
    r = run.expect("near_origin")
    if r is not None:
        dist = D.grid.torus_distance(D.grid.coords(A.nodes), np.zeros((1, d))).max()
        run.check("near_origin", bool(dist <= r + 1e-12), float(dist), r)


def _cmd_mather(run: Run, D: Discretization) -> None:
    cfg, d = run.cfg, D.grid.d
    h = cfg.vector("h", d, [0.0] * d)
    mass_tol = cfg.number("tolerances.mass_tol", default_mass_tol(D.edges))
    with run.stage("lp"):
        mu = solve_lp(build_lp(D.costs, h))
    dec = mather_support(mu, mass_tol)
    reports.write_measure(run.path("mather_edges.csv"), mu, mass_tol)
    graph = _fraction_single(support_velocity_multiplicity(mu, mass_tol))
    reports.write_json(
        run.path("mather.json"),
        {"h": h, "beta": mu.beta, "cohomology": mu.cohomology, "single_velocity_fraction": graph, **reports.decomposition_summary(dec)},
    )
    run.summary.update(nodes=dec.nodes.tolist(), beta=mu.beta, graph=graph, cycles=[(len(c.edges), c.primitive_class.tolist()) for c in dec.cycles])
    run.check("zero_residue", dec.residue <= 1e-6, dec.residue)
    box = run.expect("support_box")
    if box is not None:
        M = D.grid.multi_index(dec.nodes)
        k = np.minimum(M, D.grid.N - M).max()
        run.check("support_box", bool(k <= box), int(k), box)
    if run.expect("fixed_point") is not None:
        fixed = any(c.is_fixed_point for c in dec.cycles)
        run.check("fixed_point", fixed == bool(run.expect("fixed_point")), fixed, run.expect("fixed_point"))
    lim = run.expect("graph_fraction")
    if lim is not None:
        run.check("graph_fraction", graph >= lim, graph, lim)


def _ray(run: Run, D: Discretization, h: np.ndarray):
    t_step = run.cfg.number("ray.t_step", 0.1 / float(np.linalg.norm(h)))
    t_max = run.cfg.number("ray.t_max", min(2.0, 0.999 * D.cap.R / float(np.linalg.norm(h))))
    return t_step, ray_grid(t_step, t_max)


def _cmd_flats(run: Run, D: Discretization) -> None:
    cfg, d = run.cfg, D.grid.d
    h = cfg.vector("h", d)
    if h is None or not np.any(h):
        cfg.fail("h", "a nonzero rotation vector is required")
    t_step, ts = _ray(run, D, h)
    tol_flat = cfg.number("tolerances.tol_flat", default_tol_flat(D))
    with run.stage("ray"):
        sc = ray_scan(D, h, ts)
    R = radial_flat_of(sc, t_step, tol_flat)
    reports.write_csv(
        run.path("beta.csv"),
        ["t", *[f"h{i + 1}" for i in range(d)], "beta", *[f"c{i + 1}" for i in range(d)], "single_velocity"],
        ([t, *(t * h).tolist(), mu.beta, *mu.cohomology.tolist(), _support_fraction(mu)] for t, mu in zip(sc.ts, sc.measures)),
    )
    reports.write_json(run.path("flats.json"), {"radial_flat": reports.radial_summary(R), "ray_function": sc.function})
    run.summary.update(t_min=R.t_min, t_max=R.t_max)
    exp = run.expect("radial")
    if exp is not None:
        slack = exp.get("steps", 0) * t_step + 1e-9
        ok = abs(R.t_min - exp["t_min"]) <= slack and abs(R.t_max - exp["t_max"]) <= slack
        run.check("radial", ok, [R.t_min, R.t_max], exp)


def _cmd_singular(run: Run, D: Discretization) -> None:
    cfg, d = run.cfg, D.grid.d
    h = cfg.vector("h", d, [0.0] * d)
    kw = {
        "tol_flat": cfg.number("tolerances.tol_flat", default_tol_flat(D)),
        "v_tol": cfg.number("tolerances.v_tol"),
        "mass_tol": cfg.number("tolerances.mass_tol"),
    }
    with run.stage("singularity"):
        if np.any(h):
            t_step, ts = _ray(run, D, h)
            rep = is_singular(D, h, scan=ray_scan(D, h, ts), t_step=t_step, **kw)
        else:
            rep = is_singular(D, h, **kw)
    reports.write_json(
        run.path("singular.json"),
        {"h": h, "verdict": rep.verdict, "radial_flat": reports.radial_summary(rep.radial), "min_speed": rep.min_speed, "v_tol": rep.v_tol, "mass_tol": rep.mass_tol},
    )
    run.summary.update(verdict=rep.verdict)
    run.check("determined", rep.verdict != "undetermined", rep.verdict)
    v = run.expect("verdict")
    if v is not None:
        run.check("verdict", rep.verdict == v, rep.verdict, v)


def _cmd_verify_theorem(run: Run, D: Discretization) -> None:
    cfg, d = run.cfg, D.grid.d
    h = cfg.vector("h", d)
    if h is None:
        cfg.fail("h", "is required for this command")
    names = ("tol_A", "tol_flat", "hausdorff", "mass_tol", "v_tol", "scan_step", "t_max")
    kw = {k: cfg.number(f"tolerances.{k}") for k in names if cfg.get(f"tolerances.{k}") is not None}
    if cfg.get("tolerances.scan_radius") is not None:
        kw["scan_radius"] = int(cfg.number("tolerances.scan_radius"))
    with run.stage("theorem"):
        rep = verify_theorem(D, h, TheoremTolerances(**kw))
    summary = reports.theorem_summary(rep)
    if rep.aubry is not None:
        mult = velocity_multiplicity(rep.weak_kam, D.costs_for(rep.c))
        summary["aubry_single_velocity_fraction"] = _fraction_single(mult[rep.aubry.nodes])
        reports.write_grid_function(run.path("aubry.csv"), D.grid, reports.aubry_columns(rep.weak_kam, rep.aubry, mult))
    if rep.decompositions:
        e = D.edges
        per_t = []
        for _, dec in rep.decompositions:
            pairs = np.unique(np.column_stack([e.src[dec.edges], e.offset[dec.edges]]), axis=0)
            per_t.append(_fraction_single(np.unique(pairs[:, 0], return_counts=True)[1]))
        summary["mather_single_velocity_fraction"] = min(per_t)
        rows = []
        for t, dec in rep.decompositions:
            mass = np.zeros(len(e))
            for cyc in dec.cycles:
                mass[cyc.edges] += cyc.mass
            rows += [[t, int(e.src[i]), int(e.tgt[i]), *e.lift[i].tolist(), mass[i]] for i in dec.edges]
        reports.write_csv(run.path("mather_edges.csv"), ["t", "source", "target", *[f"lift{i + 1}" for i in range(d)], "mass"], rows)
    curve = run.expect("curve")
    if curve is not None and rep.mather_nodes is not None:
        ax, val = int(curve["axis"]), float(curve["value"])
        diff = np.abs(D.grid.coords()[:, ax] - val) % 1.0
        diff = np.minimum(diff, 1 - diff)
        circle = np.flatnonzero(diff <= diff.min() + 1e-12)  # nearest grid row of the circle
        dist = {
            name: node_hausdorff(D.grid, nodes, circle)
            for name, nodes in (("aubry", rep.aubry.nodes), ("mather", rep.mather_nodes))
        }
        summary["curve_distance"] = dist
        lim = rep.tolerances.hausdorff
        run.check("curve", max(dist.values()) <= lim + 1e-12, dist, lim)
    reports.write_json(run.path("theorem_report.json"), summary)
    run.summary.update(verdict=rep.verdict, hausdorff=rep.hausdorff)
    if rep.verdict == "error":
        raise RuntimeError(rep.message)
    run.check("theorem", rep.passed, rep.verdict)


def _cmd_lemma_suite(run: Run, D: Optional[Discretization]) -> None:
    n = run.cfg.integer("lemma.n_per_dim", 100)
    seed = run.cfg.get("lemma.seed", 0)
    with run.stage("battery"):
        rep = run_battery(n, int(seed))
    data = rep.to_dict()
    data.pop("seconds")  # timings live in the manifest
    reports.write_json(run.path("lemma_report.json"), data)
    run.summary.update(seconds=rep.seconds, passed=rep.passed)
    run.check("lemmas", rep.passed)
    lim = run.expect("max_seconds")
    if lim is not None:
        run.check("max_seconds", rep.seconds <= lim, rep.seconds, lim)


HANDLERS: dict[str, Callable] = {
    "alpha": _cmd_alpha,
    "beta": _cmd_beta,
    "aubry": _cmd_aubry,
    "mather": _cmd_mather,
    "flats": _cmd_flats,
    "singular": _cmd_singular,
    "verify-theorem": _cmd_verify_theorem,
    "lemma-suite": _cmd_lemma_suite,
}


@dataclass
class RunResult:
    exit_code: int
    manifest: reports.RunManifest
    summary: dict
    out: Path


def run(cfg: RunConfig | dict, command: str, out: Path) -> RunResult:
    """Run one command and write its files and manifest into ``out``."""
    if command not in HANDLERS:
        raise ValueError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    if isinstance(cfg, dict):
        cfg = RunConfig(cfg)
        validate(cfg)
    r = Run(command, cfg, out)
    code = EXIT_OK
    try:
        D = None
        if command != "lemma-suite":
            with r.stage("discretize"):
                D = build_discretization(cfg)
        HANDLERS[command](r, D)
        if not all(c["ok"] for c in r.manifest.checks.values()):
            code = EXIT_TOLERANCE
            r.manifest.status = "tolerance-failed"
    except ConfigError:
        raise
    except Exception as exc:
        code = EXIT_STAGE
        r.manifest.status = "error"
        stage = next(reversed(r.manifest.stages), None) if r.manifest.stages else None
        r.manifest.error = {"type": type(exc).__name__, "message": str(exc), "stage": stage, "trace": traceback.format_exc(limit=3)}
    r.manifest.exit_code = code
    r.manifest.inventory(r.out, r.files)
    r.manifest.write(r.out)
    return RunResult(code, r.manifest, r.summary, r.out)


def main(argv: Optional[list[str]] = None) -> int:
    p = argparse.ArgumentParser(prog="amlab", description="Discrete weak KAM and Mather theory on tori.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, type=Path, help="JSON run config")
    p.add_argument("--out", type=Path, default=Path("amlab-out"), help="output directory")
    p.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE", help="override a config field")
    args = p.parse_args(argv)
    try:
        cfg = load_config(args.config, args.sets)
        res = run(cfg, args.command, args.out)
    except ConfigError as exc:
        print(f"config error in {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status = res.manifest.status
    for name, c in res.manifest.checks.items():
        print(f"{'ok  ' if c['ok'] else 'FAIL'} {name}: {c['value']!r}" + (f" (limit {c['limit']!r})" if c["limit"] is not None else ""))
    if res.manifest.error:
        print(f"error in stage {res.manifest.error['stage']}: {res.manifest.error['message']}", file=sys.stderr)
    print(f"{args.command}: {status}; files in {res.out}")
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
