"""Tonelli Lagrangians on the flat torus T^d = R^d / Z^d, d in {1, 2}.

Three closed-form families are supported:

* ``mechanical``: L(x, v) = 1/2 |v|^2 + V(x)
* ``mane``:       L(x, v) = 1/2 |v - X(x)|^2 (+ V(x) when a pinning potential is attached)
* ``quadratic``:  L(x, v) = 1/2 <G v, v> with G constant symmetric positive definite

Fields are finite sums of periodic terms so periodicity holds term by term.
All evaluators are vectorised over leading axes: ``x`` and ``v`` have shape
``(..., d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi
TERM_KINDS = ("const", "cos", "sin", "sin2")
VARIANTS = ("mechanical", "mane", "quadratic")


class LagrangianError(ValueError):
    """Invalid Lagrangian or one-form specification."""


@dataclass(frozen=True)
class Term:
    """One periodic term: coef * const | cos(2 pi k.x) | sin(2 pi k.x) | sin^2(pi x_axis)."""

    kind: str
    coef: float
    k: tuple[int, ...] = ()
    axis: int = 0

    def __post_init__(self):
        if self.kind not in TERM_KINDS:
            raise LagrangianError(f"unknown term kind {self.kind!r}")


@dataclass(frozen=True)
class ScalarField:
    d: int
    terms: tuple[Term, ...] = ()

    def __post_init__(self):
        for t in self.terms:
            if t.kind in ("cos", "sin") and len(t.k) != self.d:
                raise LagrangianError(f"wave vector {t.k} does not match d={self.d}")
            if t.kind == "sin2" and not 0 <= t.axis < self.d:
                raise LagrangianError(f"axis {t.axis} out of range for d={self.d}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for t in self.terms:
            if t.kind == "const":
                out = out + t.coef
            elif t.kind == "cos":
                out = out + t.coef * np.cos(TWO_PI * (x @ np.asarray(t.k, dtype=float)))
            elif t.kind == "sin":
                out = out + t.coef * np.sin(TWO_PI * (x @ np.asarray(t.k, dtype=float)))
            else:
                out = out + t.coef * np.sin(np.pi * x[..., t.axis]) ** 2
        return out

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for t in self.terms:
            if t.kind == "const":
                continue
            if t.kind in ("cos", "sin"):
                k = np.asarray(t.k, dtype=float)
                phase = TWO_PI * (x @ k)
                if t.kind == "cos":
                    scale = -t.coef * TWO_PI * np.sin(phase)
                else:
                    scale = t.coef * TWO_PI * np.cos(phase)
                out = out + scale[..., None] * k
            else:
                # d/dx sin^2(pi x) = pi sin(2 pi x)
                out[..., t.axis] += t.coef * np.pi * np.sin(TWO_PI * x[..., t.axis])
        return out

    def sup_bound(self) -> float:
        """Upper bound on |f| from the coefficients."""
        return float(sum(abs(t.coef) for t in self.terms))

    def to_dict(self) -> dict:
        return {"d": self.d, "terms": [_term_to_dict(t) for t in self.terms]}

    @classmethod
    def from_dict(cls, data: dict) -> "ScalarField":
        d = int(data["d"])
        return cls(d, tuple(_term_from_dict(t) for t in data.get("terms", [])))


@dataclass(frozen=True)
class VectorField:
    components: tuple[ScalarField, ...]

    @property
    def d(self) -> int:
        return len(self.components)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.stack([c(x) for c in self.components], axis=-1)

    def to_dict(self) -> dict:
        return {"components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, data: dict) -> "VectorField":
        return cls(tuple(ScalarField.from_dict(c) for c in data["components"]))


def _term_to_dict(t: Term) -> dict:
    out: dict[str, Any] = {"kind": t.kind, "coef": t.coef}
    if t.kind in ("cos", "sin"):
        out["k"] = list(t.k)
    if t.kind == "sin2":
        out["axis"] = t.axis
    return out


def _term_from_dict(data: dict) -> Term:
    return Term(
        kind=data["kind"],
        coef=float(data["coef"]),
        k=tuple(int(v) for v in data.get("k", ())),
        axis=int(data.get("axis", 0)),
    )


@dataclass(frozen=True)
class LagrangianSpec:
    variant: str
    d: int
    potential: Optional[ScalarField] = None
    field: Optional[VectorField] = None
    metric: Optional[tuple[tuple[float, ...], ...]] = None
    name: str = ""

    def __post_init__(self):
        if self.d not in (1, 2):
            raise LagrangianError(f"torus dimension must be 1 or 2, got {self.d}")
        if self.variant not in VARIANTS:
            raise LagrangianError(f"unknown variant {self.variant!r}")
        if self.potential is not None and self.potential.d != self.d:
            raise LagrangianError("potential dimension mismatch")
        if self.variant == "mechanical" and self.potential is None:
            raise LagrangianError("mechanical Lagrangian needs a potential")
        if self.variant == "mane":
            if self.field is None or self.field.d != self.d:
                raise LagrangianError("Mane Lagrangian needs a vector field of dimension d")
        if self.variant == "quadratic":
            if self.metric is None:
                raise LagrangianError("quadratic Lagrangian needs a metric G")
            G = np.asarray(self.metric, dtype=float)
            if G.shape != (self.d, self.d):
                raise LagrangianError(f"metric must be {self.d}x{self.d}")
            if not np.allclose(G, G.T):
                raise LagrangianError("metric must be symmetric")
            if np.linalg.eigvalsh(G).min() <= 0.0:
                raise LagrangianError("metric must be positive definite")

    def __call__(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return eval_L(self, x, v)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "d": self.d,
            "name": self.name,
            "potential": None if self.potential is None else self.potential.to_dict(),
            "field": None if self.field is None else self.field.to_dict(),
            "metric": None if self.metric is None else [list(r) for r in self.metric],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LagrangianSpec":
        pot = data.get("potential")
        fld = data.get("field")
        met = data.get("metric")
        return cls(
            variant=data["variant"],
            d=int(data["d"]),
            potential=None if pot is None else ScalarField.from_dict(pot),
            field=None if fld is None else VectorField.from_dict(fld),
            metric=None if met is None else tuple(tuple(float(a) for a in r) for r in met),
            name=data.get("name", ""),
        )


def eval_L(spec: LagrangianSpec, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if spec.variant == "quadratic":
        G = np.asarray(spec.metric, dtype=float)
        out = 0.5 * np.einsum("...i,ij,...j->...", v, G, v)
        return np.broadcast_to(out, np.broadcast_shapes(x.shape[:-1], v.shape[:-1])).copy()
    if spec.variant == "mane":
        w = v - spec.field(x)
        out = 0.5 * np.sum(w * w, axis=-1)
    else:
        out = 0.5 * np.sum(v * v, axis=-1)
    if spec.potential is not None:
        out = out + spec.potential(x)
    return out


@dataclass(frozen=True)
class OneFormSpec:
    """Closed one-form c.dx + df with constant part ``c`` and exact part ``df``."""

    c: tuple[float, ...]
    exact: Optional[ScalarField] = None

    @property
    def d(self) -> int:
        return len(self.c)

    def __post_init__(self):
        if self.exact is not None and self.exact.d != len(self.c):
            raise LagrangianError("exact part dimension mismatch")

    def __call__(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return eval_oneform(self, x, v)

    def to_dict(self) -> dict:
        return {"c": list(self.c), "exact": None if self.exact is None else self.exact.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "OneFormSpec":
        ex = data.get("exact")
        return cls(tuple(float(a) for a in data["c"]), None if ex is None else ScalarField.from_dict(ex))


def oneform(c: Sequence[float] | float, exact: Optional[ScalarField] = None) -> OneFormSpec:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return OneFormSpec(tuple(float(a) for a in c), exact)


def eval_oneform(omega: OneFormSpec, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    out = v @ np.asarray(omega.c, dtype=float)
    if omega.exact is not None:
        out = out + np.sum(omega.exact.grad(x) * v, axis=-1)
    return out


@dataclass(frozen=True)
class VelocityCap:
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise LagrangianError(f"velocity cap must be positive, got {self.R}")


@dataclass
class TonelliReport:
    min_hessian_eig: float
    min_superlinear_ratio: float
    threshold: float
    violations: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def tonelli_check(
    spec: LagrangianSpec,
    xs: np.ndarray,
    vs: np.ndarray,
    threshold: float = 0.0,
    fd_step: float = 1e-3,
) -> TonelliReport:
    """Check convexity and a superlinearity proxy on sample grids.

    The fibre Hessian is estimated by central second differences. The
    superlinearity proxy is min L(x, v)/|v| over the velocity samples of
    largest norm (the outer shell).
    """
    xs = np.asarray(xs, dtype=float).reshape(-1, spec.d)
    vs = np.asarray(vs, dtype=float).reshape(-1, spec.d)
    if len(xs) == 0 or len(vs) == 0:
        raise LagrangianError("tonelli_check needs nonempty grids")
    d = spec.d
    X = np.repeat(xs, len(vs), axis=0)
    V = np.tile(vs, (len(xs), 1))
    eye = np.eye(d) * fd_step
    H = np.empty((len(X), d, d))
    L0 = eval_L(spec, X, V)
    for i in range(d):
        for j in range(i, d):
            if i == j:
                val = (eval_L(spec, X, V + eye[i]) - 2 * L0 + eval_L(spec, X, V - eye[i])) / fd_step**2
            else:
                val = (
                    eval_L(spec, X, V + eye[i] + eye[j])
                    - eval_L(spec, X, V + eye[i] - eye[j])
                    - eval_L(spec, X, V - eye[i] + eye[j])
                    + eval_L(spec, X, V - eye[i] - eye[j])
                ) / (4 * fd_step**2)
            H[:, i, j] = val
            H[:, j, i] = val
    eigs = np.linalg.eigvalsh(H).min(axis=1)

    norms = np.linalg.norm(V, axis=1)
    shell = norms >= norms.max() * (1 - 1e-12)
    ratio = np.full(len(X), np.inf)
    ratio[shell] = L0[shell] / norms[shell]

    violations = []
    for idx in np.flatnonzero(eigs <= 0):
        violations.append({"x": X[idx].tolist(), "v": V[idx].tolist(), "reason": "hessian", "value": float(eigs[idx])})
    for idx in np.flatnonzero(shell & (ratio <= threshold)):
        violations.append({"x": X[idx].tolist(), "v": V[idx].tolist(), "reason": "superlinearity", "value": float(ratio[idx])})
    return TonelliReport(float(eigs.min()), float(ratio[shell].min()), threshold, violations)


def speed_bound(spec: LagrangianSpec, samples: int = 64) -> float:
    """Characteristic speed: max |X| for Mane fields plus sqrt(2 max V) for potentials."""
    axes = [np.arange(samples) / samples] * spec.d
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.d)
    s = 0.0
    if spec.field is not None:
        s += float(np.linalg.norm(spec.field(pts), axis=-1).max())
    if spec.potential is not None:
        s += float(np.sqrt(2.0 * max(spec.potential(pts).max(), 0.0)))
    return s


def default_cap(spec: LagrangianSpec) -> VelocityCap:
    return VelocityCap(max(2.0, 1.0 + speed_bound(spec)))


# ---------------------------------------------------------------- catalog


def _pendulum() -> LagrangianSpec:
    V = ScalarField(1, (Term("const", 1.0), Term("cos", -1.0, (1,))))
    return LagrangianSpec("mechanical", 1, potential=V, name="pendulum")


def _flat2() -> LagrangianSpec:
    return LagrangianSpec("quadratic", 2, metric=((1.0, 0.0), (0.0, 1.0)), name="flat2")


def _shear_field() -> VectorField:
    X1 = ScalarField(2, (Term("const", 1.0), Term("cos", 0.5, (0, 1))))
    return VectorField((X1, ScalarField(2, ())))


def _mane_shear() -> LagrangianSpec:
    return LagrangianSpec("mane", 2, field=_shear_field(), name="mane_shear")


def _mane_shear_pinned(eps: float = 0.1) -> LagrangianSpec:
    V = ScalarField(2, (Term("const", eps), Term("cos", -eps, (0, 1))))
    return LagrangianSpec("mane", 2, field=_shear_field(), potential=V, name=f"mane_shear_pinned({eps:g})")


def _mane_homoclinic() -> LagrangianSpec:
    X = VectorField((ScalarField(2, (Term("sin2", 1.0, axis=0),)), ScalarField(2, (Term("sin2", 1.0, axis=1),))))
    return LagrangianSpec("mane", 2, field=X, name="mane_homoclinic")


class Catalog:
    """Named presets. ``mane_shear_pinned`` takes the pinning strength."""

    names = ("pendulum", "flat2", "mane_shear", "mane_shear_pinned", "mane_homoclinic")

    @property
    def pendulum(self) -> LagrangianSpec:
        return _pendulum()

    @property
    def flat2(self) -> LagrangianSpec:
        return _flat2()

    @property
    def mane_shear(self) -> LagrangianSpec:
        return _mane_shear()

    def mane_shear_pinned(self, eps: float = 0.1) -> LagrangianSpec:
        return _mane_shear_pinned(eps)

    @property
    def mane_homoclinic(self) -> LagrangianSpec:
        return _mane_homoclinic()

    def get(self, name: str, **params) -> LagrangianSpec:
        if name == "mane_shear_pinned":
            return _mane_shear_pinned(float(params.get("eps", 0.1)))
        if name not in self.names:
            raise LagrangianError(f"unknown preset {name!r}; known: {', '.join(self.names)}")
        if params:
            raise LagrangianError(f"preset {name!r} takes no parameters")
        return getattr(self, name)


def catalog() -> Catalog:
    return Catalog()
