"""Derivative extraction and auditing.

Data-typed values are flattened into a structural path (the constructors
chosen, left to right) plus a float vector of coordinates.  Tangents and
cotangents are flattened along their primal, so that both live in the same
coordinates as the point.  On top of that sit JVP/VJP extraction, a
central-difference oracle, the transpose identity, and a report format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ComponentCrossed, NotADataType, ShapeMismatch
from .evaluator import Evaluator, tuple_build, tuple_items
from .forward import _d2, fwd_transform, fwd_transform_split, normalize_gamma
from .reverse import _r2, rev_transform, rev_transform_split
from .source import type_check
from .terms import Term
from .types import Mu, Prod, Real, TyVar, Type, Unit, Variant, show_type, unfold_type
from .values import (
    BIPRODUCT,
    LIFTED,
    InjV,
    LinValue,
    LCodataV,
    LPairV,
    LRollV,
    LSumV,
    LTupleV,
    LUnitV,
    LVec,
    PairV,
    RealVec,
    RollV,
    UnitV,
    Value,
    lin_roll,
    lin_zero,
)

TANGENT = "tangent"
COTANGENT = "cotangent"


@dataclass(frozen=True, eq=False)
class FlatPoint:
    """A data-typed value as (constructor path, coordinates)."""

    path: tuple
    coords: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, FlatPoint)
            and self.path == other.path
            and np.array_equal(self.coords, other.coords)
        )


def is_data_type(ty: Type, bound: frozenset = frozenset()) -> bool:
    """Built from ``R^n``, ``Unit``, products, variants and ``mu``."""
    match ty:
        case Real() | Unit():
            return True
        case TyVar(name):
            return name in bound
        case Prod(a, b):
            return is_data_type(a, bound) and is_data_type(b, bound)
        case Variant(cases):
            return all(is_data_type(t, bound) for _, t in cases)
        case Mu(var, body):
            return is_data_type(body, bound | {var})
    return False


def require_data_type(ty: Type) -> None:
    if not is_data_type(ty):
        raise NotADataType(f"{show_type(ty)} is not a data type")


# flatten / unflatten ---------------------------------------------------------


def flatten(v: Value, ty: Optional[Type] = None) -> FlatPoint:
    if ty is not None:
        require_data_type(ty)
    path: list = []
    coords: list = []
    _flat(v, path, coords)
    return FlatPoint(tuple(path), np.concatenate(coords) if coords else np.zeros(0))


def _flat(v: Value, path: list, coords: list) -> None:
    match v:
        case RealVec(data):
            coords.append(data)
        case UnitV():
            pass
        case PairV(a, b):
            _flat(a, path, coords)
            _flat(b, path, coords)
        case InjV(label, body):
            path.append(label)
            _flat(body, path, coords)
        case RollV(body):
            _flat(body, path, coords)
        case _:
            raise NotADataType(f"cannot flatten {v!r}")


def unflatten(ty: Type, fp: FlatPoint) -> Value:
    require_data_type(ty)
    cursor = _Cursor(list(fp.path), np.asarray(fp.coords, dtype=float))
    v = _unflat(ty, cursor)
    cursor.done()
    return v


class _Cursor:
    def __init__(self, path: list, coords: np.ndarray):
        self.path, self.coords = path, coords
        self.pi = self.ci = 0

    def label(self) -> str:
        if self.pi >= len(self.path):
            raise ShapeMismatch("constructor path is too short")
        self.pi += 1
        return self.path[self.pi - 1]

    def take(self, n: int) -> np.ndarray:
        if self.ci + n > len(self.coords):
            raise ShapeMismatch(f"expected at least {self.ci + n} coordinates, got {len(self.coords)}")
        self.ci += n
        return self.coords[self.ci - n : self.ci]

    def done(self) -> None:
        if self.pi != len(self.path) or self.ci != len(self.coords):
            raise ShapeMismatch(
                f"{len(self.coords) - self.ci} coordinates and {len(self.path) - self.pi} constructors left over"
            )


def _unflat(ty: Type, cur: _Cursor) -> Value:
    match ty:
        case Real(n):
            return RealVec(cur.take(n).copy())
        case Unit():
            return UnitV()
        case Prod(a, b):
            left = _unflat(a, cur)
            return PairV(left, _unflat(b, cur))
        case Variant():
            label = cur.label()
            if label not in ty.labels:
                raise ShapeMismatch(f"{label} is not a constructor of {show_type(ty)}")
            return InjV(label, _unflat(ty.case_type(label), cur))
        case Mu():
            return RollV(_unflat(unfold_type(ty), cur), ty)
    raise NotADataType(f"{show_type(ty)} is not a data type")


def flatten_env(gamma, env: dict) -> FlatPoint:
    """Concatenate the flattened context values in declaration order."""
    paths, coords = [], []
    for name, ty in normalize_gamma(gamma):
        fp = flatten(env[name], ty)
        paths.append(fp.path)
        coords.append(fp.coords)
    return FlatPoint(tuple(paths), np.concatenate(coords) if coords else np.zeros(0))


def unflatten_env(gamma, fp: FlatPoint) -> dict:
    gamma = normalize_gamma(gamma)
    env, offset = {}, 0
    for (name, ty), path in zip(gamma, fp.path, strict=True):
        n = _width(ty, path)
        env[name] = unflatten(ty, FlatPoint(path, fp.coords[offset : offset + n]))
        offset += n
    if offset != len(fp.coords):
        raise ShapeMismatch(f"expected {offset} coordinates, got {len(fp.coords)}")
    return env


def _width(ty: Type, path: tuple) -> int:
    """Number of coordinates of the component ``path`` of ``ty``."""
    cur = _Counter(list(path))
    n = cur.count(ty)
    if cur.pi != len(path):
        raise ShapeMismatch("constructor path is too long")
    return n


class _Counter:
    def __init__(self, path):
        self.path, self.pi = path, 0

    def count(self, ty: Type) -> int:
        match ty:
            case Real(n):
                return n
            case Unit():
                return 0
            case Prod(a, b):
                return self.count(a) + self.count(b)
            case Variant():
                if self.pi >= len(self.path):
                    raise ShapeMismatch("constructor path is too short")
                label = self.path[self.pi]
                self.pi += 1
                return self.count(ty.case_type(label))
            case Mu():
                return self.count(unfold_type(ty))
        raise NotADataType(f"{show_type(ty)} is not a data type")


# (co)tangents along a primal -----------------------------------------------------------


def lin_flatten(ty: Type, primal: Value, lv: LinValue) -> np.ndarray:
    """Coordinates of a tangent or cotangent ``lv`` at ``primal : ty``."""
    out: list = []
    _lflat(ty, primal, lv, out)
    return np.concatenate(out) if out else np.zeros(0)


def _lflat(ty: Type, p: Value, lv: LinValue, out: list) -> None:
    if isinstance(lv, (LRollV, LCodataV)) and lv.is_zero:
        out.append(np.zeros(len(flatten(p).coords)))
        return
    match ty:
        case Real(n):
            if not isinstance(lv, LVec) or len(lv.data) != n:
                raise ShapeMismatch(f"expected a linear vector of width {n}, got {lv!r}")
            out.append(lv.data)
        case Unit():
            pass
        case Prod(a, b):
            _lflat(a, p.left, lv.left, out)
            _lflat(b, p.right, lv.right, out)
        case Variant():
            i = ty.labels.index(p.label)
            sub = ty.case_type(p.label)
            if isinstance(lv, LTupleV):
                _lflat(sub, p.body, lv.comps[i], out)
            elif lv.tag is None:
                out.append(np.zeros(len(flatten(p.body).coords)))
            else:
                j, x = lv.tag
                if j != i:
                    raise ShapeMismatch(f"linear value in branch {j + 1} but primal in branch {i + 1}")
                _lflat(sub, p.body, x, out)
        case Mu():
            _lflat(unfold_type(ty), p.body, lv.force(), out)
        case _:
            raise NotADataType(f"{show_type(ty)} is not a data type")


def lin_unflatten(ty: Type, primal: Value, coords, kind: str = TANGENT, approach: str = LIFTED) -> LinValue:
    """Inverse of :func:`lin_flatten`; ``kind`` selects the tangent or cotangent space."""
    coords = np.asarray(coords, dtype=float)
    want = len(flatten(primal).coords)
    if len(coords) != want:
        raise ShapeMismatch(f"expected {want} coordinates, got {len(coords)}")
    cur = _Cursor([], coords)
    lv = _lunflat(ty, primal, cur, kind, approach)
    cur.done()
    return lv


def _lunflat(ty, p, cur, kind, approach):
    match ty:
        case Real(n):
            return LVec(cur.take(n).copy())
        case Unit():
            return LUnitV()
        case Prod(a, b):
            left = _lunflat(a, p.left, cur, kind, approach)
            return LPairV(left, _lunflat(b, p.right, cur, kind, approach))
        case Variant(cases):
            i = ty.labels.index(p.label)
            x = _lunflat(ty.case_type(p.label), p.body, cur, kind, approach)
            if approach == BIPRODUCT:
                lin_of = _d2 if kind == TANGENT else _r2
                return LTupleV(
                    tuple(x if j == i else lin_zero(lin_of(c), approach) for j, (_, c) in enumerate(cases))
                )
            return LSumV((i, x))
        case Mu():
            inner = _lunflat(unfold_type(ty), p.body, cur, kind, approach)
            if kind == TANGENT:
                return lin_roll(inner)
            cell = LCodataV(lambda: inner)
            cell.force()
            return cell
    raise NotADataType(f"{show_type(ty)} is not a data type")


# JVP / VJP ------------------------------------------------------------------------------


def _setup(gamma, t: Term):
    gamma = normalize_gamma(gamma)
    for _, ty in gamma:
        require_data_type(ty)
    out_ty = type_check((), gamma, t)
    require_data_type(out_ty)
    return gamma, out_ty


def jvp(gamma, t: Term, point: dict, tangent, *, approach: str = LIFTED, split: bool = False) -> np.ndarray:
    """Directional derivative of ``t`` at ``point`` along the flattened ``tangent``."""
    return jvp_with_primal(gamma, t, point, tangent, approach=approach, split=split)[1]


def jvp_with_primal(gamma, t, point, tangent, *, approach=LIFTED, split=False) -> tuple[Value, np.ndarray]:
    gamma, out_ty = _setup(gamma, t)
    ev = Evaluator(approach)
    tangent = np.asarray(tangent, dtype=float)
    ctx = _ctx_lin(gamma, point, tangent, TANGENT, approach)
    if split:
        prim_t, tan_t = fwd_transform_split(gamma, t)
        primal = ev.eval(prim_t, point)
        out = ev.eval(tan_t, point).apply(ctx)
    else:
        res = ev.eval(fwd_transform(gamma, t), point)
        primal, out = res.left, res.right.apply(ctx)
    return primal, lin_flatten(out_ty, primal, out)


def vjp(gamma, t: Term, point: dict, cotangent, *, approach: str = LIFTED, split: bool = False) -> np.ndarray:
    """Cotangent of the inputs given a flattened output ``cotangent``."""
    return vjp_with_primal(gamma, t, point, cotangent, approach=approach, split=split)[1]


def vjp_with_primal(gamma, t, point, cotangent, *, approach=LIFTED, split=False) -> tuple[Value, np.ndarray]:
    gamma, out_ty = _setup(gamma, t)
    ev = Evaluator(approach)
    if split:
        prim_t, back_t = rev_transform_split(gamma, t)
        primal = ev.eval(prim_t, point)
        back = ev.eval(back_t, point)
    else:
        res = ev.eval(rev_transform(gamma, t), point)
        primal, back = res.left, res.right
    w = lin_unflatten(out_ty, primal, cotangent, COTANGENT, approach)
    ctx = back.apply(w)
    parts = tuple_items(ctx, len(gamma)) if gamma else []
    coords = [lin_flatten(ty, point[name], part) for (name, ty), part in zip(gamma, parts)]
    return primal, np.concatenate(coords) if coords else np.zeros(0)


def _ctx_lin(gamma, point, coords, kind, approach):
    items, offset = [], 0
    for name, ty in gamma:
        n = len(flatten(point[name]).coords)
        if offset + n > len(coords):
            raise ShapeMismatch(f"tangent has {len(coords)} coordinates, point needs more")
        items.append(lin_unflatten(ty, point[name], coords[offset : offset + n], kind, approach))
        offset += n
    if offset != len(coords):
        raise ShapeMismatch(f"tangent has {len(coords)} coordinates, point has {offset}")
    return tuple_build(items, linear=True)


def evaluate_source(gamma, t: Term, point: dict) -> Value:
    return Evaluator().eval(t, point)


def _run_traced(t: Term, point: dict) -> tuple[FlatPoint, list]:
    ev = Evaluator(trace=True)
    return flatten(ev.eval(t, point)), ev.branches


def finite_diff(gamma, t: Term, point: dict, direction, h: float = 1e-5) -> np.ndarray:
    """Central difference ``(f(p + h d) - f(p - h d)) / 2h`` on flattened coordinates."""
    gamma, out_ty = _setup(gamma, t)
    base = flatten_env(gamma, point)
    direction = np.asarray(direction, dtype=float)
    if direction.shape != base.coords.shape:
        raise ShapeMismatch(f"direction has {direction.size} coordinates, point has {base.coords.size}")
    out, branches = _run_traced(t, point)
    samples = []
    for sign in (1.0, -1.0):
        env = unflatten_env(gamma, FlatPoint(base.path, base.coords + sign * h * direction))
        fp, taken = _run_traced(t, env)
        if fp.path != out.path:
            raise ComponentCrossed(f"perturbation by {sign * h:+g} moves the output to another component")
        if taken != branches:
            raise ComponentCrossed(f"perturbation by {sign * h:+g} changes the branch taken by a match")
        samples.append(fp.coords)
    return (samples[0] - samples[1]) / (2 * h)


def transpose_check(gamma, t: Term, point: dict, u, w, *, approach: str = LIFTED) -> tuple[float, float]:
    """``(⟨JVP(u), w⟩, ⟨u, VJP(w)⟩)``."""
    lhs = float(np.dot(jvp(gamma, t, point, u, approach=approach), np.asarray(w, dtype=float)))
    rhs = float(np.dot(np.asarray(u, dtype=float), vjp(gamma, t, point, w, approach=approach)))
    return lhs, rhs


# audit ----------------------------------------------------------------------------------


@dataclass
class DerivRecord:
    point: int
    mode: str
    direction: int
    analytic: list
    oracle: list
    abs_err: float
    rel_err: float
    passed: bool
    note: str = ""

    FIELDS = ("point", "mode", "direction", "analytic", "oracle", "abs_err", "rel_err", "passed", "note")


@dataclass
class DerivReport:
    program: str
    records: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    rel_tol: float = 1e-4
    abs_tol: float = 1e-6
    h: float = 1e-5

    @property
    def verdict(self) -> str:
        return "pass" if all(r.passed for r in self.records) else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_lines(self) -> list[str]:
        """One JSON object per line: a header, the records, then the verdict."""
        head = {"program": self.program, "rel_tol": self.rel_tol, "abs_tol": self.abs_tol, "h": self.h}
        lines = [json.dumps({"kind": "header", **head})]
        for r in self.records:
            lines.append(json.dumps({"kind": "record", **{f: getattr(r, f) for f in DerivRecord.FIELDS}}))
        for idx, reason in self.skipped:
            lines.append(json.dumps({"kind": "skipped", "point": idx, "reason": reason}))
        lines.append(
            json.dumps({"kind": "verdict", "program": self.program, "verdict": self.verdict, "records": len(self.records),
                        "skipped": len(self.skipped)})
        )
        return lines

    def __str__(self) -> str:
        return "\n".join(self.to_lines())


def within(analytic: np.ndarray, oracle: np.ndarray, rel_tol: float, abs_tol: float) -> tuple[float, float, bool]:
    """Componentwise ``|a - o| <= max(abs_tol, rel_tol |o|)``; returns max errors and the verdict."""
    diff = np.abs(analytic - oracle)
    scale = np.abs(oracle)
    ok = bool(np.all(diff <= np.maximum(abs_tol, rel_tol * scale)))
    abs_err = float(diff.max()) if diff.size else 0.0
    rel = diff / np.maximum(scale, np.finfo(float).tiny)
    rel_err = float(rel.max()) if diff.size else 0.0
    return abs_err, rel_err, ok


def check_derivative(
    gamma,
    t: Term,
    points: Sequence[dict],
    *,
    program: str = "<term>",
    rel_tol: float = 1e-4,
    abs_tol: float = 1e-6,
    h: float = 1e-5,
    approach: str = LIFTED,
) -> DerivReport:
    """Compare JVPs and VJPs against central differences along every basis direction.

    A point whose perturbation crosses into another component is skipped and
    recorded; it does not fail the report.
    """
    gamma, out_ty = _setup(gamma, t)
    report = DerivReport(program, rel_tol=rel_tol, abs_tol=abs_tol, h=h)
    for idx, point in enumerate(points):
        n_in = len(flatten_env(gamma, point).coords)
        basis = np.eye(n_in)
        try:
            columns = [finite_diff(gamma, t, point, basis[j], h) for j in range(n_in)]
        except ComponentCrossed as e:
            report.skipped.append((idx, str(e)))
            continue
        primal = evaluate_source(gamma, t, point)
        n_out = len(flatten(primal).coords)
        fd = np.array(columns).reshape(n_in, n_out).T  # Jacobian, rows = outputs
        for j in range(n_in):
            a = jvp(gamma, t, point, basis[j], approach=approach)
            report.records.append(_record(idx, "jvp", j, a, fd[:, j], rel_tol, abs_tol))
        for i in range(n_out):
            w = np.zeros(n_out)
            w[i] = 1.0
            a = vjp(gamma, t, point, w, approach=approach)
            report.records.append(_record(idx, "vjp", i, a, fd[i, :], rel_tol, abs_tol))
    return report


def _record(idx, mode, direction, analytic, oracle, rel_tol, abs_tol) -> DerivRecord:
    abs_err, rel_err, ok = within(np.asarray(analytic), np.asarray(oracle), rel_tol, abs_tol)
    return DerivRecord(idx, mode, direction, [float(x) for x in analytic], [float(x) for x in oracle], abs_err,
                       rel_err, ok)
