"""Primitive operations on real arrays together with their derivatives.

Each entry of :data:`OPS` bundles the primal semantics with a JVP (``D op``)
and a VJP (``Dᵀ op``).  Widths are resolved from the argument widths at type
checking time, so one entry covers every width it makes sense at.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .errors import ArityMismatch, MissingPrimitiveDerivative, TypeMismatch, UnknownOp
from .types import LReal, tuple_type


@dataclass(frozen=True)
class OpSig:
    """A primitive at concrete widths: ``Op_{n1..nk}^m``."""

    name: str
    arg_widths: tuple[int, ...]
    result_width: int


@dataclass(frozen=True)
class LinOpSig:
    """Signature of ``D op`` or ``Dᵀ op`` as a linear operation."""

    name: str
    nonlinear_widths: tuple[int, ...]
    linear_widths: tuple[int, ...]
    result_widths: tuple[int, ...]


@dataclass(frozen=True)
class PrimImpl:
    name: str
    arity: int
    widths: Callable[[tuple[int, ...], Any], int]
    eval: Callable[..., np.ndarray]
    jvp: Optional[Callable[..., np.ndarray]] = None
    vjp: Optional[Callable[..., tuple[np.ndarray, ...]]] = None


def _same(name):
    def widths(ws, param):
        if len(set(ws)) != 1:
            raise TypeMismatch(f"equal widths for {name}", ws)
        return ws[0]

    return widths


def _elementwise(name, f, df):
    return PrimImpl(
        name,
        1,
        lambda ws, p: ws[0],
        lambda p, x: f(x),
        lambda p, x, dx: df(x) * dx,
        lambda p, x, w: (df(x) * w,),
    )


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _const_widths(ws, param):
    return len(np.atleast_1d(np.asarray(param, dtype=float)))


def _matvec_widths(ws, param):
    m_n, n = ws
    if n == 0 or m_n % n:
        raise TypeMismatch(f"matrix width divisible by {n}", m_n)
    return m_n // n


def _matvec(p, a, x):
    return a.reshape(-1, len(x)) @ x


def _smul_widths(ws, param):
    if ws[0] != 1:
        raise TypeMismatch("R", f"R^{ws[0]}", note="scalar factor of smul")
    return ws[1]


def _index_widths(ws, param):
    if not isinstance(param, int) or not 0 <= param < ws[0]:
        raise TypeMismatch(f"index into R^{ws[0]}", param)
    return 1


def _onehot(n, i, w):
    out = np.zeros(n)
    out[i] = w[0]
    return out


OPS: dict[str, PrimImpl] = {
    op.name: op
    for op in [
        PrimImpl(
            "const",
            0,
            _const_widths,
            lambda p: np.atleast_1d(np.asarray(p, dtype=float)).copy(),
            lambda p: np.zeros(len(np.atleast_1d(p))),
            lambda p, w: (),
        ),
        PrimImpl("add", 2, _same("add"), lambda p, a, b: a + b, lambda p, a, b, da, db: da + db, lambda p, a, b, w: (w, w)),
        PrimImpl("sub", 2, _same("sub"), lambda p, a, b: a - b, lambda p, a, b, da, db: da - db, lambda p, a, b, w: (w, -w)),
        PrimImpl(
            "mul",
            2,
            _same("mul"),
            lambda p, a, b: a * b,
            lambda p, a, b, da, db: da * b + a * db,
            lambda p, a, b, w: (b * w, a * w),
        ),
        PrimImpl(
            "div",
            2,
            _same("div"),
            lambda p, a, b: a / b,
            lambda p, a, b, da, db: da / b - a * db / (b * b),
            lambda p, a, b, w: (w / b, -a * w / (b * b)),
        ),
        PrimImpl("neg", 1, lambda ws, p: ws[0], lambda p, a: -a, lambda p, a, da: -da, lambda p, a, w: (-w,)),
        _elementwise("sin", np.sin, np.cos),
        _elementwise("cos", np.cos, lambda x: -np.sin(x)),
        _elementwise("exp", np.exp, np.exp),
        _elementwise("log", np.log, lambda x: 1.0 / x),
        _elementwise("sigmoid", _sigmoid, lambda x: _sigmoid(x) * (1.0 - _sigmoid(x))),
        _elementwise("tanh", np.tanh, lambda x: 1.0 - np.tanh(x) ** 2),
        PrimImpl(
            "sum",
            1,
            lambda ws, p: 1,
            lambda p, a: np.array([a.sum()]),
            lambda p, a, da: np.array([da.sum()]),
            lambda p, a, w: (np.full(len(a), w[0]),),
        ),
        PrimImpl(
            "dot",
            2,
            lambda ws, p: min(_same("dot")(ws, p), 1),
            lambda p, a, b: np.array([a @ b]),
            lambda p, a, b, da, db: np.array([da @ b + a @ db]),
            lambda p, a, b, w: (b * w[0], a * w[0]),
        ),
        PrimImpl(
            "matvec",
            2,
            _matvec_widths,
            _matvec,
            lambda p, a, x, da, dx: _matvec(p, da, x) + _matvec(p, a, dx),
            lambda p, a, x, w: (np.outer(w, x).ravel(), a.reshape(-1, len(x)).T @ w),
        ),
        PrimImpl(
            "smul",
            2,
            _smul_widths,
            lambda p, s, a: s[0] * a,
            lambda p, s, a, ds, da: ds[0] * a + s[0] * da,
            lambda p, s, a, w: (np.array([a @ w]), s[0] * w),
        ),
        PrimImpl(
            "index",
            1,
            _index_widths,
            lambda p, a: np.array([a[p]]),
            lambda p, a, da: np.array([da[p]]),
            lambda p, a, w: (_onehot(len(a), p, w),),
        ),
        PrimImpl(
            "concat",
            2,
            lambda ws, p: ws[0] + ws[1],
            lambda p, a, b: np.concatenate([a, b]),
            lambda p, a, b, da, db: np.concatenate([da, db]),
            lambda p, a, b, w: (w[: len(a)], w[len(a) :]),
        ),
        # no derivative on purpose: a piecewise-constant function
        PrimImpl("floor", 1, lambda ws, p: ws[0], lambda p, a: np.floor(a)),
    ]
}


PREDICATES: dict[str, tuple[int, Callable[..., bool]]] = {
    "pos": (1, lambda a: bool(a[0] > 0)),
    "lt": (2, lambda a, b: bool(a[0] < b[0])),
}


def lookup(name: str) -> PrimImpl:
    try:
        return OPS[name]
    except KeyError:
        raise UnknownOp(f"unknown primitive operation {name!r}") from None


def op_sig(name: str, arg_widths: tuple[int, ...], param: Any = None) -> OpSig:
    impl = lookup(name)
    if len(arg_widths) != impl.arity:
        raise ArityMismatch(f"{name} takes {impl.arity} arguments, got {len(arg_widths)}")
    return OpSig(name, tuple(arg_widths), impl.widths(tuple(arg_widths), param))


def lin_op_sig(name: str, kind: str, arg_widths: tuple[int, ...], param: Any = None) -> LinOpSig:
    sig = op_sig(name, arg_widths, param)
    if kind == "D":
        return LinOpSig(f"D{name}", sig.arg_widths, sig.arg_widths, (sig.result_width,))
    return LinOpSig(f"D{name}ᵀ", sig.arg_widths, (sig.result_width,), sig.arg_widths)


def lin_tuple_type(widths: tuple[int, ...]):
    return tuple_type([LReal(w) for w in widths], linear=True)


def require_derivative(name: str) -> PrimImpl:
    impl = lookup(name)
    if impl.jvp is None or impl.vjp is None:
        raise MissingPrimitiveDerivative(f"primitive {name!r} has no derivative")
    return impl


def prim_eval(name: str, args, param=None) -> np.ndarray:
    return np.asarray(lookup(name).eval(param, *args), dtype=float)


def prim_jvp(name: str, args, tangents, param=None) -> np.ndarray:
    return np.asarray(require_derivative(name).jvp(param, *args, *tangents), dtype=float)


def prim_vjp(name: str, args, cot, param=None) -> tuple[np.ndarray, ...]:
    return tuple(np.asarray(g, dtype=float) for g in require_derivative(name).vjp(param, *args, cot))
