"""Runtime values of the cartesian and the linear layer.

Linear values form a commutative monoid under :func:`lin_add` with
:func:`lin_zero` as unit.  Two representations of linear sums coexist:
``LSumV`` (a lifted sum with a distinguished zero tag, the default) and
``LTupleV`` (the biproduct: one component per branch).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .errors import InternalError, MismatchedBranch, NotLinearType
from .types import (
    Copower,
    LMu,
    LNu,
    LProd,
    LReal,
    LSum,
    LUnit,
    Power,
    Type,
    show_type,
    unfold_type,
)

LIFTED = "lifted"
BIPRODUCT = "biproduct"
APPROACHES = (BIPRODUCT, LIFTED)


class Value:
    """Cartesian runtime value."""


class LinValue:
    """Linear runtime value."""


def _arr(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class RealVec(Value):
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _arr(self.data))

    @property
    def width(self) -> int:
        return len(self.data)

    def __eq__(self, other):
        return isinstance(other, RealVec) and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash(self.data.tobytes())

    def __repr__(self):
        return f"RealVec({self.data.tolist()})"


@dataclass(frozen=True)
class UnitV(Value):
    pass


@dataclass(frozen=True)
class PairV(Value):
    left: Value
    right: Value


@dataclass(frozen=True)
class InjV(Value):
    label: str
    body: Value


@dataclass(frozen=True)
class RollV(Value):
    body: Value
    ty: Optional[Type] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, eq=False)
class FunV(Value):
    """A closure, represented by the host function that applies it."""

    apply: Callable[[Value], Value]

    def __repr__(self):
        return "FunV(<closure>)"


class _Lazy:
    """Memoized once-evaluated cell."""

    __slots__ = ("_thunk", "_value", "_done")

    def __init__(self, thunk: Callable[[], Any]):
        self._thunk = thunk
        self._value = None
        self._done = False

    def force(self):
        if not self._done:
            self._value = self._thunk()
            self._done = True
            self._thunk = None
        return self._value

    @property
    def forced(self) -> bool:
        return self._done


class CodataV(Value, _Lazy):
    """Element of a ν-type; ``force()`` performs one memoized unroll."""

    __slots__ = ("ty",)

    def __init__(self, thunk, ty: Optional[Type] = None):
        _Lazy.__init__(self, thunk)
        self.ty = ty

    def __repr__(self):
        return "CodataV(<lazy>)"


@dataclass(frozen=True, eq=False)
class LinFunV(Value):
    """A linear map value (cartesian type ``σ ⊸ σ'``)."""

    apply: Callable[["LinValue"], "LinValue"]

    def __repr__(self):
        return "LinFunV(<linear map>)"


# linear values ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LVec(LinValue):
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _arr(self.data))

    def __eq__(self, other):
        return isinstance(other, LVec) and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash(self.data.tobytes())

    def __repr__(self):
        return f"LVec({self.data.tolist()})"


@dataclass(frozen=True)
class LUnitV(LinValue):
    pass


@dataclass(frozen=True)
class LPairV(LinValue):
    left: LinValue
    right: LinValue


@dataclass(frozen=True)
class LSumV(LinValue):
    """Lifted sum: ``tag`` is ``None`` (zero) or ``(index, value)``."""

    tag: Optional[tuple[int, LinValue]] = None


@dataclass(frozen=True)
class LTupleV(LinValue):
    """Biproduct sum: one linear value per branch."""

    comps: tuple[LinValue, ...]


@dataclass(frozen=True, eq=False)
class LPowV(LinValue):
    """Element of ``τ ⇒ σ``: a family of linear values indexed by cartesian points."""

    apply: Callable[[Value], LinValue]

    def __repr__(self):
        return "LPowV(<family>)"


@dataclass(frozen=True)
class LCopowerV(LinValue):
    """Element of ``!τ ⊗ σ``: a formal sum of (point, linear value) pairs."""

    items: tuple[tuple[Value, LinValue], ...] = ()


class _LazyLin(LinValue, _Lazy):
    __slots__ = ("is_zero",)

    def __init__(self, thunk, is_zero: bool = False):
        _Lazy.__init__(self, thunk)
        self.is_zero = is_zero


class LRollV(_LazyLin):
    """Element of a linear μ-type; ``force()`` yields the unrolled layer.

    ``is_zero`` marks the monoid unit, so that folds over it stop at once.
    """

    __slots__ = ()

    def __repr__(self):
        return f"LRollV({self.force()!r})" if self.forced else "LRollV(<lazy>)"


class LCodataV(_LazyLin):
    """Element of a linear ν-type; ``force()`` yields the unrolled layer."""

    __slots__ = ()

    def __repr__(self):
        return "LCodataV(<lazy>)"


def lin_roll(inner: LinValue) -> LRollV:
    cell = LRollV(lambda: inner)
    cell.force()
    return cell


# monoid structure -------------------------------------------------------------


def lin_zero(ty: Type, approach: str = LIFTED) -> LinValue:
    """The additive identity at linear type ``ty``."""
    match ty:
        case LReal(n):
            return LVec(np.zeros(n))
        case LUnit():
            return LUnitV()
        case LProd(a, b):
            return LPairV(lin_zero(a, approach), lin_zero(b, approach))
        case LSum(comps):
            if approach == BIPRODUCT:
                return LTupleV(tuple(lin_zero(c, approach) for c in comps))
            return LSumV(None)
        case Power(_, body):
            return LPowV(lambda _x: lin_zero(body, approach))
        case Copower():
            return LCopowerV(())
        case LMu():
            return LRollV(lambda: lin_zero(unfold_type(ty), approach), is_zero=True)
        case LNu():
            return LCodataV(lambda: lin_zero(unfold_type(ty), approach), is_zero=True)
    raise NotLinearType(f"{show_type(ty)} is not a linear type")


def lin_add(a: LinValue, b: LinValue) -> LinValue:
    match a:
        case LVec(x):
            if not isinstance(b, LVec) or len(b.data) != len(x):
                raise InternalError(f"cannot add {a!r} and {b!r}")
            return LVec(x + b.data)
        case LUnitV():
            return a
        case LPairV(l, r):
            return LPairV(lin_add(l, b.left), lin_add(r, b.right))
        case LSumV(tag):
            if tag is None:
                return b
            if b.tag is None:
                return a
            (i, x), (j, y) = tag, b.tag
            if i != j:
                raise MismatchedBranch(f"adding cotangents of branches {i + 1} and {j + 1}")
            return LSumV((i, lin_add(x, y)))
        case LTupleV(comps):
            return LTupleV(tuple(lin_add(x, y) for x, y in zip(comps, b.comps, strict=True)))
        case LPowV(f):
            g = b.apply
            return LPowV(lambda p: lin_add(f(p), g(p)))
        case LCopowerV(items):
            return LCopowerV(items + b.items)
        case LRollV() | LCodataV():
            if a.is_zero:
                return b
            if b.is_zero:
                return a
            return type(a)(lambda: lin_add(a.force(), b.force()))
    raise InternalError(f"not a linear value: {a!r}")


def lin_sum(values, ty: Type, approach: str = LIFTED) -> LinValue:
    out = None
    for v in values:
        out = v if out is None else lin_add(out, v)
    return lin_zero(ty, approach) if out is None else out


def lin_equal(a: LinValue, b: LinValue) -> bool:
    """Structural equality, with copowers compared as multisets."""
    return normalize(a) == normalize(b)


def normalize(v: LinValue):
    """A hashable canonical form of an eager linear value (copowers become sorted bags)."""
    match v:
        case LVec(x):
            return ("vec", tuple(x.tolist()))
        case LUnitV():
            return ("unit",)
        case LPairV(l, r):
            return ("pair", normalize(l), normalize(r))
        case LSumV(tag):
            return ("sum", None) if tag is None else ("sum", tag[0], normalize(tag[1]))
        case LTupleV(comps):
            return ("tuple",) + tuple(normalize(c) for c in comps)
        case LCopowerV(items):
            return ("copower",) + tuple(sorted(((repr(p), normalize(x)) for p, x in items), key=repr))
        case LRollV() | LCodataV():
            return ("roll", normalize(v.force()))
    raise InternalError(f"cannot normalize {v!r}")
