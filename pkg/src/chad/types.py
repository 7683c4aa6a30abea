"""Type syntax shared by the source and the (erased) target language.

Cartesian types are the source types plus ``LinArrow`` (the type of linear
maps).  Linear types live in their own constructors so that the two layers can
never be confused.  ``DepPi``, ``DepSigma`` and ``LCase`` are dependent-style
descriptions that only exist as input to :func:`chad.target.erase_type`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class Type:
    def __str__(self) -> str:
        return show_type(self)


# cartesian layer ------------------------------------------------------------


@dataclass(frozen=True, repr=False)
class TyVar(Type):
    name: str

    def __repr__(self):
        return f"TyVar({self.name!r})"


@dataclass(frozen=True, repr=False)
class Real(Type):
    n: int = 1

    def __repr__(self):
        return f"Real({self.n})"


@dataclass(frozen=True, repr=False)
class Unit(Type):
    def __repr__(self):
        return "Unit()"


@dataclass(frozen=True, repr=False)
class Prod(Type):
    left: Type
    right: Type

    def __repr__(self):
        return f"Prod({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Arrow(Type):
    dom: Type
    cod: Type

    def __repr__(self):
        return f"Arrow({self.dom!r}, {self.cod!r})"


@dataclass(frozen=True, repr=False)
class Variant(Type):
    cases: tuple[tuple[str, Type], ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.cases)

    def index_of(self, label: str) -> int:
        for i, (lab, _) in enumerate(self.cases):
            if lab == label:
                return i
        raise KeyError(label)

    def case_type(self, label: str) -> Type:
        return self.cases[self.index_of(label)][1]

    def __repr__(self):
        return f"Variant({self.cases!r})"


@dataclass(frozen=True, repr=False)
class Mu(Type):
    var: str
    body: Type

    def __repr__(self):
        return f"Mu({self.var!r}, {self.body!r})"


@dataclass(frozen=True, repr=False)
class Nu(Type):
    var: str
    body: Type

    def __repr__(self):
        return f"Nu({self.var!r}, {self.body!r})"


@dataclass(frozen=True, repr=False)
class LinArrow(Type):
    """Cartesian type of linear maps between two linear types."""

    dom: Type
    cod: Type

    def __repr__(self):
        return f"LinArrow({self.dom!r}, {self.cod!r})"


# linear layer ---------------------------------------------------------------


@dataclass(frozen=True, repr=False)
class LinTyVar(Type):
    name: str

    def __repr__(self):
        return f"LinTyVar({self.name!r})"


@dataclass(frozen=True, repr=False)
class LReal(Type):
    n: int = 1

    def __repr__(self):
        return f"LReal({self.n})"


@dataclass(frozen=True, repr=False)
class LUnit(Type):
    def __repr__(self):
        return "LUnit()"


@dataclass(frozen=True, repr=False)
class LProd(Type):
    left: Type
    right: Type

    def __repr__(self):
        return f"LProd({self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Power(Type):
    """``index => body``: families of linear values indexed by a cartesian type."""

    index: Type
    body: Type

    def __repr__(self):
        return f"Power({self.index!r}, {self.body!r})"


@dataclass(frozen=True, repr=False)
class Copower(Type):
    """``!index ⊗ body``: formal sums of (point, linear value) pairs."""

    index: Type
    body: Type

    def __repr__(self):
        return f"Copower({self.index!r}, {self.body!r})"


@dataclass(frozen=True, repr=False)
class LSum(Type):
    comps: tuple[Type, ...]

    def __repr__(self):
        return f"LSum({self.comps!r})"


@dataclass(frozen=True, repr=False)
class LMu(Type):
    var: str
    body: Type

    def __repr__(self):
        return f"LMu({self.var!r}, {self.body!r})"


@dataclass(frozen=True, repr=False)
class LNu(Type):
    var: str
    body: Type

    def __repr__(self):
        return f"LNu({self.var!r}, {self.body!r})"


# dependent-style descriptions, erased before use ------------------------------


@dataclass(frozen=True)
class DepPi(Type):
    var: str
    dom: Type
    body: Type


@dataclass(frozen=True)
class DepSigma(Type):
    var: str
    dom: Type
    body: Type


@dataclass(frozen=True)
class LCase(Type):
    """Case distinction on a cartesian term; erases to ``LSum``."""

    scrutinee: object
    branches: tuple[tuple[str, str, Type], ...]


CARTESIAN = (TyVar, Real, Unit, Prod, Arrow, Variant, Mu, Nu, LinArrow)
LINEAR = (LinTyVar, LReal, LUnit, LProd, Power, Copower, LSum, LMu, LNu)

BOOL = Variant((("False", Unit()), ("True", Unit())))


def is_linear(ty: Type) -> bool:
    return isinstance(ty, LINEAR)


# free variables and substitution ---------------------------------------------

_BINDERS = {Mu: "c", Nu: "c", LMu: "l", LNu: "l"}
_fresh_ids = itertools.count(1)


def ftv(ty: Type) -> frozenset[tuple[str, str]]:
    """Free type variables as ``(namespace, name)``; namespace "c" or "l"."""
    match ty:
        case TyVar(name):
            return frozenset({("c", name)})
        case LinTyVar(name):
            return frozenset({("l", name)})
        case Real() | Unit() | LReal() | LUnit():
            return frozenset()
        case Mu(var, body) | Nu(var, body) | LMu(var, body) | LNu(var, body):
            return ftv(body) - {(_BINDERS[type(ty)], var)}
        case Prod(a, b) | Arrow(a, b) | LinArrow(a, b) | LProd(a, b) | Power(a, b) | Copower(a, b):
            return ftv(a) | ftv(b)
        case Variant(cases):
            return frozenset().union(*(ftv(t) for _, t in cases))
        case LSum(comps):
            return frozenset().union(*(ftv(t) for t in comps))
        case DepPi(_, dom, body) | DepSigma(_, dom, body):
            return ftv(dom) | ftv(body)
        case LCase(_, branches):
            return frozenset().union(*(ftv(t) for _, _, t in branches))
    raise TypeError(f"not a type: {ty!r}")


def has_free(ty: Type, name: str, ns: str = "c") -> bool:
    return (ns, name) in ftv(ty)


def fresh_tyvar(base: str, avoid: Iterable[str] = ()) -> str:
    avoid = set(avoid)
    stem = base.split("%")[0] or "t"
    while True:
        cand = f"{stem}%{next(_fresh_ids)}"
        if cand not in avoid:
            return cand


def subst_type(ty: Type, name: str, repl: Type, ns: str = "c") -> Type:
    """Capture-avoiding substitution ``ty[repl/name]``."""
    return subst_many(ty, {(ns, name): repl})


def subst_many(ty: Type, sub: dict[tuple[str, str], Type]) -> Type:
    if not sub:
        return ty
    free = ftv(ty)
    sub = {k: v for k, v in sub.items() if k in free}
    if not sub:
        return ty
    return _subst(ty, sub)


def _subst(ty: Type, sub):
    match ty:
        case TyVar(name):
            return sub.get(("c", name), ty)
        case LinTyVar(name):
            return sub.get(("l", name), ty)
        case Real() | Unit() | LReal() | LUnit():
            return ty
        case Mu(var, body) | Nu(var, body) | LMu(var, body) | LNu(var, body):
            ns = _BINDERS[type(ty)]
            inner = {k: v for k, v in sub.items() if k != (ns, var)}
            if not inner:
                return ty
            captured = any((ns, var) in ftv(v) for v in inner.values())
            if captured:
                avoid = {n for _, n in ftv(body)}
                for v in inner.values():
                    avoid |= {n for _, n in ftv(v)}
                new = fresh_tyvar(var, avoid)
                fresh_var = TyVar(new) if ns == "c" else LinTyVar(new)
                body = _subst(body, {(ns, var): fresh_var})
                var = new
            return type(ty)(var, subst_many(body, inner))
        case Prod(a, b) | Arrow(a, b) | LinArrow(a, b) | LProd(a, b) | Power(a, b) | Copower(a, b):
            return type(ty)(subst_many(a, sub), subst_many(b, sub))
        case Variant(cases):
            return Variant(tuple((lab, subst_many(t, sub)) for lab, t in cases))
        case LSum(comps):
            return LSum(tuple(subst_many(t, sub) for t in comps))
        case DepPi(v, dom, body) | DepSigma(v, dom, body):
            return type(ty)(v, subst_many(dom, sub), subst_many(body, sub))
        case LCase(scrut, branches):
            return LCase(scrut, tuple((lab, b, subst_many(t, sub)) for lab, b, t in branches))
    raise TypeError(f"not a type: {ty!r}")


def unfold_type(ty: Type) -> Type:
    """One-step unrolling ``τ[μα.τ/α]`` (also for ν, linear μ and linear ν)."""
    match ty:
        case Mu(var, body) | Nu(var, body):
            return subst_type(body, var, ty, "c")
        case LMu(var, body) | LNu(var, body):
            return subst_type(body, var, ty, "l")
    raise TypeError(f"not a fixpoint type: {ty}")


# alpha-equivalence ----------------------------------------------------------


def types_equal(a: Type, b: Type) -> bool:
    return a is b or _aeq(a, b, {}, {}, 0)


def _aeq(a, b, ea, eb, depth):
    if type(a) is not type(b):
        return False
    match a:
        case TyVar(name) | LinTyVar(name):
            ns = "c" if isinstance(a, TyVar) else "l"
            la, lb = ea.get((ns, name)), eb.get((ns, b.name))
            if la is None and lb is None:
                return name == b.name
            return la == lb
        case Real(n) | LReal(n):
            return n == b.n
        case Unit() | LUnit():
            return True
        case Mu(var, body) | Nu(var, body) | LMu(var, body) | LNu(var, body):
            ns = _BINDERS[type(a)]
            return _aeq(body, b.body, {**ea, (ns, var): depth}, {**eb, (ns, b.var): depth}, depth + 1)
        case Prod(x, y) | Arrow(x, y) | LinArrow(x, y) | LProd(x, y) | Power(x, y) | Copower(x, y):
            return _aeq(x, _fst(b), ea, eb, depth) and _aeq(y, _snd(b), ea, eb, depth)
        case Variant(cases):
            return len(cases) == len(b.cases) and all(
                la == lb and _aeq(ta, tb, ea, eb, depth) for (la, ta), (lb, tb) in zip(cases, b.cases)
            )
        case LSum(comps):
            return len(comps) == len(b.comps) and all(_aeq(x, y, ea, eb, depth) for x, y in zip(comps, b.comps))
    return a == b


def _fst(t):
    return t.dom if isinstance(t, (Arrow, LinArrow)) else (t.index if isinstance(t, (Power, Copower)) else t.left)


def _snd(t):
    return t.cod if isinstance(t, (Arrow, LinArrow)) else t.body if isinstance(t, (Power, Copower)) else t.right


# n-ary tuples ---------------------------------------------------------------


def tuple_type(types: list[Type] | tuple[Type, ...], linear: bool) -> Type:
    """Left-nested product; the empty tuple is the unit type."""
    if not types:
        return LUnit() if linear else Unit()
    out = types[0]
    for t in types[1:]:
        out = LProd(out, t) if linear else Prod(out, t)
    return out


def tuple_components(ty: Type, n: int) -> list[Type]:
    if n == 0:
        return []
    comps = []
    while n > 1:
        if not isinstance(ty, (Prod, LProd)):
            raise TypeError(f"expected a {n}-tuple type, found {ty}")
        comps.append(ty.right)
        ty = ty.left
        n -= 1
    comps.append(ty)
    return comps[::-1]


def type_size(ty: Type) -> int:
    match ty:
        case TyVar() | LinTyVar() | Real() | Unit() | LReal() | LUnit():
            return 1
        case Mu(_, body) | Nu(_, body) | LMu(_, body) | LNu(_, body):
            return 1 + type_size(body)
        case Variant(cases):
            return 1 + sum(type_size(t) for _, t in cases)
        case LSum(comps):
            return 1 + sum(type_size(t) for t in comps)
        case _:
            return 1 + type_size(_fst(ty)) + type_size(_snd(ty))


# printing ---------------------------------------------------------------------

_SUP = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")


def show_type(ty: Type, aliases: dict | None = None) -> str:
    return _show(ty, 0, aliases or {})


def _show(ty, prec, aliases):
    # prec 0: top, 1: operand of an arrow's domain, 2: operand of a product
    for name, aty in aliases.items():
        if types_equal(ty, aty):
            return name
    match ty:
        case TyVar(name):
            return name
        case Real(n):
            return "R" if n == 1 else f"R^{n}"
        case Unit():
            return "Unit"
        case Prod(a, b):
            s = f"{_show(a, 1, aliases)} * {_show(b, 2, aliases)}"
            return f"({s})" if prec >= 2 else s
        case Arrow(a, b) | LinArrow(a, b):
            arrow = "->" if isinstance(ty, Arrow) else "⊸"
            s = f"{_show(a, 1, aliases)} {arrow} {_show(b, 0, aliases)}"
            return f"({s})" if prec >= 1 else s
        case Variant(cases):
            return "{" + " | ".join(f"{lab} {_show(t, 2, aliases)}" for lab, t in cases) + "}"
        case Mu(var, body) | Nu(var, body):
            kw = "mu" if isinstance(ty, Mu) else "nu"
            s = f"{kw} {var}. {_show(body, 0, aliases)}"
            return f"({s})" if prec >= 1 else s
        case LinTyVar(name):
            return f"{name}̲"
        case LReal(n):
            return "R̲" if n == 1 else f"R̲{str(n).translate(_SUP)}"
        case LUnit():
            return "Unit̲"
        case LProd(a, b):
            s = f"{_show(a, 1, aliases)} × {_show(b, 2, aliases)}"
            return f"({s})" if prec >= 2 else s
        case Power(a, b):
            s = f"{_show(a, 1, aliases)} ⇒ {_show(b, 0, aliases)}"
            return f"({s})" if prec >= 1 else s
        case Copower(a, b):
            s = f"!{_show(a, 2, aliases)} ⊗ {_show(b, 2, aliases)}"
            return f"({s})" if prec >= 1 else s
        case LSum(comps):
            s = " ∨ ".join(_show(t, 2, aliases) for t in comps)
            return f"({s})" if prec >= 1 and len(comps) > 1 else s
        case LMu(var, body) | LNu(var, body):
            kw = "μ̲" if isinstance(ty, LMu) else "ν̲"
            s = f"{kw}{var}. {_show(body, 0, aliases)}"
            return f"({s})" if prec >= 1 else s
        case DepPi(v, dom, body):
            return f"(Π {v} : {_show(dom, 0, aliases)}. {_show(body, 0, aliases)})"
        case DepSigma(v, dom, body):
            return f"(Σ {v} : {_show(dom, 0, aliases)}. {_show(body, 0, aliases)})"
        case LCase(scrut, branches):
            bs = " | ".join(f"{lab} {b} → {_show(t, 0, aliases)}" for lab, b, t in branches)
            return f"(case {scrut} of {bs})"
    return repr(ty)
