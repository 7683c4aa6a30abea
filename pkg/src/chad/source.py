"""Kinding and typing of source programs, and the functorial action of types on terms."""

from __future__ import annotations

from enum import Enum
from typing import Iterable, Mapping, Optional

from .errors import (
    ArityMismatch,
    ChadError,
    IllKinded,
    NonExhaustiveMatch,
    OpenFunctionType,
    TypeMismatch,
    UnboundTypeVar,
    UnboundVar,
)
from .ops import PREDICATES, op_sig
from .terms import (
    App,
    Fold,
    Fst,
    Gen,
    Inj,
    Lam,
    Let,
    Match,
    Pair,
    Pred,
    PrimOp,
    Roll,
    Snd,
    Term,
    UnitVal,
    Unroll,
    Var,
    fresh_name,
    subst_term,
    term_size,
)
from .types import (
    BOOL,
    Arrow,
    Mu,
    Nu,
    Prod,
    Real,
    TyVar,
    Type,
    Unit,
    Variant,
    ftv,
    subst_many,
    subst_type,
    types_equal,
    unfold_type,
)

__all__ = [
    "Kind",
    "kind_check",
    "type_check",
    "subst_type",
    "subst_term",
    "fmap_type",
    "fmap_term",
    "invroll",
    "term_size",
]


class Kind(Enum):
    Type = "Type"


def kind_check(delta: Iterable[str], ty: Type) -> Kind:
    delta = tuple(delta)
    match ty:
        case TyVar(name):
            if name not in delta:
                raise UnboundTypeVar(f"unbound type variable {name}")
        case Real(n):
            if n < 0:
                raise IllKinded(f"negative width in {ty}")
        case Unit():
            pass
        case Prod(a, b):
            kind_check(delta, a)
            kind_check(delta, b)
        case Arrow(a, b):
            if ftv(ty):
                raise OpenFunctionType(f"function type {ty} mentions type variables")
            kind_check((), a)
            kind_check((), b)
        case Variant(cases):
            if not cases:
                raise IllKinded("empty variant type")
            labels = [lab for lab, _ in cases]
            if len(set(labels)) != len(labels):
                raise IllKinded(f"duplicate constructor in {ty}")
            for _, t in cases:
                kind_check(delta, t)
        case Mu(var, body) | Nu(var, body):
            kind_check(delta + (var,), body)
        case _:
            raise IllKinded(f"{ty} is not a source type")
    return Kind.Type


def _expect(cond: bool, expected, found, t: Term, note: str = ""):
    if not cond:
        raise TypeMismatch(expected, found, t.loc, note)


def type_check(delta: Iterable[str], gamma: Mapping[str, Type] | Iterable[tuple[str, Type]], t: Term) -> Type:
    """Return the type of ``t`` under ``delta | gamma``."""
    delta = tuple(delta)
    gamma = dict(gamma.items() if isinstance(gamma, Mapping) else gamma)
    return _check(delta, gamma, t)


def _check(delta, gamma: dict, t: Term) -> Type:
    match t:
        case Var(name):
            if name not in gamma:
                raise UnboundVar(f"unbound variable {name}" + (f" at {t.loc[0]}:{t.loc[1]}" if t.loc else ""))
            return gamma[name]
        case Let(name, bound, body):
            return _check(delta, {**gamma, name: _check(delta, gamma, bound)}, body)
        case PrimOp(op, args, param):
            widths = []
            for a in args:
                ty = _check(delta, gamma, a)
                _expect(isinstance(ty, Real), "a real array", ty, a, f"argument of {op}")
                widths.append(ty.n)
            return Real(op_sig(op, tuple(widths), param).result_width)
        case Pred(name, args):
            if name not in PREDICATES:
                raise TypeMismatch("a known predicate", name, t.loc)
            arity, _ = PREDICATES[name]
            if len(args) != arity:
                raise ArityMismatch(f"{name} takes {arity} arguments, got {len(args)}")
            for a in args:
                ty = _check(delta, gamma, a)
                _expect(types_equal(ty, Real(1)), Real(1), ty, a, f"argument of {name}")
            return BOOL
        case UnitVal():
            return Unit()
        case Pair(a, b):
            return Prod(_check(delta, gamma, a), _check(delta, gamma, b))
        case Fst(body) | Snd(body):
            ty = _check(delta, gamma, body)
            _expect(isinstance(ty, Prod), "a product", ty, t)
            return ty.left if isinstance(t, Fst) else ty.right
        case Lam(name, ty, body):
            _kind(delta, ty, t)
            cod = _check(delta, {**gamma, name: ty}, body)
            out = Arrow(ty, cod)
            if ftv(out):
                raise OpenFunctionType(f"function type {out} mentions type variables")
            return out
        case App(fn, arg):
            fty = _check(delta, gamma, fn)
            _expect(isinstance(fty, Arrow), "a function", fty, fn)
            aty = _check(delta, gamma, arg)
            _expect(types_equal(fty.dom, aty), fty.dom, aty, arg)
            return fty.cod
        case Inj(label, body, ty):
            _kind(delta, ty, t)
            _expect(isinstance(ty, Variant) and label in ty.labels, f"a variant with constructor {label}", ty, t)
            bty = _check(delta, gamma, body)
            _expect(types_equal(ty.case_type(label), bty), ty.case_type(label), bty, body)
            return ty
        case Match(scrut, branches):
            sty = _check(delta, gamma, scrut)
            _expect(isinstance(sty, Variant), "a variant", sty, scrut)
            labels = tuple(lab for lab, _, _ in branches)
            if labels != sty.labels:
                if set(labels) == set(sty.labels) and len(labels) == len(sty.labels):
                    raise TypeMismatch(sty.labels, labels, t.loc, "branches must follow declaration order")
                raise NonExhaustiveMatch(f"match covers {list(labels)} but the type has {list(sty.labels)}")
            result = None
            for (lab, binder, body), (_, cty) in zip(branches, sty.cases):
                bty = _check(delta, {**gamma, binder: cty}, body)
                if result is None:
                    result = bty
                else:
                    _expect(types_equal(result, bty), result, bty, body, "match branches disagree")
            return result
        case Roll(body, ty):
            _kind(delta, ty, t)
            _expect(isinstance(ty, Mu), "an inductive type", ty, t)
            bty = _check(delta, gamma, body)
            _expect(types_equal(unfold_type(ty), bty), unfold_type(ty), bty, body)
            return ty
        case Unroll(body):
            ty = _check(delta, gamma, body)
            _expect(isinstance(ty, Nu), "a coinductive type", ty, body)
            return unfold_type(ty)
        case Fold(body, binder, alg, carrier):
            _kind(delta, carrier, t)
            ty = _check(delta, gamma, body)
            _expect(isinstance(ty, Mu), "an inductive type", ty, body)
            arg_ty = subst_type(ty.body, ty.var, carrier)
            aty = _check(delta, {binder: arg_ty}, alg)
            _expect(types_equal(aty, carrier), carrier, aty, alg, "fold algebra")
            return carrier
        case Gen(body, binder, coalg, nu):
            _kind(delta, nu, t)
            _expect(isinstance(nu, Nu), "a coinductive type", nu, t)
            seed = _check(delta, gamma, body)
            cty = _check(delta, {binder: seed}, coalg)
            want = subst_type(nu.body, nu.var, seed)
            _expect(types_equal(cty, want), want, cty, coalg, "gen coalgebra")
            return nu
    raise TypeMismatch("a source term", type(t).__name__, t.loc)


def _kind(delta, ty, t):
    kind_check(delta, ty)


# functorial action -----------------------------------------------------------


def fmap_type(
    tau: Type,
    alpha: str,
    x: str,
    t: Term,
    sigma_in: Type,
    rho_out: Type,
    arg: Optional[Term] = None,
) -> Term:
    """The term ``τ[α ↦ x ⊢ t]`` applied to ``arg`` (default: the variable ``x``).

    ``x : sigma_in ⊢ t : rho_out``; the result maps ``τ[sigma_in/α]`` to
    ``τ[rho_out/α]`` by acting with ``t`` on every ``α`` position.
    """
    try:
        kind_check(tuple(v for _, v in ftv(tau) if v != alpha) + (alpha,), tau)
    except ChadError as e:
        raise IllKinded(str(e)) from None
    return fmap_term(tau, {alpha: (x, t)}, {alpha: sigma_in}, {alpha: rho_out}, Var(x) if arg is None else arg)


def fmap_term(tau: Type, act: dict, in_sub: dict, out_sub: dict, inp: Term) -> Term:
    """Multi-hole functorial action; ``act`` maps type variables to ``(binder, term)``."""
    if not any(("c", a) in ftv(tau) for a in act):
        return inp
    match tau:
        case TyVar(a):
            binder, body = act[a]
            if inp == Var(binder):
                return body
            return Let(binder, inp, body)
        case Prod(l, r):
            if isinstance(inp, Var):
                return Pair(
                    fmap_term(l, act, in_sub, out_sub, Fst(inp)),
                    fmap_term(r, act, in_sub, out_sub, Snd(inp)),
                )
            p = fresh_name("p")
            return Let(p, inp, fmap_term(tau, act, in_sub, out_sub, Var(p)))
        case Variant(cases):
            out_ty = _sub(tau, out_sub)
            branches = []
            for label, cty in cases:
                y = fresh_name("y")
                branches.append((label, y, Inj(label, fmap_term(cty, act, in_sub, out_sub, Var(y)), out_ty)))
            return Match(inp, tuple(branches))
        case Mu(b, body):
            out_mu = _sub(tau, out_sub)
            inner_act = {k: v for k, v in act.items() if k != b}
            y = fresh_name("y")
            mapped = fmap_term(body, inner_act, {**in_sub, b: out_mu}, {**out_sub, b: out_mu}, Var(y))
            return Fold(inp, y, Roll(mapped, out_mu), out_mu)
        case Nu(b, body):
            in_nu = _sub(tau, in_sub)
            out_nu = _sub(tau, out_sub)
            inner_act = {k: v for k, v in act.items() if k != b}
            y = fresh_name("y")
            mapped = fmap_term(body, inner_act, {**in_sub, b: in_nu}, {**out_sub, b: in_nu}, Unroll(Var(y)))
            return Gen(inp, y, mapped, out_nu)
    return inp


def _sub(ty: Type, m: dict) -> Type:
    return subst_many(ty, {("c", k): v for k, v in m.items()})


def invroll(mu: Mu, t: Term) -> Term:
    """``μα.τ → τ[μα.τ/α]`` as a fold that re-rolls one layer down."""
    carrier = unfold_type(mu)
    y, z = fresh_name("y"), fresh_name("z")
    mapped = fmap_term(mu.body, {mu.var: (z, Roll(Var(z), mu))}, {mu.var: carrier}, {mu.var: mu}, Var(y))
    return Fold(t, y, mapped, carrier)
