"""Forward-mode CHAD: primal/tangent type translation and the term transformation.

``fwd_transform(Γ, t)`` produces a target term of type ``Dτ₁ × (DΓ₂ ⊸ Dτ₂)``
whose first component recomputes the primal and whose second component is the
tangent map.  Primal and tangent share work through pattern-lets.
``fwd_transform_split`` produces the two halves separately, without sharing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import InternalError, TypeMismatch, UnboundVar
from .ops import require_derivative
from .source import fmap_term, invroll, kind_check, type_check
from .terms import (
    Add,
    App,
    Fold,
    Fst,
    Gen,
    Inj,
    Lam,
    Let,
    LApp,
    LFold,
    LFst,
    LGen,
    LInj,
    LLam,
    LLet,
    LOp,
    LPair,
    LProj,
    LRoll,
    LSnd,
    LUnitVal,
    LUnroll,
    LVar,
    Match,
    Pair,
    PairLet,
    PApp,
    PLam,
    Pred,
    PrimOp,
    Proj,
    Roll,
    Snd,
    Term,
    UnitVal,
    Unroll,
    Var,
    Zero,
    fresh_name,
    ntuple,
)
from .types import (
    BOOL,
    Arrow,
    LinArrow,
    LinTyVar,
    LMu,
    LNu,
    LProd,
    LReal,
    LSum,
    LUnit,
    Mu,
    Nu,
    Power,
    Prod,
    Real,
    TyVar,
    Type,
    Unit,
    Variant,
    subst_type,
    tuple_type,
    unfold_type,
)

__all__ = [
    "FwdTypePair",
    "CtxTranslation",
    "fwd_type",
    "fwd_ctx",
    "fwd_transform",
    "fwd_transform_split",
    "fwd_output_type",
]


@dataclass(frozen=True)
class FwdTypePair:
    primal: Type
    tangent: Type


@dataclass(frozen=True)
class CtxTranslation:
    primal: tuple[tuple[str, Type], ...]
    tangent: Type


def fwd_type(ty: Type) -> FwdTypePair:
    return FwdTypePair(_d1(ty), _d2(ty))


def _d1(ty: Type) -> Type:
    match ty:
        case TyVar() | Real() | Unit():
            return ty
        case Prod(a, b):
            return Prod(_d1(a), _d1(b))
        case Arrow(a, b):
            return Arrow(_d1(a), Prod(_d1(b), LinArrow(_d2(a), _d2(b))))
        case Variant(cases):
            return Variant(tuple((lab, _d1(t)) for lab, t in cases))
        case Mu(v, b) | Nu(v, b):
            return type(ty)(v, _d1(b))
    raise InternalError(f"not a source type: {ty}")


def _d2(ty: Type) -> Type:
    match ty:
        case TyVar(name):
            return LinTyVar(name)
        case Real(n):
            return LReal(n)
        case Unit():
            return LUnit()
        case Prod(a, b):
            return LProd(_d2(a), _d2(b))
        case Arrow(a, b):
            return Power(_d1(a), _d2(b))
        case Variant(cases):
            return LSum(tuple(_d2(t) for _, t in cases))
        case Mu(v, b):
            return LMu(v, _d2(b))
        case Nu(v, b):
            return LNu(v, _d2(b))
    raise InternalError(f"not a source type: {ty}")


def fwd_ctx(gamma: Iterable[tuple[str, Type]]) -> CtxTranslation:
    gamma = tuple(gamma)
    return CtxTranslation(
        tuple((x, _d1(t)) for x, t in gamma),
        tuple_type([_d2(t) for _, t in gamma], linear=True),
    )


def fwd_output_type(gamma, ty: Type) -> Type:
    """``Dτ₁ × (DΓ₂ ⊸ Dτ₂)``."""
    return Prod(_d1(ty), LinArrow(fwd_ctx(gamma).tangent, _d2(ty)))


# helpers shared with reverse mode --------------------------------------------------


def ext_pair(n: int, ctx_part: Term, var_part: Term) -> Term:
    """Tangent of an extended context ``Γ, x`` from its two parts (``Γ`` may be empty)."""
    return var_part if n == 0 else LPair(ctx_part, var_part)


def ctx_fst(n: int, v: Term) -> Term:
    return Zero(LUnit()) if n == 0 else LFst(v)


def ctx_snd(n: int, v: Term) -> Term:
    return v if n == 0 else LSnd(v)


def lookup_index(gamma: list[tuple[str, Type]], name: str) -> int:
    for i in range(len(gamma) - 1, -1, -1):
        if gamma[i][0] == name:
            return i
    raise UnboundVar(f"unbound variable {name}")


def normalize_gamma(gamma) -> list[tuple[str, Type]]:
    if isinstance(gamma, dict):
        return list(gamma.items())
    return list(gamma)


def _prepare(gamma, t):
    gamma = normalize_gamma(gamma)
    for _, ty in gamma:
        kind_check((), ty)
    type_check((), gamma, t)
    return gamma


def _ty(gamma, t) -> Type:
    return type_check((), gamma, t)


# efficient transformation -----------------------------------------------------------


def fwd_transform(gamma, t: Term) -> Term:
    """The shared forward transformation ``D[Γ]{t}``."""
    gamma = _prepare(gamma, t)
    return _Fwd().go(gamma, t)[0]


class _Fwd:
    def go(self, gamma: list, t: Term) -> tuple[Term, Type]:
        n = len(gamma)
        dctx = tuple_type([_d2(ty) for _, ty in gamma], linear=True)
        v = LVar()

        def lam(body):
            return LLam(dctx, body)

        match t:
            case Var(name):
                i = lookup_index(gamma, name)
                return Pair(Var(name), lam(Proj(i, n, v))), gamma[i][1]
            case Let(x, bound, body):
                dt, tty = self.go(gamma, bound)
                du, uty = self.go(gamma + [(x, tty)], body)
                xd, y, yd = fresh_name("dx"), fresh_name("y"), fresh_name("dy")
                out = PairLet(
                    x, xd, dt,
                    PairLet(y, yd, du, Pair(Var(y), lam(LApp(Var(yd), ext_pair(n, v, LApp(Var(xd), v)))))),
                )
                return out, uty
            case UnitVal():
                return Pair(UnitVal(), lam(LUnitVal())), Unit()
            case Pair(a, b):
                da, aty = self.go(gamma, a)
                db, bty = self.go(gamma, b)
                x, xd, y, yd = fresh_name("x"), fresh_name("dx"), fresh_name("y"), fresh_name("dy")
                body = Pair(Pair(Var(x), Var(y)), lam(LPair(LApp(Var(xd), v), LApp(Var(yd), v))))
                return PairLet(x, xd, da, PairLet(y, yd, db, body)), Prod(aty, bty)
            case Fst(body) | Snd(body):
                db, bty = self.go(gamma, body)
                x, xd = fresh_name("x"), fresh_name("dx")
                first = isinstance(t, Fst)
                prim = Fst(Var(x)) if first else Snd(Var(x))
                tan = LFst(LApp(Var(xd), v)) if first else LSnd(LApp(Var(xd), v))
                return PairLet(x, xd, db, Pair(prim, lam(tan))), bty.left if first else bty.right
            case PrimOp(op, args, param):
                require_derivative(op)
                names, wrapped, widths = [], [], []
                for a in args:
                    da, aty = self.go(gamma, a)
                    names.append((fresh_name("x"), fresh_name("dx")))
                    wrapped.append(da)
                    widths.append(aty.n)
                rty = _ty(gamma, t)
                xs = tuple(Var(x) for x, _ in names)
                tangents = ntuple([LApp(Var(xd), v) for _, xd in names], linear=True)
                out: Term = Pair(PrimOp(op, xs, param), lam(LOp(op, "D", xs, tangents, param)))
                for (x, xd), da in reversed(list(zip(names, wrapped))):
                    out = PairLet(x, xd, da, out)
                return out, rty
            case Pred(name, args):
                names, wrapped = [], []
                for a in args:
                    da, _ = self.go(gamma, a)
                    names.append((fresh_name("x"), fresh_name("dx")))
                    wrapped.append(da)
                out = Pair(Pred(name, tuple(Var(x) for x, _ in names)), lam(Zero(_d2(BOOL))))
                for (x, xd), da in reversed(list(zip(names, wrapped))):
                    out = PairLet(x, xd, da, out)
                return out, BOOL
            case Lam(x, ty, body):
                db, bty = self.go(gamma + [(x, ty)], body)
                y, z, zd = fresh_name("f"), fresh_name("z"), fresh_name("dz")
                prim = Lam(
                    x, _d1(ty),
                    PairLet(z, zd, App(Var(y), Var(x)),
                            Pair(Var(z), LLam(_d2(ty), LApp(Var(zd), ext_pair(n, Zero(dctx), v))))),
                )
                tan = lam(PLam(x, _d1(ty), LApp(Snd(App(Var(y), Var(x))), ext_pair(n, v, Zero(_d2(ty))))))
                return Let(y, Lam(x, _d1(ty), db), Pair(prim, tan)), Arrow(ty, bty)
            case App(fn, arg):
                df, fty = self.go(gamma, fn)
                da, _ = self.go(gamma, arg)
                x, xd, y, yd, z, zd = (fresh_name(h) for h in ("f", "df", "y", "dy", "z", "dz"))
                body = Pair(Var(z), lam(Add(PApp(LApp(Var(xd), v), Var(y)), LApp(Var(zd), LApp(Var(yd), v)))))
                out = PairLet(x, xd, df, PairLet(y, yd, da, PairLet(z, zd, App(Var(x), Var(y)), body)))
                return out, fty.cod
            case Inj(label, body, vty):
                db, _ = self.go(gamma, body)
                x, xd = fresh_name("x"), fresh_name("dx")
                i = vty.index_of(label)
                out = PairLet(x, xd, db, Pair(Inj(label, Var(x), _d1(vty)), lam(LInj(i, LApp(Var(xd), v), _d2(vty)))))
                return out, vty
            case Match(scrut, branches):
                ds, sty = self.go(gamma, scrut)
                y, yd = fresh_name("y"), fresh_name("dy")
                lsum = _d2(sty)
                new_branches, rty = [], None
                for i, ((label, binder, body), (_, cty)) in enumerate(zip(branches, sty.cases)):
                    db, rty = self.go(gamma + [(binder, cty)], body)
                    z, zd = fresh_name("z"), fresh_name("dz")
                    tan = lam(LApp(Var(zd), ext_pair(n, v, LProj(i, LApp(Var(yd), v), lsum))))
                    new_branches.append((label, binder, PairLet(z, zd, db, Pair(Var(z), tan))))
                return PairLet(y, yd, ds, Match(Var(y), tuple(new_branches))), rty
            case Roll(body, mu):
                db, _ = self.go(gamma, body)
                x, xd = fresh_name("x"), fresh_name("dx")
                return PairLet(x, xd, db, Pair(Roll(Var(x), _d1(mu)), lam(LRoll(LApp(Var(xd), v), _d2(mu))))), mu
            case Unroll(body):
                db, nu = self.go(gamma, body)
                x, xd = fresh_name("x"), fresh_name("dx")
                return PairLet(x, xd, db, Pair(Unroll(Var(x)), lam(LUnroll(LApp(Var(xd), v))))), unfold_type(nu)
            case Fold(body, x, alg, carrier):
                db, mu = self.go(gamma, body)
                layer_ty = subst_type(mu.body, mu.var, carrier)
                du, _ = self.go([(x, layer_ty)], alg)
                m1, s1 = _d1(mu), _d1(carrier)
                c = _d1(layer_ty)
                y, yd, z, x1, p, x2, x3, w = (fresh_name(h) for h in ("y", "dy", "alg", "x", "p", "x", "x", "w"))
                children = fmap_term(m1.body, {mu.var: (w, Fst(App(Var(z), Var(w))))}, {mu.var: c}, {mu.var: s1}, Var(x3))
                step = Let(x2, Fold(Var(p), x3, children, c), LApp(Snd(App(Var(z), Var(x2))), LVar()))
                tan = LFold(LApp(Var(yd), v), Var(y), p, invroll(m1, Var(p)), step, mu.var, m1.body, _d2(mu), m1,
                            _d2(carrier))
                prim = Fold(Var(y), x1, Fst(App(Var(z), Var(x1))), s1)
                out = PairLet(y, yd, db, Let(z, Lam(x, c, du), Pair(prim, lam(tan))))
                return out, carrier
            case Gen(body, x, coalg, nu):
                db, seed = self.go(gamma, body)
                du, _ = self.go([(x, seed)], coalg)
                n1, s1 = _d1(nu), _d1(seed)
                y, yd, z, x1, p = (fresh_name(h) for h in ("y", "dy", "coalg", "x", "p"))
                tan = LGen(LApp(Var(yd), v), Var(y), p, Fst(App(Var(z), Var(p))),
                           LApp(Snd(App(Var(z), Var(p))), LVar()), nu.var, n1.body, _d2(nu), s1, _d2(seed))
                prim = Gen(Var(y), x1, Fst(App(Var(z), Var(x1))), n1)
                out = PairLet(y, yd, db, Let(z, Lam(x, s1, du), Pair(prim, lam(tan))))
                return out, nu
        raise TypeMismatch("a source term", type(t).__name__, t.loc)


# transformation without sharing ---------------------------------------------------------


def fwd_transform_split(gamma, t: Term) -> tuple[Term, Term]:
    """Primal ``D{t}₁`` and tangent map ``λ̲v. D{t}₂``, computed independently."""
    gamma = _prepare(gamma, t)
    split = _FwdSplit()
    dctx = tuple_type([_d2(ty) for _, ty in gamma], linear=True)
    return split.primal(gamma, t), LLam(dctx, split.tangent(gamma, t))


class _FwdSplit:
    def primal(self, gamma: list, t: Term) -> Term:
        p = self.primal
        n = len(gamma)
        match t:
            case Var():
                return t
            case Let(x, bound, body):
                return Let(x, p(gamma, bound), p(gamma + [(x, _ty(gamma, bound))], body))
            case UnitVal():
                return t
            case Pair(a, b):
                return Pair(p(gamma, a), p(gamma, b))
            case Fst(b):
                return Fst(p(gamma, b))
            case Snd(b):
                return Snd(p(gamma, b))
            case PrimOp(op, args, param):
                require_derivative(op)
                return PrimOp(op, tuple(p(gamma, a) for a in args), param)
            case Pred(name, args):
                return Pred(name, tuple(p(gamma, a) for a in args))
            case Lam(x, ty, body):
                ext = gamma + [(x, ty)]
                dctx = tuple_type([_d2(s) for _, s in gamma], linear=True)
                tan = LLam(_d2(ty), LLet(ext_pair(n, Zero(dctx), LVar()), self.tangent(ext, body)))
                return Lam(x, _d1(ty), Pair(p(ext, body), tan))
            case App(fn, arg):
                return Fst(App(p(gamma, fn), p(gamma, arg)))
            case Inj(label, body, vty):
                return Inj(label, p(gamma, body), _d1(vty))
            case Match(scrut, branches):
                sty = _ty(gamma, scrut)
                return Match(
                    p(gamma, scrut),
                    tuple((lab, b, p(gamma + [(b, cty)], body)) for (lab, b, body), (_, cty) in zip(branches, sty.cases)),
                )
            case Roll(body, mu):
                return Roll(p(gamma, body), _d1(mu))
            case Unroll(body):
                return Unroll(p(gamma, body))
            case Fold(body, x, alg, carrier):
                mu = _ty(gamma, body)
                layer_ty = subst_type(mu.body, mu.var, carrier)
                return Fold(p(gamma, body), x, p([(x, layer_ty)], alg), _d1(carrier))
            case Gen(body, x, coalg, nu):
                seed = _ty(gamma, body)
                return Gen(p(gamma, body), x, p([(x, seed)], coalg), _d1(nu))
        raise TypeMismatch("a source term", type(t).__name__, t.loc)

    def tangent(self, gamma: list, t: Term) -> Term:
        d = self.tangent
        p = self.primal
        n = len(gamma)
        v = LVar()
        match t:
            case Var(name):
                return Proj(lookup_index(gamma, name), n, v)
            case Let(x, bound, body):
                ext = gamma + [(x, _ty(gamma, bound))]
                return Let(x, p(gamma, bound), LLet(ext_pair(n, v, d(gamma, bound)), d(ext, body)))
            case UnitVal():
                return LUnitVal()
            case Pair(a, b):
                return LPair(d(gamma, a), d(gamma, b))
            case Fst(b):
                return LFst(d(gamma, b))
            case Snd(b):
                return LSnd(d(gamma, b))
            case PrimOp(op, args, param):
                require_derivative(op)
                return LOp(op, "D", tuple(p(gamma, a) for a in args), ntuple([d(gamma, a) for a in args], True), param)
            case Pred():
                return Zero(_d2(BOOL))
            case Lam(x, ty, body):
                ext = gamma + [(x, ty)]
                return PLam(x, _d1(ty), LLet(ext_pair(n, v, Zero(_d2(ty))), d(ext, body)))
            case App(fn, arg):
                return Add(PApp(d(gamma, fn), p(gamma, arg)), LApp(Snd(App(p(gamma, fn), p(gamma, arg))), d(gamma, arg)))
            case Inj(label, body, vty):
                return LInj(vty.index_of(label), d(gamma, body), _d2(vty))
            case Match(scrut, branches):
                sty = _ty(gamma, scrut)
                lsum = _d2(sty)
                out = []
                for i, ((lab, b, body), (_, cty)) in enumerate(zip(branches, sty.cases)):
                    ext = gamma + [(b, cty)]
                    out.append((lab, b, LLet(ext_pair(n, v, LProj(i, d(gamma, scrut), lsum)), d(ext, body))))
                return Match(p(gamma, scrut), tuple(out))
            case Roll(body, mu):
                return LRoll(d(gamma, body), _d2(mu))
            case Unroll(body):
                return LUnroll(d(gamma, body))
            case Fold(body, x, alg, carrier):
                mu = _ty(gamma, body)
                layer_ty = subst_type(mu.body, mu.var, carrier)
                m1, c = _d1(mu), _d1(layer_ty)
                pv, x3 = fresh_name("p"), fresh_name("x")
                inner = [(x, layer_ty)]
                children = fmap_term(m1.body, {mu.var: (x, p(inner, alg))}, {mu.var: c}, {mu.var: _d1(carrier)}, Var(x3))
                step = Let(x, Fold(Var(pv), x3, children, c), d(inner, alg))
                return LFold(d(gamma, body), p(gamma, body), pv, invroll(m1, Var(pv)), step, mu.var, m1.body, _d2(mu),
                             m1, _d2(carrier))
            case Gen(body, x, coalg, nu):
                seed = _ty(gamma, body)
                inner = [(x, seed)]
                n1 = _d1(nu)
                return LGen(d(gamma, body), p(gamma, body), x, p(inner, coalg), d(inner, coalg), nu.var, n1.body,
                            _d2(nu), _d1(seed), _d2(seed))
        raise TypeMismatch("a source term", type(t).__name__, t.loc)
