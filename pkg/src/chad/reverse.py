"""Reverse-mode CHAD: primal/cotangent type translation and the term transformation.

``rev_transform(Γ, t)`` produces a target term of type ``D⃖τ₁ × (D⃖τ₂ ⊸ D⃖Γ₂)``:
the primal together with the pullback of cotangents.  Inductive types get
coinductive cotangents and vice versa.
"""

from __future__ import annotations

from typing import Iterable

from .errors import InternalError, TypeMismatch
from .forward import CtxTranslation, _prepare, _ty, ctx_fst, ctx_snd, lookup_index
from .ops import require_derivative
from .source import fmap_term, invroll
from .terms import (
    Add,
    App,
    CoProj,
    CopowerElim,
    CopowerIntro,
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
    LUnroll,
    LVar,
    Match,
    Pair,
    PairLet,
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
)
from .types import (
    BOOL,
    Arrow,
    Copower,
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
from .forward import FwdTypePair as RevTypePair

__all__ = [
    "RevTypePair",
    "rev_type",
    "rev_ctx",
    "rev_transform",
    "rev_transform_split",
    "rev_output_type",
]


def rev_type(ty: Type) -> RevTypePair:
    return RevTypePair(_r1(ty), _r2(ty))


def _r1(ty: Type) -> Type:
    match ty:
        case TyVar() | Real() | Unit():
            return ty
        case Prod(a, b):
            return Prod(_r1(a), _r1(b))
        case Arrow(a, b):
            return Arrow(_r1(a), Prod(_r1(b), LinArrow(_r2(b), _r2(a))))
        case Variant(cases):
            return Variant(tuple((lab, _r1(t)) for lab, t in cases))
        case Mu(v, b) | Nu(v, b):
            return type(ty)(v, _r1(b))
    raise InternalError(f"not a source type: {ty}")


def _r2(ty: Type) -> Type:
    match ty:
        case TyVar(name):
            return LinTyVar(name)
        case Real(n):
            return LReal(n)
        case Unit():
            return LUnit()
        case Prod(a, b):
            return LProd(_r2(a), _r2(b))
        case Arrow(a, b):
            return Copower(_r1(a), _r2(b))
        case Variant(cases):
            return LSum(tuple(_r2(t) for _, t in cases))
        case Mu(v, b):
            return LNu(v, _r2(b))
        case Nu(v, b):
            return LMu(v, _r2(b))
    raise InternalError(f"not a source type: {ty}")


def rev_ctx(gamma: Iterable[tuple[str, Type]]) -> CtxTranslation:
    gamma = tuple(gamma.items() if isinstance(gamma, dict) else gamma)
    return CtxTranslation(
        tuple((x, _r1(t)) for x, t in gamma),
        tuple_type([_r2(t) for _, t in gamma], linear=True),
    )


def rev_output_type(gamma, ty: Type) -> Type:
    """``D⃖τ₁ × (D⃖τ₂ ⊸ D⃖Γ₂)``."""
    return Prod(_r1(ty), LinArrow(_r2(ty), rev_ctx(gamma).tangent))


def _ctx_cot(gamma) -> Type:
    return tuple_type([_r2(ty) for _, ty in gamma], linear=True)


def _sum(terms: list[Term], zero_ty: Type) -> Term:
    if not terms:
        return Zero(zero_ty)
    out = terms[0]
    for t in terms[1:]:
        out = Add(out, t)
    return out


# efficient transformation -----------------------------------------------------------


def rev_transform(gamma, t: Term) -> Term:
    """The shared reverse transformation ``D⃖[Γ]{t}``."""
    gamma = _prepare(gamma, t)
    return _Rev().go(gamma, t)[0]


class _Rev:
    def go(self, gamma: list, t: Term) -> tuple[Term, Type]:
        n = len(gamma)
        rctx = _ctx_cot(gamma)
        v = LVar()

        match t:
            case Var(name):
                i = lookup_index(gamma, name)
                ty = gamma[i][1]
                comps = tuple(_r2(s) for _, s in gamma)
                return Pair(Var(name), LLam(_r2(ty), CoProj(i, v, comps))), ty
            case Let(x, bound, body):
                dt, tty = self.go(gamma, bound)
                du, uty = self.go(gamma + [(x, tty)], body)
                xd, y, yd = fresh_name("dx"), fresh_name("y"), fresh_name("dy")
                back = LLet(LApp(Var(yd), v), Add(ctx_fst(n, v), LApp(Var(xd), ctx_snd(n, v))))
                return PairLet(x, xd, dt, PairLet(y, yd, du, Pair(Var(y), LLam(_r2(uty), back)))), uty
            case UnitVal():
                return Pair(UnitVal(), LLam(LUnit(), Zero(rctx))), Unit()
            case Pair(a, b):
                da, aty = self.go(gamma, a)
                db, bty = self.go(gamma, b)
                x, xd, y, yd = fresh_name("x"), fresh_name("dx"), fresh_name("y"), fresh_name("dy")
                back = Add(LApp(Var(xd), LFst(v)), LApp(Var(yd), LSnd(v)))
                body = Pair(Pair(Var(x), Var(y)), LLam(LProd(_r2(aty), _r2(bty)), back))
                return PairLet(x, xd, da, PairLet(y, yd, db, body)), Prod(aty, bty)
            case Fst(body) | Snd(body):
                db, bty = self.go(gamma, body)
                x, xd = fresh_name("x"), fresh_name("dx")
                if isinstance(t, Fst):
                    prim, rty, pad = Fst(Var(x)), bty.left, LPair(v, Zero(_r2(bty.right)))
                else:
                    prim, rty, pad = Snd(Var(x)), bty.right, LPair(Zero(_r2(bty.left)), v)
                return PairLet(x, xd, db, Pair(prim, LLam(_r2(rty), LApp(Var(xd), pad)))), rty
            case PrimOp(op, args, param):
                require_derivative(op)
                names, wrapped = [], []
                for a in args:
                    da, _ = self.go(gamma, a)
                    names.append((fresh_name("x"), fresh_name("dx")))
                    wrapped.append(da)
                rty = _ty(gamma, t)
                xs = tuple(Var(x) for x, _ in names)
                k = len(args)
                if k == 0:
                    back: Term = Zero(rctx)
                else:
                    back = LLet(
                        LOp(op, "DT", xs, v, param),
                        _sum([LApp(Var(xd), Proj(i, k, v)) for i, (_, xd) in enumerate(names)], rctx),
                    )
                out: Term = Pair(PrimOp(op, xs, param), LLam(_r2(rty), back))
                for (x, xd), da in reversed(list(zip(names, wrapped))):
                    out = PairLet(x, xd, da, out)
                return out, rty
            case Pred(name, args):
                names, wrapped = [], []
                for a in args:
                    da, _ = self.go(gamma, a)
                    names.append((fresh_name("x"), fresh_name("dx")))
                    wrapped.append(da)
                out = Pair(Pred(name, tuple(Var(x) for x, _ in names)), LLam(_r2(BOOL), Zero(rctx)))
                for (x, xd), da in reversed(list(zip(names, wrapped))):
                    out = PairLet(x, xd, da, out)
                return out, BOOL
            case Lam(x, ty, body):
                db, bty = self.go(gamma + [(x, ty)], body)
                y, z, zd = fresh_name("f"), fresh_name("z"), fresh_name("dz")
                prim = Lam(
                    x, _r1(ty),
                    PairLet(z, zd, App(Var(y), Var(x)), Pair(Var(z), LLam(_r2(bty), ctx_snd(n, LApp(Var(zd), v))))),
                )
                back = CopowerElim(v, x, ctx_fst(n, LApp(Snd(App(Var(y), Var(x))), v)), rctx)
                return Let(y, Lam(x, _r1(ty), db), Pair(prim, LLam(Copower(_r1(ty), _r2(bty)), back))), Arrow(ty, bty)
            case App(fn, arg):
                df, fty = self.go(gamma, fn)
                da, _ = self.go(gamma, arg)
                x, xd, y, yd, z, zd = (fresh_name(h) for h in ("f", "df", "y", "dy", "z", "dz"))
                back = Add(LApp(Var(xd), CopowerIntro(Var(y), v)), LApp(Var(yd), LApp(Var(zd), v)))
                body = Pair(Var(z), LLam(_r2(fty.cod), back))
                out = PairLet(x, xd, df, PairLet(y, yd, da, PairLet(z, zd, App(Var(x), Var(y)), body)))
                return out, fty.cod
            case Inj(label, body, vty):
                db, _ = self.go(gamma, body)
                x, xd = fresh_name("x"), fresh_name("dx")
                i = vty.index_of(label)
                back = LApp(Var(xd), LProj(i, v, _r2(vty)))
                return PairLet(x, xd, db, Pair(Inj(label, Var(x), _r1(vty)), LLam(_r2(vty), back))), vty
            case Match(scrut, branches):
                ds, sty = self.go(gamma, scrut)
                y, yd = fresh_name("y"), fresh_name("dy")
                lsum = _r2(sty)
                new_branches, rty = [], None
                for i, ((label, binder, body), (_, cty)) in enumerate(zip(branches, sty.cases)):
                    db, rty = self.go(gamma + [(binder, cty)], body)
                    z, zd = fresh_name("z"), fresh_name("dz")
                    back = LLet(
                        LApp(Var(zd), v),
                        Add(ctx_fst(n, v), LApp(Var(yd), LInj(i, ctx_snd(n, v), lsum))),
                    )
                    new_branches.append((label, binder, PairLet(z, zd, db, Pair(Var(z), LLam(_r2(rty), back)))))
                return PairLet(y, yd, ds, Match(Var(y), tuple(new_branches))), rty
            case Roll(body, mu):
                db, _ = self.go(gamma, body)
                x, xd = fresh_name("x"), fresh_name("dx")
                out = PairLet(x, xd, db, Pair(Roll(Var(x), _r1(mu)), LLam(_r2(mu), LApp(Var(xd), LUnroll(v)))))
                return out, mu
            case Unroll(body):
                db, nu = self.go(gamma, body)
                x, xd = fresh_name("x"), fresh_name("dx")
                layer = unfold_type(nu)
                out = PairLet(x, xd, db, Pair(Unroll(Var(x)), LLam(_r2(layer), LApp(Var(xd), LRoll(v, _r2(nu))))))
                return out, layer
            case Fold(body, x, alg, carrier):
                db, mu = self.go(gamma, body)
                layer_ty = subst_type(mu.body, mu.var, carrier)
                du, _ = self.go([(x, layer_ty)], alg)
                m1, s1 = _r1(mu), _r1(carrier)
                c = _r1(layer_ty)
                y, yd, z, x1, p, x2, x3, w = (fresh_name(h) for h in ("y", "dy", "alg", "x", "p", "x", "x", "w"))
                children = fmap_term(m1.body, {mu.var: (w, Fst(App(Var(z), Var(w))))}, {mu.var: c}, {mu.var: s1}, Var(x3))
                step = Let(x2, Fold(Var(p), x3, children, c), LApp(Snd(App(Var(z), Var(x2))), LVar()))
                cot = LGen(v, Var(y), p, invroll(m1, Var(p)), step, mu.var, m1.body, _r2(mu), m1, _r2(carrier))
                prim = Fold(Var(y), x1, Fst(App(Var(z), Var(x1))), s1)
                out = PairLet(y, yd, db, Let(z, Lam(x, c, du), Pair(prim, LLam(_r2(carrier), LApp(Var(yd), cot)))))
                return out, carrier
            case Gen(body, x, coalg, nu):
                db, seed = self.go(gamma, body)
                du, _ = self.go([(x, seed)], coalg)
                n1, s1 = _r1(nu), _r1(seed)
                y, yd, z, x1, p = (fresh_name(h) for h in ("y", "dy", "coalg", "x", "p"))
                cot = LFold(v, Var(y), p, Fst(App(Var(z), Var(p))), LApp(Snd(App(Var(z), Var(p))), LVar()),
                            nu.var, n1.body, _r2(nu), s1, _r2(seed))
                prim = Gen(Var(y), x1, Fst(App(Var(z), Var(x1))), n1)
                out = PairLet(y, yd, db, Let(z, Lam(x, s1, du), Pair(prim, LLam(_r2(nu), LApp(Var(yd), cot)))))
                return out, nu
        raise TypeMismatch("a source term", type(t).__name__, t.loc)


# transformation without sharing ---------------------------------------------------------


def rev_transform_split(gamma, t: Term) -> tuple[Term, Term]:
    """Primal ``D⃖{t}₁`` and pullback ``λ̲v. D⃖{t}₂``, computed independently."""
    gamma = _prepare(gamma, t)
    split = _RevSplit()
    return split.primal(gamma, t), LLam(_r2(_ty(gamma, t)), split.cotangent(gamma, t))


class _RevSplit:
    def primal(self, gamma: list, t: Term) -> Term:
        p = self.primal
        n = len(gamma)
        match t:
            case Var() | UnitVal():
                return t
            case Let(x, bound, body):
                return Let(x, p(gamma, bound), p(gamma + [(x, _ty(gamma, bound))], body))
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
                bty = _ty(ext, body)
                back = LLam(_r2(bty), ctx_snd(n, self.cotangent(ext, body)))
                return Lam(x, _r1(ty), Pair(p(ext, body), back))
            case App(fn, arg):
                return Fst(App(p(gamma, fn), p(gamma, arg)))
            case Inj(label, body, vty):
                return Inj(label, p(gamma, body), _r1(vty))
            case Match(scrut, branches):
                sty = _ty(gamma, scrut)
                return Match(
                    p(gamma, scrut),
                    tuple((lab, b, p(gamma + [(b, cty)], body)) for (lab, b, body), (_, cty) in zip(branches, sty.cases)),
                )
            case Roll(body, mu):
                return Roll(p(gamma, body), _r1(mu))
            case Unroll(body):
                return Unroll(p(gamma, body))
            case Fold(body, x, alg, carrier):
                mu = _ty(gamma, body)
                layer_ty = subst_type(mu.body, mu.var, carrier)
                return Fold(p(gamma, body), x, p([(x, layer_ty)], alg), _r1(carrier))
            case Gen(body, x, coalg, nu):
                seed = _ty(gamma, body)
                return Gen(p(gamma, body), x, p([(x, seed)], coalg), _r1(nu))
        raise TypeMismatch("a source term", type(t).__name__, t.loc)

    def cotangent(self, gamma: list, t: Term) -> Term:
        d = self.cotangent
        p = self.primal
        n = len(gamma)
        rctx = _ctx_cot(gamma)
        v = LVar()
        match t:
            case Var(name):
                return CoProj(lookup_index(gamma, name), v, tuple(_r2(s) for _, s in gamma))
            case Let(x, bound, body):
                ext = gamma + [(x, _ty(gamma, bound))]
                inner = Add(ctx_fst(n, v), LLet(ctx_snd(n, v), d(gamma, bound)))
                return Let(x, p(gamma, bound), LLet(d(ext, body), inner))
            case UnitVal():
                return Zero(rctx)
            case Pair(a, b):
                return Add(LLet(LFst(v), d(gamma, a)), LLet(LSnd(v), d(gamma, b)))
            case Fst(b):
                bty = _ty(gamma, b)
                return LLet(LPair(v, Zero(_r2(bty.right))), d(gamma, b))
            case Snd(b):
                bty = _ty(gamma, b)
                return LLet(LPair(Zero(_r2(bty.left)), v), d(gamma, b))
            case PrimOp(op, args, param):
                require_derivative(op)
                k = len(args)
                if k == 0:
                    return Zero(rctx)
                xs = tuple(p(gamma, a) for a in args)
                return LLet(LOp(op, "DT", xs, v, param), _sum([LLet(Proj(i, k, v), d(gamma, a)) for i, a in enumerate(args)], rctx))
            case Pred():
                return Zero(rctx)
            case Lam(x, ty, body):
                return CopowerElim(v, x, ctx_fst(n, d(gamma + [(x, ty)], body)), rctx)
            case App(fn, arg):
                pf, pa = p(gamma, fn), p(gamma, arg)
                return Add(LLet(CopowerIntro(pa, v), d(gamma, fn)), LLet(LApp(Snd(App(pf, pa)), v), d(gamma, arg)))
            case Inj(label, body, vty):
                return LLet(LProj(vty.index_of(label), v, _r2(vty)), d(gamma, body))
            case Match(scrut, branches):
                sty = _ty(gamma, scrut)
                lsum = _r2(sty)
                out = []
                for i, ((lab, b, body), (_, cty)) in enumerate(zip(branches, sty.cases)):
                    ext = gamma + [(b, cty)]
                    back = Add(ctx_fst(n, v), LLet(LInj(i, ctx_snd(n, v), lsum), d(gamma, scrut)))
                    out.append((lab, b, LLet(d(ext, body), back)))
                return Match(p(gamma, scrut), tuple(out))
            case Roll(body, mu):
                return LLet(LUnroll(v), d(gamma, body))
            case Unroll(body):
                nu = _ty(gamma, body)
                return LLet(LRoll(v, _r2(nu)), d(gamma, body))
            case Fold(body, x, alg, carrier):
                mu = _ty(gamma, body)
                layer_ty = subst_type(mu.body, mu.var, carrier)
                m1, c = _r1(mu), _r1(layer_ty)
                pv, x3 = fresh_name("p"), fresh_name("x")
                inner = [(x, layer_ty)]
                children = fmap_term(m1.body, {mu.var: (x, p(inner, alg))}, {mu.var: c}, {mu.var: _r1(carrier)}, Var(x3))
                step = Let(x, Fold(Var(pv), x3, children, c), d(inner, alg))
                cot = LGen(v, p(gamma, body), pv, invroll(m1, Var(pv)), step, mu.var, m1.body, _r2(mu), m1, _r2(carrier))
                return LLet(cot, d(gamma, body))
            case Gen(body, x, coalg, nu):
                seed = _ty(gamma, body)
                inner = [(x, seed)]
                n1 = _r1(nu)
                cot = LFold(v, p(gamma, body), x, p(inner, coalg), d(inner, coalg), nu.var, n1.body, _r2(nu),
                            _r1(seed), _r2(seed))
                return LLet(cot, d(gamma, body))
        raise TypeMismatch("a source term", type(t).__name__, t.loc)
