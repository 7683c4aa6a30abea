"""The erased linear target language: type erasure, type checking, linear functorial action."""

from __future__ import annotations

from typing import Iterable, Mapping, Optional

from .errors import (
    ArityMismatch,
    IllKinded,
    InternalError,
    LinearVarMisuse,
    NonExhaustiveMatch,
    NotLinearType,
    TypeMismatch,
    UnboundTypeVar,
    UnboundVar,
)
from .ops import PREDICATES, lin_tuple_type, op_sig, require_derivative
from .source import invroll
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
)
from .types import (
    BOOL,
    CARTESIAN,
    LINEAR,
    Arrow,
    Copower,
    DepPi,
    DepSigma,
    LCase,
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
    ftv,
    subst_many,
    subst_type,
    tuple_components,
    tuple_type,
    types_equal,
    unfold_type,
)

__all__ = [
    "erase_type",
    "is_linear_type",
    "is_cartesian_type",
    "check_linear_type",
    "check_cartesian_type",
    "type_check_target",
    "aligned",
    "lin_fmap",
]


# erasure ------------------------------------------------------------------------


def erase_type(ty: Type) -> Type:
    """Remove term dependency: Π becomes a power or arrow, Σ a copower or product,
    and a case distinction on a term becomes a linear sum."""
    match ty:
        case DepPi(_, dom, body):
            dom, body = erase_type(dom), erase_type(body)
            return Power(dom, body) if is_linear_type(body) else Arrow(dom, body)
        case DepSigma(_, dom, body):
            dom, body = erase_type(dom), erase_type(body)
            return Copower(dom, body) if is_linear_type(body) else Prod(dom, body)
        case LCase(_, branches):
            return LSum(tuple(erase_type(t) for _, _, t in branches))
        case TyVar() | LinTyVar() | Real() | Unit() | LReal() | LUnit():
            return ty
        case Mu(v, b) | Nu(v, b) | LMu(v, b) | LNu(v, b):
            return type(ty)(v, erase_type(b))
        case Prod(a, b) | LProd(a, b):
            return type(ty)(erase_type(a), erase_type(b))
        case Arrow(a, b) | LinArrow(a, b):
            return type(ty)(erase_type(a), erase_type(b))
        case Power(a, b) | Copower(a, b):
            return type(ty)(erase_type(a), erase_type(b))
        case Variant(cases):
            return Variant(tuple((lab, erase_type(t)) for lab, t in cases))
        case LSum(comps):
            return LSum(tuple(erase_type(t) for t in comps))
    raise InternalError(f"not a type: {ty!r}")


# kinding ---------------------------------------------------------------------------


def is_linear_type(ty: Type) -> bool:
    return isinstance(ty, LINEAR) or (isinstance(ty, (DepPi, DepSigma)) and is_linear_type(ty.body)) or isinstance(
        ty, LCase
    )


def is_cartesian_type(ty: Type) -> bool:
    return isinstance(ty, CARTESIAN)


def check_cartesian_type(ty: Type, delta: Iterable[str] = ()) -> None:
    delta = tuple(delta)
    match ty:
        case TyVar(name):
            if name not in delta:
                raise UnboundTypeVar(f"unbound type variable {name}")
        case Real() | Unit():
            pass
        case Prod(a, b):
            check_cartesian_type(a, delta)
            check_cartesian_type(b, delta)
        case Arrow(a, b):
            check_cartesian_type(a, delta)
            check_cartesian_type(b, delta)
        case LinArrow(a, b):
            check_linear_type(a, (), delta)
            check_linear_type(b, (), delta)
        case Variant(cases):
            if not cases:
                raise IllKinded("empty variant type")
            for _, t in cases:
                check_cartesian_type(t, delta)
        case Mu(v, b) | Nu(v, b):
            check_cartesian_type(b, delta + (v,))
        case _:
            raise IllKinded(f"{ty} is not a cartesian type")


def check_linear_type(ty: Type, ldelta: Iterable[str] = (), delta: Iterable[str] = ()) -> None:
    ldelta, delta = tuple(ldelta), tuple(delta)
    match ty:
        case LinTyVar(name):
            if name not in ldelta:
                raise UnboundTypeVar(f"unbound linear type variable {name}")
        case LReal() | LUnit():
            pass
        case LProd(a, b):
            check_linear_type(a, ldelta, delta)
            check_linear_type(b, ldelta, delta)
        case Power(i, b) | Copower(i, b):
            check_cartesian_type(i, delta)
            check_linear_type(b, ldelta, delta)
        case LSum(comps):
            for c in comps:
                check_linear_type(c, ldelta, delta)
        case LMu(v, b) | LNu(v, b):
            check_linear_type(b, ldelta + (v,), delta)
        case _:
            raise NotLinearType(f"{ty} is not a linear type")


def aligned(prim: Type, lin: Type, holes: Iterable[str]) -> bool:
    """Whether a primal functor and a linear functor share their hole structure."""
    holes = set(holes)
    if not any(ns == "l" and n in holes for ns, n in ftv(lin)):
        return True
    match lin:
        case LinTyVar(name):
            return isinstance(prim, TyVar) and prim.name == name
        case LProd(a, b):
            return isinstance(prim, Prod) and aligned(prim.left, a, holes) and aligned(prim.right, b, holes)
        case LSum(comps):
            return (
                isinstance(prim, Variant)
                and len(prim.cases) == len(comps)
                and all(aligned(t, c, holes) for (_, t), c in zip(prim.cases, comps))
            )
        case LMu(v, b) | LNu(v, b):
            if not isinstance(prim, (Mu, Nu)):
                return False
            lb = subst_type(b, v, LinTyVar(prim.var), "l") if v != prim.var else b
            return aligned(prim.body, lb, (holes - {v}) | {prim.var})
    return False


# type checking ------------------------------------------------------------------


def type_check_target(
    delta: Iterable[str],
    gamma: Mapping[str, Type] | Iterable[tuple[str, Type]],
    lin: Optional[Type],
    t: Term,
) -> Type:
    """Type of target term ``t`` under ``delta | gamma`` and optional linear hypothesis ``v : lin``."""
    delta = tuple(delta)
    gamma = dict(gamma.items() if isinstance(gamma, Mapping) else gamma)
    return _Checker(delta).check(gamma, lin, t)


def _expect(cond, expected, found, t: Term, note: str = ""):
    if not cond:
        raise TypeMismatch(expected, found, t.loc, note)


class _Checker:
    def __init__(self, delta):
        self.delta = delta

    def cart(self, gamma, t):
        ty = self.check(gamma, None, t)
        _expect(is_cartesian_type(ty), "a cartesian term", ty, t)
        return ty

    def linear(self, gamma, lin, t):
        ty = self.check(gamma, lin, t)
        if not is_linear_type(ty):
            raise NotLinearType(f"expected a linear term, found type {ty}")
        return ty

    def check(self, gamma: dict, lin, t: Term) -> Type:
        match t:
            case Var(name):
                if name not in gamma:
                    raise UnboundVar(f"unbound variable {name}")
                return gamma[name]
            case Let(name, bound, body):
                return self.check({**gamma, name: self.cart(gamma, bound)}, lin, body)
            case PrimOp(op, args, param):
                widths = []
                for a in args:
                    ty = self.cart(gamma, a)
                    _expect(isinstance(ty, Real), "a real array", ty, a)
                    widths.append(ty.n)
                return Real(op_sig(op, tuple(widths), param).result_width)
            case Pred(name, args):
                arity, _ = PREDICATES[name]
                if len(args) != arity:
                    raise ArityMismatch(f"{name} takes {arity} arguments")
                for a in args:
                    ty = self.cart(gamma, a)
                    _expect(types_equal(ty, Real(1)), Real(1), ty, a)
                return BOOL
            case UnitVal():
                return Unit()
            case Pair(a, b):
                return Prod(self.cart(gamma, a), self.cart(gamma, b))
            case Fst(body) | Snd(body):
                ty = self.cart(gamma, body)
                _expect(isinstance(ty, Prod), "a product", ty, t)
                return ty.left if isinstance(t, Fst) else ty.right
            case Lam(name, ty, body):
                check_cartesian_type(ty, self.delta)
                return Arrow(ty, self.cart({**gamma, name: ty}, body))
            case App(fn, arg):
                fty = self.cart(gamma, fn)
                _expect(isinstance(fty, Arrow), "a function", fty, fn)
                aty = self.cart(gamma, arg)
                _expect(types_equal(fty.dom, aty), fty.dom, aty, arg)
                return fty.cod
            case Inj(label, body, ty):
                _expect(isinstance(ty, Variant) and label in ty.labels, f"variant with {label}", ty, t)
                bty = self.cart(gamma, body)
                _expect(types_equal(ty.case_type(label), bty), ty.case_type(label), bty, body)
                return ty
            case Match(scrut, branches):
                sty = self.cart(gamma, scrut)
                _expect(isinstance(sty, Variant), "a variant", sty, scrut)
                if tuple(lab for lab, _, _ in branches) != sty.labels:
                    raise NonExhaustiveMatch(f"match does not follow the constructors of {sty}")
                result = None
                for (_, binder, body), (_, cty) in zip(branches, sty.cases):
                    bty = self.check({**gamma, binder: cty}, lin, body)
                    if result is None:
                        result = bty
                    else:
                        _expect(types_equal(result, bty), result, bty, body, "match branches disagree")
                return result
            case Roll(body, ty):
                _expect(isinstance(ty, Mu), "an inductive type", ty, t)
                bty = self.cart(gamma, body)
                _expect(types_equal(unfold_type(ty), bty), unfold_type(ty), bty, body)
                return ty
            case Unroll(body):
                ty = self.cart(gamma, body)
                _expect(isinstance(ty, Nu), "a coinductive type", ty, body)
                return unfold_type(ty)
            case Fold(body, binder, alg, carrier):
                ty = self.cart(gamma, body)
                _expect(isinstance(ty, Mu), "an inductive type", ty, body)
                aty = self.cart({**gamma, binder: subst_type(ty.body, ty.var, carrier)}, alg)
                _expect(types_equal(aty, carrier), carrier, aty, alg, "fold algebra")
                return carrier
            case Gen(body, binder, coalg, nu):
                _expect(isinstance(nu, Nu), "a coinductive type", nu, t)
                seed = self.cart(gamma, body)
                cty = self.cart({**gamma, binder: seed}, coalg)
                want = subst_type(nu.body, nu.var, seed)
                _expect(types_equal(cty, want), want, cty, coalg, "gen coalgebra")
                return nu
            case PairLet(left, right, bound, body):
                ty = self.cart(gamma, bound)
                _expect(isinstance(ty, Prod), "a product", ty, bound)
                return self.check({**gamma, left: ty.left, right: ty.right}, lin, body)
            case Proj(index, n, body):
                ty = self.check(gamma, lin, body)
                try:
                    return tuple_components(ty, n)[index]
                except (TypeError, IndexError):
                    raise TypeMismatch(f"a {n}-tuple", ty, t.loc) from None
            case LLam(dom, body):
                check_linear_type(dom, (), self.delta)
                return LinArrow(dom, self.linear(gamma, dom, body))
            case LApp(fn, arg):
                fty = self.cart(gamma, fn)
                _expect(isinstance(fty, LinArrow), "a linear map", fty, fn)
                aty = self.linear(gamma, lin, arg)
                _expect(types_equal(fty.dom, aty), fty.dom, aty, arg)
                return fty.cod
            # linear layer
            case LVar():
                if lin is None:
                    raise LinearVarMisuse("linear variable used where no linear hypothesis is in scope")
                return lin
            case LLet(bound, body):
                return self.linear(gamma, self.linear(gamma, lin, bound), body)
            case LOp(op, kind, args, larg, param):
                require_derivative(op)
                widths = []
                for a in args:
                    ty = self.cart(gamma, a)
                    _expect(isinstance(ty, Real), "a real array", ty, a)
                    widths.append(ty.n)
                sig = op_sig(op, tuple(widths), param)
                lty = self.linear(gamma, lin, larg)
                ins = lin_tuple_type(sig.arg_widths)
                out = LReal(sig.result_width)
                if kind == "DT":
                    ins, out = out, ins
                _expect(types_equal(lty, ins), ins, lty, larg, f"linear argument of {op}")
                return out
            case LUnitVal():
                return LUnit()
            case LPair(a, b):
                return LProd(self.linear(gamma, lin, a), self.linear(gamma, lin, b))
            case LFst(body) | LSnd(body):
                ty = self.linear(gamma, lin, body)
                _expect(isinstance(ty, LProd), "a linear product", ty, t)
                return ty.left if isinstance(t, LFst) else ty.right
            case PLam(name, ty, body):
                check_cartesian_type(ty, self.delta)
                return Power(ty, self.linear({**gamma, name: ty}, lin, body))
            case PApp(fn, arg):
                fty = self.linear(gamma, lin, fn)
                _expect(isinstance(fty, Power), "a power", fty, fn)
                aty = self.cart(gamma, arg)
                _expect(types_equal(fty.index, aty), fty.index, aty, arg)
                return fty.body
            case Zero(ty):
                check_linear_type(ty, (), self.delta)
                return ty
            case Add(a, b):
                aty = self.linear(gamma, lin, a)
                bty = self.linear(gamma, lin, b)
                _expect(types_equal(aty, bty), aty, bty, b)
                return aty
            case CopowerIntro(point, body):
                return Copower(self.cart(gamma, point), self.linear(gamma, lin, body))
            case CopowerElim(scrut, binder, body, ty):
                sty = self.linear(gamma, lin, scrut)
                _expect(isinstance(sty, Copower), "a copower", sty, scrut)
                bty = self.linear({**gamma, binder: sty.index}, sty.body, body)
                _expect(types_equal(bty, ty), ty, bty, body)
                return ty
            case LRoll(body, ty):
                _expect(isinstance(ty, LMu), "a linear inductive type", ty, t)
                bty = self.linear(gamma, lin, body)
                _expect(types_equal(unfold_type(ty), bty), unfold_type(ty), bty, body)
                return ty
            case LUnroll(body):
                ty = self.linear(gamma, lin, body)
                _expect(isinstance(ty, (LMu, LNu)), "a linear fixpoint type", ty, body)
                return unfold_type(ty)
            case LInj(index, body, ty):
                _expect(isinstance(ty, LSum) and 0 <= index < len(ty.comps), "a linear sum", ty, t)
                bty = self.linear(gamma, lin, body)
                _expect(types_equal(bty, ty.comps[index]), ty.comps[index], bty, body)
                return ty
            case LProj(index, body, ty):
                _expect(isinstance(ty, LSum) and 0 <= index < len(ty.comps), "a linear sum", ty, t)
                bty = self.linear(gamma, lin, body)
                _expect(types_equal(bty, ty), ty, bty, body)
                return ty.comps[index]
            case CoProj(index, body, comps):
                bty = self.linear(gamma, lin, body)
                _expect(types_equal(bty, comps[index]), comps[index], bty, body)
                return tuple_type(list(comps), linear=True)
            case LFold() | LGen():
                return self._recursion(gamma, lin, t)
        raise TypeMismatch("a target term", type(t).__name__, t.loc)

    def _recursion(self, gamma, lin, t):
        is_fold = isinstance(t, LFold)
        want = LMu if is_fold else LNu
        _expect(isinstance(t.lin_ty, want), want.__name__, t.lin_ty, t)
        sigma = t.lin_ty.body
        if t.lin_ty.var != t.var:
            sigma = subst_type(sigma, t.lin_ty.var, LinTyVar(t.var), "l")
        if not aligned(t.functor, sigma, {t.var}):
            raise TypeMismatch(t.functor, t.lin_ty, t.loc, "primal functor does not match the linear functor")
        ity = self.cart(gamma, t.index)
        _expect(types_equal(ity, t.index_ty), t.index_ty, ity, t.index)
        local = {**gamma, t.binder: t.index_ty}
        uty = self.cart(local, t.unfold)
        want_u = subst_type(t.functor, t.var, t.index_ty)
        _expect(types_equal(uty, want_u), want_u, uty, t.unfold, "primal layer")
        layer = subst_type(sigma, t.var, t.carrier, "l")
        if is_fold:
            lty = self.linear(gamma, lin, t.lin)
            _expect(types_equal(lty, t.lin_ty), t.lin_ty, lty, t.lin)
            bty = self.linear(local, layer, t.body)
            _expect(types_equal(bty, t.carrier), t.carrier, bty, t.body, "linear fold step")
            return t.carrier
        sty = self.linear(gamma, lin, t.seed)
        _expect(types_equal(sty, t.carrier), t.carrier, sty, t.seed)
        bty = self.linear(local, t.carrier, t.body)
        _expect(types_equal(bty, layer), layer, bty, t.body, "linear unfold step")
        return t.lin_ty


# linear functorial action -------------------------------------------------------


def lin_fmap(
    sigma: Type,
    alpha: str,
    act: Term,
    sigma_in: Type,
    rho_out: Type,
    prim_ty: Optional[Type] = None,
    prim: Optional[Term] = None,
    arg: Optional[Term] = None,
    point: Optional[str] = None,
) -> Term:
    """The linear term ``σ[α̲ ↦ v ⊢ act]`` applied to ``arg`` (default ``v``).

    ``v : sigma_in ⊢ act : rho_out``.  Linear sums and linear fixpoints are
    traversed along the primal ``prim : prim_ty[...]``; when ``point`` is given,
    ``act`` may refer to it as the primal sitting at the hole.
    """
    try:
        check_linear_type(sigma, {n for ns, n in ftv(sigma) if ns == "l"}, {n for ns, n in ftv(sigma) if ns == "c"})
    except (NotLinearType, UnboundTypeVar, IllKinded) as e:
        raise IllKinded(str(e)) from None
    return _lfmap(sigma, {alpha: (point, act)}, {alpha: sigma_in}, {alpha: rho_out}, prim_ty, prim,
                  LVar() if arg is None else arg)


def _lsub(ty, m):
    return subst_many(ty, {("l", k): v for k, v in m.items()})


def _lfmap(sigma, act, in_sub, out_sub, prim_ty, prim, inp):
    if not any(ns == "l" and n in act for ns, n in ftv(sigma)):
        return inp
    match sigma:
        case LinTyVar(name):
            point, body = act[name]
            if point is not None:
                if prim is None:
                    raise IllKinded("the action refers to a primal point but none is available")
                body = Let(point, prim, body)
            return body if inp == LVar() else LLet(inp, body)
        case LProd(a, b):
            pl = Fst(prim) if prim is not None else None
            pr = Snd(prim) if prim is not None else None
            tl = prim_ty.left if prim_ty is not None else None
            tr = prim_ty.right if prim_ty is not None else None
            body = LPair(
                _lfmap(a, act, in_sub, out_sub, tl, pl, LFst(LVar())),
                _lfmap(b, act, in_sub, out_sub, tr, pr, LSnd(LVar())),
            )
            return body if inp == LVar() else LLet(inp, body)
        case LSum(comps):
            if prim is None or not isinstance(prim_ty, Variant):
                raise IllKinded("a linear sum is mapped by cases on its primal, which is missing")
            out_sum = _lsub(sigma, out_sub)
            branches = []
            for i, ((label, cty), comp) in enumerate(zip(prim_ty.cases, comps)):
                y = fresh_name("y")
                mapped = _lfmap(comp, act, in_sub, out_sub, cty, Var(y), LProj(i, inp, _lsub(sigma, in_sub)))
                branches.append((label, y, LInj(i, mapped, out_sum)))
            return Match(prim, tuple(branches))
        case LMu(var, body) | LNu(var, body):
            if prim is None or not isinstance(prim_ty, (Mu, Nu)):
                raise IllKinded("a linear fixpoint is mapped along its primal, which is missing")
            pvar = prim_ty.var
            lbody = subst_type(body, var, LinTyVar(pvar), "l") if var != pvar else body
            inner_act = {k: a for k, a in act.items() if k != pvar}
            in_fix = _lsub(sigma, in_sub)
            out_fix = _lsub(sigma, out_sub)
            q, r = fresh_name("q"), fresh_name("r")
            layer = invroll(prim_ty, Var(q)) if isinstance(prim_ty, Mu) else Unroll(Var(q))
            ptype = subst_type(prim_ty.body, pvar, prim_ty)
            if isinstance(sigma, LMu):
                carrier = out_fix
                mapped = _lfmap(lbody, inner_act, {**in_sub, pvar: carrier}, {**out_sub, pvar: carrier},
                                ptype, Var(r), LVar())
                step = Let(r, layer, LRoll(mapped, out_fix))
                return LFold(inp, prim, q, layer, step, pvar, prim_ty.body,
                             LMu(pvar, _lsub_keep(lbody, in_sub, pvar)), prim_ty, carrier)
            carrier = in_fix
            mapped = _lfmap(lbody, inner_act, {**in_sub, pvar: carrier}, {**out_sub, pvar: carrier},
                            ptype, Var(r), LUnroll(LVar()))
            step = Let(r, layer, mapped)
            return LGen(inp, prim, q, layer, step, pvar, prim_ty.body,
                        LNu(pvar, _lsub_keep(lbody, out_sub, pvar)), prim_ty, carrier)
    raise InternalError(f"cannot map over linear type {sigma}")


def _lsub_keep(body, m, keep):
    return _lsub(body, {k: v for k, v in m.items() if k != keep})
