"""Big-step evaluator for source and target terms.

Cartesian evaluation is call-by-value.  Coinductive values are memoized lazy
cells.  The linear layer evaluates under a single linear slot (the value of
``v``); linear folds and unfolds walk the linear structure in lockstep with a
primal value, which decides which branch of every linear sum is live.
"""

from __future__ import annotations

import sys
from collections import Counter
from typing import Callable, Optional

from .errors import InternalError, LinearVarMisuse, MismatchedBranch, UnboundVar
from .ops import PREDICATES, prim_eval, prim_jvp, prim_vjp
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
)
from .types import (
    LMu,
    LNu,
    LProd,
    LSum,
    LinTyVar,
    Mu,
    Nu,
    Prod,
    TyVar,
    Type,
    Variant,
    ftv,
    subst_many,
    subst_type,
)
from .values import (
    BIPRODUCT,
    LIFTED,
    CodataV,
    FunV,
    InjV,
    LCodataV,
    LCopowerV,
    LinFunV,
    LinValue,
    LPairV,
    LPowV,
    LRollV,
    LSumV,
    LTupleV,
    LUnitV,
    LVec,
    PairV,
    RealVec,
    RollV,
    UnitV,
    lin_add,
    lin_roll,
    lin_sum,
    lin_zero,
)

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


def tuple_get(v, index: int, n: int):
    """Component ``index`` of a left-nested ``n``-tuple (cartesian or linear)."""
    if n == 1:
        return v
    for _ in range(n - 1 - index):
        v = v.left
    return v.right if index > 0 else v


def tuple_build(items: list, linear: bool):
    if not items:
        return LUnitV() if linear else UnitV()
    out = items[0]
    for it in items[1:]:
        out = LPairV(out, it) if linear else PairV(out, it)
    return out


def tuple_items(v, n: int) -> list:
    return [tuple_get(v, i, n) for i in range(n)]


class Evaluator:
    """Evaluate terms; ``approach`` selects the linear-sum representation.

    With ``count=True`` every evaluated node is tallied in ``counts`` (keyed by
    node identity) so tests can observe how often a subterm runs.  With
    ``trace=True`` the constructor chosen by every ``match`` is appended to
    ``branches``, which identifies the control-flow path of a run.
    """

    def __init__(self, approach: str = LIFTED, count: bool = False, trace: bool = False):
        if approach not in (LIFTED, BIPRODUCT):
            raise ValueError(f"unknown linear-sum approach {approach!r}")
        self.approach = approach
        self.count = count
        self.counts: Counter = Counter()
        self._keep: dict[int, Term] = {}
        self.trace = trace
        self.branches: list[tuple[int, str]] = []

    def times_evaluated(self, node: Term) -> int:
        return self.counts[id(node)]

    # entry points ----------------------------------------------------------------

    def eval(self, t: Term, env: Optional[dict] = None, lin: Optional[LinValue] = None):
        return self._ev(t, dict(env or {}), lin)

    def apply_lin(self, f, v: LinValue) -> LinValue:
        if isinstance(f, Term):
            f = self._ev(f, {}, None)
        if not isinstance(f, LinFunV):
            raise InternalError(f"not a linear map: {f!r}")
        return f.apply(v)

    # core ----------------------------------------------------------------------

    def _ev(self, t: Term, env: dict, lin):
        if self.count:
            self.counts[id(t)] += 1
            self._keep[id(t)] = t
        ev = self._ev
        match t:
            case Var(name):
                try:
                    return env[name]
                except KeyError:
                    raise UnboundVar(f"unbound variable {name} during evaluation") from None
            case Let(name, bound, body):
                return ev(body, {**env, name: ev(bound, env, lin)}, lin)
            case PrimOp(op, args, param):
                return RealVec(prim_eval(op, [ev(a, env, lin).data for a in args], param))
            case Pred(name, args):
                _, fn = PREDICATES[name]
                truth = fn(*[ev(a, env, lin).data for a in args])
                return InjV("True" if truth else "False", UnitV())
            case UnitVal():
                return UnitV()
            case Pair(a, b):
                return PairV(ev(a, env, lin), ev(b, env, lin))
            case Fst(body):
                return ev(body, env, lin).left
            case Snd(body):
                return ev(body, env, lin).right
            case Lam(name, _, body):
                return FunV(lambda a: ev(body, {**env, name: a}, None))
            case App(fn, arg):
                return ev(fn, env, lin).apply(ev(arg, env, lin))
            case Inj(label, body, _):
                return InjV(label, ev(body, env, lin))
            case Match(scrut, branches):
                v = ev(scrut, env, None)
                if self.trace:
                    self.branches.append((id(t), v.label))
                for label, binder, body in branches:
                    if label == v.label:
                        return ev(body, {**env, binder: v.body}, lin)
                raise InternalError(f"no branch for constructor {v.label}")
            case Roll(body, ty):
                return RollV(ev(body, env, lin), ty)
            case Unroll(body):
                return ev(body, env, lin).force()
            case Fold(body, binder, alg, _):
                return self._fold(ev(body, env, None), binder, alg, env, lin)
            case Gen(body, binder, coalg, ty):
                return self._gen(ev(body, env, None), binder, coalg, ty, env)
            case PairLet(left, right, bound, body):
                p = ev(bound, env, lin)
                return ev(body, {**env, left: p.left, right: p.right}, lin)
            case Proj(index, n, body):
                return tuple_get(ev(body, env, lin), index, n)
            case LLam(_, body):
                return LinFunV(lambda l: ev(body, env, l))
            case LApp(fn, arg):
                return ev(fn, env, None).apply(ev(arg, env, lin))
            # linear layer
            case LVar():
                if lin is None:
                    raise LinearVarMisuse("linear variable used outside a linear context")
                return lin
            case LLet(bound, body):
                return ev(body, env, ev(bound, env, lin))
            case LOp(op, kind, args, larg, param):
                xs = [ev(a, env, None).data for a in args]
                lv = ev(larg, env, lin)
                if kind == "D":
                    tangents = [x.data for x in tuple_items(lv, len(xs))]
                    return LVec(prim_jvp(op, xs, tangents, param))
                grads = prim_vjp(op, xs, lv.data, param)
                return tuple_build([LVec(g) for g in grads], linear=True)
            case LUnitVal():
                return LUnitV()
            case LPair(a, b):
                return LPairV(ev(a, env, lin), ev(b, env, lin))
            case LFst(body):
                return ev(body, env, lin).left
            case LSnd(body):
                return ev(body, env, lin).right
            case PLam(name, _, body):
                return LPowV(lambda p: ev(body, {**env, name: p}, lin))
            case PApp(fn, arg):
                return ev(fn, env, lin).apply(ev(arg, env, None))
            case Zero(ty):
                return lin_zero(ty, self.approach)
            case Add(a, b):
                return lin_add(ev(a, env, lin), ev(b, env, lin))
            case CopowerIntro(point, body):
                return LCopowerV(((ev(point, env, None), ev(body, env, lin)),))
            case CopowerElim(scrut, binder, body, ty):
                c = ev(scrut, env, lin)
                return lin_sum((ev(body, {**env, binder: p}, x) for p, x in c.items), ty, self.approach)
            case LRoll(body, _):
                return lin_roll(ev(body, env, lin))
            case LUnroll(body):
                return ev(body, env, lin).force()
            case LInj(index, body, ty):
                return self.inject(index, ev(body, env, lin), ty)
            case LProj(index, body, ty):
                return self.project(index, ev(body, env, lin), ty)
            case CoProj(index, body, comps):
                x = ev(body, env, lin)
                items = [x if i == index else lin_zero(c, self.approach) for i, c in enumerate(comps)]
                return tuple_build(items, linear=True)
            case LFold():
                return self._lfold(t, env, lin)
            case LGen():
                return self._lgen(t, env, lin)
        raise InternalError(f"cannot evaluate {type(t).__name__}")

    # linear sums --------------------------------------------------------------

    def inject(self, index: int, x: LinValue, ty: LSum) -> LinValue:
        if self.approach == BIPRODUCT:
            return LTupleV(
                tuple(x if i == index else lin_zero(c, self.approach) for i, c in enumerate(ty.comps))
            )
        return LSumV((index, x))

    def project(self, index: int, s: LinValue, ty: LSum) -> LinValue:
        if isinstance(s, LTupleV):
            return s.comps[index]
        if s.tag is None:
            return lin_zero(ty.comps[index], self.approach)
        j, x = s.tag
        if j != index:
            raise MismatchedBranch(f"projecting branch {index + 1} out of a value in branch {j + 1}")
        return x

    # cartesian recursion schemes -------------------------------------------------

    def _fold(self, v: RollV, binder, alg, env, lin):
        mu = v.ty
        if not isinstance(mu, Mu):
            raise InternalError("fold over a value without an inductive type annotation")

        def go(w):
            layer = map_positions(mu.body, {mu.var: go}, w.body)
            return self._ev(alg, {**env, binder: layer}, lin)

        return go(v)

    def _gen(self, seed, binder, coalg, nu: Nu, env):
        def cell(s):
            def step():
                layer = self._ev(coalg, {**env, binder: s}, None)
                return map_positions(nu.body, {nu.var: cell}, layer)

            return CodataV(step, nu)

        return cell(seed)

    # linear recursion schemes ----------------------------------------------------

    def _lfold(self, t: LFold, env, lin):
        sigma = _linear_body(t.lin_ty, t.var)
        carrier = t.carrier

        def go(p, l):
            if getattr(l, "is_zero", False):
                return lin_zero(carrier, self.approach)
            local = {**env, t.binder: p}
            node = self._ev(t.unfold, local, None)
            layer = self.walk(t.functor, sigma, {t.var: go}, {t.var: carrier}, node, l.force())
            return self._ev(t.body, local, layer)

        return go(self._ev(t.index, env, None), self._ev(t.lin, env, lin))

    def _lgen(self, t: LGen, env, lin):
        sigma = _linear_body(t.lin_ty, t.var)
        out_ty = t.lin_ty

        def cell(p, s):
            def step():
                local = {**env, t.binder: p}
                layer = self._ev(t.body, local, s)
                node = self._ev(t.unfold, local, None)
                return self.walk(t.functor, sigma, {t.var: cell}, {t.var: out_ty}, node, layer)

            return LCodataV(step)

        return cell(self._ev(t.index, env, None), self._ev(t.seed, env, lin))

    def walk(self, prim_ty: Type, lin_ty: Type, handlers: dict, out_sub: dict, node, l):
        """Map ``handlers`` over the hole positions of a linear value, guided by a primal.

        ``prim_ty`` and ``lin_ty`` share hole names (cartesian and linear
        respectively).  At a hole the handler receives the primal and linear
        sub-values.  ``out_sub`` gives the linear type each hole turns into,
        which is needed to build zeros for untaken biproduct branches.
        """
        holes = set(handlers)
        if not any(ns == "l" and name in holes for ns, name in ftv(lin_ty)):
            return l
        match lin_ty:
            case LinTyVar(name):
                return handlers[name](node, l)
            case LProd(a, b):
                return LPairV(
                    self.walk(prim_ty.left, a, handlers, out_sub, node.left, l.left),
                    self.walk(prim_ty.right, b, handlers, out_sub, node.right, l.right),
                )
            case LSum(comps):
                i = prim_ty.index_of(node.label)
                sub_prim = prim_ty.cases[i][1]
                if isinstance(l, LTupleV):
                    out = []
                    for j, c in enumerate(comps):
                        if j == i:
                            out.append(self.walk(sub_prim, c, handlers, out_sub, node.body, l.comps[j]))
                        else:
                            out.append(lin_zero(_lsub(c, out_sub), self.approach))
                    return LTupleV(tuple(out))
                if l.tag is None:
                    return l
                j, x = l.tag
                if j != i:
                    raise MismatchedBranch(f"linear value in branch {j + 1} but primal in branch {i + 1}")
                return LSumV((i, self.walk(sub_prim, comps[i], handlers, out_sub, node.body, x)))
            case LMu(var, body) | LNu(var, body):
                out_ty = _lsub(lin_ty, out_sub)
                if getattr(l, "is_zero", False):
                    return lin_zero(out_ty, self.approach)
                pvar, pbody = prim_ty.var, prim_ty.body
                lbody = subst_type(body, var, LinTyVar(pvar), "l") if var != pvar else body

                def again(n, x):
                    return self.walk(prim_ty, lin_ty, handlers, out_sub, n, x)

                inner_handlers = {**{k: h for k, h in handlers.items() if k != pvar}, pvar: again}
                inner_out = {**{k: v for k, v in out_sub.items() if k != pvar}, pvar: out_ty}
                def step():
                    n = node.body if isinstance(node, RollV) else node.force()
                    return self.walk(pbody, lbody, inner_handlers, inner_out, n, l.force())

                return LRollV(step) if isinstance(lin_ty, LMu) else LCodataV(step)
        raise InternalError(f"cannot walk linear type {lin_ty}")


def _linear_body(lin_ty: Type, var: str) -> Type:
    if not isinstance(lin_ty, (LMu, LNu)):
        raise InternalError(f"expected a linear fixpoint type, found {lin_ty}")
    if lin_ty.var == var:
        return lin_ty.body
    return subst_type(lin_ty.body, lin_ty.var, LinTyVar(var), "l")


def _lsub(ty: Type, out_sub: dict) -> Type:
    return subst_many(ty, {("l", k): v for k, v in out_sub.items()})


def map_positions(ty: Type, handlers: dict[str, Callable], v):
    """Apply ``handlers`` at the type-variable positions of a cartesian value of type ``ty``."""
    if not any(ns == "c" and name in handlers for ns, name in ftv(ty)):
        return v
    match ty:
        case TyVar(name):
            return handlers[name](v)
        case Prod(a, b):
            return PairV(map_positions(a, handlers, v.left), map_positions(b, handlers, v.right))
        case Variant():
            return InjV(v.label, map_positions(ty.case_type(v.label), handlers, v.body))
        case Mu(var, body):
            inner = {k: h for k, h in handlers.items() if k != var}

            def again(w):
                return map_positions(ty, handlers, w)

            return RollV(map_positions(body, {**inner, var: again}, v.body), v.ty)
        case Nu(var, body):
            inner = {k: h for k, h in handlers.items() if k != var}

            def again_nu(w):
                return map_positions(ty, handlers, w)

            return CodataV(lambda: map_positions(body, {**inner, var: again_nu}, v.force()), v.ty)
    raise InternalError(f"cannot map over {ty}")


def evaluate(t: Term, env: Optional[dict] = None, lin=None, approach: str = LIFTED):
    return Evaluator(approach).eval(t, env, lin)


def apply_lin(f, v: LinValue, approach: str = LIFTED) -> LinValue:
    return Evaluator(approach).apply_lin(f, v)
