"""Random well-typed programs and random data values, for property tests and audits.

Generation is type-directed and bounded: ``depth`` limits term nesting and
vector widths stay at most 4.  Everything is driven by a ``numpy`` Generator,
so a seed fixes the output.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .terms import (
    App,
    Fold,
    Fst,
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
    Var,
)
from .types import (
    BOOL,
    Copower,
    LProd,
    LReal,
    LSum,
    LUnit,
    Mu,
    Prod,
    Real,
    TyVar,
    Type,
    Unit,
    Variant,
    has_free,
    unfold_type,
)
from .values import (
    BIPRODUCT,
    LIFTED,
    InjV,
    LCopowerV,
    LinValue,
    LPairV,
    LSumV,
    LTupleV,
    LUnitV,
    LVec,
    PairV,
    RealVec,
    RollV,
    UnitV,
    Value,
    lin_zero,
)

R = Real()
NELIST = Mu("l", Variant((("Last", R), ("Cons", Prod(R, TyVar("l"))))))
LIST = Mu("l", Variant((("Nil", Unit()), ("Cons", Prod(R, TyVar("l"))))))
SHAPE = Variant((("Circle", R), ("Rect", Prod(R, R))))
TREE = Mu("t", Variant((("Leaf", R), ("Node", Prod(TyVar("t"), TyVar("t"))))))

CONTEXT_TYPES = (R, R, Real(2), Prod(R, R), NELIST, SHAPE)
_UNARY = ("sin", "cos", "sigmoid", "tanh", "neg")
_BINARY = ("add", "sub", "mul")
# polynomial fragment: integer inputs give integer-valued derivatives, so laws can be checked exactly
_EXACT_UNARY = ("neg",)


def random_value(
    ty: Type, rng: np.random.Generator, max_len: int = 4, scale: float = 1.0, integer: bool = False
) -> Value:
    """A random value of a data type; recursive types stop after about ``max_len`` layers.

    With ``integer=True`` the reals are small integers in ``[-scale, scale]``.
    """
    return _value(ty, rng, max_len, scale, [0], integer)


def _value(ty, rng, max_len, scale, layers, integer=False) -> Value:
    def again(t):
        return _value(t, rng, max_len, scale, layers, integer)

    match ty:
        case Real(n):
            if integer:
                return RealVec(rng.integers(-int(scale), int(scale) + 1, size=n).astype(float))
            return RealVec(rng.uniform(-scale, scale, size=n).round(6))
        case Unit():
            return UnitV()
        case Prod(a, b):
            left = again(a)
            return PairV(left, again(b))
        case Variant(cases):
            label, cty = cases[int(rng.integers(len(cases)))]
            return InjV(label, again(cty))
        case Mu(var, body):
            layers[0] += 1
            layer = unfold_type(ty)
            if layers[0] >= max_len or rng.random() < 0.3:
                base = _base_case(layer, var, body)
                if base is not None:
                    label, cty = base
                    return RollV(InjV(label, again(cty)), ty)
            return RollV(again(layer), ty)
    raise TypeError(f"cannot generate a value of {ty}")


def _base_case(layer: Type, var: str, body: Type):
    if not isinstance(body, Variant):
        return None
    for (label, cty), (_, raw) in zip(layer.cases, body.cases):
        if not has_free(raw, var):
            return label, cty
    return None


def list_value(xs, ty: Type = NELIST) -> Value:
    """Build a list-shaped value (``NELIST`` or ``LIST``) from floats."""
    xs = [float(x) for x in xs]
    if ty == NELIST:
        v = RollV(InjV("Last", RealVec([xs[-1]])), ty)
        rest = xs[:-1]
    else:
        v = RollV(InjV("Nil", UnitV()), ty)
        rest = xs
    for x in reversed(rest):
        v = RollV(InjV("Cons", PairV(RealVec([x]), v)), ty)
    return v


class ProgramGenerator:
    """Type-directed generator of closed-under-context source terms.

    ``exact=True`` restricts primitives to the polynomial fragment (add, sub,
    mul, neg, sum, dot, smul).
    """

    def __init__(self, rng: np.random.Generator, depth: int = 4, exact: bool = False):
        self.rng = rng
        self.depth = min(depth, 6)
        self.counter = 0
        self.unary = _EXACT_UNARY if exact else _UNARY

    def fresh(self) -> str:
        self.counter += 1
        return f"g{self.counter}"

    def choice(self, items):
        return items[int(self.rng.integers(len(items)))]

    def program(self, out_ty: Optional[Type] = None) -> tuple[list, Term, Type]:
        n = int(self.rng.integers(1, 4))
        gamma = [(f"a{i}", self.choice(CONTEXT_TYPES)) for i in range(n)]
        out_ty = out_ty or self.choice((R, R, Real(2), Prod(R, R), NELIST))
        return gamma, self.term(gamma, out_ty, self.depth), out_ty

    def term(self, gamma: list, ty: Type, depth: int) -> Term:
        rng = self.rng
        vars_here = [x for x, s in gamma if s == ty]
        if depth <= 0 or rng.random() < 0.15:
            if vars_here:
                return Var(self.choice(vars_here))
            return self.leaf(gamma, ty)
        options = ["let", "var", "struct", "app"]
        if any(isinstance(s, Variant) for _, s in gamma) or any(s == NELIST for _, s in gamma):
            options.append("match")
        if any(isinstance(s, Prod) for _, s in gamma):
            options.append("proj")
        if isinstance(ty, Real):
            options += ["op", "op", "fold"]
        pick = self.choice(options)
        if pick == "var" and vars_here:
            return Var(self.choice(vars_here))
        if pick == "let":
            sty = self.choice((R, Real(ty.n) if isinstance(ty, Real) else R, Prod(R, R)))
            x = self.fresh()
            return Let(x, self.term(gamma, sty, depth - 1), self.term(gamma + [(x, sty)], ty, depth - 1))
        if pick == "app":
            sty = self.choice((R, Prod(R, R)))
            x = self.fresh()
            return App(Lam(x, sty, self.term(gamma + [(x, sty)], ty, depth - 1)), self.term(gamma, sty, depth - 1))
        if pick == "proj":
            prods = [(x, s) for x, s in gamma if isinstance(s, Prod)]
            x, s = self.choice(prods)
            y = self.fresh()
            part = Fst(Var(x)) if rng.random() < 0.5 else Snd(Var(x))
            pty = s.left if isinstance(part, Fst) else s.right
            return Let(y, part, self.term(gamma + [(y, pty)], ty, depth - 1))
        if pick == "match":
            return self.match(gamma, ty, depth)
        if pick == "op" and isinstance(ty, Real):
            return self.op(gamma, ty, depth)
        if pick == "fold" and isinstance(ty, Real) and ty.n == 1:
            lists = [x for x, s in gamma if s == NELIST]
            if lists:
                return self.fold(Var(self.choice(lists)), depth)
        return self.struct(gamma, ty, depth)

    def leaf(self, gamma, ty) -> Term:
        match ty:
            case Real(n):
                vals = tuple(float(v) for v in self.rng.integers(-3, 4, size=n))
                return PrimOp("const", (), vals[0] if n == 1 else vals)
            case Unit():
                return UnitVal()
            case Prod(a, b):
                return Pair(self.leaf(gamma, a), self.leaf(gamma, b))
            case Variant(cases):
                label, cty = cases[0]
                return Inj(label, self.leaf(gamma, cty), ty)
            case Mu():
                layer = unfold_type(ty)
                label, cty = _base_case(layer, ty.var, ty.body)
                return Roll(Inj(label, self.leaf(gamma, cty), layer), ty)
        raise TypeError(f"no leaf for {ty}")

    def struct(self, gamma, ty, depth) -> Term:
        match ty:
            case Real(n) if n > 1 and self.rng.random() < 0.5:
                return PrimOp("concat", (self.term(gamma, R, depth - 1), self.term(gamma, Real(n - 1), depth - 1)))
            case Real():
                return self.op(gamma, ty, depth)
            case Unit():
                return UnitVal()
            case Prod(a, b):
                return Pair(self.term(gamma, a, depth - 1), self.term(gamma, b, depth - 1))
            case Variant(cases):
                label, cty = self.choice(cases)
                return Inj(label, self.term(gamma, cty, depth - 1), ty)
            case Mu():
                layer = unfold_type(ty)
                label, cty = self.choice(layer.cases)
                if depth <= 1:
                    label, cty = _base_case(layer, ty.var, ty.body)
                return Roll(Inj(label, self.term(gamma, cty, depth - 1), layer), ty)
        raise TypeError(f"cannot build {ty}")

    def op(self, gamma, ty: Real, depth) -> Term:
        rng = self.rng
        r = rng.random()
        if r < 0.35:
            return PrimOp(self.choice(self.unary), (self.term(gamma, ty, depth - 1),))
        if r < 0.8:
            return PrimOp(self.choice(_BINARY), (self.term(gamma, ty, depth - 1), self.term(gamma, ty, depth - 1)))
        if ty.n == 1:
            k = int(rng.integers(2, 4))
            if rng.random() < 0.5:
                return PrimOp("sum", (self.term(gamma, Real(k), depth - 1),))
            return PrimOp("dot", (self.term(gamma, Real(k), depth - 1), self.term(gamma, Real(k), depth - 1)))
        return PrimOp("smul", (self.term(gamma, R, depth - 1), self.term(gamma, ty, depth - 1)))

    def match(self, gamma, ty, depth) -> Term:
        rng = self.rng
        scruts = [(x, s) for x, s in gamma if isinstance(s, Variant)]
        if rng.random() < 0.5 or not scruts:
            reals = [x for x, s in gamma if s == R]
            if reals:
                test = Pred("pos", (Var(self.choice(reals)),))
                branches = tuple((lab, self.fresh(), self.term(gamma, ty, depth - 1)) for lab, _ in BOOL.cases)
                return Match(test, branches)
        if not scruts:
            return self.struct(gamma, ty, depth)
        x, s = self.choice(scruts)
        branches = []
        for lab, cty in s.cases:
            b = self.fresh()
            branches.append((lab, b, self.term(gamma + [(b, cty)], ty, depth - 1)))
        return Match(Var(x), tuple(branches))

    def fold(self, scrut: Term, depth) -> Term:
        """A fold over a non-empty list into ``R`` with a random algebra."""
        y, a, p = self.fresh(), self.fresh(), self.fresh()
        base = self.term([(a, R)], R, min(depth - 1, 2))
        step = self.term([(p, Prod(R, R))], R, min(depth - 1, 3))
        alg = Match(Var(y), (("Last", a, base), ("Cons", p, step)))
        return Fold(scrut, y, alg, R)


def random_program(seed: int = 0, depth: int = 4, out_ty: Optional[Type] = None, exact: bool = False):
    """``(gamma, term, type)`` for a random well-typed program."""
    gen = ProgramGenerator(np.random.default_rng(seed), depth, exact)
    return gen.program(out_ty)


def random_point(
    gamma, rng: np.random.Generator, max_len: int = 4, scale: float = 1.0, integer: bool = False
) -> dict:
    return {x: random_value(ty, rng, max_len, scale, integer) for x, ty in gamma}


# shapes for functor laws ----------------------------------------------------------------


def random_shape_type(rng: np.random.Generator, hole: str = "a", depth: int = 3) -> Type:
    """A data type with free type variable ``hole``: products, variants and μ-types over it."""
    leaves: list[Type] = [TyVar(hole), TyVar(hole), Real(), Unit()]
    pick = rng.random() if depth > 0 else 0.0
    if pick < 0.3:
        return leaves[int(rng.integers(len(leaves)))]
    if pick < 0.55:
        return Prod(random_shape_type(rng, hole, depth - 1), random_shape_type(rng, hole, depth - 1))
    if pick < 0.8:
        cases = (("A", random_shape_type(rng, hole, depth - 1)), ("B", random_shape_type(rng, hole, depth - 1)))
        return Variant(cases)
    # a μ-type with a non-recursive base case, so values are finite
    var = f"r{depth}"
    base = random_shape_type(rng, hole, depth - 1)
    step = Prod(random_shape_type(rng, hole, depth - 1), TyVar(var))
    if rng.random() < 0.5:
        step = Prod(TyVar(var), step)
    return Mu(var, Variant((("Base", base), ("Step", step))))


# linear values for monoid laws -----------------------------------------------------------


def random_lin_type(rng: np.random.Generator, depth: int = 3) -> Type:
    """A linear type built from vectors, unit, products, sums and copowers."""
    pick = rng.random() if depth > 0 else 0.0
    if pick < 0.35:
        return LReal(int(rng.integers(1, 4)))
    if pick < 0.45:
        return LUnit()
    if pick < 0.7:
        return LProd(random_lin_type(rng, depth - 1), random_lin_type(rng, depth - 1))
    if pick < 0.9:
        return LSum(tuple(random_lin_type(rng, depth - 1) for _ in range(int(rng.integers(2, 4)))))
    return Copower(Real(), random_lin_type(rng, depth - 1))


def random_lin_value(
    ty: Type,
    rng: np.random.Generator,
    shape_rng: np.random.Generator,
    approach: str = LIFTED,
    scale: int = 9,
) -> LinValue:
    """An integer-valued linear value of ``ty``.

    Structural choices (sum tags, copower lengths) come from ``shape_rng``, so
    values drawn with equally seeded shape generators can always be added
    under the lifted representation.
    """

    def ints(n):
        return rng.integers(-scale, scale + 1, size=n).astype(float)

    match ty:
        case LReal(n):
            return LVec(ints(n))
        case LUnit():
            return LUnitV()
        case LProd(a, b):
            left = random_lin_value(a, rng, shape_rng, approach, scale)
            return LPairV(left, random_lin_value(b, rng, shape_rng, approach, scale))
        case LSum(comps):
            i = int(shape_rng.integers(len(comps) + 1)) - 1
            if approach == BIPRODUCT:
                return LTupleV(tuple(random_lin_value(c, rng, shape_rng, approach, scale) for c in comps))
            if i < 0 or rng.random() < 0.2:
                return lin_zero(ty, approach) if i < 0 else LSumV((i, lin_zero(comps[i], approach)))
            return LSumV((i, random_lin_value(comps[i], rng, shape_rng, approach, scale)))
        case Copower(index, body):
            items = []
            for _ in range(int(shape_rng.integers(0, 3))):
                items.append((RealVec(ints(index.n)), random_lin_value(body, rng, shape_rng, approach, scale)))
            return LCopowerV(tuple(items))
    raise TypeError(f"cannot generate a linear value of {ty}")
