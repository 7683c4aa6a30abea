"""Evaluation of source and target terms, primitives and the linear monoid."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chad.errors import MismatchedBranch, MissingPrimitiveDerivative
from chad.evaluator import Evaluator, evaluate
from chad.generate import NELIST, list_value
from chad.ops import prim_eval, prim_jvp, prim_vjp
from chad.syntax import parse_program, parse_term
from chad.terms import (
    Add,
    Fst,
    Gen,
    LApp,
    LInj,
    LLam,
    LOp,
    LPair,
    LVar,
    Pair,
    PrimOp,
    Snd,
    Unroll,
    Var,
    Zero,
)
from chad.types import Copower, LReal, LSum, Nu, Prod, Real, TyVar
from chad.values import (
    BIPRODUCT,
    LIFTED,
    LCopowerV,
    LPairV,
    LSumV,
    LTupleV,
    LVec,
    RealVec,
    lin_add,
    lin_equal,
    lin_zero,
)

SUM_PROGRAM = """
type NEList = mu l. {Last R | Cons (R * l)}
input xs : NEList
main = fold[R] xs { y -> match y with { Last a -> a | Cons p -> fst p + snd p } }
"""


def vec(*xs):
    return RealVec(list(xs))


class TestSourceEvaluation:
    def test_arithmetic(self):
        assert evaluate(parse_term("x * x + 1"), {"x": vec(2.0)}) == vec(5.0)

    def test_sum_fold(self):
        prog = parse_program(SUM_PROGRAM)
        assert evaluate(prog.main, {"xs": list_value([2, 3, 4])}) == vec(9.0)

    def test_stream_of_naturals(self):
        stream = Nu("s", Prod(Real(), TyVar("s")))
        n = Var("n")
        gen = Gen(PrimOp("const", (), 0.0), "n", Pair(n, PrimOp("add", (n, PrimOp("const", (), 1.0)))), stream)
        c = evaluate(gen, {})
        prefix = []
        for _ in range(3):
            layer = evaluate(Unroll(Var("c")), {"c": c})
            prefix.append(float(layer.left.data[0]))
            c = layer.right
        assert prefix == [0.0, 1.0, 2.0]

    def test_codata_cells_run_once(self):
        stream = Nu("s", Prod(Real(), TyVar("s")))
        n = Var("n")
        step = Pair(PrimOp("sin", (n,)), PrimOp("add", (n, PrimOp("const", (), 1.0))))
        gen = Gen(PrimOp("const", (), 0.0), "n", step, stream)
        ev = Evaluator(count=True)
        c = ev.eval(gen, {})
        for _ in range(3):
            ev.eval(Fst(Unroll(Var("c"))), {"c": c})
        assert ev.times_evaluated(step) == 1

    def test_let_shares_its_bound_term(self):
        t = parse_term("let y = x * x in y + y")
        ev = Evaluator(count=True)
        assert ev.eval(t, {"x": vec(3.0)}) == vec(18.0)
        assert ev.times_evaluated(t.bound) == 1

    def test_trace_records_branches(self):
        t = parse_term("match pos(x) with { False u -> x | True u -> x * x }", {})
        ev = Evaluator(trace=True)
        ev.eval(t, {"x": vec(2.0)})
        assert [label for _, label in ev.branches] == ["True"]


class TestLinearMonoid:
    def test_zero_vector(self):
        assert lin_zero(LReal(3)) == LVec([0.0, 0.0, 0.0])

    def test_zero_copower_is_empty(self):
        assert lin_zero(Copower(Real(), LReal(1))) == LCopowerV(())

    def test_zero_lifted_sum_is_untagged(self):
        assert lin_zero(LSum((LReal(1), LReal(1)))) == LSumV(None)

    def test_zero_biproduct_sum(self):
        assert lin_zero(LSum((LReal(1), LReal(2))), BIPRODUCT) == LTupleV((LVec([0.0]), LVec([0.0, 0.0])))

    def test_vector_add(self):
        assert lin_add(LVec([1.0, 2.0]), LVec([3.0, 4.0])) == LVec([4.0, 6.0])

    def test_tagged_plus_zero(self):
        x = LSumV((0, LVec([2.0])))
        assert lin_add(x, LSumV(None)) == x
        assert lin_add(LSumV(None), x) == x

    def test_mismatched_tags(self):
        with pytest.raises(MismatchedBranch):
            lin_add(LSumV((0, LVec([1.0]))), LSumV((1, LVec([1.0]))))

    def test_copower_add_concatenates(self):
        a = LCopowerV(((vec(1.0), LVec([1.0])),))
        b = LCopowerV(((vec(2.0), LVec([5.0])),))
        assert lin_equal(lin_add(a, b), lin_add(b, a))
        assert len(lin_add(a, b).items) == 2

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(-50, 50), min_size=3, max_size=3), st.lists(st.integers(-50, 50), min_size=3, max_size=3))
    def test_vector_laws(self, a, b):
        x, y = LVec([float(i) for i in a]), LVec([float(i) for i in b])
        assert lin_add(x, y) == lin_add(y, x)
        assert lin_add(x, lin_zero(LReal(3))) == x


class TestLinearApplication:
    def test_identity(self):
        f = evaluate(LLam(LReal(1), LVar()), {})
        assert f.apply(LVec([7.0])) == LVec([7.0])

    def test_pair_with_zero(self):
        f = evaluate(LLam(LReal(1), LPair(LVar(), Zero(LReal(2)))), {})
        assert f.apply(LVec([1.0])) == LPairV(LVec([1.0]), LVec([0.0, 0.0]))

    def test_transposed_multiplication(self):
        args = (PrimOp("const", (), 2.0), PrimOp("const", (), 3.0))
        f = evaluate(LLam(LReal(1), LOp("mul", "DT", args, LVar())), {})
        out = f.apply(LVec([1.0]))
        assert out == LPairV(LVec([3.0]), LVec([2.0]))

    def test_application_term(self):
        f = LLam(LReal(1), Add(LVar(), LVar()))
        assert evaluate(LApp(f, LVar()), {}, LVec([2.0])) == LVec([4.0])

    def test_injections_of_different_branches_do_not_add(self):
        ty = LSum((LReal(1), LReal(1)))
        t = Add(LInj(0, LVar(), ty), LInj(1, LVar(), ty))
        with pytest.raises(MismatchedBranch):
            Evaluator(LIFTED).eval(t, {}, LVec([1.0]))
        # the biproduct representation has no such failure
        out = Evaluator(BIPRODUCT).eval(t, {}, LVec([1.0]))
        assert out == LTupleV((LVec([1.0]), LVec([1.0])))


class TestPrimitives:
    def test_vjp_of_multiplication(self):
        out = prim_vjp("mul", (np.array([2.0]), np.array([3.0])), np.array([1.0]))
        assert [float(o[0]) for o in out] == [3.0, 2.0]

    def test_jvp_of_addition(self):
        out = prim_jvp("add", (np.array([1.0]), np.array([2.0])), (np.array([0.25]), np.array([0.5])))
        assert float(out[0]) == 0.75

    def test_jvp_of_sin_matches_central_difference(self):
        h = 1e-5
        fd = (math.sin(0.3 + h) - math.sin(0.3 - h)) / (2 * h)
        out = prim_jvp("sin", (np.array([0.3]),), (np.array([1.0]),))
        assert abs(float(out[0]) - fd) < 1e-6
        assert float(out[0]) == pytest.approx(math.cos(0.3), abs=1e-15)

    def test_matvec(self):
        m = np.arange(1.0, 7.0)
        x = np.array([1.0, 0.0, -1.0])
        np.testing.assert_array_equal(prim_eval("matvec", (m, x)), [-2.0, -2.0])

    @pytest.mark.parametrize("op", ["sin", "cos", "exp", "tanh", "sigmoid", "neg"])
    def test_unary_jvp_vjp_transpose(self, op, rng):
        x = rng.normal(size=3)
        u, w = rng.normal(size=3), rng.normal(size=3)
        lhs = float(np.dot(prim_jvp(op, (x,), (u,)), w))
        rhs = float(np.dot(u, prim_vjp(op, (x,), w)[0]))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_floor_has_no_derivative(self):
        with pytest.raises(MissingPrimitiveDerivative):
            prim_jvp("floor", (np.array([1.5]),), (np.array([1.0]),))


def test_nelist_literal_shape():
    v = list_value([1, 2, 3])
    assert v.ty == NELIST
    assert v.body.label == "Cons"


def test_snd_of_pair():
    assert evaluate(Snd(Pair(Var("a"), Var("b"))), {"a": vec(1.0), "b": vec(2.0)}) == vec(2.0)
