"""Kinding, typing, substitution and the functorial action on source terms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chad.errors import (
    IllKinded,
    OpenFunctionType,
    TypeMismatch,
    UnboundTypeVar,
    UnboundVar,
)
from chad.evaluator import Evaluator
from chad.generate import NELIST, R, random_program, random_value
from chad.source import Kind, fmap_type, kind_check, type_check
from chad.syntax import parse_term
from chad.terms import (
    Fst,
    Inj,
    Lam,
    Let,
    Pair,
    PrimOp,
    Roll,
    UnitVal,
    Var,
    alpha_equal,
    free_vars,
    subst_term,
    term_size,
)
from chad.types import (
    Arrow,
    Mu,
    Nu,
    Prod,
    Real,
    TyVar,
    Unit,
    Variant,
    subst_type,
    unfold_type,
)
from chad.values import PairV, RealVec

LIST_A = Mu("b", Variant((("Nil", Unit()), ("Cons", Prod(Real(), TyVar("b"))))))


class TestKinding:
    def test_closed_real_vector(self):
        assert kind_check((), Real(2)) is Kind.Type

    def test_list_under_binder(self):
        assert kind_check(("a",), LIST_A) is Kind.Type

    def test_open_function_type_rejected(self):
        with pytest.raises(OpenFunctionType):
            kind_check(("a",), Arrow(TyVar("a"), Real()))

    def test_unbound_type_variable(self):
        with pytest.raises(UnboundTypeVar):
            kind_check((), Prod(TyVar("a"), Real()))

    def test_duplicate_constructor(self):
        with pytest.raises(IllKinded):
            kind_check((), Variant((("A", Unit()), ("A", Real()))))


class TestTyping:
    def test_variable(self):
        assert type_check((), {"x": Real()}, Var("x")) == Real()

    def test_roll_at_list_type(self):
        nil = Roll(Inj("Nil", UnitVal(), unfold_type(LIST_A)), LIST_A)
        assert type_check((), {}, nil) == LIST_A

    def test_fst_of_unit(self):
        with pytest.raises(TypeMismatch):
            type_check((), {}, Fst(UnitVal()))

    def test_unbound_variable(self):
        with pytest.raises(UnboundVar):
            type_check((), {}, Var("y"))

    def test_arithmetic_width_mismatch(self):
        with pytest.raises(TypeMismatch):
            type_check((), {"x": Real(2), "y": Real()}, PrimOp("add", (Var("x"), Var("y"))))


class TestSubstType:
    def test_replaces_free_occurrence(self):
        assert subst_type(Prod(TyVar("a"), Real()), "a", Unit()) == Prod(Unit(), Real())

    def test_under_other_binder(self):
        ty = Mu("b", Prod(TyVar("a"), TyVar("b")))
        assert subst_type(ty, "a", Real()) == Mu("b", Prod(Real(), TyVar("b")))

    def test_bound_occurrence_untouched(self):
        ty = Mu("a", TyVar("a"))
        assert subst_type(ty, "a", Real()) == ty

    def test_capture_avoided(self):
        # substituting b into μb.(a × b) must not capture the incoming b
        out = subst_type(Mu("b", Prod(TyVar("a"), TyVar("b"))), "a", TyVar("b"))
        assert isinstance(out, Mu) and out.var != "b"
        assert out.body.left == TyVar("b")


class TestSubstTerm:
    def test_plain(self):
        t = PrimOp("add", (Var("x"), Var("y")))
        s = PrimOp("const", (), 3.0)
        assert subst_term(t, "x", s) == PrimOp("add", (s, Var("y")))

    def test_shadowing_let(self):
        out = subst_term(Let("x", Var("x"), Var("x")), "x", Var("s"))
        assert alpha_equal(out, Let("x2", Var("s"), Var("x2")))

    def test_capture_avoided(self):
        out = subst_term(Lam("y", Real(), Var("x")), "x", Var("y"))
        assert out.name != "y"
        assert out.body == Var("y")
        assert free_vars(out) == {"y"}

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_substitution_preserves_type(self, seed):
        gamma, t, ty = random_program(seed, depth=4)
        x, sty = gamma[0]
        s = Var("fresh_input")
        out = subst_term(t, x, s)
        assert type_check((), [*gamma, ("fresh_input", sty)], out) == ty


class TestFmapType:
    def test_hole_applies_action(self):
        act = PrimOp("add", (Var("x"), PrimOp("const", (), 1.0)))
        assert fmap_type(TyVar("a"), "a", "x", act, R, R) == act

    def test_constant_type_is_identity(self):
        assert fmap_type(Real(), "a", "x", Var("z"), R, R) == Var("x")

    def test_pair_componentwise(self):
        act = PrimOp("add", (Var("x"), PrimOp("const", (), 1.0)))
        t = fmap_type(Prod(TyVar("a"), TyVar("a")), "a", "x", act, R, R, arg=Var("p"))
        out = Evaluator().eval(t, {"p": PairV(RealVec([2.0]), RealVec([5.0]))})
        assert out.left == RealVec([3.0]) and out.right == RealVec([6.0])

    def test_list_maps_every_element(self, rng):
        ty = Mu("l", Variant((("Last", TyVar("a")), ("Cons", Prod(TyVar("a"), TyVar("l"))))))
        act = PrimOp("mul", (Var("x"), Var("x")))
        t = fmap_type(ty, "a", "x", act, R, R, arg=Var("xs"))
        assert type_check((), {"xs": NELIST}, t) == NELIST
        xs = random_value(NELIST, rng)
        out = Evaluator().eval(t, {"xs": xs})
        from chad.derivcheck import flatten

        np.testing.assert_array_equal(flatten(out).coords, flatten(xs).coords ** 2)

    def test_stream_is_well_typed(self):
        ty = Nu("s", Prod(TyVar("a"), TyVar("s")))
        t = fmap_type(ty, "a", "x", PrimOp("neg", (Var("x"),)), R, R, arg=Var("c"))
        stream = Nu("s", Prod(Real(), TyVar("s")))
        assert type_check((), {"c": stream}, t) == stream


class TestTermSize:
    def test_variable(self):
        assert term_size(Var("x")) == 1

    def test_pair(self):
        assert term_size(Pair(Var("x"), Var("y"))) == 3

    def test_let_counted_once(self):
        # Let, mul, a, b, add, x, x
        assert term_size(parse_term("let x = a * b in x + x")) == 7
