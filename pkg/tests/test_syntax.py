"""Surface syntax: parsing, printing and literal values."""

import numpy as np
import pytest
from conftest import corpus_files
from hypothesis import given, settings
from hypothesis import strategies as st

from chad.errors import ParseError, ShapeMismatch, TypeMismatch
from chad.generate import NELIST, SHAPE, TREE, list_value, random_program, random_value
from chad.source import type_check
from chad.syntax import (
    ProgramFile,
    format_value,
    parse_inputs,
    parse_program,
    parse_term,
    parse_type,
    parse_value,
    print_program,
    tokenize,
)
from chad.terms import Let, Match, PrimOp, Roll, Var, subterms
from chad.types import Arrow, Mu, Nu, Prod, Real, Variant

R = Real()


class TestParseTerms:
    def test_let_with_two_uses(self):
        t = parse_term("let y = x * x in y + y")
        assert isinstance(t, Let)
        assert sum(1 for s in subterms(t.body) if s == Var("y")) == 2
        assert type_check((), {"x": R}, t) == R

    def test_sum_program_types(self):
        prog = parse_program((corpus_files()[0].parent / "sum.chad").read_text())
        assert prog.gamma == [("xs", NELIST)]
        assert type_check((), prog.gamma, prog.main) == R

    def test_precedence(self):
        t = parse_term("a + b * c")
        assert t.op == "add" and t.args[1].op == "mul"

    def test_application_is_left_associative(self):
        t = parse_term("f x y")
        assert t.fn.fn == Var("f")

    def test_constructor_sugar_rolls(self):
        prog = parse_program("type NEList = mu l. {Last R | Cons (R * l)}\ninput x : R\nmain = Cons (x, Last x)")
        assert isinstance(prog.main, Roll)
        assert type_check((), prog.gamma, prog.main) == NELIST

    def test_pred_in_match(self):
        t = parse_term("match lt(x, y) with { False u -> x | True u -> y }")
        assert isinstance(t, Match)

    def test_negative_literal(self):
        assert parse_term("(-2.5)") == PrimOp("const", (), -2.5)


class TestParseErrors:
    def test_incomplete_lambda_reports_end_of_input(self):
        with pytest.raises(ParseError, match="end of input"):
            parse_term("fun (f : R) =>")

    def test_untyped_binder(self):
        with pytest.raises(ParseError):
            parse_term("fun f =>")

    def test_location(self):
        with pytest.raises(ParseError, match="2:"):
            parse_program("input x : R\nmain = x +")

    def test_unknown_constructor(self):
        with pytest.raises(ParseError, match="unknown constructor"):
            parse_term("Foo x")

    def test_bad_character(self):
        with pytest.raises(ParseError):
            tokenize("x @ y")


class TestTypes:
    def test_real_width(self):
        assert parse_type("R^3") == Real(3)

    def test_arrow_and_product(self):
        assert parse_type("R * R -> R") == Arrow(Prod(R, R), R)

    def test_fixpoints(self):
        assert parse_type("nu s. R * s").__class__ is Nu
        assert parse_type("mu l. {Last R | Cons (R * l)}") == NELIST

    def test_variant(self):
        assert parse_type("{Circle R | Rect (R * R)}") == SHAPE


class TestRoundTrip:
    @pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
    def test_corpus(self, path):
        prog = parse_program(path.read_text())
        again = parse_program(print_program(prog))
        assert again.main == prog.main
        assert again.gamma == prog.gamma
        assert print_program(again) == print_program(prog)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 1_000_000))
    def test_random_programs(self, seed):
        gamma, t, _ = random_program(seed, depth=5)
        prog = ProgramFile(None, {"NEList": NELIST, "Shape": SHAPE}, gamma, t)
        again = parse_program(print_program(prog))
        assert again.main == t
        assert again.gamma == gamma


class TestValues:
    def test_list_literal(self):
        assert parse_value("[2, 3, 4]", NELIST) == list_value([2, 3, 4])

    def test_variant_literal(self):
        v = parse_value("Rect (2, 3)", SHAPE, {"Shape": SHAPE})
        assert v.label == "Rect"

    def test_tree_literal(self):
        v = parse_value("Node (Leaf 1, Leaf 2)", TREE)
        assert v.body.label == "Node"

    def test_vector_width_checked(self):
        with pytest.raises((ShapeMismatch, TypeMismatch, ParseError)):
            parse_value("[1, 2]", Real(3))

    def test_inputs_list(self):
        env = parse_inputs("[1, [2, 3]]", [("a", R), ("b", Real(2))])
        assert env["b"].data.tolist() == [2.0, 3.0]

    def test_inputs_count(self):
        with pytest.raises(ParseError):
            parse_inputs("[1]", [("a", R), ("b", R)])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([NELIST, SHAPE, TREE, Prod(R, Real(2))]))
    def test_format_parse_round_trip(self, seed, ty):
        v = random_value(ty, np.random.default_rng(seed))
        aliases = {"NEList": NELIST, "Shape": SHAPE, "Tree": TREE}
        text = format_value(v, ty)
        assert parse_value(text, ty, aliases) == v


def test_variant_type_equality():
    assert Variant((("A", R),)) != Mu("a", Variant((("A", R),)))
