"""Flattening, JVP/VJP extraction, finite differences and the audit report."""

import json

import numpy as np
import pytest
from conftest import CORPUS
from hypothesis import given, settings
from hypothesis import strategies as st

from chad.derivcheck import (
    DerivReport,
    FlatPoint,
    check_derivative,
    evaluate_source,
    finite_diff,
    flatten,
    jvp,
    transpose_check,
    unflatten,
    vjp,
    within,
)
from chad.errors import ComponentCrossed, NotADataType
from chad.generate import NELIST, SHAPE, TREE, list_value, random_value
from chad.syntax import parse_program, parse_term
from chad.types import Arrow, Prod, Real
from chad.values import PairV, RealVec

R = Real()


def corpus(name):
    return parse_program((CORPUS / f"{name}.chad").read_text())


def vec(*xs):
    return RealVec(list(xs))


class TestFlatten:
    def test_vector(self):
        fp = flatten(vec(1.0, 2.5))
        assert fp.path == () and fp.coords.tolist() == [1.0, 2.5]

    def test_nested_pair(self):
        fp = flatten(PairV(vec(3.0), vec(4.0, 5.0)))
        assert fp.coords.tolist() == [3.0, 4.0, 5.0]

    def test_list_path_encodes_length(self):
        a, b = flatten(list_value([2, 3, 4])), flatten(list_value([2, 3]))
        assert a.coords.tolist() == [2.0, 3.0, 4.0]
        assert a.path != b.path

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([NELIST, SHAPE, TREE, Prod(R, Real(3))]))
    def test_round_trip(self, seed, ty):
        v = random_value(ty, np.random.default_rng(seed))
        fp = flatten(v)
        assert unflatten(ty, fp) == v
        assert flatten(unflatten(ty, FlatPoint(fp.path, fp.coords))) == fp

    def test_functions_are_not_data(self):
        with pytest.raises(NotADataType):
            check_derivative([("f", Arrow(R, R))], parse_term("f"), [])


class TestJvpVjp:
    def test_square(self):
        np.testing.assert_array_equal(jvp([("x", R)], parse_term("x * x"), {"x": vec(3.0)}, [1.0]), [6.0])

    def test_identity(self):
        np.testing.assert_array_equal(jvp([("x", Real(2))], parse_term("x"), {"x": vec(1.0, 2.0)}, [0.3, -4.0]), [0.3, -4.0])

    def test_sum_tangent(self):
        prog = corpus("sum")
        out = jvp(prog.gamma, prog.main, {"xs": list_value([5, 7])}, [0.25, 2.0])
        np.testing.assert_array_equal(out, [2.25])

    @pytest.mark.parametrize(
        "name,xs,grad",
        [
            ("product", [2, 3, 4], [12, 8, 6]),
            ("sum", [5, 7], [1, 1]),
            ("evp", [1, 2, 3, 0.5], [1, 0.5, 0.25, 5]),
        ],
    )
    def test_gradients(self, name, xs, grad):
        prog = corpus(name)
        np.testing.assert_allclose(vjp(prog.gamma, prog.main, {"xs": list_value(xs)}, [1.0]), grad, rtol=1e-12)

    def test_transpose_product(self):
        prog = corpus("product")
        lhs, rhs = transpose_check(prog.gamma, prog.main, {"xs": list_value([2, 3, 4])}, [1, 0, 0], [1])
        assert lhs == rhs == 12.0


class TestFiniteDiff:
    def test_square(self):
        out = finite_diff([("x", R)], parse_term("x * x"), {"x": vec(3.0)}, [1.0])
        assert abs(out[0] - 6.0) < 1e-9

    def test_constant(self):
        out = finite_diff([("x", R)], parse_term("2.0"), {"x": vec(3.0)}, [1.0])
        assert out[0] == 0.0

    def test_sigmoid_at_zero(self):
        out = finite_diff([("x", R)], parse_term("sigmoid(x)"), {"x": vec(0.0)}, [1.0])
        assert abs(out[0] - 0.25) < 1e-6

    def test_branch_boundary(self):
        prog = corpus("branch_sign")
        with pytest.raises(ComponentCrossed):
            finite_diff(prog.gamma, prog.main, {"x": vec(3e-6)}, [1.0])

    def test_output_component_change(self):
        prog = corpus("shape_make")
        with pytest.raises(ComponentCrossed):
            finite_diff(prog.gamma, prog.main, {"x": vec(-1e-6)}, [1.0])


class TestCheckDerivative:
    def test_sum_random_lists(self, rng):
        prog = corpus("sum")
        points = [{"xs": random_value(NELIST, rng)} for _ in range(10)]
        report = check_derivative(prog.gamma, prog.main, points, program="sum")
        assert report.passed and not report.skipped

    def test_branch_interior_and_boundary(self):
        prog = corpus("branch_sign")
        report = check_derivative(prog.gamma, prog.main, [{"x": vec(0.5)}, {"x": vec(1e-7)}])
        assert report.passed
        assert [idx for idx, _ in report.skipped] == [1]
        assert {r.point for r in report.records} == {0}

    def test_identity_exact(self):
        report = check_derivative([("x", R)], parse_term("x"), [{"x": vec(0.7)}])
        assert report.passed
        assert max(r.abs_err for r in report.records) < 1e-10

    def test_wrong_derivative_fails(self):
        report = DerivReport("fake")
        assert report.verdict == "pass"
        _, _, ok = within(np.array([1.0]), np.array([1.1]), 1e-4, 1e-6)
        assert not ok

    def test_report_lines(self):
        prog = corpus("square")
        report = check_derivative(prog.gamma, prog.main, [{"x": vec(2.0)}], program="square.chad")
        lines = [json.loads(s) for s in report.to_lines()]
        assert lines[0]["kind"] == "header" and lines[-1]["kind"] == "verdict"
        record = lines[1]
        assert list(record) == [
            "kind", "point", "mode", "direction", "analytic", "oracle", "abs_err", "rel_err", "passed", "note"
        ]
        assert record["analytic"] == [4.0]


class TestChainRule:
    @pytest.mark.parametrize("x", [-1.3, 0.2, 2.0])
    def test_composition(self, x):
        f, g = parse_term("sin(x) * x"), parse_term("y * y + exp(y)")
        composed = parse_term("let y = sin(x) * x in y * y + exp(y)")
        u = [0.7]
        fx = evaluate_source([("x", R)], f, {"x": vec(x)})
        inner = jvp([("x", R)], f, {"x": vec(x)}, u)
        outer = jvp([("y", R)], g, {"y": fx}, inner)
        np.testing.assert_allclose(jvp([("x", R)], composed, {"x": vec(x)}, u), outer, rtol=1e-9)
