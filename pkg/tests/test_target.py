"""Target language: erasure, linear typing and the linear functorial action."""

import numpy as np
import pytest

from chad.derivcheck import flatten, lin_flatten, lin_unflatten
from chad.errors import LinearVarMisuse, NotLinearType, TypeMismatch
from chad.evaluator import Evaluator
from chad.forward import _d2
from chad.generate import NELIST, R, random_value
from chad.target import erase_type, lin_fmap, type_check_target
from chad.terms import Add, LFst, LLam, LPair, LVar, Var, Zero
from chad.types import (
    Copower,
    DepPi,
    DepSigma,
    LCase,
    LinArrow,
    LinTyVar,
    LProd,
    LReal,
    LSum,
    LUnit,
    Mu,
    Power,
    Prod,
    Real,
    TyVar,
    Variant,
    subst_type,
)
from chad.values import LPairV, LVec

DOUBLE = Add(LVar(), LVar())


class TestErasure:
    def test_pi_over_linear_becomes_power(self):
        assert erase_type(DepPi("x", Real(), LReal(1))) == Power(Real(), LReal(1))

    def test_sigma_over_linear_becomes_copower(self):
        assert erase_type(DepSigma("x", Real(), LReal(2))) == Copower(Real(), LReal(2))

    def test_case_becomes_linear_sum(self):
        ty = LCase(Var("x"), (("A", "y", LReal(1)), ("B", "y", LUnit())))
        assert erase_type(ty) == LSum((LReal(1), LUnit()))

    def test_linear_real_unchanged(self):
        assert erase_type(LReal(3)) == LReal(3)


class TestLinearTyping:
    def test_linear_variable(self):
        assert type_check_target((), {}, LReal(1), LVar()) == LReal(1)

    def test_add_zero(self):
        assert type_check_target((), {}, LReal(1), Add(LVar(), Zero(LReal(1)))) == LReal(1)

    def test_projection_of_linear_pair(self):
        lam = LLam(LProd(LReal(1), LReal(1)), LFst(LVar()))
        assert type_check_target((), {}, None, lam) == LinArrow(LProd(LReal(1), LReal(1)), LReal(1))

    def test_linear_variable_used_twice_in_pair_is_fine(self):
        # pairs of linear terms share v: ⟨v, v⟩ is the diagonal
        ty = type_check_target((), {}, LReal(1), LPair(LVar(), LVar()))
        assert ty == LProd(LReal(1), LReal(1))

    def test_linear_variable_out_of_scope(self):
        with pytest.raises(LinearVarMisuse):
            type_check_target((), {}, None, LVar())

    def test_zero_needs_linear_type(self):
        with pytest.raises((NotLinearType, TypeMismatch)):
            type_check_target((), {}, None, Zero(Real()))


class TestLinFmap:
    def test_hole_is_action(self):
        assert lin_fmap(LinTyVar("a"), "a", DOUBLE, LReal(1), LReal(1)) == DOUBLE

    def test_real_is_identity(self):
        assert lin_fmap(LReal(2), "a", DOUBLE, LReal(1), LReal(1)) == LVar()

    def test_pair_doubling(self):
        t = lin_fmap(LProd(LinTyVar("a"), LinTyVar("a")), "a", DOUBLE, LReal(1), LReal(1))
        out = Evaluator().eval(t, {}, LPairV(LVec([1.0]), LVec([2.0])))
        assert out == LPairV(LVec([2.0]), LVec([4.0]))

    @pytest.mark.parametrize(
        "tau",
        [
            Variant((("A", TyVar("a")), ("B", Prod(Real(), TyVar("a"))))),
            Mu("l", Variant((("Last", TyVar("a")), ("Cons", Prod(TyVar("a"), TyVar("l")))))),
        ],
        ids=["variant", "list"],
    )
    def test_primal_directed_types_double_every_hole(self, tau, rng):
        prim_ty = subst_type(tau, "a", R)
        for _ in range(10):
            p = random_value(prim_ty, rng)
            coords = rng.integers(-5, 6, size=len(flatten(p).coords)).astype(float)
            t = lin_fmap(_d2(tau), "a", DOUBLE, LReal(1), LReal(1), prim_ty=prim_ty, prim=Var("p"))
            out = Evaluator().eval(t, {"p": p}, lin_unflatten(prim_ty, p, coords))
            # only α positions double; the fixed R in case B is left alone
            expected = lin_flatten(prim_ty, p, lin_unflatten(prim_ty, p, coords))
            mask = _hole_mask(tau, p)
            np.testing.assert_array_equal(lin_flatten(prim_ty, p, out), np.where(mask, 2 * expected, expected))

    def test_list_is_nelist(self):
        tau = Mu("l", Variant((("Last", TyVar("a")), ("Cons", Prod(TyVar("a"), TyVar("l"))))))
        assert subst_type(tau, "a", R) == NELIST


def _hole_mask(tau, p):
    """Which flattened coordinates of ``p`` sit at an α position of ``tau``."""
    out = []

    def go(ty, v):
        match ty:
            case Variant(cases):
                go(dict(cases)[v.label], v.body)
            case Mu(var, body):
                go(subst_type(body, var, ty), v.body)
            case Prod(a, b):
                go(a, v.left)
                go(b, v.right)
            case TyVar("a"):
                out.append(True)
            case Real(n):
                out.extend([False] * n)
            case _:
                raise AssertionError(ty)

    go(tau, p)
    return np.array(out)
