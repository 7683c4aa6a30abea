"""Acceptance suite: one check per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines appear in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass

import numpy as np
import pytest
from conftest import CORPUS, corpus_files, data_programs

from chad.cli import load
from chad.derivcheck import _ctx_lin as ctx_lin
from chad.derivcheck import (
    check_derivative,
    flatten,
    flatten_env,
    jvp_with_primal,
    lin_flatten,
    lin_unflatten,
    transpose_check,
    vjp,
    vjp_with_primal,
)
from chad.errors import MismatchedBranch
from chad.evaluator import Evaluator, tuple_items
from chad.forward import (
    _d2,
    fwd_ctx,
    fwd_output_type,
    fwd_transform,
    fwd_transform_split,
    fwd_type,
)
from chad.generate import (
    R,
    list_value,
    random_lin_type,
    random_lin_value,
    random_point,
    random_program,
    random_shape_type,
    random_value,
)
from chad.reverse import (
    rev_ctx,
    rev_output_type,
    rev_transform,
    rev_transform_split,
    rev_type,
)
from chad.source import fmap_type, type_check
from chad.target import lin_fmap, type_check_target
from chad.terms import (
    Add,
    LInj,
    LLet,
    LVar,
    PrimOp,
    Var,
    subst_term,
    subterms,
    term_size,
)
from chad.types import LinArrow, LReal, LSum, Mu, Variant, subst_type
from chad.values import BIPRODUCT, LIFTED, lin_add, lin_equal, lin_zero

# pinned tolerances and budgets
GOLDEN_REL = 1e-12
GOLDEN_SECONDS = 1.0
FD_H = 1e-5
FD_ABS, FD_REL = 1e-6, 1e-4
FD_MIN_PROGRAMS, FD_MIN_POINTS = 25, 10
FD_SECONDS = 30.0
TRANSPOSE_REL = 1e-9
TRANSPOSE_CASES = 100
TRANSPOSE_SECONDS = 30.0
SIZE_K = 20.0
LETCHAIN_SPREAD = 0.10
SPLIT_REL = 1e-12
MONOID_CASES = 500
FUNCTOR_CASES = 200


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.title} -- {self.detail}"


OUTCOMES: dict[int, Outcome] = {}


def report(number: int, title: str, passed: bool, detail: str) -> Outcome:
    out = Outcome(number, title, bool(passed), detail)
    OUTCOMES[number] = out
    print(out.line())
    return out


def rel_close(a, b, rel) -> bool:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= rel * np.maximum(np.abs(b), 1.0)))


# 1 -------------------------------------------------------------------------------------


def criterion_golden() -> Outcome:
    start = time.perf_counter()
    cases = [
        ("product", [2, 3, 4], None, [12, 8, 6]),
        ("sum", [5, 7], None, [1, 1]),
        ("evp", [1, 2, 3, 0.5], 2.75, [1, 0.5, 0.25, 5.0]),
    ]
    failures = []
    for name, xs, value, grad in cases:
        prog = load(str(CORPUS / f"{name}.chad"))
        primal, g = vjp_with_primal(prog.gamma, prog.main, {"xs": list_value(xs)}, [1.0])
        if not rel_close(g, grad, GOLDEN_REL):
            failures.append(f"{name} gradient {g.tolist()} != {grad}")
        if value is not None and not rel_close(flatten(primal).coords, [value], GOLDEN_REL):
            failures.append(f"{name} value {flatten(primal).coords.tolist()} != {value}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < GOLDEN_SECONDS
    detail = "; ".join(failures) or f"product/sum/evp gradients exact, {elapsed:.3f}s"
    return report(1, "golden reverse-mode gradients", ok, detail)


# 2 -------------------------------------------------------------------------------------


def criterion_fd_audit() -> Outcome:
    start = time.perf_counter()
    programs = data_programs()
    failures, points_checked = [], []
    for name, prog in programs:
        rng = np.random.default_rng(sum(map(ord, name)))
        interior, draws = 0, 0
        while interior < FD_MIN_POINTS and draws < 4 * FD_MIN_POINTS:
            batch = [random_point(prog.gamma, rng) for _ in range(FD_MIN_POINTS - interior)]
            draws += len(batch)
            rep = check_derivative(
                prog.gamma, prog.main, batch, program=name, rel_tol=FD_REL, abs_tol=FD_ABS, h=FD_H
            )
            interior += len(batch) - len(rep.skipped)
            if not rep.passed:
                bad = next(r for r in rep.records if not r.passed)
                failures.append(f"{name} {bad.mode} dir {bad.direction}: abs {bad.abs_err:.2e} rel {bad.rel_err:.2e}")
                break
        points_checked.append(interior)
        if interior < FD_MIN_POINTS:
            failures.append(f"{name}: only {interior} interior points")
    elapsed = time.perf_counter() - start
    ok = not failures and len(programs) >= FD_MIN_PROGRAMS and elapsed < FD_SECONDS
    detail = "; ".join(failures[:3]) or (
        f"{len(programs)} programs x >= {min(points_checked)} points, JVP and VJP, {elapsed:.1f}s"
    )
    return report(2, "finite-difference audit", ok, detail)


# 3 -------------------------------------------------------------------------------------


def criterion_transpose() -> Outcome:
    start = time.perf_counter()
    cases = []
    rng = np.random.default_rng(7)
    for _, prog in data_programs():
        for _ in range(2):
            cases.append((prog.gamma, prog.main, random_point(prog.gamma, rng)))
    seed = 0
    while len(cases) < TRANSPOSE_CASES + 40:
        gamma, t, _ = random_program(seed, depth=5)
        cases.append((gamma, t, random_point(gamma, np.random.default_rng(seed))))
        seed += 1
    worst = 0.0
    for gamma, t, point in cases:
        n_in = len(flatten_env(gamma, point).coords)
        n_out = len(flatten(Evaluator().eval(t, point)).coords)
        u, w = rng.normal(size=n_in), rng.normal(size=n_out)
        lhs, rhs = transpose_check(gamma, t, point, u, w)
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs)))
    elapsed = time.perf_counter() - start
    ok = worst <= TRANSPOSE_REL and len(cases) >= TRANSPOSE_CASES and elapsed < TRANSPOSE_SECONDS
    return report(3, "transpose consistency", ok, f"{len(cases)} cases, worst {worst:.2e}, {elapsed:.1f}s")


# 4 -------------------------------------------------------------------------------------


def criterion_well_typed() -> Outcome:
    checked, failures = 0, []
    for path in corpus_files():
        prog = load(str(path))
        g, t = prog.gamma, prog.main
        ty = type_check((), g, t)
        expected = {
            "fwd": fwd_output_type(g, ty),
            "rev": rev_output_type(g, ty),
        }
        produced = {"fwd": fwd_transform(g, t), "rev": rev_transform(g, t)}
        fp, ft = fwd_transform_split(g, t)
        rp, rt = rev_transform_split(g, t)
        produced |= {"fwd-primal": fp, "fwd-tangent": ft, "rev-primal": rp, "rev-cotangent": rt}
        expected |= {
            "fwd-primal": fwd_type(ty).primal,
            "fwd-tangent": LinArrow(fwd_ctx(g).tangent, fwd_type(ty).tangent),
            "rev-primal": rev_type(ty).primal,
            "rev-cotangent": LinArrow(rev_type(ty).tangent, rev_ctx(g).tangent),
        }
        for key, term in produced.items():
            checked += 1
            try:
                got = type_check_target((), g, None, term)
            except Exception as e:  # noqa: BLE001 - any failure counts against the criterion
                failures.append(f"{path.stem}/{key}: {type(e).__name__}")
                continue
            if got != expected[key]:
                failures.append(f"{path.stem}/{key}: wrong type")
    ok = not failures
    detail = "; ".join(failures[:3]) or f"{checked}/{checked} transformed terms type-check at their stated types"
    return report(4, "well-typed transformer output", ok, detail)


# 5 -------------------------------------------------------------------------------------


def criterion_size() -> Outcome:
    worst, chains, notes = 0.0, {}, []
    for mode, transform in (("fwd", fwd_transform), ("rev", rev_transform)):
        for path in corpus_files():
            prog = load(str(path))
            ratio = term_size(transform(prog.gamma, prog.main)) / term_size(prog.main)
            worst = max(worst, ratio)
            if path.stem.startswith("letchain"):
                chains.setdefault(mode, {})[int(path.stem[len("letchain"):])] = ratio
    ok = worst <= SIZE_K
    for mode, rs in chains.items():
        depths = sorted(rs)
        if depths != [5, 10, 20]:
            ok = False
            notes.append(f"{mode}: let-chains {depths}")
            continue
        spread = (max(rs.values()) - min(rs.values())) / min(rs.values())
        ok &= spread < LETCHAIN_SPREAD
        notes.append(f"{mode} let-chain ratios " + "/".join(f"{rs[d]:.2f}" for d in depths) + f" (spread {spread:.1%})")
    return report(5, "linear code size", ok, f"max ratio {worst:.2f} <= K={SIZE_K:g}; " + "; ".join(notes))


# 6 -------------------------------------------------------------------------------------


def criterion_split() -> Outcome:
    rng = np.random.default_rng(11)
    compared, failures = 0, []
    for name, prog in data_programs():
        for _ in range(3):
            point = random_point(prog.gamma, rng)
            n_in = len(flatten_env(prog.gamma, point).coords)
            u = rng.normal(size=n_in)
            p1, j1 = jvp_with_primal(prog.gamma, prog.main, point, u)
            p2, j2 = jvp_with_primal(prog.gamma, prog.main, point, u, split=True)
            w = rng.normal(size=len(j1))
            q1, v1 = vjp_with_primal(prog.gamma, prog.main, point, w)
            q2, v2 = vjp_with_primal(prog.gamma, prog.main, point, w, split=True)
            compared += 1
            same = (
                flatten(p1).path == flatten(p2).path
                and rel_close(flatten(p2).coords, flatten(p1).coords, SPLIT_REL)
                and rel_close(flatten(q2).coords, flatten(q1).coords, SPLIT_REL)
                and rel_close(j2, j1, SPLIT_REL)
                and rel_close(v2, v1, SPLIT_REL)
            )
            if not same:
                failures.append(name)
    ok = not failures
    detail = f"mismatch in {sorted(set(failures))}" if failures else f"{compared} corpus cases agree (primal, JVP, VJP)"
    return report(6, "split = efficient", ok, detail)


# 7 -------------------------------------------------------------------------------------


def _uses_variants(prog) -> bool:
    types = [ty for _, ty in prog.gamma] + [type_check((), prog.gamma, prog.main)]
    if any(isinstance(ty, (Variant, Mu)) for ty in types):
        return True
    return any(type(s).__name__ in ("Match", "Inj", "Fold") for s in subterms(prog.main))


def criterion_lsum() -> Outcome:
    rng = np.random.default_rng(13)
    compared, mismatches, raised = 0, [], []
    programs = [(n, p.gamma, p.main) for n, p in data_programs() if _uses_variants(p)]
    for seed in range(60):
        gamma, t, _ = random_program(seed, depth=5)
        programs.append((f"random{seed}", gamma, t))
    for name, gamma, t in programs:
        for _ in range(3):
            point = random_point(gamma, rng)
            n_out = len(flatten(Evaluator().eval(t, point)).coords)
            w = rng.normal(size=n_out)
            try:
                lifted = vjp(gamma, t, point, w, approach=LIFTED)
            except MismatchedBranch:
                raised.append(name)
                continue
            compared += 1
            if not np.array_equal(lifted, vjp(gamma, t, point, w, approach=BIPRODUCT)):
                mismatches.append(name)
    ty = LSum((LReal(1), LReal(1)))
    negative = Add(LInj(0, LVar(), ty), LInj(1, LVar(), ty))
    try:
        Evaluator(LIFTED).eval(negative, {}, lin_zero(LReal(1)))
        negative_ok = False
    except MismatchedBranch:
        negative_ok = True
    ok = not mismatches and not raised and negative_ok and compared > 0
    detail = (
        f"{compared} VJPs identical across approaches; hand-built mixed-branch sum "
        f"{'raises' if negative_ok else 'does NOT raise'} MismatchedBranch; "
        f"{len(raised)} failures on emitted code"
    )
    if mismatches:
        detail += f"; mismatches in {sorted(set(mismatches))[:3]}"
    return report(7, "biproduct = lifted linear sums", ok, detail)


# 8 -------------------------------------------------------------------------------------


def criterion_monoid() -> Outcome:
    rng = np.random.default_rng(17)
    cases, failures = 0, []
    # laws on generated linear values
    for i in range(MONOID_CASES // 2):
        ty = random_lin_type(rng)
        approach = BIPRODUCT if i % 3 == 0 else LIFTED
        seed = int(rng.integers(2**31))
        a, b, c = (random_lin_value(ty, rng, np.random.default_rng(seed), approach) for _ in range(3))
        z = lin_zero(ty, approach)
        laws = {
            "zero-left": lin_equal(lin_add(z, a), a),
            "zero-right": lin_equal(lin_add(a, z), a),
            "commutative": lin_equal(lin_add(a, b), lin_add(b, a)),
            "associative": lin_equal(lin_add(lin_add(a, b), c), lin_add(a, lin_add(b, c))),
        }
        cases += 1
        failures += [f"{law} at {ty}" for law, held in laws.items() if not held]
    # homomorphism laws on transformer-emitted linear maps
    seed = 0
    while cases < MONOID_CASES:
        gamma, t, out_ty = random_program(seed, depth=4, exact=True)
        seed += 1
        point = random_point(gamma, rng, scale=3, integer=True)
        ev = Evaluator()
        res = ev.eval(rev_transform(gamma, t), point)
        primal, back = res.left, res.right
        fres = ev.eval(fwd_transform(gamma, t), point)
        n_out = len(flatten(primal).coords)
        n_in = len(flatten_env(gamma, point).coords)

        def pull(coords):
            cot = back.apply(lin_unflatten(out_ty, primal, coords, "cotangent"))
            return _ctx_coords(gamma, point, cot)

        def push(coords):
            return lin_flatten(out_ty, primal, fres.right.apply(_ctx_lin(gamma, point, coords)))

        for f, n in ((pull, n_out), (push, n_in)):
            a = rng.integers(-9, 10, size=n).astype(float)
            b = rng.integers(-9, 10, size=n).astype(float)
            held = np.array_equal(f(np.zeros(n)), np.zeros_like(f(np.zeros(n)))) and np.array_equal(
                f(a + b), f(a) + f(b)
            )
            cases += 1
            if not held:
                failures.append(f"homomorphism on random program {seed - 1}")
    ok = not failures and cases >= MONOID_CASES
    detail = "; ".join(failures[:3]) or f"{cases} cases, all exact"
    return report(8, "monoid and homomorphism laws", ok, detail)


def _ctx_coords(gamma, point, ctx):
    parts = tuple_items(ctx, len(gamma)) if gamma else []
    coords = [lin_flatten(ty, point[x], part) for (x, ty), part in zip(gamma, parts)]
    return np.concatenate(coords) if coords else np.zeros(0)


def _ctx_lin(gamma, point, coords):
    return ctx_lin(gamma, point, np.asarray(coords, dtype=float), "tangent", LIFTED)


# 9 -------------------------------------------------------------------------------------


def criterion_functor() -> Outcome:
    rng = np.random.default_rng(19)
    x = Var("x")
    f = PrimOp("add", (PrimOp("mul", (x, PrimOp("const", (), 2.0))), PrimOp("const", (), 1.0)))
    g = PrimOp("sub", (PrimOp("mul", (x, x)), PrimOp("const", (), 3.0)))
    g_after_f = subst_term(g, "x", f)
    lf, lg = Add(LVar(), LVar()), Add(Add(LVar(), LVar()), LVar())
    cases, failures = 0, []
    for _ in range(FUNCTOR_CASES):
        tau = random_shape_type(rng)
        prim_ty = subst_type(tau, "a", R)
        v = random_value(prim_ty, rng, scale=3, integer=True)
        ev = Evaluator()

        def fmap(body, arg):
            return fmap_type(tau, "a", "x", body, R, R, arg=arg)

        identity = ev.eval(fmap(x, Var("p")), {"p": v})
        composed = ev.eval(fmap(g, fmap(f, Var("p"))), {"p": v})
        fused = ev.eval(fmap(g_after_f, Var("p")), {"p": v})
        cases += 1
        if identity != v or flatten(composed) != flatten(fused):
            failures.append(f"fmap at {tau}")

        # linear action along the same primal
        coords = rng.integers(-9, 10, size=len(flatten(v).coords)).astype(float)
        lv = lin_unflatten(prim_ty, v, coords)
        sigma = _d2(tau)

        def lmap(act, arg=None):
            return lin_fmap(sigma, "a", act, LReal(1), LReal(1), prim_ty=prim_ty, prim=Var("p"), arg=arg)

        lid = ev.eval(lmap(LVar()), {"p": v}, lv)
        lcomp = ev.eval(lmap(lg, lmap(lf)), {"p": v}, lv)
        lfused = ev.eval(lmap(LLet(lf, lg)), {"p": v}, lv)
        cases += 1
        if not np.array_equal(lin_flatten(prim_ty, v, lid), coords) or not np.array_equal(
            lin_flatten(prim_ty, v, lcomp), lin_flatten(prim_ty, v, lfused)
        ):
            failures.append(f"lin_fmap at {tau}")
    ok = not failures
    detail = "; ".join(failures[:3]) or f"{cases // 2} fmap_type + {cases // 2} lin_fmap cases (identity and composition)"
    return report(9, "functor laws", ok, detail)


CRITERIA = [
    criterion_golden,
    criterion_fd_audit,
    criterion_transpose,
    criterion_well_typed,
    criterion_size,
    criterion_split,
    criterion_lsum,
    criterion_monoid,
    criterion_functor,
]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda c: c.__name__.removeprefix("criterion_"))
def test_criterion(criterion):
    outcome = criterion()
    assert outcome.passed, outcome.line()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    sys.exit(0 if all(r.passed for r in results) else 1)
