"""Term syntax for the source language and the erased linear target language.

All nodes are frozen dataclasses.  ``loc`` (line, column) is carried for error
messages but ignored by equality.  Binding structure is described per class by
``_scopes``: a map from a child field to the binder fields that scope over it.
The generic traversals below (free variables, substitution, size, canonical
renaming) are driven entirely by that table.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field
from typing import Any, Optional

from .types import Type


@dataclass(frozen=True)
class Term:
    loc: Optional[tuple[int, int]] = field(default=None, kw_only=True, compare=False, repr=False)

    _scopes = {}

    def __str__(self) -> str:
        from .pretty import pretty

        return pretty(self)


# source terms ---------------------------------------------------------------


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Let(Term):
    name: str
    bound: Term
    body: Term
    _scopes = {"body": ("name",)}


@dataclass(frozen=True)
class PrimOp(Term):
    op: str
    args: tuple[Term, ...]
    param: Any = None


@dataclass(frozen=True)
class Pred(Term):
    """Boolean test on reals (``pos``, ``lt``); result ``{False Unit | True Unit}``."""

    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class UnitVal(Term):
    pass


@dataclass(frozen=True)
class Pair(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Fst(Term):
    body: Term


@dataclass(frozen=True)
class Snd(Term):
    body: Term


@dataclass(frozen=True)
class Lam(Term):
    name: str
    ty: Type
    body: Term
    _scopes = {"body": ("name",)}


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Inj(Term):
    label: str
    body: Term
    ty: Type  # the Variant being injected into


@dataclass(frozen=True)
class Match(Term):
    scrut: Term
    branches: tuple[tuple[str, str, Term], ...]  # (label, binder, body)


@dataclass(frozen=True)
class Roll(Term):
    body: Term
    ty: Type  # the Mu type produced


@dataclass(frozen=True)
class Unroll(Term):
    body: Term


@dataclass(frozen=True)
class Fold(Term):
    body: Term
    binder: str
    alg: Term
    ty: Type  # carrier (result) type
    _scopes = {"alg": ("binder",)}


@dataclass(frozen=True)
class Gen(Term):
    body: Term
    binder: str
    coalg: Term
    ty: Type  # the Nu type produced
    _scopes = {"coalg": ("binder",)}


# target-only terms -------------------------------------------------------------


@dataclass(frozen=True)
class PairLet(Term):
    """``let ⟨left, right⟩ = bound in body``."""

    left: str
    right: str
    bound: Term
    body: Term
    _scopes = {"body": ("left", "right")}


@dataclass(frozen=True)
class Proj(Term):
    """Component ``index`` (0-based) of a left-nested ``n``-tuple, cartesian or linear."""

    index: int
    n: int
    body: Term


@dataclass(frozen=True)
class CoProj(Term):
    """Linear n-tuple with ``body`` at ``index`` and zeros of ``comps`` elsewhere."""

    index: int
    body: Term
    comps: tuple[Type, ...]


@dataclass(frozen=True)
class LVar(Term):
    """The unique linear identifier ``v``."""


@dataclass(frozen=True)
class LLet(Term):
    """``let v = bound in body`` at the linear layer."""

    bound: Term
    body: Term


@dataclass(frozen=True)
class LOp(Term):
    """Derivative (``kind='D'``) or transposed derivative (``kind='DT'``) of ``op``."""

    op: str
    kind: str
    args: tuple[Term, ...]
    lin: Term
    param: Any = None


@dataclass(frozen=True)
class LUnitVal(Term):
    pass


@dataclass(frozen=True)
class LPair(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class LFst(Term):
    body: Term


@dataclass(frozen=True)
class LSnd(Term):
    body: Term


@dataclass(frozen=True)
class LLam(Term):
    """``λ̲v. body`` with ``v : dom``; a cartesian value of type ``dom ⊸ σ``."""

    dom: Type
    body: Term


@dataclass(frozen=True)
class LApp(Term):
    """``fn • arg``."""

    fn: Term
    arg: Term


@dataclass(frozen=True)
class PLam(Term):
    """Power introduction ``λx:ty. body`` with a linear body."""

    name: str
    ty: Type
    body: Term
    _scopes = {"body": ("name",)}


@dataclass(frozen=True)
class PApp(Term):
    """Power elimination: linear ``fn`` applied to a cartesian ``arg``."""

    fn: Term
    arg: Term


@dataclass(frozen=True)
class Zero(Term):
    ty: Type


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class CopowerIntro(Term):
    """``!point ⊗ lin``."""

    point: Term
    lin: Term


@dataclass(frozen=True)
class CopowerElim(Term):
    """``case scrut of !binder ⊗ v → body``, result of linear type ``ty``."""

    scrut: Term
    binder: str
    body: Term
    ty: Type
    _scopes = {"body": ("binder",)}


@dataclass(frozen=True)
class LRoll(Term):
    body: Term
    ty: Type  # the LMu type produced


@dataclass(frozen=True)
class LUnroll(Term):
    body: Term


@dataclass(frozen=True)
class LInj(Term):
    index: int
    body: Term
    ty: Type  # the LSum


@dataclass(frozen=True)
class LProj(Term):
    index: int
    body: Term
    ty: Type  # the LSum


@dataclass(frozen=True)
class LFold(Term):
    """Linear fold over ``lin : μ̲var.σ``, walked along the primal ``index : index_ty``.

    ``binder`` names the current primal inside ``unfold`` (which exposes one
    layer of the primal at type ``functor[index_ty/var]``) and inside ``body``
    (which folds one layer, ``v : σ[carrier/var] ⊢ body : carrier``).
    """

    lin: Term
    index: Term
    binder: str
    unfold: Term
    body: Term
    var: str
    functor: Type
    lin_ty: Type
    index_ty: Type
    carrier: Type
    _scopes = {"unfold": ("binder",), "body": ("binder",)}


@dataclass(frozen=True)
class LGen(Term):
    """Linear unfold from ``seed : carrier`` into ``lin_ty = ν̲var.σ``, walked along the primal."""

    seed: Term
    index: Term
    binder: str
    unfold: Term
    body: Term
    var: str
    functor: Type
    lin_ty: Type
    index_ty: Type
    carrier: Type
    _scopes = {"unfold": ("binder",), "body": ("binder",)}


# generic traversals ---------------------------------------------------------

_fresh_ids = itertools.count(1)


def fresh_name(hint: str = "x") -> str:
    """A name in the reserved ``stem%n`` namespace, unreachable from surface syntax."""
    stem = hint.split("%")[0] or "x"
    return f"{stem}%{next(_fresh_ids)}"


def _term_fields(t: Term):
    for f in dataclasses.fields(t):
        if f.name == "loc":
            continue
        val = getattr(t, f.name)
        if isinstance(val, Term) or (f.name == "args" and isinstance(val, tuple)):
            yield f.name, val


def _scoped(t: Term, fname: str) -> tuple[str, ...]:
    return tuple(getattr(t, b) for b in type(t)._scopes.get(fname, ()))


def free_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset({t.name})
    out: set[str] = set()
    if isinstance(t, Match):
        out |= free_vars(t.scrut)
        for _, b, body in t.branches:
            out |= free_vars(body) - {b}
        return frozenset(out)
    for fname, val in _term_fields(t):
        bound = set(_scoped(t, fname))
        children = val if isinstance(val, tuple) else (val,)
        for c in children:
            out |= free_vars(c) - bound
    return frozenset(out)


def uses_linear(t: Term) -> bool:
    """Whether the ambient linear variable occurs free in ``t``."""
    if isinstance(t, LVar):
        return True
    if isinstance(t, (LLam,)):
        return False
    if isinstance(t, LLet):
        return uses_linear(t.bound)
    if isinstance(t, CopowerElim):
        return uses_linear(t.scrut)
    if isinstance(t, (LFold, LGen)):
        return uses_linear(t.lin if isinstance(t, LFold) else t.seed)
    if isinstance(t, Match):
        return uses_linear(t.scrut) or any(uses_linear(b) for _, _, b in t.branches)
    for _, val in _term_fields(t):
        children = val if isinstance(val, tuple) else (val,)
        if any(uses_linear(c) for c in children):
            return True
    return False


def subst_term(t: Term, x: str, s: Term) -> Term:
    """Capture-avoiding substitution ``t[s/x]``."""
    return subst_terms(t, {x: s})


def subst_terms(t: Term, sub: dict[str, Term]) -> Term:
    fv = free_vars(t)
    sub = {k: v for k, v in sub.items() if k in fv}
    if not sub:
        return t
    return _subst(t, sub)


def _subst(t: Term, sub: dict[str, Term]) -> Term:
    if isinstance(t, Var):
        return sub.get(t.name, t)
    danger: set[str] = set()
    for s in sub.values():
        danger |= free_vars(s)
    if isinstance(t, Match):
        branches = []
        for label, b, body in t.branches:
            local = {k: v for k, v in sub.items() if k != b}
            if local and b in danger:
                nb = fresh_name(b)
                body = _subst(body, {b: Var(nb)})
                b = nb
            branches.append((label, b, subst_terms(body, local)))
        return dataclasses.replace(t, scrut=subst_terms(t.scrut, sub), branches=tuple(branches))
    renames: dict[str, str] = {}
    for binders in type(t)._scopes.values():
        for bf in binders:
            old = getattr(t, bf)
            if old in danger and bf not in renames:
                renames[bf] = fresh_name(old)
    changes: dict[str, Any] = dict(renames)
    for fname, val in _term_fields(t):
        binder_fields = type(t)._scopes.get(fname, ())
        bound = {getattr(t, b) for b in binder_fields}
        local = {k: v for k, v in sub.items() if k not in bound}
        ren = {getattr(t, b): Var(renames[b]) for b in binder_fields if b in renames}

        def go(c, ren=ren, local=local):
            if ren:
                c = _subst(c, ren)
            return subst_terms(c, local)

        changes[fname] = tuple(go(c) for c in val) if isinstance(val, tuple) else go(val)
    return dataclasses.replace(t, **changes)


def term_size(t: Term) -> int:
    """Number of term nodes; every constructor counts one, type annotations are free."""
    if isinstance(t, Match):
        return 1 + term_size(t.scrut) + sum(term_size(b) for _, _, b in t.branches)
    n = 1
    for _, val in _term_fields(t):
        if isinstance(val, tuple):
            n += sum(term_size(c) for c in val)
        else:
            n += term_size(val)
    return n


def canonical(t: Term) -> Term:
    """Rename every bound variable to ``#k`` in traversal order."""
    return _canon(t, {}, itertools.count())


def _canon(t: Term, env: dict[str, str], ctr) -> Term:
    if isinstance(t, Var):
        return Var(env.get(t.name, t.name))
    if isinstance(t, Match):
        scrut = _canon(t.scrut, env, ctr)
        branches = []
        for label, b, body in t.branches:
            nb = f"#{next(ctr)}"
            branches.append((label, nb, _canon(body, {**env, b: nb}, ctr)))
        return Match(scrut, tuple(branches))
    new_names = {}
    for binders in type(t)._scopes.values():
        for bf in binders:
            if bf not in new_names:
                new_names[bf] = f"#{next(ctr)}"
    changes: dict[str, Any] = dict(new_names)
    for fname, val in _term_fields(t):
        binder_fields = type(t)._scopes.get(fname, ())
        child_env = {**env, **{getattr(t, b): new_names[b] for b in binder_fields}}
        if isinstance(val, tuple):
            changes[fname] = tuple(_canon(c, child_env, ctr) for c in val)
        else:
            changes[fname] = _canon(val, child_env, ctr)
    return dataclasses.replace(t, **changes)


def alpha_equal(a: Term, b: Term) -> bool:
    return canonical(a) == canonical(b)


def subterms(t: Term):
    """Preorder iteration over all term nodes."""
    yield t
    if isinstance(t, Match):
        yield from subterms(t.scrut)
        for _, _, b in t.branches:
            yield from subterms(b)
        return
    for _, val in _term_fields(t):
        for c in val if isinstance(val, tuple) else (val,):
            yield from subterms(c)


# small builders -----------------------------------------------------------------


def ntuple(items: list[Term], linear: bool = False) -> Term:
    """Left-nested tuple; empty is unit, singleton is the item itself."""
    if not items:
        return LUnitVal() if linear else UnitVal()
    out = items[0]
    for it in items[1:]:
        out = LPair(out, it) if linear else Pair(out, it)
    return out
