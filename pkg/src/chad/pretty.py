"""Printers for terms.

``pretty`` renders any term in mathematical notation (angle-bracket pairs,
``λv.`` for linear abstraction).  ``show_source`` renders source terms in the
parseable surface syntax.  ``sexpr`` gives a fully explicit s-expression.
"""

from __future__ import annotations

import dataclasses
from typing import Optional

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
from .types import Mu, Type, show_type, unfold_type

_SUB = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")

INFIX = {"add": ("+", 1), "sub": ("-", 1), "mul": ("*", 2), "div": ("/", 2)}

# precedence levels: 0 open binders, 1 additive, 2 multiplicative, 3 application, 4 atoms
OPEN, ADD, MUL, APP, ATOM = range(5)


def pretty(t: Term, aliases: Optional[dict] = None) -> str:
    return _Printer(aliases or {}, source=False).go(t, OPEN)


def show_source(t: Term, aliases: Optional[dict] = None) -> str:
    return _Printer(aliases or {}, source=True).go(t, OPEN)


def format_number(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def show_literal(param) -> str:
    if isinstance(param, tuple):
        return "[" + ", ".join(repr(float(p)) for p in param) + "]"
    return repr(float(param))


def _sub(i: int) -> str:
    return str(i).translate(_SUB)


class _Printer:
    def __init__(self, aliases: dict, source: bool):
        self.aliases = aliases
        self.source = source

    def ty(self, ty: Type) -> str:
        return show_type(ty, self.aliases)

    def alias_of(self, ty: Type) -> Optional[str]:
        for name, aty in self.aliases.items():
            if aty == ty:
                return name
        return None

    def tuple(self, items) -> str:
        inner = ", ".join(self.go(i, OPEN) for i in items)
        return f"({inner})" if self.source else f"⟨{inner}⟩"

    def go(self, t: Term, prec: int) -> str:
        s, level = self.render(t)
        return f"({s})" if level < prec else s

    def render(self, t: Term) -> tuple[str, int]:
        go = self.go
        match t:
            case Var(name):
                return name, ATOM
            case Let(x, bound, body):
                return f"let {x} = {go(bound, OPEN)} in {go(body, OPEN)}", OPEN
            case PrimOp("const", (), param):
                lit = show_literal(param)
                if not isinstance(param, tuple) and float(param) < 0:
                    return f"({lit})", ATOM
                return lit, ATOM
            case PrimOp(op, (a, b), None) if op in INFIX:
                sym, level = INFIX[op]
                return f"{go(a, level)} {sym} {go(b, level + 1)}", level
            case PrimOp(op, args, param):
                ps = "" if param is None else f"[{param}]"
                return f"{op}{ps}({', '.join(go(a, OPEN) for a in args)})", ATOM
            case Pred(name, args):
                return f"{name}({', '.join(go(a, OPEN) for a in args)})", ATOM
            case UnitVal():
                return "()", ATOM
            case Pair(a, b):
                return self.tuple([a, b]), ATOM
            case Fst(b) | LFst(b):
                return f"fst {go(b, ATOM)}", APP
            case Snd(b) | LSnd(b):
                return f"snd {go(b, ATOM)}", APP
            case Lam(x, ty, body):
                if self.source:
                    return f"fun ({x} : {self.ty(ty)}) => {go(body, OPEN)}", OPEN
                return f"λ{x} : {self.ty(ty)}. {go(body, OPEN)}", OPEN
            case App(fn, arg):
                return f"{go(fn, APP)} {go(arg, ATOM)}", APP
            case Inj(label, body, ty):
                if self.alias_of(ty) is not None:
                    return f"{label} {go(body, ATOM)}", APP
                return f"inj[{self.ty(ty)}] {label} {go(body, ATOM)}", APP
            case Roll(Inj(label, body, vty), mu) if (
                self.alias_of(mu) is not None and isinstance(mu, Mu) and vty == unfold_type(mu)
            ):
                return f"{label} {go(body, ATOM)}", APP
            case Roll(body, ty):
                return f"roll[{self.ty(ty)}] {go(body, ATOM)}", APP
            case Unroll(body):
                return f"unroll {go(body, ATOM)}", APP
            case Match(scrut, branches):
                arrow = "->" if self.source else "→"
                bs = " | ".join(f"{lab} {b} {arrow} {go(body, OPEN)}" for lab, b, body in branches)
                return f"match {go(scrut, OPEN)} with {{ {bs} }}", ATOM
            case Fold(body, x, alg, ty):
                arrow = "->" if self.source else "→"
                return f"fold[{self.ty(ty)}] {go(body, APP)} {{ {x} {arrow} {go(alg, OPEN)} }}", ATOM
            case Gen(body, x, coalg, ty):
                arrow = "->" if self.source else "→"
                return f"gen[{self.ty(ty)}] {go(body, APP)} {{ {x} {arrow} {go(coalg, OPEN)} }}", ATOM
            # target-only forms
            case PairLet(x, y, bound, body):
                return f"let ⟨{x}, {y}⟩ = {go(bound, OPEN)} in {go(body, OPEN)}", OPEN
            case Proj(i, _, body):
                return f"proj{_sub(i + 1)} {go(body, ATOM)}", APP
            case CoProj(i, body, _):
                return f"coproj{_sub(i + 1)} {go(body, ATOM)}", APP
            case LVar():
                return "v", ATOM
            case LLet(bound, body):
                return f"let v = {go(bound, OPEN)} in {go(body, OPEN)}", OPEN
            case LOp(op, kind, args, lin, param):
                d = "D" if kind == "D" else "Dᵀ"
                ps = "" if param is None else f"[{param}]"
                xs = ", ".join(go(a, OPEN) for a in args)
                return f"{d}{op}{ps}({xs}; {go(lin, OPEN)})", ATOM
            case LUnitVal():
                return "⟨⟩", ATOM
            case LPair(a, b):
                return f"⟨{go(a, OPEN)}, {go(b, OPEN)}⟩", ATOM
            case LLam(_, body):
                return f"λv. {go(body, OPEN)}", OPEN
            case LApp(fn, arg):
                return f"{go(fn, APP)} • {go(arg, ATOM)}", APP
            case PLam(x, ty, body):
                return f"λ{x} : {self.ty(ty)}. {go(body, OPEN)}", OPEN
            case PApp(fn, arg):
                return f"{go(fn, APP)} {go(arg, ATOM)}", APP
            case Zero(_):
                return "0", ATOM
            case Add(a, b):
                return f"{go(a, ADD)} + {go(b, MUL)}", ADD
            case CopowerIntro(point, lin):
                return f"!{go(point, ATOM)} ⊗ {go(lin, ATOM)}", APP
            case CopowerElim(scrut, x, body, _):
                return f"case {go(scrut, OPEN)} of !{x} ⊗ v → {go(body, OPEN)}", OPEN
            case LRoll(body, _):
                return f"roll {go(body, ATOM)}", APP
            case LUnroll(body):
                return f"unroll {go(body, ATOM)}", APP
            case LInj(i, body, _):
                return f"inj{_sub(i + 1)} {go(body, ATOM)}", APP
            case LProj(i, body, _):
                return f"out{_sub(i + 1)} {go(body, ATOM)}", APP
            case LFold() | LGen():
                kw = "lfold" if isinstance(t, LFold) else "lgen"
                start = t.lin if isinstance(t, LFold) else t.seed
                return (
                    f"{kw} {go(start, ATOM)} along {go(t.index, ATOM)} "
                    f"{{ {t.binder} → {go(t.unfold, OPEN)} ; v → {go(t.body, OPEN)} }}",
                    ATOM,
                )
        raise TypeError(f"cannot print {type(t).__name__}")


def sexpr(t: Term) -> str:
    """Explicit s-expression: ``(Node field ...)`` with types as quoted strings."""
    return _sx(t)


def _sx(x) -> str:
    if isinstance(x, Term):
        parts = [type(x).__name__]
        for f in dataclasses.fields(x):
            if f.name != "loc":
                parts.append(_sx(getattr(x, f.name)))
        return "(" + " ".join(parts) + ")"
    if isinstance(x, Type):
        return '"' + show_type(x) + '"'
    if isinstance(x, tuple):
        return "[" + " ".join(_sx(i) for i in x) + "]"
    if x is None:
        return "nil"
    if isinstance(x, float):
        return repr(x)
    return str(x)
