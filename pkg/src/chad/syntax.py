"""Surface syntax: lexer, parser and printer for program files and literal values.

A program file declares type aliases, the typed inputs (the context) and a
``main`` term::

    type NEList = mu l. {Last R | Cons (R * l)}
    input xs : NEList
    main = fold[R] xs { y -> match y with { Last a -> a | Cons p -> fst p * snd p } }

The full grammar is in ``docs/grammar.md``.  ``print_program`` is a right
inverse of ``parse_program`` on the abstract syntax.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import ParseError, ShapeMismatch
from .ops import OPS, PREDICATES
from .pretty import format_number, show_source
from .terms import (
    App,
    Fold,
    Fst,
    Gen,
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
    Unroll,
    Var,
    subterms,
)
from .types import BOOL, Arrow, Mu, Nu, Prod, Real, TyVar, Type, Unit, Variant, has_free, show_type, unfold_type
from .values import CodataV, FunV, InjV, LinFunV, PairV, RealVec, RollV, UnitV, Value

KEYWORDS = {
    "let", "in", "fun", "match", "with", "fold", "gen", "roll", "unroll", "inj",
    "fst", "snd", "mu", "nu", "type", "input", "main",
}
BUILTIN_ALIASES = {"Bool": BOOL}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>=>|->|[()\[\]{},:=|+\-*/^.;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num, ident, sym, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out, line, start, pos = [], 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind != "ws":
            out.append(Token(kind, m.group(), line, m.start() - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


@dataclass
class ProgramFile:
    """A parsed program: aliases, the typed inputs and the main term."""

    path: Optional[str]
    aliases: dict[str, Type]
    gamma: list[tuple[str, Type]]
    main: Term
    constructors: dict[str, str] = field(default_factory=dict)

    @property
    def primitives(self) -> list[str]:
        """Primitive operations used by ``main``, in first-use order."""
        seen: dict[str, None] = {}
        for t in subterms(self.main):
            if isinstance(t, PrimOp):
                seen.setdefault(t.op)
        return list(seen)

    def printing_aliases(self) -> dict[str, Type]:
        return {**BUILTIN_ALIASES, **self.aliases}


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.aliases: dict[str, Type] = dict(BUILTIN_ALIASES)
        self.constructors: dict[str, str] = {"False": "Bool", "True": "Bool"}

    # token helpers -------------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "ident") and self.tok.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, msg: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{msg}, found {found}", t.line, t.col)

    def ident(self) -> str:
        if self.tok.kind != "ident" or self.tok.text in KEYWORDS:
            self.fail("expected an identifier")
        return self.advance().text

    def lower_ident(self) -> str:
        if self.tok.kind == "ident" and self.tok.text[0].isupper():
            self.fail("expected a lower-case name")
        return self.ident()

    def upper_ident(self) -> str:
        if self.tok.kind != "ident" or not self.tok.text[0].isupper():
            self.fail("expected a constructor name")
        return self.ident()

    def number(self) -> float:
        sign = 1.0
        if self.at("-"):
            self.advance()
            sign = -1.0
        if self.tok.kind != "num":
            self.fail("expected a number")
        return sign * float(self.advance().text)

    # program -------------------------------------------------------------------

    def program(self, path: Optional[str]) -> ProgramFile:
        gamma: list[tuple[str, Type]] = []
        user_aliases: dict[str, Type] = {}
        main = None
        while self.tok.kind != "eof":
            if self.at("type"):
                self.advance()
                name = self.upper_ident()
                if name in self.aliases or name in ("R", "Unit"):
                    self.fail(f"type {name} is already defined")
                self.expect("=")
                ty = self.type()
                self.declare(name, ty)
                user_aliases[name] = ty
            elif self.at("input"):
                self.advance()
                x = self.lower_ident()
                self.expect(":")
                gamma.append((x, self.type()))
            elif self.at("main"):
                if main is not None:
                    self.fail("main is defined twice")
                self.advance()
                self.expect("=")
                main = self.expr()
            else:
                self.fail("expected 'type', 'input' or 'main'")
        if main is None:
            raise ParseError("missing 'main = ...' definition", self.tok.line, self.tok.col)
        return ProgramFile(path, user_aliases, gamma, main, dict(self.constructors))

    def declare(self, name: str, ty: Type) -> None:
        self.aliases[name] = ty
        layer = unfold_type(ty) if isinstance(ty, Mu) else ty
        if isinstance(layer, Variant):
            for label in layer.labels:
                if label in self.constructors:
                    self.fail(f"constructor {label} already belongs to {self.constructors[label]}")
                self.constructors[label] = name

    # types ---------------------------------------------------------------------

    def type(self) -> Type:
        if self.at("mu") or self.at("nu"):
            kind = self.advance().text
            var = self.lower_ident()
            self.expect(".")
            body = self.type()
            return Mu(var, body) if kind == "mu" else Nu(var, body)
        dom = self.prod_type()
        if self.at("->"):
            self.advance()
            return Arrow(dom, self.type())
        return dom

    def prod_type(self) -> Type:
        ty = self.atom_type()
        while self.at("*"):
            self.advance()
            ty = Prod(ty, self.atom_type())
        return ty

    def atom_type(self) -> Type:
        t = self.tok
        if self.at("("):
            self.advance()
            ty = self.type()
            self.expect(")")
            return ty
        if self.at("{"):
            self.advance()
            cases = []
            while True:
                label = self.upper_ident()
                cases.append((label, self.atom_type()))
                if not self.at("|"):
                    break
                self.advance()
            self.expect("}")
            return Variant(tuple(cases))
        if t.kind == "ident" and t.text == "R":
            self.advance()
            if self.at("^"):
                self.advance()
                if self.tok.kind != "num" or not self.tok.text.isdigit():
                    self.fail("expected a width")
                return Real(int(self.advance().text))
            return Real()
        if t.kind == "ident" and t.text == "Unit":
            self.advance()
            return Unit()
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.advance()
            if t.text[0].isupper():
                if t.text not in self.aliases:
                    raise ParseError(f"unknown type {t.text}", t.line, t.col)
                return self.aliases[t.text]
            return TyVar(t.text)
        self.fail("expected a type")

    def bracket_type(self) -> Type:
        self.expect("[")
        ty = self.type()
        self.expect("]")
        return ty

    # terms ---------------------------------------------------------------------

    def loc(self) -> tuple[int, int]:
        return (self.tok.line, self.tok.col)

    def expr(self) -> Term:
        loc = self.loc()
        if self.at("let"):
            self.advance()
            x = self.lower_ident()
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            return Let(x, bound, self.expr(), loc=loc)
        if self.at("fun"):
            self.advance()
            self.expect("(")
            x = self.lower_ident()
            self.expect(":")
            ty = self.type()
            self.expect(")")
            self.expect("=>")
            return Lam(x, ty, self.expr(), loc=loc)
        return self.additive()

    def additive(self) -> Term:
        t = self.multiplicative()
        while self.at("+") or self.at("-"):
            loc = self.loc()
            op = "add" if self.advance().text == "+" else "sub"
            t = PrimOp(op, (t, self.multiplicative()), loc=loc)
        return t

    def multiplicative(self) -> Term:
        t = self.application()
        while self.at("*") or self.at("/"):
            loc = self.loc()
            op = "mul" if self.advance().text == "*" else "div"
            t = PrimOp(op, (t, self.application()), loc=loc)
        return t

    def application(self) -> Term:
        loc = self.loc()
        if self.at("fst") or self.at("snd"):
            kind = self.advance().text
            arg = self.atom()
            t = Fst(arg, loc=loc) if kind == "fst" else Snd(arg, loc=loc)
        elif self.at("unroll"):
            self.advance()
            t = Unroll(self.atom(), loc=loc)
        elif self.at("roll"):
            self.advance()
            ty = self.bracket_type()
            if not isinstance(ty, Mu):
                raise ParseError(f"roll needs an inductive type, got {show_type(ty)}", *loc)
            t = Roll(self.atom(), ty, loc=loc)
        elif self.at("inj"):
            self.advance()
            ty = self.bracket_type()
            label = self.upper_ident()
            t = Inj(label, self.atom(), ty, loc=loc)
        elif self.at("-") and self.peek().kind != "num":
            self.advance()
            t = PrimOp("neg", (self.atom(),), loc=loc)
        elif self.tok.kind == "ident" and self.tok.text[0].isupper():
            t = self.constructor()
        else:
            t = self.atom()
        while self.starts_atom():
            t = App(t, self.atom(), loc=loc)
        return t

    def constructor(self) -> Term:
        loc = self.loc()
        label = self.upper_ident()
        if label not in self.constructors:
            raise ParseError(f"unknown constructor {label}", *loc)
        ty = self.aliases[self.constructors[label]]
        arg = self.atom() if self.starts_atom() else UnitVal(loc=loc)
        if isinstance(ty, Mu):
            return Roll(Inj(label, arg, unfold_type(ty), loc=loc), ty, loc=loc)
        return Inj(label, arg, ty, loc=loc)

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind == "num":
            return True
        if t.kind == "ident":
            return t.text in ("match", "fold", "gen") or (t.text not in KEYWORDS and not t.text[0].isupper())
        return t.kind == "sym" and t.text in ("(", "[")

    def atom(self) -> Term:
        loc = self.loc()
        t = self.tok
        if t.kind == "num":
            return PrimOp("const", (), self.number(), loc=loc)
        if self.at("["):
            self.advance()
            vals = [self.number()]
            while self.at(","):
                self.advance()
                vals.append(self.number())
            self.expect("]")
            return PrimOp("const", (), tuple(vals), loc=loc)
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return UnitVal(loc=loc)
            if self.at("-") and self.peek().kind == "num" and self.peek(2).text == ")":
                val = self.number()
                self.expect(")")
                return PrimOp("const", (), val, loc=loc)
            first = self.expr()
            if self.at(","):
                self.advance()
                second = self.expr()
                self.expect(")")
                return Pair(first, second, loc=loc)
            self.expect(")")
            return first
        if self.at("match"):
            self.advance()
            scrut = self.expr()
            self.expect("with")
            self.expect("{")
            branches = []
            while True:
                label = self.upper_ident()
                binder = self.lower_ident()
                self.expect("->")
                branches.append((label, binder, self.expr()))
                if not self.at("|"):
                    break
                self.advance()
            self.expect("}")
            return Match(scrut, tuple(branches), loc=loc)
        if self.at("fold") or self.at("gen"):
            kind = self.advance().text
            ty = self.bracket_type()
            body = self.application()
            self.expect("{")
            x = self.lower_ident()
            self.expect("->")
            alg = self.expr()
            self.expect("}")
            if kind == "fold":
                return Fold(body, x, alg, ty, loc=loc)
            if not isinstance(ty, Nu):
                raise ParseError(f"gen needs a coinductive type, got {show_type(ty)}", *loc)
            return Gen(body, x, alg, ty, loc=loc)
        if t.kind == "ident" and t.text not in KEYWORDS and not t.text[0].isupper():
            name = self.advance().text
            if name in OPS or name in PREDICATES:
                if self.at("(") or self.at("["):
                    return self.call(name, loc)
            return Var(name, loc=loc)
        self.fail("expected an expression")

    def call(self, name: str, loc) -> Term:
        param = None
        if self.at("["):
            self.advance()
            if self.tok.kind != "num" or not self.tok.text.isdigit():
                self.fail("expected an integer parameter")
            param = int(self.advance().text)
            self.expect("]")
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.expr())
            while self.at(","):
                self.advance()
                args.append(self.expr())
        self.expect(")")
        if name in PREDICATES:
            return Pred(name, tuple(args), loc=loc)
        return PrimOp(name, tuple(args), param, loc=loc)


def parse_program(text: str, path: Optional[str] = None) -> ProgramFile:
    return _Parser(text).program(path)


def parse_term(text: str, aliases: Optional[dict] = None) -> Term:
    """Parse a single expression; ``aliases`` makes their constructors available."""
    p = _Parser(text)
    for name, ty in (aliases or {}).items():
        if name not in BUILTIN_ALIASES:
            p.declare(name, ty)
    t = p.expr()
    if p.tok.kind != "eof":
        p.fail("unexpected input after the expression")
    return t


def parse_type(text: str, aliases: Optional[dict] = None) -> Type:
    p = _Parser(text)
    p.aliases.update(aliases or {})
    ty = p.type()
    if p.tok.kind != "eof":
        p.fail("unexpected input after the type")
    return ty


def print_program(prog: ProgramFile) -> str:
    lines = []
    shown: dict[str, Type] = dict(BUILTIN_ALIASES)
    for name, ty in prog.aliases.items():
        lines.append(f"type {name} = {show_type(ty, shown)}")
        shown[name] = ty
    for x, ty in prog.gamma:
        lines.append(f"input {x} : {show_type(ty, shown)}")
    lines.append(f"main = {show_source(prog.main, shown)}")
    return "\n".join(lines) + "\n"


# literal values ----------------------------------------------------------------------


def parse_value(text: str, ty: Type, aliases: Optional[dict] = None) -> Value:
    """Parse a literal value of a data type.

    Reals are numbers or ``[x, ...]``; pairs are ``(a, b)``; variants are
    ``C v`` (or ``C`` for a unit payload); list-shaped inductive types also
    accept ``[x, ...]``.
    """
    p = _Parser(text)
    tree = _value_tree(p)
    if p.tok.kind != "eof":
        p.fail("unexpected input after the value")
    return _to_value(tree, ty)


def parse_inputs(text: str, gamma) -> dict:
    """Values for the whole context: one value, or a list with one entry per input."""
    if len(gamma) == 1:
        (x, ty), = gamma
        return {x: parse_value(text, ty)}
    p = _Parser(text)
    tree = _value_tree(p)
    if p.tok.kind != "eof":
        p.fail("unexpected input after the value")
    if not (isinstance(tree, tuple) and tree[0] == "list" and len(tree[1]) == len(gamma)):
        raise ParseError(f"expected a list of {len(gamma)} input values")
    return {x: _to_value(item, ty) for (x, ty), item in zip(gamma, tree[1])}


def _value_tree(p: _Parser):
    if p.tok.kind == "num" or p.at("-"):
        return p.number()
    if p.at("["):
        p.advance()
        items = []
        if not p.at("]"):
            items.append(_value_tree(p))
            while p.at(","):
                p.advance()
                items.append(_value_tree(p))
        p.expect("]")
        return ("list", items)
    if p.at("("):
        p.advance()
        if p.at(")"):
            p.advance()
            return ("unit",)
        first = _value_tree(p)
        if p.at(","):
            p.advance()
            second = _value_tree(p)
            p.expect(")")
            return ("pair", first, second)
        p.expect(")")
        return first
    if p.tok.kind == "ident" and p.tok.text[0].isupper():
        label = p.advance().text
        if p.tok.kind == "num" or p.at("[") or p.at("(") or p.at("-") or (
            p.tok.kind == "ident" and p.tok.text[0].isupper()
        ):
            return ("con", label, _value_tree(p))
        return ("con", label, ("unit",))
    p.fail("expected a value")


def _to_value(tree, ty: Type) -> Value:
    def bad():
        raise ShapeMismatch(f"literal does not fit type {show_type(ty)}")

    match ty:
        case Real(n):
            if isinstance(tree, float) and n == 1:
                return RealVec([tree])
            if isinstance(tree, tuple) and tree[0] == "list" and len(tree[1]) == n and all(
                isinstance(x, float) for x in tree[1]
            ):
                return RealVec(tree[1])
            bad()
        case Unit():
            if tree == ("unit",):
                return UnitV()
            bad()
        case Prod(a, b):
            if isinstance(tree, tuple) and tree[0] == "pair":
                return PairV(_to_value(tree[1], a), _to_value(tree[2], b))
            if isinstance(tree, tuple) and tree[0] == "list" and len(tree[1]) == 2:
                return PairV(_to_value(tree[1][0], a), _to_value(tree[1][1], b))
            bad()
        case Variant():
            if isinstance(tree, tuple) and tree[0] == "con" and tree[1] in ty.labels:
                return InjV(tree[1], _to_value(tree[2], ty.case_type(tree[1])))
            bad()
        case Mu():
            layer = unfold_type(ty)
            if isinstance(tree, tuple) and tree[0] == "con":
                return RollV(_to_value(tree, layer), ty)
            shape = list_shape(ty)
            if shape and isinstance(tree, tuple) and tree[0] == "list":
                return _list_to_value(tree[1], ty, shape)
            bad()
    raise ShapeMismatch(f"no literal syntax for {show_type(ty)}")


def list_shape(mu: Type):
    """``(nil_label, cons_label, element_type, nonempty)`` for list-like inductive types."""
    if not isinstance(mu, Mu) or not isinstance(mu.body, Variant) or len(mu.body.cases) != 2:
        return None
    (l0, t0), (l1, t1) = mu.body.cases
    for (nil, nt), (cons, ct) in (((l0, t0), (l1, t1)), ((l1, t1), (l0, t0))):
        if (
            not has_free(nt, mu.var)
            and isinstance(ct, Prod)
            and ct.right == TyVar(mu.var)
            and not has_free(ct.left, mu.var)
        ):
            if nt == Unit():
                return nil, cons, ct.left, False
            if nt == ct.left:
                return nil, cons, ct.left, True
    return None


def _list_to_value(items, mu: Mu, shape) -> Value:
    nil, cons, elem, nonempty = shape
    if nonempty:
        if not items:
            raise ShapeMismatch("a non-empty list needs at least one element")
        v = RollV(InjV(nil, _to_value(items[-1], elem)), mu)
        items = items[:-1]
    else:
        v = RollV(InjV(nil, UnitV()), mu)
    for it in reversed(items):
        v = RollV(InjV(cons, PairV(_to_value(it, elem), v)), mu)
    return v


def format_value(v, ty: Optional[Type] = None, depth: int = 16) -> str:
    """Render a value in the literal syntax; codata is unfolded ``depth`` layers."""
    match v:
        case RealVec(data):
            if len(data) == 1 and (ty is None or ty == Real()):
                return format_number(data[0])
            return "[" + ", ".join(format_number(x) for x in data) + "]"
        case UnitV():
            return "()"
        case PairV(a, b):
            lt = ty.left if isinstance(ty, Prod) else None
            rt = ty.right if isinstance(ty, Prod) else None
            return f"({format_value(a, lt, depth)}, {format_value(b, rt, depth)})"
        case InjV(label, body):
            sub = ty.case_type(label) if isinstance(ty, Variant) else None
            if body == UnitV():
                return label
            return f"{label} {_paren(format_value(body, sub, depth))}"
        case RollV(body):
            mu = ty if isinstance(ty, Mu) else v.ty
            shape = list_shape(mu) if mu is not None else None
            if shape:
                items = _list_items(v, shape)
                if items is not None:
                    return "[" + ", ".join(format_value(x, shape[2], depth) for x in items) + "]"
            return format_value(body, unfold_type(mu) if mu is not None else None, depth)
        case CodataV():
            if depth <= 0:
                return "..."
            nu = ty if isinstance(ty, Nu) else v.ty
            layer = unfold_type(nu) if nu is not None else None
            return "⟪" + format_value(v.force(), layer, depth - 1) + "⟫"
        case FunV() | LinFunV():
            return "<function>"
    return repr(v)


def _list_items(v: RollV, shape):
    nil, cons, _, nonempty = shape
    items = []
    while True:
        layer = v.body
        if layer.label == nil:
            if nonempty:
                items.append(layer.body)
            return items
        items.append(layer.body.left)
        v = layer.body.right


def _paren(s: str) -> str:
    return s if re.fullmatch(r"[^\s]+", s) or s.startswith(("(", "[")) else f"({s})"
