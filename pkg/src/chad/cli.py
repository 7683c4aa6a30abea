"""The ``chadc`` command-line driver.

Commands: ``check``, ``transform``, ``eval``, ``grad``, ``audit`` and ``size``.
Exit status is 0 on success, 1 for errors in the user's program or inputs
(and failed audits), 2 for internal errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import derivcheck
from .errors import ChadError, NotADataType, ParseError, ShapeMismatch
from .evaluator import Evaluator
from .forward import fwd_transform, fwd_transform_split
from .generate import random_point
from .pretty import format_number, pretty, sexpr
from .reverse import rev_transform, rev_transform_split
from .source import kind_check, type_check
from .syntax import ProgramFile, format_value, parse_inputs, parse_program
from .terms import term_size
from .types import show_type
from .values import BIPRODUCT, LIFTED

AUDIT_POINTS = 10


@dataclass
class Config:
    lsum: str = LIFTED
    split: bool = False
    h: float = 1e-5
    rel_tol: float = 1e-4
    abs_tol: float = 1e-6
    seed: int = 0
    depth: int = 16


class UsageError(ChadError):
    pass


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgParser(prog="chadc", description="Differentiate programs by CHAD transformation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgParser)

    def common(p, *, mode=False, lsum=False):
        if mode:
            p.add_argument("--mode", choices=("fwd", "rev"), default="fwd")
            p.add_argument("--split", action="store_true", help="use the transformation without sharing")
        if lsum:
            p.add_argument("--lsum", choices=(BIPRODUCT, LIFTED), default=LIFTED)

    p = sub.add_parser("check", help="type-check a program and print its type")
    p.add_argument("path")

    p = sub.add_parser("transform", help="print the transformed program")
    p.add_argument("path")
    common(p, mode=True)
    p.add_argument("--emit", choices=("pretty", "sexpr"), default="pretty")

    p = sub.add_parser("eval", help="run a program on literal inputs")
    p.add_argument("path")
    p.add_argument("--at", required=True, help="input value(s)")
    p.add_argument("--depth", type=int, default=16, help="observation depth for coinductive results")
    common(p, lsum=True)

    p = sub.add_parser("grad", help="print a JVP (--mode fwd) or VJP (--mode rev) at a point")
    p.add_argument("path")
    p.add_argument("--at", required=True)
    p.add_argument("--tan", help="flattened input tangent (default: 1 for a single coordinate)")
    p.add_argument("--cot", help="flattened output cotangent (default: 1 for a single coordinate)")
    common(p, mode=True, lsum=True)

    p = sub.add_parser("audit", help="compare derivatives with finite differences")
    p.add_argument("path", help="a program file or a directory of them")
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--rel-tol", type=float, default=1e-4)
    p.add_argument("--abs-tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    common(p, lsum=True)

    p = sub.add_parser("size", help="print (source size, transformed size, ratio)")
    p.add_argument("path", help="a program file or a directory of them")
    common(p, mode=True)
    return parser


def load(path: str) -> ProgramFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    prog = parse_program(text, path)
    for _, ty in prog.gamma:
        kind_check((), ty)
    return prog


def program_files(path: str) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        return sorted(p.glob("*.chad"))
    if not p.exists():
        raise UsageError(f"no such file or directory: {path}")
    return [p]


def parse_coords(text: str) -> np.ndarray:
    text = text.strip()
    if text.startswith("["):
        body = text[1:-1] if text.endswith("]") else None
        if body is None:
            raise ParseError(f"malformed coordinate list {text!r}")
        parts = [s for s in body.split(",") if s.strip()]
    else:
        parts = [text]
    try:
        return np.array([float(s) for s in parts])
    except ValueError:
        raise ParseError(f"malformed coordinate list {text!r}") from None


def format_coords(xs) -> str:
    return "[" + ", ".join(format_number(x) for x in xs) + "]"


def transform(prog: ProgramFile, mode: str, split: bool):
    if mode == "fwd":
        return fwd_transform_split(prog.gamma, prog.main) if split else fwd_transform(prog.gamma, prog.main)
    return rev_transform_split(prog.gamma, prog.main) if split else rev_transform(prog.gamma, prog.main)


# commands ------------------------------------------------------------------------------


def cmd_check(args, out) -> int:
    prog = load(args.path)
    ty = type_check((), prog.gamma, prog.main)
    print(show_type(ty, prog.printing_aliases()), file=out)
    return 0


def cmd_transform(args, out) -> int:
    prog = load(args.path)
    result = transform(prog, args.mode, args.split)
    aliases = prog.printing_aliases()

    def show(t):
        return sexpr(t) if args.emit == "sexpr" else pretty(t, aliases)

    if args.split:
        primal, linear = result
        print(f"primal = {show(primal)}", file=out)
        print(f"{'tangent' if args.mode == 'fwd' else 'cotangent'} = {show(linear)}", file=out)
    else:
        print(show(result), file=out)
    return 0


def cmd_eval(args, out) -> int:
    prog = load(args.path)
    ty = type_check((), prog.gamma, prog.main)
    env = parse_inputs(args.at, prog.gamma)
    value = Evaluator(args.lsum).eval(prog.main, env)
    print(format_value(value, ty, args.depth), file=out)
    return 0


def cmd_grad(args, out) -> int:
    prog = load(args.path)
    env = parse_inputs(args.at, prog.gamma)
    if args.mode == "fwd":
        if args.cot is not None:
            raise UsageError("--cot belongs to --mode rev")
        n_in = len(derivcheck.flatten_env(prog.gamma, env).coords)
        tan = _default_direction(args.tan, n_in, "--tan")
        res = derivcheck.jvp(prog.gamma, prog.main, env, tan, approach=args.lsum, split=args.split)
    else:
        if args.tan is not None:
            raise UsageError("--tan belongs to --mode fwd")
        primal = Evaluator(args.lsum).eval(prog.main, env)
        n_out = len(derivcheck.flatten(primal).coords)
        cot = _default_direction(args.cot, n_out, "--cot")
        res = derivcheck.vjp(prog.gamma, prog.main, env, cot, approach=args.lsum, split=args.split)
    print(format_coords(res), file=out)
    return 0


def _default_direction(text: Optional[str], n: int, flag: str) -> np.ndarray:
    if text is not None:
        coords = parse_coords(text)
        if len(coords) != n:
            raise ShapeMismatch(f"{flag} has {len(coords)} coordinates, expected {n}")
        return coords
    if n != 1:
        raise UsageError(f"{flag} is required when there are {n} coordinates")
    return np.ones(1)


def audit_file(path: Path, cfg: Config) -> list[str]:
    prog = load(str(path))
    name = path.name
    try:
        for _, ty in prog.gamma:
            derivcheck.require_data_type(ty)
        derivcheck.require_data_type(type_check((), prog.gamma, prog.main))
    except NotADataType as e:
        return [json.dumps({"kind": "skipped", "program": name, "reason": str(e)})]
    rng = np.random.default_rng(cfg.seed)
    points = [random_point(prog.gamma, rng) for _ in range(AUDIT_POINTS)]
    report = derivcheck.check_derivative(
        prog.gamma, prog.main, points, program=name, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, h=cfg.h,
        approach=cfg.lsum,
    )
    return report.to_lines()


def cmd_audit(args, out) -> int:
    cfg = Config(lsum=args.lsum, h=args.h, rel_tol=args.rel_tol, abs_tol=args.abs_tol, seed=args.seed)
    files = program_files(args.path)
    with ThreadPoolExecutor() as pool:
        results = list(pool.map(lambda p: audit_file(p, cfg), files))
    failed = False
    for lines in results:
        for line in lines:
            print(line, file=out)
            failed |= '"verdict": "fail"' in line
    return 1 if failed else 0


def size_row(prog: ProgramFile, mode: str, split: bool) -> tuple[int, int, float]:
    src = term_size(prog.main)
    result = transform(prog, mode, split)
    tgt = sum(term_size(t) for t in result) if split else term_size(result)
    return src, tgt, tgt / src


def cmd_size(args, out) -> int:
    worst = 0.0
    for path in program_files(args.path):
        src, tgt, ratio = size_row(load(str(path)), args.mode, args.split)
        worst = max(worst, ratio)
        print(f"{path.name}: ({src}, {tgt}, {ratio:.3f})", file=out)
    print(f"max ratio: {worst:.3f}", file=out)
    return 0


COMMANDS = {
    "check": cmd_check,
    "transform": cmd_transform,
    "eval": cmd_eval,
    "grad": cmd_grad,
    "audit": cmd_audit,
    "size": cmd_size,
}


def run(argv: list[str], out=None, err=None) -> int:
    """Run one command; returns the exit status instead of exiting."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except ChadError as e:
        print(f"chadc: error: {e}", file=err)
        return 1
    except RecursionError:
        print("chadc: internal error: recursion limit exceeded", file=err)
        return 2
    except Exception as e:  # noqa: BLE001 - anything else is a bug in the pipeline
        print(f"chadc: internal error: {type(e).__name__}: {e}", file=err)
        traceback.print_exc(file=err)
        return 2


def main(argv: Optional[list[str]] = None) -> None:
    sys.exit(run(sys.argv[1:] if argv is None else argv))
