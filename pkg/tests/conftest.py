import sys
from pathlib import Path

import numpy as np
import pytest

from chad.cli import load
from chad.derivcheck import is_data_type
from chad.source import type_check

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def corpus_files():
    return sorted(CORPUS.glob("*.chad"))


def data_programs():
    """Corpus programs whose inputs and output are all data types."""
    out = []
    for path in corpus_files():
        prog = load(str(path))
        ty = type_check((), prog.gamma, prog.main)
        if is_data_type(ty) and all(is_data_type(s) for _, s in prog.gamma):
            out.append((path.stem, prog))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts, one line per criterion, after the run."""
    module = sys.modules.get("test_acceptance")
    outcomes = getattr(module, "OUTCOMES", None)
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(outcomes):
        terminalreporter.write_line(outcomes[number].line())
