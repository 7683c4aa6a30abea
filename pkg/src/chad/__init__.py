"""Combinatory homomorphic automatic differentiation for a total functional language.

The package is organised by pipeline stage: ``source`` (types and typing of
programs), ``target`` (the linear target language), ``forward`` and
``reverse`` (the two transformations), ``evaluator``, ``derivcheck``
(derivative extraction and auditing) and ``cli`` (the ``chadc`` driver).
"""

from .derivcheck import (
    DerivReport,
    FlatPoint,
    check_derivative,
    finite_diff,
    flatten,
    jvp,
    transpose_check,
    unflatten,
    vjp,
)
from .errors import ChadError, InternalError
from .evaluator import Evaluator, evaluate
from .forward import fwd_transform, fwd_transform_split, fwd_type
from .reverse import rev_transform, rev_transform_split, rev_type
from .source import fmap_type, kind_check, type_check
from .syntax import parse_program, parse_term, print_program
from .target import lin_fmap, type_check_target

__version__ = "0.1.0"

__all__ = [
    "ChadError",
    "DerivReport",
    "Evaluator",
    "FlatPoint",
    "InternalError",
    "check_derivative",
    "evaluate",
    "finite_diff",
    "flatten",
    "fmap_type",
    "fwd_transform",
    "fwd_transform_split",
    "fwd_type",
    "jvp",
    "kind_check",
    "lin_fmap",
    "parse_program",
    "parse_term",
    "print_program",
    "rev_transform",
    "rev_transform_split",
    "rev_type",
    "transpose_check",
    "type_check",
    "type_check_target",
    "unflatten",
    "vjp",
]
