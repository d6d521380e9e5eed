"""A checker, evaluator and soundness harness for a capture-tracking calculus.

The pieces, bottom up: :mod:`capless.syntax` (de Bruijn core syntax),
:mod:`capless.ops` (shifting and substitution), :mod:`capless.surface`
(parser, resolver, printer), :mod:`capless.checker` (well-formedness,
subcapturing, subtyping, use-set synthesis), :mod:`capless.evaluator`
(store machine) and :mod:`capless.harness` (oracles, generator, soundness).
"""

from .checker import CheckError, Context, check_against, subcapture, subtype, synth
from .evaluator import Config, Store, run, step
from .surface import parse, parse_program, pretty, print_term, print_type, resolve

__version__ = "0.1.0"

__all__ = [
    "CheckError", "Context", "check_against", "subcapture", "subtype", "synth",
    "Config", "Store", "run", "step",
    "parse", "parse_program", "pretty", "print_term", "print_type", "resolve",
]
