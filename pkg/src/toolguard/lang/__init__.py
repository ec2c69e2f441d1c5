"""The guard DSL: parser, static checks, and sandboxed interpreter."""

from .ast import Module, to_dict
from .interp import (
    Budgets,
    DataApi,
    GuardContext,
    MockDataApi,
    MockRule,
    default_confirmation_matcher,
    evaluate,
    evaluate_function,
)
from .lexer import GuardSyntaxError
from .parser import parse
from .typecheck import Diagnostic, build_env, typecheck
from .values import MISSING, Verdict, marshal

__all__ = [
    "Budgets",
    "DataApi",
    "Diagnostic",
    "GuardContext",
    "GuardSyntaxError",
    "MISSING",
    "MockDataApi",
    "MockRule",
    "Module",
    "Verdict",
    "build_env",
    "default_confirmation_matcher",
    "evaluate",
    "evaluate_function",
    "marshal",
    "parse",
    "to_dict",
    "typecheck",
]
