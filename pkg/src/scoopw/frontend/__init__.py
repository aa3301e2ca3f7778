"""Parser, checker and CFG compiler for mini-SCOOP."""

from scoopw.frontend.checker import Diagnostic, check
from scoopw.frontend.compiler import CompileError, compile_program, compile_source, lint
from scoopw.frontend.parser import ParseError, parse, parse_file

__all__ = [
    "CompileError",
    "Diagnostic",
    "ParseError",
    "check",
    "compile_program",
    "compile_source",
    "lint",
    "parse",
    "parse_file",
]
