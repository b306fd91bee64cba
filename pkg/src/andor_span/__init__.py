"""Span programs for read-once AND-OR formulas."""

from .formula import (AND, OR, BinaryFormula, CapExceeded, Formula, FormulaError,
                      FormulaSyntaxError, evaluate, maximal_false_inputs, normalize_binary,
                      parse_bits, parse_formula)
from .span import SpanProgram, eval_span, primitive_gate_program, witness_report, worst_case_report
from .composition import build_program, place_checkpoints

__version__ = "0.1.0"
