"""Exact integer determinants by introspective remaindering and p-adic solving."""

from .bigmat import IntMatrix, SmithForm, bareiss_det, hadamard_bound, smith_form
from .introspect import DetOptions, DetReport, determinant, run_algorithm

__all__ = [
    "IntMatrix",
    "SmithForm",
    "bareiss_det",
    "hadamard_bound",
    "smith_form",
    "DetOptions",
    "DetReport",
    "determinant",
    "run_algorithm",
]

__version__ = "0.1.0"
