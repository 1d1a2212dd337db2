"""Exact local rank, analytic rank and partition rank of tensors over small finite fields."""

from .field import FieldElem, FieldSpec, make_field

__all__ = ["FieldElem", "FieldSpec", "make_field"]
__version__ = "0.1.0"
