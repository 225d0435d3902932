"""Hybrid QAOA / greedy pipeline for loan-collection action selection."""

__version__ = "0.1.0"

from .model import (
    ActionAssignment,
    ProblemInstance,
    bank_profit,
    decode_bits,
    dpo_count,
    encode_bits,
    objective,
    provision,
)

__all__ = [
    "ActionAssignment",
    "ProblemInstance",
    "bank_profit",
    "decode_bits",
    "dpo_count",
    "encode_bits",
    "objective",
    "provision",
]
