"""Learned per-step validity models for discrete sequences."""
from .alphabet import (Alphabet, Dataset, LabeledExample, detokenize, expression_alphabet,
                       pad_to, smiles_alphabet, strip_pad, tokenize)
from .model import ModelConfig, ValidityModel, draw_posterior_samples

__version__ = "0.1.0"

__all__ = [
    "Alphabet", "Dataset", "LabeledExample", "detokenize", "expression_alphabet", "pad_to",
    "smiles_alphabet", "strip_pad", "tokenize", "ModelConfig", "ValidityModel",
    "draw_posterior_samples", "__version__",
]
