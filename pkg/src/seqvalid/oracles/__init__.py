"""Exact validators and prefix-feasibility oracles."""
from .base import VALID, Verdict, invalid
from .bruteforce import (BruteForceOracle, as_index_validator, brute_force_prefix_oracle,
                         enumerate_valid, feasibility_table)
from .expressions import EvalBudget, eval_expression, is_valid_expression
from .smiles import (SmilesPrefixOracle, max_valence, padded_smiles_validator,
                     smiles_prefix_feasible, validate_smiles)

__all__ = [
    "VALID", "Verdict", "invalid", "BruteForceOracle", "as_index_validator",
    "brute_force_prefix_oracle", "enumerate_valid", "feasibility_table", "EvalBudget",
    "eval_expression", "is_valid_expression", "SmilesPrefixOracle", "max_valence",
    "padded_smiles_validator", "smiles_prefix_feasible", "validate_smiles",
]
