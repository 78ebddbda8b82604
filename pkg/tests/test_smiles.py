import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqvalid.alphabet import SMILES_TOKENS, pad_to, smiles_alphabet, tokenize
from seqvalid.oracles import (SmilesPrefixOracle, max_valence, padded_smiles_validator,
                              smiles_prefix_feasible, validate_smiles)
from seqvalid.oracles.smiles import VALENCE_TABLE, min_completion, state_for

from conftest import automaton_disagreements


@pytest.mark.parametrize("text,valid", [
    ("CC", True), ("C(", False), ("O=C=O", True), ("FOF", True), ("F=O", False),
    ("C1CCCCC1", True), ("C1=CC=CC=C1", True), ("C1CC", False), ("C11", False),
    ("C1CCCC=1", True), ("C=1CCCC#1", False), ("C()", False), ("C(C)(C)(C)C", True),
    ("C(C)(C)(C)(C)C", False), ("=C", False), ("C=", False), ("C(=)", False),
    ("[NH4+]", True), ("[N+](=O)[O-]", True), ("[C@@H](F)(Cl)Br", True), ("[C", False),
    ("[]", False), ("C[H]", True), ("BrBr", True), ("BrC(Br)Br", True), ("Br=C", False),
    ("ClC", True), ("N#N", True), ("O#C", False), ("S(=O)(=O)(O)O", True), ("P(=O)(O)(O)O", True),
    ("C/C=C/C", True), ("C-C", True), ("", False), ("(C)", False), ("C)", False),
    ("C@", False), ("H", False), ("[H+]", True), ("C1CC1C2CC2", True),
])
def test_validate_examples(text, valid):
    assert validate_smiles(text).valid is valid, validate_smiles(text)


def test_reason_present_iff_invalid():
    assert validate_smiles("CC").reason is None
    assert "valence" in validate_smiles("F=O").reason


def test_valence_table_covers_alphabet():
    atoms = {"B", "C", "N", "O", "S", "P", "F", "I", "H", "Cl", "Br"}
    assert atoms <= set(VALENCE_TABLE)
    assert all(min(v) >= 1 for v in VALENCE_TABLE.values())
    assert max_valence("N", +1) == 4 and max_valence("O", -1) == 1 and max_valence("O", +1) == 3


def test_double_bonded_oxygen_blocks_carbon_and_fluorine():
    # an O reached by a double bond has no capacity left for C or F
    a = smiles_alphabet()
    T = 10
    oracle = SmilesPrefixOracle(a, T)
    for nxt in ("C", "F"):
        assert not oracle(tokenize("C=O" + nxt, a))
        assert not oracle(tokenize("O=O" + nxt, a))
    assert oracle(tokenize("C=O", a))


@pytest.mark.parametrize("prefix,remaining,feasible", [
    ("C(", 2, True), ("C(", 1, False), ("C)", 10, False), ("C)", 0, False),
    ("CC", 0, True), ("C1", 2, True), ("C1", 1, False), ("[", 2, True), ("[", 1, False),
])
def test_prefix_feasible_examples(prefix, remaining, feasible):
    a = smiles_alphabet()
    assert smiles_prefix_feasible(tokenize(prefix, a), remaining, a) is feasible


def test_prefix_consistency_on_complete_strings():
    a = smiles_alphabet()
    v = padded_smiles_validator(a)
    for text in ("CC", "C1CC1", "F=O", "C(", "O=C=O", "[NH4+]", "C1CC"):
        seq = pad_to(tokenize(text, a), 8, a)
        assert SmilesPrefixOracle(a, 8)(seq) == v(seq)


@pytest.mark.parametrize("tokens,T", [
    ("C O F ( ) = 1", 6),
    ("C N F Br ( ) = # 1 2", 5),
    ("C O [ ] H + - 1 ( ) =", 5),
    ("S C ( ) = # 1 2 3", 5),
    ("C O ( ) / = 1 2 3", 5),
])
def test_automaton_matches_exhaustive_search(tokens, T):
    bad, n = automaton_disagreements(tokens.split(), T)
    assert n > 1000
    assert bad == []


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(SMILES_TOKENS + ("_",)), min_size=1, max_size=20))
def test_prefix_monotone(tokens):
    a = smiles_alphabet()
    seq = tuple(a.index(t) for t in tokens)
    oracle = SmilesPrefixOracle(a, 20)
    verdicts = [oracle(seq[:t]) for t in range(len(seq) + 1)]
    for t in range(1, len(verdicts)):
        assert not (verdicts[t] and not verdicts[t - 1])


def test_min_completion_of_open_structures():
    assert min_completion(state_for(["C", "("])) == 2
    assert min_completion(state_for(["C"])) == 0
    assert min_completion(state_for(["C", "1"])) == 2   # "C1" + "C1"
