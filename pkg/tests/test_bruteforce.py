import pytest

from seqvalid.alphabet import expression_alphabet, smiles_alphabet, tokenize
from seqvalid.errors import TooLargeToEnumerate
from seqvalid.oracles import (BruteForceOracle, as_index_validator, brute_force_prefix_oracle,
                              enumerate_valid, is_valid_expression, padded_smiles_validator,
                              validate_smiles)

from conftest import expr_task


def test_expression_prefix_examples():
    a = expression_alphabet()
    v = as_index_validator(a, is_valid_expression)
    assert brute_force_prefix_oracle(tokenize("1+", a), 3, v, a)
    assert not brute_force_prefix_oracle(tokenize("((", a), 3, v, a)
    assert brute_force_prefix_oracle(tokenize("1+1", a), 3, v, a)
    assert not brute_force_prefix_oracle(tokenize("1/0", a), 3, v, a)


def test_guard():
    a = expression_alphabet()
    v = as_index_validator(a, is_valid_expression)
    with pytest.raises(TooLargeToEnumerate):
        brute_force_prefix_oracle((), 6, v, a)
    with pytest.raises(TooLargeToEnumerate):
        enumerate_valid(a, 6, v)


def test_enumerate_tiny_expression_space():
    a, v = expr_task("1+")
    count, found = enumerate_valid(a, 3, v, collect=True)
    assert count == 4
    text = {"".join(a.tokens[i] for i in s) for s in found}
    assert text == {"111", "1+1", "+11", "++1"}
    assert enumerate_valid(a, 0, v)[0] == 0


def test_enumerate_single_carbon():
    a = smiles_alphabet(pad=False).subset(["C"])
    v = as_index_validator(a, validate_smiles)
    assert enumerate_valid(a, 2, v)[0] == 1


def test_memo_on_state_key_agrees():
    a, v = expr_task("12+*()")
    plain = BruteForceOracle(a, 5, v)
    keyed = BruteForceOracle(a, 5, v, state_key=lambda p: p)
    for prefix in [(), (0,), (4,), (4, 4), (0, 2), (5,)]:
        assert plain(prefix) == keyed(prefix)


def test_padded_suffix_counts_as_completion():
    a = smiles_alphabet().subset(["C", "(", ")", "_"])
    v = padded_smiles_validator(a)
    o = BruteForceOracle(a, 4, v)
    C, P = a.index("C"), a.pad_index
    assert o((C,))
    assert o((C, P))
    assert not o((C, P, C))
    assert not o((P,))
