"""Exhaustive prefix feasibility and enumeration of valid sequences."""
from __future__ import annotations

import itertools
from typing import Callable, Hashable, Iterable, Sequence as Seq

from ..alphabet import Alphabet, Sequence
from ..errors import TooLargeToEnumerate

ENUMERATION_LIMIT = 10 ** 7

Validator = Callable[[Sequence], bool]


def _check_size(n_symbols: int, length: int, limit: int = ENUMERATION_LIMIT) -> None:
    if length > 0 and n_symbols ** length > limit:
        raise TooLargeToEnumerate(f"{n_symbols}^{length} sequences exceed the limit of {limit}")


class BruteForceOracle:
    """Prefix feasibility by exhaustive suffix search.

    ``validator`` judges complete length-``T`` index sequences. When the
    alphabet has a PAD token the suffix may also be padding, so a prefix that
    is already complete is feasible. Results are memoised on ``state_key``
    (default: the prefix itself), so repeated queries share work; the memo is
    per instance and callers sharing an instance across threads should guard it.
    """

    def __init__(self, alphabet: Alphabet, T: int, validator: Validator,
                 state_key: Callable[[Sequence], Hashable] | None = None,
                 limit: int = ENUMERATION_LIMIT):
        self.alphabet = alphabet
        self.T = T
        self.validator = validator
        self.state_key = state_key
        self.limit = limit
        self.symbols = alphabet.symbol_indices()
        self.pad = alphabet.pad_index
        self._memo: dict = {}
        self.evaluations = 0

    def _complete(self, prefix: Sequence) -> bool:
        self.evaluations += 1
        if self.pad is None:
            return bool(self.validator(prefix))
        return bool(self.validator(prefix + (self.pad,) * (self.T - len(prefix))))

    def _search(self, prefix: Sequence) -> bool:
        t = len(prefix)
        if t == self.T:
            return self._complete(prefix)
        key = prefix if self.state_key is None else self.state_key(prefix)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if self.pad is not None and self._complete(prefix):
            result = True
        else:
            result = any(self._search(prefix + (c,)) for c in self.symbols)
        self._memo[key] = result
        return result

    def __call__(self, prefix: Seq[int]) -> bool:
        prefix = tuple(int(i) for i in prefix)
        if len(prefix) > self.T:
            return False
        if self.pad is not None and self.pad in prefix:
            end = prefix.index(self.pad)
            if any(i != self.pad for i in prefix[end:]):
                return False
            return self._complete(prefix[:end])
        if self.state_key is None:
            _check_size(len(self.symbols), self.T - len(prefix), self.limit)
        return self._search(prefix)


def brute_force_prefix_oracle(prefix: Seq[int], T: int, validator: Validator, alphabet: Alphabet) -> bool:
    """One-shot exact prefix feasibility; see :class:`BruteForceOracle`."""
    return BruteForceOracle(alphabet, T, validator)(prefix)


def enumerate_valid(alphabet: Alphabet, T: int, validator: Validator,
                    collect: bool = False, limit: int = ENUMERATION_LIMIT):
    """Count (and optionally collect) every valid length-``T`` sequence.

    Enumerates over the non-PAD symbols, i.e. the space the samplers draw from.
    Returns ``(count, set_or_None)``.
    """
    symbols = alphabet.symbol_indices()
    _check_size(len(symbols), T, limit)
    if T == 0:
        ok = bool(validator(()))
        return int(ok), ({()} if ok else set()) if collect else None
    found = set() if collect else None
    count = 0
    for seq in itertools.product(symbols, repeat=T):
        if validator(seq):
            count += 1
            if collect:
                found.add(seq)
    return count, found


def feasibility_table(alphabet: Alphabet, T: int, validator: Validator,
                      limit: int = ENUMERATION_LIMIT) -> dict:
    """Exact feasibility of every prefix of length <= ``T``, by exhaustive search.

    Builds the whole prefix tree bottom-up, so every length-``T`` string is
    judged by ``validator``. With a PAD token a prefix is also feasible when
    padding it out validates.
    """
    symbols = alphabet.symbol_indices()
    pad = alphabet.pad_index
    _check_size(len(symbols), T, limit)
    table: dict = {}

    def visit(prefix):
        if len(prefix) == T:
            ok = bool(validator(prefix))
        else:
            ok = False
            for c in symbols:
                if visit(prefix + (c,)):
                    ok = True
            if not ok and pad is not None:
                ok = bool(validator(prefix + (pad,) * (T - len(prefix))))
        table[prefix] = ok
        return ok

    visit(())
    return table


def as_index_validator(alphabet: Alphabet, text_validator: Callable[[str], object]) -> Validator:
    """Adapt a text validator (returning a Verdict or bool) to index sequences."""
    toks = alphabet.tokens
    pad = alphabet.pad_index

    def check(seq: Iterable[int]) -> bool:
        parts = []
        seen_pad = False
        for i in seq:
            if i == pad:
                seen_pad = True
                continue
            if seen_pad:
                return False
            parts.append(toks[i])
        return bool(text_validator("".join(parts)))

    return check
