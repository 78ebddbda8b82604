"""Alphabets, tokenization, padding and labeled datasets."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence as Seq

import numpy as np

from .errors import NoPadToken, ParseError, TooLong, UnknownSymbol

Sequence = tuple[int, ...]

PAD_SYMBOL = "_"

EXPRESSION_TOKENS = tuple("1234567890") + tuple("+-*/%!") + tuple("=<>") + tuple("()")

SMILES_TOKENS = (
    "B", "C", "N", "O", "S", "P", "F", "I", "H", "Cl", "Br", "@",
    "=", "#", "/", "\\", "1", "2", "3", "4", "5", "6", "7", "8",
    "-", "+", "(", ")", "[", "]",
)


@dataclass(frozen=True)
class Alphabet:
    """Ordered token set.

    ``start_index`` equals ``size`` and is only ever used as a model input;
    it never appears in a sequence.
    """

    tokens: tuple[str, ...]
    pad_index: int | None = None
    name: str = ""
    _index: dict = field(init=False, repr=False, compare=False, hash=False)
    _by_first: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        toks = tuple(self.tokens)
        object.__setattr__(self, "tokens", toks)
        if any(not t for t in toks):
            raise ValueError("alphabet tokens must be non-empty")
        if len(set(toks)) != len(toks):
            raise ValueError("alphabet tokens must be distinct")
        if self.pad_index is not None and not 0 <= self.pad_index < len(toks):
            raise ValueError("pad_index out of range")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(toks)})
        by_first: dict[str, list[int]] = {}
        for i, t in enumerate(toks):
            by_first.setdefault(t[0], []).append(i)
        for k in by_first:
            by_first[k].sort(key=lambda i: -len(toks[i]))
        object.__setattr__(self, "_by_first", by_first)

    @property
    def size(self) -> int:
        return len(self.tokens)

    @property
    def start_index(self) -> int:
        return len(self.tokens)

    @property
    def pad(self) -> str | None:
        return None if self.pad_index is None else self.tokens[self.pad_index]

    def index(self, token: str) -> int:
        return self._index[token]

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __len__(self) -> int:
        return len(self.tokens)

    def symbol_indices(self) -> list[int]:
        """Indices of every emittable non-PAD token."""
        return [i for i in range(self.size) if i != self.pad_index]

    def with_pad(self, symbol: str = PAD_SYMBOL) -> "Alphabet":
        if self.pad_index is not None:
            return self
        return Alphabet(self.tokens + (symbol,), pad_index=len(self.tokens), name=self.name)

    def subset(self, tokens: Iterable[str], name: str = "") -> "Alphabet":
        toks = tuple(tokens)
        missing = [t for t in toks if t not in self._index and t != PAD_SYMBOL]
        if missing:
            raise ValueError(f"tokens not in alphabet: {missing}")
        pad = toks.index(self.pad) if self.pad is not None and self.pad in toks else None
        return Alphabet(toks, pad_index=pad, name=name or self.name)


def expression_alphabet() -> Alphabet:
    return Alphabet(EXPRESSION_TOKENS, name="expr")


def smiles_alphabet(pad: bool = True) -> Alphabet:
    a = Alphabet(SMILES_TOKENS, name="smiles")
    return a.with_pad() if pad else a


def tokenize(text: str, alphabet: Alphabet) -> Sequence:
    """Greedy longest-match segmentation of ``text`` into token indices."""
    out = []
    pos = 0
    toks = alphabet.tokens
    by_first = alphabet._by_first
    while pos < len(text):
        for i in by_first.get(text[pos], ()):
            if text.startswith(toks[i], pos):
                out.append(i)
                pos += len(toks[i])
                break
        else:
            raise UnknownSymbol(pos, text)
    return tuple(out)


def detokenize(seq: Seq[int], alphabet: Alphabet) -> str:
    toks = alphabet.tokens
    return "".join(toks[int(i)] for i in seq)


def pad_to(seq: Seq[int], T: int, alphabet: Alphabet) -> Sequence:
    if alphabet.pad_index is None:
        raise NoPadToken(f"alphabet {alphabet.name or alphabet.tokens!r} has no PAD token")
    if len(seq) > T:
        raise TooLong(f"sequence of length {len(seq)} exceeds T={T}")
    return tuple(int(i) for i in seq) + (alphabet.pad_index,) * (T - len(seq))


def strip_pad(seq: Seq[int], alphabet: Alphabet) -> Sequence:
    seq = tuple(int(i) for i in seq)
    if alphabet.pad_index is None:
        return seq
    end = len(seq)
    while end and seq[end - 1] == alphabet.pad_index:
        end -= 1
    return seq[:end]


def has_internal_pad(seq: Seq[int], alphabet: Alphabet) -> bool:
    """True when PAD occurs anywhere other than a contiguous suffix."""
    if alphabet.pad_index is None:
        return False
    return alphabet.pad_index in strip_pad(seq, alphabet)


@dataclass(frozen=True)
class LabeledExample:
    sequence: Sequence
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass
class Dataset:
    """Fixed-length labeled sequences over one alphabet.

    Stored as an ``(N, T)`` integer array plus an ``(N,)`` label array so the
    model can consume slices directly.
    """

    sequences: np.ndarray
    labels: np.ndarray
    alphabet: Alphabet

    def __post_init__(self):
        self.sequences = np.asarray(self.sequences, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.sequences.ndim != 2:
            if self.sequences.size == 0:
                self.sequences = self.sequences.reshape(0, 0)
            else:
                raise ValueError("sequences must be a 2-d array")
        if len(self.labels) != len(self.sequences):
            raise ValueError("one label per sequence required")
        if self.labels.size and not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        if self.sequences.size and (self.sequences.min() < 0 or self.sequences.max() >= self.alphabet.size):
            raise ValueError("token index out of range for alphabet")

    @classmethod
    def from_examples(cls, examples: Iterable[LabeledExample], alphabet: Alphabet, T: int | None = None) -> "Dataset":
        examples = list(examples)
        if not examples:
            return cls(np.zeros((0, T or 0), dtype=np.int64), np.zeros(0, dtype=np.int64), alphabet)
        lengths = {len(e.sequence) for e in examples}
        if len(lengths) != 1:
            raise ValueError(f"all sequences must share one length, got {sorted(lengths)}")
        return cls(np.array([e.sequence for e in examples]), np.array([e.label for e in examples]), alphabet)

    @property
    def T(self) -> int:
        return self.sequences.shape[1]

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, idx) -> "Dataset":
        if isinstance(idx, (int, np.integer)):
            idx = [idx]
        return Dataset(self.sequences[idx], self.labels[idx], self.alphabet)

    def examples(self) -> list[LabeledExample]:
        return [LabeledExample(tuple(int(i) for i in s), int(y)) for s, y in zip(self.sequences, self.labels)]

    def concat(self, other: "Dataset") -> "Dataset":
        if len(self) == 0:
            return other
        if len(other) == 0:
            return self
        return Dataset(np.concatenate([self.sequences, other.sequences]),
                       np.concatenate([self.labels, other.labels]), self.alphabet)

    def valid_fraction(self) -> float:
        return float(self.labels.mean()) if len(self) else 0.0


# --- text file formats -----------------------------------------------------

def save_alphabet(alphabet: Alphabet, path) -> None:
    lines = [t for i, t in enumerate(alphabet.tokens) if i != alphabet.pad_index]
    if alphabet.pad is not None:
        lines.append(f"!pad {alphabet.pad}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_alphabet(path) -> Alphabet:
    tokens = []
    pad = None
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line:
            continue
        if line.startswith("!") and " " in line:   # tokens never contain spaces
            parts = line.split()
            if parts[0] != "!pad" or len(parts) != 2:
                raise ParseError(path, lineno, f"unknown directive {line!r}")
            pad = parts[1]
            continue
        tokens.append(line)
    if pad is not None:
        if pad in tokens:
            return Alphabet(tuple(tokens), pad_index=tokens.index(pad), name=Path(path).stem)
        tokens.append(pad)
        return Alphabet(tuple(tokens), pad_index=len(tokens) - 1, name=Path(path).stem)
    return Alphabet(tuple(tokens), name=Path(path).stem)


def format_dataset(dataset: Dataset) -> str:
    lines = [f"# T={dataset.T} C={dataset.alphabet.size}"]
    for seq, y in zip(dataset.sequences, dataset.labels):
        lines.append(f"{int(y)}\t{detokenize(seq, dataset.alphabet)}")
    return "\n".join(lines) + "\n"


def save_dataset(dataset: Dataset, path) -> None:
    Path(path).write_text(format_dataset(dataset), encoding="utf-8")


def load_dataset(path, alphabet: Alphabet, T: int | None = None) -> Dataset:
    seqs, labels = [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line or line.startswith("#"):
            continue
        label, sep, text = line.partition("\t")
        if not sep:
            raise ParseError(path, lineno, "expected 'label<TAB>sequence'")
        if label not in ("0", "1"):
            raise ParseError(path, lineno, f"label must be 0 or 1, got {label!r}")
        try:
            seq = tokenize(text, alphabet)
        except UnknownSymbol as exc:
            raise ParseError(path, lineno, str(exc)) from None
        if T is not None and len(seq) != T:
            if alphabet.pad_index is None or len(seq) > T:
                raise ParseError(path, lineno, f"sequence length {len(seq)} != T={T}")
            seq = pad_to(seq, T, alphabet)
        seqs.append(seq)
        labels.append(int(label))
    if not seqs:
        return Dataset(np.zeros((0, T or 0), dtype=np.int64), np.zeros(0, dtype=np.int64), alphabet)
    if len({len(s) for s in seqs}) != 1:
        raise ParseError(path, 0, "sequences have differing lengths; pass T to pad")
    return Dataset(np.array(seqs), np.array(labels), alphabet)
