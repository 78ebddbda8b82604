"""Sampling from learned and exact policies, evaluation and masked decoding."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence as Seq

import numpy as np

from .alphabet import Alphabet, Dataset, Sequence
from .datagen import sample_uniform
from .errors import DeadEnd, EmptyRow
from .model import ValidityModel, sigmoid

DEFAULT_TAUS = (0.005, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5, 1.0)
GREEDY_TAU = 1e-6       # at or below this temperature sampling is argmax, lowest index on ties


# --- prefix policies ----------------------------------------------------------
#
# A policy walks the prefix tree: ``start()`` gives the empty-prefix state,
# ``allowed(state, t)`` a boolean row over the alphabet for position ``t``
# (0-based) and ``advance(state, token)`` the successor state.

class OraclePolicy:
    """Feasible next tokens from a prefix oracle over index tuples (memoised)."""

    def __init__(self, oracle: Callable[[Sequence], bool], alphabet: Alphabet):
        self.oracle = oracle
        self.C = alphabet.size
        self._memo: dict = {}

    def start(self):
        return ()

    def allowed(self, state, t: int) -> np.ndarray:
        hit = self._memo.get(state)
        if hit is None:
            hit = np.array([bool(self.oracle(state + (c,))) for c in range(self.C)])
            self._memo[state] = hit
        return hit

    def advance(self, state, token: int):
        return state + (int(token),)


class SmilesPolicy:
    """Feasible next tokens from the incremental SMILES automaton."""

    def __init__(self, oracle):
        self.oracle = oracle

    def start(self):
        return self.oracle.state(())

    def allowed(self, state, t: int) -> np.ndarray:
        return np.array(self.oracle.allowed_next(state, t))

    def advance(self, state, token: int):
        return self.oracle.advance(state, int(token))


class ModelPolicy:
    """Tokens the deterministic model scores at ``y >= 0.5``."""

    def __init__(self, model: ValidityModel):
        self.model = model

    def start(self):
        return self.model.initial_state(1), self.model.start_index

    def allowed(self, state, t: int) -> np.ndarray:
        (h, c), prev = state
        logits, _ = self.model.step((h, c), np.array([prev]))
        return logits[0] >= 0

    def advance(self, state, token: int):
        (h, c), prev = state
        _, new = self.model.step((h, c), np.array([prev]))
        return new, int(token)


class PermissivePolicy:
    def __init__(self, alphabet: Alphabet):
        self.C = alphabet.size

    def start(self):
        return None

    def allowed(self, state, t: int) -> np.ndarray:
        return np.ones(self.C, dtype=bool)

    def advance(self, state, token: int):
        return None


# --- sampling -----------------------------------------------------------------

def _draw_rows(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw per row of the probability matrix ``p``."""
    cdf = np.cumsum(p, axis=1)
    idx = (cdf < u[:, None] * cdf[:, -1:]).sum(axis=1)
    return np.minimum(idx, p.shape[1] - 1)


def boltzmann_step(y: np.ndarray, tau: float):
    """Policy probabilities ``softmax(y / tau)`` row-wise."""
    if tau <= 0:
        raise ValueError("tau must be > 0")
    z = y / tau
    z = z - z.max(axis=1, keepdims=True)
    p = np.exp(z)
    return p / p.sum(axis=1, keepdims=True)


def boltzmann_sample(model: ValidityModel, tau: float, n: int, seed: int = 0):
    """Sample ``n`` sequences from ``pi(c) ~ exp(y(c | prefix) / tau)``.

    Returns ``(sequences, log_probs)`` where ``log_probs`` is the policy
    log-probability of each sequence.
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    T = model.config.seq_len
    rng = np.random.default_rng(seed)
    out = np.empty((n, T), dtype=np.int64)
    logp = np.zeros(n)
    state = model.initial_state(n)
    prev = np.full(n, model.start_index)
    rows = np.arange(n)
    for t in range(T):
        logits, state = model.step(state, prev)
        y = sigmoid(logits.astype(np.float64))
        if tau <= GREEDY_TAU:
            tok = np.argmax(y, axis=1)
        else:
            p = boltzmann_step(y, tau)
            tok = _draw_rows(p, rng.random(n))
            with np.errstate(divide="ignore"):
                logp += np.log(p[rows, tok])
        out[:, t] = tok
        prev = tok
    return out, logp


def ground_truth_sample(policy, alphabet: Alphabet, T: int, n: int, seed: int = 0):
    """Uniform choice among feasible tokens at every step.

    Returns ``(sequences, log_probs)``. Raises DeadEnd when no token is
    feasible at the first step.
    """
    rng = np.random.default_rng(seed)
    out = np.empty((n, T), dtype=np.int64)
    logp = np.zeros(n)
    for i in range(n):
        state = policy.start()
        for t in range(T):
            ok = np.flatnonzero(policy.allowed(state, t))
            if len(ok) == 0:
                raise DeadEnd("no valid sequences exist" if t == 0
                              else f"prefix oracle inconsistent: dead end at step {t}")
            tok = int(ok[rng.integers(len(ok))])
            logp[i] -= math.log(len(ok))
            out[i, t] = tok
            state = policy.advance(state, tok)
    return out, logp


def estimate_entropy(log_probs) -> float:
    """Monte Carlo policy entropy ``-mean log p`` in nats."""
    log_probs = np.asarray(log_probs, dtype=np.float64)
    if log_probs.size == 0:
        raise ValueError("need at least one sample")
    return float(-log_probs.mean())


def entropy_standard_error(log_probs) -> float:
    log_probs = np.asarray(log_probs, dtype=np.float64)
    if log_probs.size < 2:
        return float("inf")
    return float(log_probs.std(ddof=1) / math.sqrt(log_probs.size))


# --- exact quantities on tiny spaces --------------------------------------------

def exact_model_policy(model: ValidityModel, tau: float, limit: int = 10 ** 6):
    """Every length-T sequence with its probability under the Boltzmann policy.

    Level-by-level expansion of the prefix tree; only for tiny spaces.
    Returns ``(sequences, probabilities)``.
    """
    C, T = model.config.vocab_size, model.config.seq_len
    if C ** T > limit:
        raise ValueError(f"{C}^{T} sequences exceed the limit of {limit}")
    seqs = np.zeros((1, 0), dtype=np.int64)
    probs = np.ones(1)
    state = model.initial_state(1)
    prev = np.array([model.start_index])
    for t in range(T):
        logits, (h, c) = model.step(state, prev)
        y = sigmoid(logits.astype(np.float64))
        if tau <= GREEDY_TAU:
            p = np.zeros_like(y)
            p[np.arange(len(y)), np.argmax(y, axis=1)] = 1.0
        else:
            p = boltzmann_step(y, tau)
        m = len(seqs)
        probs = (probs[:, None] * p).reshape(-1)
        seqs = np.concatenate([np.repeat(seqs, C, axis=0), np.tile(np.arange(C), m)[:, None]], axis=1)
        state = (np.repeat(h, C, axis=0), np.repeat(c, C, axis=0))
        prev = seqs[:, -1]
    return seqs, probs


def exact_entropy(probs) -> float:
    p = np.asarray(probs, dtype=np.float64)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def exact_ground_truth_entropy(policy, T: int) -> float:
    """Entropy of the uniform-over-feasible policy by recursion over the prefix tree."""
    def visit(state, t):
        if t == T:
            return 0.0
        ok = np.flatnonzero(policy.allowed(state, t))
        if len(ok) == 0:
            raise DeadEnd(f"dead end at step {t}")
        sub = sum(visit(policy.advance(state, c), t + 1) for c in ok)
        return math.log(len(ok)) + sub / len(ok)
    return visit(policy.start(), 0)


# --- evaluation --------------------------------------------------------------------

@dataclass
class CurvePoint:
    tau: float
    validity: float
    entropy: float
    n: int


@dataclass
class Coverage:
    f_plus: float
    f_plus_se: float
    N_plus: float
    entropy: float
    N_model: float
    validity: float


@dataclass
class EvalReport:
    points: list = field(default_factory=list)
    auc: float = 0.0
    coverage: Coverage | None = None


def vh_auc(validity: Seq[float], entropy: Seq[float]) -> float:
    """Trapezoid area under entropy as a function of validity.

    Points sharing a validity value are averaged; fewer than two distinct
    validity values give 0.
    """
    v = np.asarray(validity, dtype=np.float64)
    h = np.asarray(entropy, dtype=np.float64)
    xs, inv = np.unique(v, return_inverse=True)
    if len(xs) < 2:
        return 0.0
    ys = np.bincount(inv, weights=h) / np.bincount(inv)
    return float(np.trapezoid(ys, xs))


def validity_of(X: np.ndarray, validator: Callable[[Sequence], bool]) -> np.ndarray:
    return np.array([bool(validator(tuple(row))) for row in np.asarray(X).tolist()])


def validity_entropy_curve(model: ValidityModel, validator: Callable[[Sequence], bool],
                           taus: Seq[float] = DEFAULT_TAUS, n: int = 1000, seed: int = 0) -> EvalReport:
    if len(taus) == 0:
        raise ValueError("temperature grid is empty")
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise ValueError("temperature grid must be ascending")
    points = []
    for j, tau in enumerate(taus):
        X, logp = boltzmann_sample(model, tau, n, seed + j)
        points.append(CurvePoint(float(tau), float(validity_of(X, validator).mean()),
                                 estimate_entropy(logp), n))
    auc = vh_auc([p.validity for p in points], [p.entropy for p in points])
    return EvalReport(points, auc)


def estimate_f_plus(alphabet: Alphabet, T: int, validator, n: int, seed: int = 0):
    """Uniform Monte Carlo estimate of the valid fraction and its standard error."""
    X = sample_uniform(alphabet, T, n, seed)
    f = float(validity_of(X, validator).mean())
    return f, math.sqrt(max(f * (1 - f), 0.0) / n)


def estimate_coverage(model: ValidityModel, validator, tau: float, n: int, alphabet: Alphabet,
                      T: int | None = None, seed: int = 0) -> Coverage:
    T = model.config.seq_len if T is None else T
    f, se = estimate_f_plus(alphabet, T, validator, n, seed)
    X, logp = boltzmann_sample(model, tau, n, seed + 1)
    H = estimate_entropy(logp)
    S = len(alphabet.symbol_indices())
    return Coverage(f, se, f * float(S) ** T, H, math.exp(H), float(validity_of(X, validator).mean()))


def model_accuracy(model: ValidityModel, dataset: Dataset, batch: int = 1024) -> float:
    """Fraction of examples whose deterministic prediction matches the label."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    hits = 0
    for s in range(0, len(dataset), batch):
        pred = model.predict_valid(dataset.sequences[s:s + batch])
        hits += int((pred.astype(np.int64) == dataset.labels[s:s + batch]).sum())
    return hits / len(dataset)


# --- masked decoding -------------------------------------------------------------

@dataclass
class DecodeResult:
    sequence: Sequence
    fallbacks: list          # step indices where the mask removed every option


def mask_decode(rows, masker, seed: int = 0, rng: np.random.Generator | None = None) -> DecodeResult:
    """Sample one token per weight row after masking with ``masker.allowed``.

    When the mask zeroes every positive weight the step falls back to the
    unmasked row and is recorded in ``fallbacks``.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    state = masker.start()
    out, flagged = [], []
    for t, row in enumerate(rows):
        w = np.asarray(row, dtype=np.float64)
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError(f"row {t} must hold finite non-negative weights")
        if not np.any(w > 0):
            raise EmptyRow(f"row {t} has no positive weight")
        masked = w * masker.allowed(state, t)
        if not np.any(masked > 0):
            flagged.append(t)
            masked = w
        tok = int(_draw_rows(masked[None, :], np.array([rng.random()]))[0])
        out.append(tok)
        state = masker.advance(state, tok)
    return DecodeResult(tuple(out), flagged)
