"""Training-set construction: uniform sampling, perturbation, active acquisition."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence as Seq

import numpy as np
from scipy.special import entr

from .alphabet import Alphabet, Dataset, Sequence, pad_to, strip_pad
from .errors import CorpusInvalidEntry
from .model import ValidityModel, draw_posterior_samples, sigmoid, stack_draws


@dataclass(frozen=True)
class AugmentationConfig:
    gamma: float = 0.05
    exclude_original: bool = True

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")


@dataclass(frozen=True)
class AcquisitionConfig:
    K: int = 16
    theta: float = 0.05
    L: int = 64

    def __post_init__(self):
        if self.K < 1 or self.L < 1:
            raise ValueError("K and L must be >= 1")
        if self.theta <= 0:
            raise ValueError("theta must be > 0")


# --- passive sampling and perturbation --------------------------------------

def sample_uniform(alphabet: Alphabet, T: int, n: int, seed: int = 0) -> np.ndarray:
    """``n`` i.i.d. uniform sequences over the non-PAD symbols, shape ``(n, T)``."""
    symbols = np.array(alphabet.symbol_indices())
    rng = np.random.default_rng(seed)
    return symbols[rng.integers(0, len(symbols), size=(n, T))]


def perturb_batch(X: np.ndarray, alphabet: Alphabet, config: AugmentationConfig,
                  rng: np.random.Generator) -> np.ndarray:
    """Resample each non-PAD position independently with probability gamma."""
    X = np.array(X, dtype=np.int64, copy=True)
    if X.ndim == 1:
        X = X[None, :]
    symbols = np.array(alphabet.symbol_indices())
    S = len(symbols)
    hit = rng.random(X.shape) < config.gamma
    if alphabet.pad_index is not None:
        hit &= X != alphabet.pad_index
    n_hit = int(hit.sum())
    if config.exclude_original:
        # draw among the S-1 symbols other than the original one
        pos = np.searchsorted(symbols, X[hit])
        draw = rng.integers(0, S - 1, size=n_hit)
        draw = draw + (draw >= pos)
    else:
        draw = rng.integers(0, S, size=n_hit)
    X[hit] = symbols[draw]
    return X


def perturb(seq: Seq[int], alphabet: Alphabet, config: AugmentationConfig, seed: int = 0) -> Sequence:
    out = perturb_batch(np.asarray([seq]), alphabet, config, np.random.default_rng(seed))
    return tuple(int(i) for i in out[0])


@dataclass
class AugmentationStats:
    n: int
    valid_fraction: float
    mean_changes: float
    mean_length: float


def build_augmented_dataset(corpus: Seq[Seq[int]], validator: Callable[[Sequence], bool],
                            alphabet: Alphabet, T: int, config: AugmentationConfig = AugmentationConfig(),
                            seed: int = 0, copies: int = 1):
    """Perturb every corpus sequence ``copies`` times and label with the oracle.

    Corpus entries are unpadded index sequences; each must validate.
    Returns ``(dataset, stats)``.
    """
    if not corpus:
        return Dataset(np.zeros((0, T), dtype=np.int64), np.zeros(0, dtype=np.int64), alphabet), \
            AugmentationStats(0, 0.0, 0.0, 0.0)
    padded = []
    for i, seq in enumerate(corpus):
        p = pad_to(seq, T, alphabet) if alphabet.pad_index is not None else tuple(seq)
        if len(p) != T:
            raise CorpusInvalidEntry(i, f"length {len(p)} != T={T}")
        if not validator(p):
            raise CorpusInvalidEntry(i)
        padded.append(p)
    base = np.tile(np.array(padded, dtype=np.int64), (copies, 1))
    rng = np.random.default_rng(seed)
    X = perturb_batch(base, alphabet, config, rng)
    labels = np.array([int(bool(validator(tuple(row)))) for row in X.tolist()])
    lengths = np.array([len(strip_pad(row, alphabet)) for row in base.tolist()])
    stats = AugmentationStats(
        n=len(X),
        valid_fraction=float(labels.mean()),
        mean_changes=float((X != base).sum(axis=1).mean()),
        mean_length=float(lengths.mean()),
    )
    return Dataset(X, labels, alphabet), stats


# --- information-theoretic scores -------------------------------------------

def bernoulli_entropy(p):
    """Entropy in nats of Bernoulli(p); zero at p = 0 and p = 1."""
    p = np.asarray(p, dtype=np.float64)
    out = entr(p) + entr(1.0 - p)
    return float(out) if out.ndim == 0 else out


def _exact_mean(a, axis):
    # taken relative to the first sample so identical samples give it back exactly
    first = np.take(a, [0], axis=axis)
    return np.squeeze(first, axis=axis) + (a - first).mean(axis=axis)


def acquisition_score(probs, axis: int = 0):
    """Monte Carlo mutual information between the label and the weights.

    ``probs`` holds ``y(candidate | prefix, w_k)`` for ``K`` posterior samples
    along ``axis``. Returns ``g(mean_k y_k) - mean_k g(y_k)``, clamped at 0.
    """
    probs = np.asarray(probs, dtype=np.float64)
    score = bernoulli_entropy(_exact_mean(probs, axis)) - _exact_mean(bernoulli_entropy(probs), axis)
    score = np.maximum(score, 0.0)
    return float(score) if np.ndim(score) == 0 else score


def mutual_information(prior: Seq[float], probs: Seq[float]) -> float:
    """Label/weight mutual information for a discrete posterior over hypotheses."""
    prior = np.asarray(prior, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    return float(bernoulli_entropy(prior @ probs) - prior @ bernoulli_entropy(probs))


def expected_entropy_reduction(prior: Seq[float], probs: Seq[float]) -> float:
    """Prior entropy of the weights minus expected posterior entropy after labeling.

    Computed by explicit Bayesian updates, independently of the mutual
    information identity.
    """
    prior = np.asarray(prior, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    h_prior = float(entr(prior).sum())
    expected = 0.0
    for likelihood in (probs, 1.0 - probs):
        evidence = float(prior @ likelihood)
        if evidence <= 0:
            continue
        posterior = prior * likelihood / evidence
        expected += evidence * float(entr(posterior).sum())
    return h_prior - expected


# --- informative sequence generation ------------------------------------------

def _softmax_sample(scores: np.ndarray, theta: float, u: float) -> int:
    z = scores / theta
    z = z - z.max()
    p = np.exp(z)
    p /= p.sum()
    return int(min(np.searchsorted(np.cumsum(p), u, side="right"), len(p) - 1))


def generate_informative_batch(model: ValidityModel, alphabet: Alphabet, config: AcquisitionConfig,
                               seed: int = 0, n: int | None = None, draws_per_sequence=None):
    """Generate ``n`` (default ``config.L``) sequences by greedy-noisy MI maximisation.

    Each sequence gets its own ``K`` posterior draws and its own RNG stream
    (spawned from ``seed``), so sequence ``i`` does not depend on how many
    others are generated. At every step all candidate tokens are scored and
    one is sampled from ``softmax(score / theta)``. PAD is never a candidate.
    Returns ``(sequences, evaluations)`` where ``evaluations`` counts scored
    (prefix, candidate) pairs.
    """
    n = config.L if n is None else n
    K = config.K
    T = model.config.seq_len
    candidates = np.array(alphabet.symbol_indices())
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]
    if draws_per_sequence is None:
        draws_per_sequence = [draw_posterior_samples(model, K, int(r.integers(2 ** 63))) for r in streams]
    m_in = np.concatenate([stack_draws(d)[0] for d in draws_per_sequence])
    m_h = np.concatenate([stack_draws(d)[1] for d in draws_per_sequence])
    state = model.initial_state(n * K)
    prev = np.full(n * K, model.start_index)
    out = np.empty((n, T), dtype=np.int64)
    evaluations = 0
    for t in range(T):
        logits, state = model.step(state, prev, (m_in, m_h))
        probs = sigmoid(logits[:, candidates].astype(np.float64)).reshape(n, K, len(candidates))
        scores = acquisition_score(probs, axis=1)            # (n, candidates)
        evaluations += scores.size
        for i in range(n):
            out[i, t] = candidates[_softmax_sample(scores[i], config.theta, streams[i].random())]
        prev = np.repeat(out[:, t], K)
    return out, evaluations


def generate_informative_sequence(model: ValidityModel, draws, alphabet: Alphabet, theta: float,
                                  seed: int = 0):
    """One sequence from the given posterior draws; returns ``(sequence, evaluations)``."""
    cfg = AcquisitionConfig(K=len(draws), theta=theta, L=1)
    out, evals = generate_informative_batch(model, alphabet, cfg, seed, n=1, draws_per_sequence=[draws])
    return tuple(int(i) for i in out[0]), evals


def generate_active_batch(model: ValidityModel, validator: Callable[[Sequence], bool], alphabet: Alphabet,
                          config: AcquisitionConfig = AcquisitionConfig(), seed: int = 0) -> Dataset:
    """``L`` informative sequences labeled by the complete-sequence oracle."""
    X, _ = generate_informative_batch(model, alphabet, config, seed)
    labels = np.array([int(bool(validator(tuple(row)))) for row in X.tolist()])
    return Dataset(X, labels, alphabet)


def label_sequences(X: np.ndarray, validator: Callable[[Sequence], bool], alphabet: Alphabet) -> Dataset:
    labels = np.array([int(bool(validator(tuple(row)))) for row in np.asarray(X).tolist()], dtype=np.int64)
    return Dataset(np.asarray(X), labels, alphabet)
