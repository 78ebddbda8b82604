"""Recurrent per-step validity model.

A single-layer LSTM reads ``START, x_1, ..., x_{T-1}`` and at step ``t``
emits one logistic output per token: ``y(c | x_<t, w)``, the probability that
choosing ``c`` next can still lead to a valid sequence. A sequence is judged
valid by the model with probability ``prod_t y(x_t | x_<t, w)``.

Dropout masks on the embedding and on the hidden state are drawn once per
sequence and reused at every step; keeping dropout on at prediction time and
drawing ``K`` mask pairs gives ``K`` samples from the approximate posterior.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import NonFiniteLoss

PARAM_NAMES = ("embedding", "W", "b", "V", "c")


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    seq_len: int
    embedding_dim: int = 32
    hidden_dim: int = 128
    layers: int = 1
    input_dropout: float = 0.2
    hidden_dropout: float = 0.2

    def __post_init__(self):
        for name in ("vocab_size", "seq_len", "embedding_dim", "hidden_dim", "layers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.layers != 1:
            raise ValueError("only single-layer recurrences are supported")
        for name in ("input_dropout", "hidden_dropout"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def log1mexp(s):
    """log(1 - exp(s)) for s <= 0, accurate at both ends."""
    s = np.asarray(s, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.where(s > -np.log(2.0), np.log(-np.expm1(s)), np.log1p(-np.exp(s)))


def init_params(config: ModelConfig, seed: int = 0, dtype=np.float32) -> dict:
    rng = np.random.default_rng(seed)
    C, E, H = config.vocab_size, config.embedding_dim, config.hidden_dim
    b = np.zeros(4 * H)
    b[H:2 * H] = 1.0
    params = {
        "embedding": rng.uniform(-0.08, 0.08, (C + 1, E)),
        "W": rng.uniform(-0.08, 0.08, (E + H, 4 * H)),
        "b": b,
        "V": rng.uniform(-0.08, 0.08, (H, C)),
        "c": np.zeros(C),
    }
    return {k: v.astype(dtype) for k, v in params.items()}


@dataclass(frozen=True)
class PosteriorDraw:
    """One weight sample: the shared weights plus fixed dropout masks.

    Masks are already scaled by ``1 / (1 - rate)``.
    """

    input_mask: np.ndarray
    hidden_mask: np.ndarray
    seed: int | None = None


@dataclass
class ValidityModel:
    config: ModelConfig
    params: dict = field(repr=False)

    @classmethod
    def create(cls, config: ModelConfig, seed: int = 0, dtype=np.float32) -> "ValidityModel":
        return cls(config, init_params(config, seed, dtype))

    @classmethod
    def zeros(cls, config: ModelConfig, dtype=np.float32) -> "ValidityModel":
        params = init_params(config, 0, dtype)
        return cls(config, {k: np.zeros_like(v) for k, v in params.items()})

    @property
    def dtype(self):
        return self.params["W"].dtype

    @property
    def start_index(self) -> int:
        return self.config.vocab_size

    def copy(self) -> "ValidityModel":
        return ValidityModel(self.config, {k: v.copy() for k, v in self.params.items()})

    # -- masks -------------------------------------------------------------

    def sample_masks(self, n: int, rng: np.random.Generator):
        """Per-row dropout masks, shape ``(n, E)`` and ``(n, H)``."""
        cfg = self.config
        return (_bernoulli_mask(rng, (n, cfg.embedding_dim), cfg.input_dropout, self.dtype),
                _bernoulli_mask(rng, (n, cfg.hidden_dim), cfg.hidden_dropout, self.dtype))

    def _masks_for(self, n, masks):
        if masks is None:
            return None, None
        if isinstance(masks, PosteriorDraw):
            return (np.broadcast_to(masks.input_mask, (n, self.config.embedding_dim)),
                    np.broadcast_to(masks.hidden_mask, (n, self.config.hidden_dim)))
        return masks

    # -- step-wise evaluation ---------------------------------------------

    def initial_state(self, n: int):
        H = self.config.hidden_dim
        return np.zeros((n, H), self.dtype), np.zeros((n, H), self.dtype)

    def step(self, state, inputs, masks=None):
        """Advance one step.

        ``inputs`` are the previous tokens (``start_index`` at the first step).
        Returns ``(logits, new_state)`` with logits of shape ``(n, C)``.
        """
        p = self.params
        h, c = state
        n = len(inputs)
        m_in, m_h = self._masks_for(n, masks)
        x = p["embedding"][inputs]
        if m_in is not None:
            x = x * m_in
            h = h * m_h
        a = np.concatenate([x, h], axis=1) @ p["W"] + p["b"]
        H = self.config.hidden_dim
        gates = sigmoid(a[:, :3 * H])
        g = np.tanh(a[:, 3 * H:])
        c = gates[:, H:2 * H] * c + gates[:, :H] * g
        h = gates[:, 2 * H:] * np.tanh(c)
        hd = h * m_h if m_in is not None else h
        return hd @ p["V"] + p["c"], (h, c)

    # -- full-sequence evaluation -----------------------------------------

    def forward(self, X, masks=None, keep_cache: bool = False):
        """Logits for every position of every sequence in ``X`` (shape ``(N, T)``).

        Position ``t`` depends only on ``X[:, :t]``.
        """
        X = np.asarray(X, dtype=np.int64)
        if X.ndim == 1:
            X = X[None, :]
        N, T = X.shape
        if X.size and (X.min() < 0 or X.max() >= self.config.vocab_size):
            raise ValueError("token index outside the model alphabet")
        p = self.params
        H = self.config.hidden_dim
        m_in, m_h = self._masks_for(N, masks)
        inputs = np.empty((N, T), dtype=np.int64)
        inputs[:, 0] = self.start_index
        inputs[:, 1:] = X[:, :-1]
        h = np.zeros((N, H), self.dtype)
        c = np.zeros((N, H), self.dtype)
        cache = {"inputs": inputs, "m_in": m_in, "m_h": m_h, "xs": [], "hds": [], "cs": [c],
                 "gates": [], "gs": [], "tcs": []}
        logits = np.empty((N, T, self.config.vocab_size), self.dtype)
        hd = h
        for t in range(T):
            x = p["embedding"][inputs[:, t]]
            if m_in is not None:
                x = x * m_in
            xh = np.concatenate([x, hd], axis=1)
            a = xh @ p["W"] + p["b"]
            gates = sigmoid(a[:, :3 * H])
            g = np.tanh(a[:, 3 * H:])
            c = gates[:, H:2 * H] * c + gates[:, :H] * g
            tc = np.tanh(c)
            h = gates[:, 2 * H:] * tc
            hd = h * m_h if m_h is not None else h
            logits[:, t] = hd @ p["V"] + p["c"]
            if keep_cache:
                cache["xs"].append(xh)
                cache["hds"].append(hd)
                cache["cs"].append(c)
                cache["gates"].append(gates)
                cache["gs"].append(g)
                cache["tcs"].append(tc)
        return (logits, cache) if keep_cache else logits

    def probabilities(self, X, masks=None):
        return sigmoid(self.forward(X, masks).astype(np.float64))

    def target_logits(self, X, masks=None):
        X = np.asarray(X, dtype=np.int64)
        if X.ndim == 1:
            X = X[None, :]
        z = self.forward(X, masks)
        return np.take_along_axis(z, X[:, :, None], axis=2)[:, :, 0]

    def sequence_log_prob_valid(self, X, masks=None):
        """``sum_t log y(x_t | x_<t, w)`` per sequence (log-probability of validity)."""
        return log_sigmoid(self.target_logits(X, masks).astype(np.float64)).sum(axis=1)

    def predict_valid(self, X):
        """Deterministic prediction: valid iff every realised step has y >= 0.5."""
        return (self.target_logits(X) >= 0).all(axis=1)

    # -- likelihood and gradients -----------------------------------------

    def loss_and_grads(self, X, y, masks=None, reduction: str = "sum"):
        """Negative log-likelihood of labels ``y`` and its gradient.

        ``loss = -sum_n [y_n log p_n + (1 - y_n) log(1 - p_n)]`` with
        ``log p_n = sum_t log y(x_t | x_<t)``, evaluated in the log domain.
        """
        X = np.asarray(X, dtype=np.int64)
        y = np.asarray(y, dtype=np.float64)
        N, T = X.shape
        logits, cache = self.forward(X, masks, keep_cache=True)
        z = np.take_along_axis(logits, X[:, :, None], axis=2)[:, :, 0].astype(np.float64)
        s = log_sigmoid(z).sum(axis=1)
        log_p0 = log1mexp(s)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            per = -(y * s + (1 - y) * np.where(y < 1, log_p0, 0.0))
            dl_ds = -y + (1 - y) / np.expm1(-s)
        loss = per.sum()
        if not np.isfinite(loss) or not np.all(np.isfinite(dl_ds)):
            raise NonFiniteLoss(f"non-finite loss {loss}")
        scale = 1.0 / N if reduction == "mean" else 1.0
        dz_target = (dl_ds[:, None] * sigmoid(-z)) * scale
        dlogits = np.zeros_like(logits)
        np.put_along_axis(dlogits, X[:, :, None], dz_target[:, :, None].astype(self.dtype), axis=2)
        grads = self._backward(dlogits, cache)
        return loss * scale, grads

    def _backward(self, dlogits, cache):
        p = self.params
        H = self.config.hidden_dim
        E = self.config.embedding_dim
        N, T, _ = dlogits.shape
        m_in, m_h = cache["m_in"], cache["m_h"]
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        hds = np.stack(cache["hds"], axis=1)                      # (N, T, H)
        grads["V"] = hds.reshape(-1, H).T @ dlogits.reshape(-1, dlogits.shape[2])
        grads["c"] = dlogits.sum(axis=(0, 1))
        dhd_out = dlogits @ p["V"].T                              # (N, T, H)
        W_x, W_h = p["W"][:E], p["W"][E:]
        dh_rec = np.zeros((N, H), self.dtype)                     # from step t+1 through hd_t
        dc_next = np.zeros((N, H), self.dtype)
        dW = np.zeros_like(p["W"])
        db = np.zeros_like(p["b"])
        dx_all = np.empty((N, T, E), self.dtype)
        for t in reversed(range(T)):
            dhd = dhd_out[:, t] + dh_rec
            dh = dhd * m_h if m_h is not None else dhd
            gates = cache["gates"][t]
            i, f, o = gates[:, :H], gates[:, H:2 * H], gates[:, 2 * H:]
            g = cache["gs"][t]
            tc = cache["tcs"][t]
            dc = dh * o * (1 - tc * tc) + dc_next
            da = np.concatenate([
                dc * g * i * (1 - i),
                dc * cache["cs"][t] * f * (1 - f),
                dh * tc * o * (1 - o),
                dc * i * (1 - g * g),
            ], axis=1)
            dc_next = dc * f
            dW += cache["xs"][t].T @ da
            db += da.sum(axis=0)
            dh_rec = da @ W_h.T
            dx = da @ W_x.T
            dx_all[:, t] = dx * m_in if m_in is not None else dx
        grads["W"] = dW
        grads["b"] = db
        np.add.at(grads["embedding"], cache["inputs"].reshape(-1), dx_all.reshape(-1, E))
        return grads

    def loss(self, X, y, masks=None, reduction: str = "sum") -> float:
        X = np.asarray(X, dtype=np.int64)
        y = np.asarray(y, dtype=np.float64)
        s = self.sequence_log_prob_valid(X, masks)
        with np.errstate(divide="ignore"):
            per = -(y * s + (1 - y) * np.where(y < 1, log1mexp(s), 0.0))
        total = per.sum()
        if not np.isfinite(total):
            raise NonFiniteLoss(f"non-finite loss {total}")
        return total / len(y) if reduction == "mean" else total


def _bernoulli_mask(rng, shape, rate, dtype):
    if rate == 0.0:
        return np.ones(shape, dtype)
    keep = rng.random(shape) >= rate
    return (keep / (1.0 - rate)).astype(dtype)


def draw_posterior_samples(model: ValidityModel, K: int = 16, seed: int = 0) -> list[PosteriorDraw]:
    """``K`` independent dropout-mask pairs, each fixed across time steps."""
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.default_rng(seed)
    m_in, m_h = model.sample_masks(K, rng)
    return [PosteriorDraw(m_in[k], m_h[k], seed) for k in range(K)]


def stack_draws(draws, repeat: int = 1):
    """Stack draws into per-row masks; row ``r`` uses draw ``r % K``."""
    m_in = np.stack([d.input_mask for d in draws])
    m_h = np.stack([d.hidden_mask for d in draws])
    if repeat > 1:
        m_in = np.tile(m_in, (repeat, 1))
        m_h = np.tile(m_h, (repeat, 1))
    return m_in, m_h
