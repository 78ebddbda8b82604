"""Minibatch training of the validity model with Adam."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .alphabet import Dataset
from .errors import NonFiniteLoss
from .model import ModelConfig, ValidityModel


@dataclass(frozen=True)
class TrainSettings:
    learning_rate: float = 1e-3
    batch_size: int = 64
    steps: int = 1000
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    grad_clip: float = 5.0        # global norm; 0 disables
    dropout: bool = True          # sample fresh masks per sequence during training
    log_every: int = 1


@dataclass
class LogRecord:
    step: int
    loss: float
    seconds: float


class Adam:
    def __init__(self, params: dict, settings: TrainSettings):
        self.s = settings
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def update(self, params: dict, grads: dict) -> None:
        s = self.s
        self.t += 1
        if s.grad_clip > 0:
            norm = np.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values()))
            if norm > s.grad_clip:
                grads = {k: g * (s.grad_clip / norm) for k, g in grads.items()}
        lr_t = s.learning_rate * np.sqrt(1 - s.beta2 ** self.t) / (1 - s.beta1 ** self.t)
        for k, g in grads.items():
            self.m[k] = s.beta1 * self.m[k] + (1 - s.beta1) * g
            self.v[k] = s.beta2 * self.v[k] + (1 - s.beta2) * g * g
            params[k] -= (lr_t * self.m[k] / (np.sqrt(self.v[k]) + s.eps)).astype(params[k].dtype)


class TrainingAborted(NonFiniteLoss):
    """Non-finite loss; ``last_good`` holds the weights before the failing step."""

    def __init__(self, message, last_good: ValidityModel, log: list):
        super().__init__(message)
        self.last_good = last_good
        self.log = log


@dataclass
class Trainer:
    """Holds a model and optimiser state so training can resume between data rounds."""

    model: ValidityModel
    settings: TrainSettings = field(default_factory=TrainSettings)
    seed: int = 0

    def __post_init__(self):
        self.optimizer = Adam(self.model.params, self.settings)
        self.rng = np.random.default_rng(self.seed)
        self.step_count = 0
        self.log: list[LogRecord] = []
        self._t0 = time.perf_counter()

    def train_steps(self, dataset: Dataset, n_steps: int) -> list[LogRecord]:
        if len(dataset) == 0 or n_steps <= 0:
            return []
        s = self.settings
        records = []
        for _ in range(n_steps):
            idx = self.rng.choice(len(dataset), size=min(s.batch_size, len(dataset)), replace=False)
            X, y = dataset.sequences[idx], dataset.labels[idx]
            masks = self.model.sample_masks(len(idx), self.rng) if s.dropout else None
            last_good = {k: v.copy() for k, v in self.model.params.items()}
            try:
                loss, grads = self.model.loss_and_grads(X, y, masks, reduction="mean")
                if not all(np.all(np.isfinite(g)) for g in grads.values()):
                    raise NonFiniteLoss("non-finite gradient")
            except NonFiniteLoss as exc:
                raise TrainingAborted(str(exc), ValidityModel(self.model.config, last_good), self.log) from exc
            self.optimizer.update(self.model.params, grads)
            if not all(np.all(np.isfinite(v)) for v in self.model.params.values()):
                raise TrainingAborted("non-finite weights after update",
                                      ValidityModel(self.model.config, last_good), self.log)
            if self.step_count % s.log_every == 0:
                rec = LogRecord(self.step_count, float(loss), time.perf_counter() - self._t0)
                records.append(rec)
                self.log.append(rec)
            self.step_count += 1
        return records


def train(dataset: Dataset, config: ModelConfig, settings: TrainSettings = TrainSettings(),
          seed: int = 0, model: ValidityModel | None = None):
    """Train a fresh (or given) model; returns ``(model, log)``.

    Deterministic for a fixed seed in single-threaded execution.
    """
    if model is None:
        model = ValidityModel.create(config, seed)
    trainer = Trainer(model, settings, seed)
    trainer.train_steps(dataset, settings.steps)
    return trainer.model, trainer.log
