"""Passive and active learning-curve runs on a fixed label budget."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence as Seq

import numpy as np

from .alphabet import Alphabet, Dataset, Sequence
from .datagen import AcquisitionConfig, generate_informative_batch, label_sequences, sample_uniform
from .model import ModelConfig, ValidityModel
from .sampling import DEFAULT_TAUS, EvalReport, validity_entropy_curve
from .training import Trainer, TrainSettings


@dataclass
class CurveCheckpoint:
    labels: int
    auc: float
    report: EvalReport
    seconds: float


@dataclass
class LearningCurve:
    mode: str
    seed: int
    checkpoints: list = field(default_factory=list)
    model: ValidityModel | None = None
    dataset: Dataset | None = None

    def labels(self) -> np.ndarray:
        return np.array([c.labels for c in self.checkpoints])

    def aucs(self) -> np.ndarray:
        return np.array([c.auc for c in self.checkpoints])


def learning_curve(mode: str, alphabet: Alphabet, validator: Callable[[Sequence], bool],
                   model_config: ModelConfig, settings: TrainSettings = TrainSettings(),
                   acquisition: AcquisitionConfig = AcquisitionConfig(), rounds: int = 10,
                   steps_per_round: int = 100, eval_every: int = 1, taus: Seq[float] = DEFAULT_TAUS,
                   eval_n: int = 1000, seed: int = 0, log: Callable[[str], None] | None = None) -> LearningCurve:
    """Alternate acquisition of ``L`` labeled sequences with ``steps_per_round`` updates.

    ``mode`` is ``passive`` (uniform sequences) or ``active`` (mutual
    information acquisition). The V-H AUC is measured every ``eval_every``
    rounds and after the last one.
    """
    if mode not in ("passive", "active"):
        raise ValueError(f"unknown mode {mode!r}")
    T = model_config.seq_len
    seeds = np.random.SeedSequence(seed).spawn(3)
    model = ValidityModel.create(model_config, int(seeds[0].generate_state(1)[0]))
    trainer = Trainer(model, settings, int(seeds[1].generate_state(1)[0]))
    data_rng = np.random.default_rng(seeds[2])
    dataset = Dataset(np.zeros((0, T), dtype=np.int64), np.zeros(0, dtype=np.int64), alphabet)
    curve = LearningCurve(mode, seed)
    t0 = time.perf_counter()
    for r in range(rounds):
        round_seed = int(data_rng.integers(2 ** 63))
        if mode == "passive":
            X = sample_uniform(alphabet, T, acquisition.L, round_seed)
        else:
            X, _ = generate_informative_batch(trainer.model, alphabet, acquisition, round_seed)
        dataset = dataset.concat(label_sequences(X, validator, alphabet))
        trainer.train_steps(dataset, steps_per_round)
        if (r + 1) % eval_every == 0 or r == rounds - 1:
            report = validity_entropy_curve(trainer.model, validator, taus, eval_n, seed=seed * 7919 + r)
            curve.checkpoints.append(CurveCheckpoint(len(dataset), report.auc, report,
                                                     time.perf_counter() - t0))
            if log:
                log(f"{mode} seed={seed} labels={len(dataset)} auc={report.auc:.4f} "
                    f"valid={dataset.valid_fraction():.3f} t={time.perf_counter() - t0:.0f}s")
    curve.model = trainer.model
    curve.dataset = dataset
    return curve


def labels_to_reach(curve: LearningCurve, target: float) -> int | None:
    """Smallest checkpoint label count whose AUC reaches ``target``."""
    for c in curve.checkpoints:
        if c.auc >= target:
            return c.labels
    return None
