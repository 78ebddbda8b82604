"""Config-driven experiment runs writing datasets, checkpoints, reports and a manifest."""
from __future__ import annotations

import hashlib
import platform
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .alphabet import (Alphabet, Dataset, expression_alphabet, load_alphabet, save_dataset,
                       smiles_alphabet, tokenize)
from .config import ExperimentConfig, save_config
from .datagen import AcquisitionConfig, AugmentationConfig, build_augmented_dataset, label_sequences, sample_uniform
from .errors import StageError
from .experiments import learning_curve
from .io import (file_digest, save_checkpoint, save_eval_report, training_log_digest,
                 write_manifest, write_training_log)
from .model import ModelConfig
from .oracles import as_index_validator, is_valid_expression, padded_smiles_validator
from .sampling import estimate_coverage, validity_entropy_curve
from .training import TrainSettings, train


@dataclass
class Task:
    """An alphabet, sequence length and complete-sequence validator."""
    alphabet: Alphabet
    T: int
    validator: Callable


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("seqvalid") / "data" / name))


def read_corpus(path) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")]


def default_alphabet(oracle: str) -> Alphabet:
    return expression_alphabet() if oracle == "expr" else smiles_alphabet()


def make_validator(oracle: str, alphabet: Alphabet):
    if oracle == "expr":
        return as_index_validator(alphabet, is_valid_expression)
    if oracle == "smiles":
        return padded_smiles_validator(alphabet)
    raise ValueError(f"unknown oracle {oracle!r}")


def make_task(oracle: str, T: int, alphabet_file: str = "", tokens: str = "") -> Task:
    alphabet = load_alphabet(alphabet_file) if alphabet_file else default_alphabet(oracle)
    if tokens:
        keep = tokens.split()
        if alphabet.pad is not None and alphabet.pad not in keep:
            keep.append(alphabet.pad)
        alphabet = alphabet.subset(keep)
    return Task(alphabet, T, make_validator(oracle, alphabet))


def corpus_sequences(texts, alphabet: Alphabet):
    return [tokenize(s, alphabet) for s in texts]


def _settings(cfg: ExperimentConfig) -> TrainSettings:
    t = cfg.train
    return TrainSettings(learning_rate=t.learning_rate, batch_size=t.batch_size, steps=t.steps,
                         grad_clip=t.grad_clip)


def _model_config(cfg: ExperimentConfig, task: Task) -> ModelConfig:
    m = cfg.model
    return ModelConfig(task.alphabet.size, task.T, m.embedding_dim, m.hidden_dim, m.layers,
                       m.input_dropout, m.hidden_dropout)


def _acquisition(cfg: ExperimentConfig) -> AcquisitionConfig:
    return AcquisitionConfig(K=cfg.active.K, theta=cfg.active.theta, L=cfg.active.L)


def _curve_csv(curve, path) -> None:
    rows = ["labels,auc"] + [f"{c.labels},{c.auc!r}" for c in curve.checkpoints]
    Path(path).write_text("\n".join(rows) + "\n")


def run_experiment(cfg: ExperimentConfig, log: Callable[[str], None] | None = None) -> dict:
    """Run data generation, training and evaluation; returns the manifest.

    Errors are re-raised as StageError naming the failing stage, after a
    manifest flagged ``complete: false`` has been written.
    """
    cfg.validate()
    out = Path(cfg.experiment.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.ini")
    manifest = {
        "config": cfg.to_ini(),
        "seeds": {"data": cfg.seeds.data, "model": cfg.seeds.model, "sampling": cfg.seeds.sampling},
        "versions": {"seqvalid": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "artifacts": {},
        "complete": False,
    }
    stage = "setup"

    def record(name, digest=None):
        manifest["artifacts"][name] = digest or file_digest(out / name)

    try:
        task = make_task(cfg.experiment.oracle, cfg.experiment.T, cfg.experiment.alphabet,
                         cfg.experiment.tokens)
        mcfg = _model_config(cfg, task)
        taus = cfg.eval.tau_list()
        mode = cfg.experiment.mode
        if mode in ("active", "paired"):
            arms = ["passive", "active"] if mode == "paired" else ["active"]
            for arm in arms:
                stage = f"{arm}-train"
                curve = learning_curve(arm, task.alphabet, task.validator, mcfg, _settings(cfg),
                                       _acquisition(cfg), cfg.active.rounds, cfg.active.steps_per_round,
                                       cfg.active.eval_every, taus, cfg.eval.n, cfg.seeds.data, log)
                suffix = f"_{arm}" if mode == "paired" else ""
                stage = f"{arm}-write"
                save_dataset(curve.dataset, out / f"dataset{suffix}.tsv")
                save_checkpoint(curve.model, out / f"model{suffix}.svqm", task.alphabet)
                save_eval_report(curve.checkpoints[-1].report, out / f"eval{suffix}.csv")
                _curve_csv(curve, out / f"curve{suffix}.csv")
                for name in ("dataset", "model", "eval", "curve"):
                    ext = {"dataset": "tsv", "model": "svqm", "eval": "csv", "curve": "csv"}[name]
                    record(f"{name}{suffix}.{ext}")
        else:
            stage = "data"
            if mode == "passive":
                X = sample_uniform(task.alphabet, task.T, cfg.data.n, cfg.seeds.data)
                dataset = label_sequences(X, task.validator, task.alphabet)
            else:
                corpus_file = cfg.data.corpus or bundled_path("smiles_corpus.txt")
                texts = read_corpus(corpus_file)
                dataset, stats = build_augmented_dataset(
                    corpus_sequences(texts, task.alphabet), task.validator, task.alphabet, task.T,
                    AugmentationConfig(cfg.data.gamma), cfg.seeds.data, cfg.data.copies)
                manifest["augmentation"] = stats.__dict__
            save_dataset(dataset, out / "dataset.tsv")
            record("dataset.tsv")
            stage = "train"
            model, train_log = train(dataset, mcfg, _settings(cfg), cfg.seeds.model)
            save_checkpoint(model, out / "model.svqm", task.alphabet)
            write_training_log(train_log, out / "train_log.csv")
            record("model.svqm")
            record("train_log.csv", training_log_digest(train_log))
            stage = "eval"
            report = validity_entropy_curve(model, task.validator, taus, cfg.eval.n, cfg.seeds.sampling)
            save_eval_report(report, out / "eval.csv")
            record("eval.csv")
            cov = estimate_coverage(model, task.validator, cfg.eval.coverage_tau, cfg.eval.n,
                                    task.alphabet, task.T, cfg.seeds.sampling)
            manifest["coverage"] = cov.__dict__
            manifest["auc"] = report.auc
        manifest["complete"] = True
    except Exception as exc:
        manifest["error"] = {"stage": stage, "type": type(exc).__name__, "message": str(exc)}
        write_manifest(manifest, out / "manifest.json")
        raise StageError(stage, exc) from exc
    manifest["digest"] = hashlib.sha256(
        "".join(f"{k}={v}\n" for k, v in sorted(manifest["artifacts"].items())).encode()).hexdigest()
    write_manifest(manifest, out / "manifest.json")
    return manifest
