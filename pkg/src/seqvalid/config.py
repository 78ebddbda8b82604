"""Experiment configuration stored as sectioned ``key = value`` text."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

ORACLES = ("expr", "smiles")
MODES = ("passive", "perturb", "active", "paired")


@dataclass
class ExperimentSection:
    oracle: str = "expr"
    alphabet: str = ""          # alphabet file; empty selects the oracle's built-in alphabet
    tokens: str = ""            # optional space-separated subset of the alphabet
    T: int = 10
    mode: str = "passive"
    output_dir: str = "run"


@dataclass
class ModelSection:
    embedding_dim: int = 32
    hidden_dim: int = 128
    layers: int = 1
    input_dropout: float = 0.2
    hidden_dropout: float = 0.2


@dataclass
class TrainSection:
    learning_rate: float = 1e-3
    batch_size: int = 64
    steps: int = 1000
    grad_clip: float = 5.0


@dataclass
class DataSection:
    n: int = 10000              # passive: number of uniform sequences
    corpus: str = ""            # perturb: corpus file; empty selects the bundled SMILES sample
    gamma: float = 0.05
    copies: int = 1


@dataclass
class ActiveSection:
    K: int = 16
    theta: float = 0.05
    L: int = 64
    rounds: int = 10
    steps_per_round: int = 100
    eval_every: int = 1


@dataclass
class EvalSection:
    taus: str = "0.005,0.01,0.025,0.05,0.1,0.25,0.5,1.0"
    n: int = 1000
    coverage_tau: float = 0.005

    def tau_list(self) -> list[float]:
        return [float(t) for t in self.taus.split(",") if t.strip()]


@dataclass
class SeedSection:
    data: int = 0
    model: int = 0
    sampling: int = 0


_SECTIONS = {
    "experiment": ExperimentSection, "model": ModelSection, "train": TrainSection,
    "data": DataSection, "active": ActiveSection, "eval": EvalSection, "seeds": SeedSection,
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    data: DataSection = field(default_factory=DataSection)
    active: ActiveSection = field(default_factory=ActiveSection)
    eval: EvalSection = field(default_factory=EvalSection)
    seeds: SeedSection = field(default_factory=SeedSection)

    def validate(self) -> "ExperimentConfig":
        if self.experiment.oracle not in ORACLES:
            raise ConfigError(f"experiment.oracle must be one of {ORACLES}")
        if self.experiment.mode not in MODES:
            raise ConfigError(f"experiment.mode must be one of {MODES}")
        if self.experiment.T < 1:
            raise ConfigError("experiment.T must be >= 1")
        if not self.eval.tau_list():
            raise ConfigError("eval.taus is empty")
        return self

    def to_ini(self) -> str:
        lines = []
        for name in _SECTIONS:
            lines.append(f"[{name}]")
            section = getattr(self, name)
            for f in fields(section):
                lines.append(f"{f.name} = {_format(getattr(section, f.name))}")
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_ini(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
        parser.optionxform = str
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        cfg = cls()
        for name in parser.sections():
            if name not in _SECTIONS:
                raise ConfigError(f"unknown section [{name}]")
            for key, raw in parser.items(name):
                cfg = cfg.set(f"{name}.{key}", raw)
        return cfg.validate()

    def set(self, dotted: str, raw: str) -> "ExperimentConfig":
        """Copy with ``section.key`` set from its text form."""
        section_name, _, key = dotted.partition(".")
        if section_name not in _SECTIONS:
            raise ConfigError(f"unknown section {section_name!r}")
        section = getattr(self, section_name)
        types = {f.name: f.type for f in fields(section)}
        if key not in types:
            raise ConfigError(f"unknown key {dotted!r}")
        value = _parse(raw, types[key], dotted)
        return replace(self, **{section_name: replace(section, **{key: value})})


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(raw: str, kind, key: str):
    kind = kind if isinstance(kind, str) else kind.__name__
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None
    return raw


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_ini(Path(path).read_text(encoding="utf-8"), str(path))


def save_config(config: ExperimentConfig, path) -> None:
    Path(path).write_text(config.to_ini(), encoding="utf-8")
