import json

import pytest

from seqvalid.alphabet import smiles_alphabet, tokenize
from seqvalid.cli import main
from seqvalid.config import ExperimentConfig
from seqvalid.errors import StageError
from seqvalid.oracles import validate_smiles
from seqvalid.pipeline import bundled_path, read_corpus, run_experiment


def tiny(tmp_path, **over):
    cfg = ExperimentConfig()
    base = {"experiment.tokens": "1 2 + * ( )", "experiment.T": "5", "model.hidden_dim": "16",
            "model.embedding_dim": "8", "train.steps": "20", "data.n": "300", "eval.n": "100",
            "eval.taus": "0.05,0.5", "experiment.output_dir": str(tmp_path)}
    base.update(over)
    for k, v in base.items():
        cfg = cfg.set(k, v)
    return cfg


def test_bundled_corpus_is_valid():
    texts = read_corpus(bundled_path("smiles_corpus.txt"))
    assert len(texts) >= 1000
    assert all(validate_smiles(t).valid for t in texts)
    a = smiles_alphabet()
    assert max(len(tokenize(t, a)) for t in texts) <= 40


def test_passive_run_is_deterministic(tmp_path):
    m1 = run_experiment(tiny(tmp_path / "a"))
    m2 = run_experiment(tiny(tmp_path / "b"))
    assert m1["complete"] and m1["digest"] == m2["digest"]
    assert (tmp_path / "a" / "dataset.tsv").read_bytes() == (tmp_path / "b" / "dataset.tsv").read_bytes()
    assert set(m1["artifacts"]) == {"dataset.tsv", "model.svqm", "train_log.csv", "eval.csv"}


def test_paired_run_writes_two_reports(tmp_path):
    cfg = tiny(tmp_path, **{"experiment.mode": "paired", "active.rounds": "2", "active.L": "20",
                            "active.K": "4", "active.steps_per_round": "5"})
    m = run_experiment(cfg)
    assert (tmp_path / "eval_passive.csv").exists() and (tmp_path / "eval_active.csv").exists()
    assert m["complete"]


def test_missing_corpus_is_stage_attributed(tmp_path):
    cfg = tiny(tmp_path, **{"experiment.oracle": "smiles", "experiment.tokens": "",
                            "experiment.T": "40", "experiment.mode": "perturb",
                            "data.corpus": str(tmp_path / "missing.txt")})
    with pytest.raises(StageError) as err:
        run_experiment(cfg)
    assert err.value.stage == "data"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["complete"] is False and manifest["error"]["stage"] == "data"


def test_run_command(tmp_path, capsys):
    cfg = tiny(tmp_path / "out")
    (tmp_path / "c.ini").write_text(cfg.to_ini())
    assert main(["run", "--config", str(tmp_path / "c.ini"), "--set", "train.steps=5"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["complete"] is True
    assert main(["run", "--config", str(tmp_path / "c.ini"), "--set", "train.nope=5"]) == 2
