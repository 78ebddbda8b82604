import pytest

from seqvalid.config import ConfigError, ExperimentConfig, load_config, save_config


def test_defaults_round_trip(tmp_path):
    cfg = ExperimentConfig()
    save_config(cfg, tmp_path / "c.ini")
    assert load_config(tmp_path / "c.ini") == cfg


def test_modified_round_trip():
    cfg = ExperimentConfig().set("active.theta", "0.0125").set("experiment.tokens", "1 2 3 + * ( )")
    cfg = cfg.set("train.learning_rate", "3e-3").set("experiment.mode", "paired")
    back = ExperimentConfig.from_ini(cfg.to_ini())
    assert back == cfg and back.active.theta == 0.0125 and back.experiment.tokens == "1 2 3 + * ( )"
    assert back.eval.tau_list()[0] == 0.005


def test_partial_file_uses_defaults():
    cfg = ExperimentConfig.from_ini("[experiment]\nT = 7\n")
    assert cfg.experiment.T == 7 and cfg.model.hidden_dim == 128


@pytest.mark.parametrize("text", [
    "[experiment]\nbogus = 1\n",
    "[nosuch]\nx = 1\n",
    "[experiment]\nT = ten\n",
    "[experiment]\nmode = sideways\n",
    "[experiment]\noracle = lisp\n",
])
def test_rejections(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_ini(text)
