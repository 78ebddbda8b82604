import numpy as np
import pytest

from seqvalid.alphabet import Dataset, expression_alphabet
from seqvalid.model import ModelConfig, ValidityModel
from seqvalid.training import Trainer, TrainingAborted, TrainSettings, train


def memo_set(seed=0):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 5, (50, 6))
    y = rng.integers(0, 2, 50)
    return Dataset(X, y, expression_alphabet())


CFG = ModelConfig(21, 6, 16, 32, 1, 0.0, 0.0)


def test_memorization():
    d = memo_set()
    model, log = train(d, CFG, TrainSettings(learning_rate=1e-2, batch_size=50, steps=500, dropout=False), seed=1)
    assert log[-1].loss < 0.1
    assert log[-1].loss < log[0].loss
    assert model.loss(d.sequences, d.labels, reduction="mean") < 0.1


def test_first_logged_loss_matches_initial_model():
    d = memo_set()
    init = ValidityModel.create(CFG, 5)
    expected = init.loss(d.sequences, d.labels, reduction="mean")
    _, log = train(d, CFG, TrainSettings(batch_size=50, steps=1, dropout=False), seed=5)
    assert log[0].loss == pytest.approx(expected, rel=1e-5)


def test_same_seed_same_weights():
    d = memo_set()
    s = TrainSettings(steps=30)
    a, _ = train(d, CFG, s, seed=3)
    b, _ = train(d, CFG, s, seed=3)
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
    c, _ = train(d, CFG, s, seed=4)
    assert not np.array_equal(a.params["W"], c.params["W"])


def test_abort_keeps_last_good_state():
    d = memo_set()
    d.labels[:] = 0
    model = ValidityModel.create(CFG, 0)
    trainer = Trainer(model, TrainSettings(steps=5), 0)
    trainer.train_steps(d, 3)
    model.params["c"][:] = 1e4          # every step certain: log p(invalid) = -inf
    before = {k: v.copy() for k, v in model.params.items()}
    with pytest.raises(TrainingAborted) as err:
        trainer.train_steps(d, 1)
    assert all(np.array_equal(err.value.last_good.params[k], before[k]) for k in before)
    assert len(err.value.log) == 3


def test_empty_dataset_is_noop():
    d = Dataset(np.zeros((0, 6), dtype=int), np.zeros(0, dtype=int), expression_alphabet())
    _, log = train(d, CFG, TrainSettings(steps=10))
    assert log == []
