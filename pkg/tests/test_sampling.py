import math

import numpy as np
import pytest
from scipy import stats

from seqvalid.alphabet import Dataset, smiles_alphabet, strip_pad
from seqvalid.errors import DeadEnd, EmptyRow
from seqvalid.model import ModelConfig, ValidityModel
from seqvalid.oracles import BruteForceOracle, SmilesPrefixOracle, enumerate_valid, padded_smiles_validator
from seqvalid.sampling import (ModelPolicy, OraclePolicy, PermissivePolicy, SmilesPolicy,
                               boltzmann_sample, entropy_standard_error, estimate_coverage,
                               estimate_entropy, exact_entropy, exact_ground_truth_entropy,
                               exact_model_policy, ground_truth_sample, mask_decode, model_accuracy,
                               validity_entropy_curve, validity_of, vh_auc)

from conftest import expr_task


def zero_model(C, T):
    return ValidityModel.zeros(ModelConfig(C, T, 4, 8))


def random_model(C, T, seed=0, scale=1.0):
    m = ValidityModel.create(ModelConfig(C, T, 4, 8), seed)
    rng = np.random.default_rng(seed)
    for k in m.params:
        m.params[k] = rng.normal(0, scale, m.params[k].shape).astype(np.float32)
    return m


def test_constant_outputs_give_uniform_policy():
    m = zero_model(5, 3)
    for tau in (0.01, 1.0, 1e6):
        X, logp = boltzmann_sample(m, tau, 5000, seed=1)
        assert stats.chisquare(np.bincount(X[:, 1], minlength=5)).pvalue > 0.01
        np.testing.assert_allclose(logp, 3 * math.log(1 / 5))


def test_large_tau_is_uniform():
    m = random_model(5, 3)
    X, _ = boltzmann_sample(m, 1e9, 5000, seed=2)
    assert stats.chisquare(np.bincount(X[:, 2], minlength=5)).pvalue > 0.01


def test_greedy_limit_and_tie_rule():
    X, logp = boltzmann_sample(zero_model(5, 4), 1e-6, 10, seed=0)
    assert np.all(X == 0) and np.all(logp == 0)       # all tied -> lowest index
    m = random_model(6, 5)
    X, _ = boltzmann_sample(m, 1e-6, 3, seed=0)
    seqs, probs = exact_model_policy(m, 1e-6)
    assert tuple(X[0]) == tuple(seqs[np.argmax(probs)])
    with pytest.raises(ValueError):
        boltzmann_sample(m, 0.0, 3)


def test_exact_policy_matches_sampled_log_probs():
    m = random_model(3, 4, seed=4)
    seqs, probs = exact_model_policy(m, 0.3)
    assert probs.sum() == pytest.approx(1.0)
    lookup = {tuple(s): p for s, p in zip(seqs.tolist(), probs)}
    X, logp = boltzmann_sample(m, 0.3, 50, seed=3)
    for row, lp in zip(X.tolist(), logp):
        assert lp == pytest.approx(math.log(lookup[tuple(row)]), rel=1e-9)


def test_ground_truth_tiny_space():
    a, v = expr_task("1+")
    policy = OraclePolicy(BruteForceOracle(a, 3, v), a)
    X, logp = ground_truth_sample(policy, a, 3, 2000, seed=0)
    found = {tuple(r) for r in X.tolist()}
    _, valid = enumerate_valid(a, 3, v, collect=True)
    assert found == valid
    assert exact_ground_truth_entropy(policy, 3) == pytest.approx(math.log(4))


def test_ground_truth_dead_end():
    a, v = expr_task("+")
    with pytest.raises(DeadEnd):
        ground_truth_sample(OraclePolicy(BruteForceOracle(a, 2, v), a), a, 2, 1)


def test_ground_truth_smiles_all_valid():
    a = smiles_alphabet()
    v = padded_smiles_validator(a)
    policy = SmilesPolicy(SmilesPrefixOracle(a, 12))
    X, _ = ground_truth_sample(policy, a, 12, 300, seed=5)
    assert validity_of(X, v).all()


def test_entropy_estimator():
    assert estimate_entropy(np.zeros(10)) == 0.0
    assert estimate_entropy([-1.5]) == 1.5
    m = zero_model(4, 2)
    _, logp = boltzmann_sample(m, 1.0, 1000, seed=0)
    assert estimate_entropy(logp) == pytest.approx(2 * math.log(4))
    with pytest.raises(ValueError):
        estimate_entropy([])


def test_entropy_estimator_consistent():
    m = random_model(5, 6, seed=2)
    _, small = boltzmann_sample(m, 0.2, 2000, seed=0)
    _, large = boltzmann_sample(m, 0.2, 20000, seed=1)
    assert abs(estimate_entropy(small) - estimate_entropy(large)) < 5 * entropy_standard_error(small)
    seqs, probs = exact_model_policy(m, 0.2)
    assert abs(estimate_entropy(large) - exact_entropy(probs)) < 5 * entropy_standard_error(large)


def test_vh_auc_rules():
    assert vh_auc([0.5], [3.0]) == 0.0
    assert vh_auc([0.0, 1.0], [2.0, 4.0]) == pytest.approx(3.0)
    # unsorted input and duplicated validity values (averaged)
    assert vh_auc([1.0, 0.0, 1.0], [4.0, 2.0, 2.0]) == pytest.approx(2.5)


def test_curve_for_uniform_model_matches_valid_fraction():
    a, v = expr_task("12+*()")
    T = 4
    count, _ = enumerate_valid(a, T, v)
    f = count / a.size ** T
    rep = validity_entropy_curve(zero_model(a.size, T), v, [1.0], n=4000, seed=0)
    assert len(rep.points) == 1 and rep.auc == 0.0
    assert abs(rep.points[0].validity - f) < 3 * math.sqrt(f * (1 - f) / 4000)
    with pytest.raises(ValueError):
        validity_entropy_curve(zero_model(a.size, T), v, [1.0, 0.5])


def test_coverage_tiny_space():
    a, v = expr_task("1+")
    cov = estimate_coverage(zero_model(2, 3), v, 1e-6, 20000, a, 3, seed=0)
    assert abs(cov.f_plus - 0.5) < 3 * cov.f_plus_se
    assert cov.N_plus == pytest.approx(8 * cov.f_plus)
    assert cov.entropy == 0.0 and cov.N_model == 1.0


def test_table_anchor_entropy_mapping():
    # validity 1.000 with 1.1e22 sequences corresponds to about 50.75 nats
    assert math.log(1.1e22) == pytest.approx(50.75, abs=0.01)
    assert math.exp(math.log(1.1e22)) == pytest.approx(1.1e22)


def test_model_accuracy_rules():
    a, v = expr_task("12+*()")
    m = random_model(a.size, 5, seed=1, scale=0.7)
    X = np.random.default_rng(0).integers(0, a.size, (300, 5))
    own = Dataset(X, m.predict_valid(X).astype(int), a)
    assert model_accuracy(m, own) == 1.0
    labels = validity_of(X, v).astype(int)
    data = Dataset(X, labels, a)
    assert model_accuracy(zero_model(a.size, 5), data) == pytest.approx(labels.mean())


def test_mask_decode_with_oracle_always_valid():
    a = smiles_alphabet()
    T = 10
    v = padded_smiles_validator(a)
    masker = SmilesPolicy(SmilesPrefixOracle(a, T))
    rng = np.random.default_rng(0)
    for _ in range(100):
        rows = rng.random((T, a.size))
        res = mask_decode(rows, masker, rng=rng)
        assert v(res.sequence) and res.fallbacks == []


def test_mask_decode_permissive_is_identity():
    a, _ = expr_task("12+*")
    rows = np.array([[1.0, 2.0, 3.0, 4.0]] * 2)
    first = [mask_decode(rows, PermissivePolicy(a), seed=s).sequence[0] for s in range(4000)]
    assert stats.chisquare(np.bincount(first, minlength=4), 4000 * rows[0] / rows[0].sum()).pvalue > 0.01


def test_mask_decode_errors_and_fallback():
    a, _ = expr_task("12+*")
    with pytest.raises(EmptyRow):
        mask_decode(np.zeros((2, 4)), PermissivePolicy(a))

    class Nothing(PermissivePolicy):
        def allowed(self, state, t):
            return np.zeros(self.C, dtype=bool)

    res = mask_decode(np.ones((3, 4)), Nothing(a), seed=0)
    assert res.fallbacks == [0, 1, 2] and len(res.sequence) == 3


def test_model_masker_follows_threshold():
    a, _ = expr_task("12+*")
    m = zero_model(4, 3)
    m.params["c"][:] = [-1.0, 1.0, -1.0, -1.0]       # only token 1 has y >= 0.5
    res = mask_decode(np.ones((3, 4)), ModelPolicy(m), seed=0)
    assert res.sequence == (1, 1, 1) and res.fallbacks == []
