import numpy as np
import pytest

from seqvalid.alphabet import expression_alphabet, smiles_alphabet
from seqvalid.model import ModelConfig, ValidityModel
from seqvalid.oracles import as_index_validator, is_valid_expression


@pytest.fixture
def expr_alpha():
    return expression_alphabet()


@pytest.fixture
def smiles_alpha():
    return smiles_alphabet()


def expr_task(tokens):
    a = expression_alphabet().subset(tokens)
    return a, as_index_validator(a, is_valid_expression)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def automaton_disagreements(tokens, T):
    """Every prefix of length <= T where the SMILES automaton and exhaustive search differ."""
    from seqvalid.alphabet import smiles_alphabet
    from seqvalid.oracles import SmilesPrefixOracle, feasibility_table, padded_smiles_validator

    alpha = smiles_alphabet().subset(list(tokens) + ["_"])
    table = feasibility_table(alpha, T, padded_smiles_validator(alpha))
    oracle = SmilesPrefixOracle(alpha, T)
    symbols = alpha.symbol_indices()
    bad = []

    def visit(prefix, state):
        got = state.ok and oracle.feasible_state(state, len(prefix))
        if got != table[prefix]:
            bad.append(prefix)
        if len(prefix) < T:
            for c in symbols:
                visit(prefix + (c,), oracle.advance(state, c))

    visit((), oracle.state(()))
    return bad, len(table)


def numeric_grad(m, X, y, masks, name, idx, eps=1e-3):
    """Five-point central difference; O(eps^4) truncation keeps round-off small."""
    p = m.params[name]
    old = p[idx]
    f = {}
    for k in (-2, -1, 1, 2):
        p[idx] = old + k * eps
        f[k] = m.loss(X, y, masks)
    p[idx] = old
    return (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * eps)


def max_relative_gradient_error(seed):
    """Worst |analytic - central difference| / (|a| + |n|) over every parameter of a
    random float64 model with C=4, T=3, hidden 8 (dropout masks on odd seeds)."""
    rng = np.random.default_rng(seed)
    m = ValidityModel.create(ModelConfig(4, 3, 5, 8, 1, 0.2, 0.2), seed, np.float64)
    for k in m.params:
        m.params[k] = rng.normal(0, 0.5, m.params[k].shape)
    X = rng.integers(0, 4, (6, 3))
    y = rng.integers(0, 2, 6)
    masks = m.sample_masks(6, rng) if seed % 2 else None
    _, grads = m.loss_and_grads(X, y, masks)
    worst = 0.0
    for name, g in grads.items():
        for idx in np.ndindex(g.shape):
            num = numeric_grad(m, X, y, masks, name, idx)
            denom = abs(num) + abs(g[idx])
            if denom > 1e-8:
                worst = max(worst, abs(num - g[idx]) / denom)
    return worst


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion that was run."""
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
