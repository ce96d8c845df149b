import numpy as np
import pytest
from scipy.stats import chisquare

from pnrhbt.source_models import SourceSpec


PRESET_SOURCES = {
    "fml": (2.8, 1.2),
    "lnt": (2.6, 1.075),
    "lat": (2.6, 1.001),
}


@pytest.fixture
def preset_sources():
    return {k: SourceSpec.from_mu_g2(*v) for k, v in PRESET_SOURCES.items()}


def three_kinds(mu):
    """Poisson, thermal and a g2=1.2 mixture at the same mean."""
    return [SourceSpec.poisson(mu), SourceSpec.thermal(mu), SourceSpec.from_mu_g2(mu, 1.2)]


def chisq_pvalue(observed, expected_probs, min_expected=5.0):
    """Chi-square p-value after pooling sparse bins (expected count < min_expected)."""
    observed = np.asarray(observed, dtype=float)
    n = observed.sum()
    expected = np.asarray(expected_probs, dtype=float) * n
    obs_b, exp_b = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_b.append(o_acc)
            exp_b.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        obs_b[-1] += o_acc
        exp_b[-1] += e_acc
    exp_b = np.array(exp_b)
    exp_b *= sum(obs_b) / exp_b.sum()
    return chisquare(obs_b, exp_b).pvalue


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
