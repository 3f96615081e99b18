"""Shared fixtures and the acceptance-report hook."""

from __future__ import annotations

import numpy as np
import pytest

from edgespec.models import ModelPair
from edgespec.prob import Categorical


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(label): tests backing the acceptance suite"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and rep.when == "call":
        status = "PASS" if rep.passed else "FAIL"
        print(f"\n[acceptance] {marker.args[0]}: {status}")


def cat(*probs) -> Categorical:
    return Categorical(np.array(probs, dtype=np.float64))


@pytest.fixture
def small_pair() -> ModelPair:
    """Mildly divergent pair at a toy vocabulary."""
    return ModelPair(vocab_size=32, context_order=2, divergence=0.3, concentration=6.0, seed=1234)


class StubPair:
    """Model stand-in with hand-chosen conditional laws.

    ``table`` maps a context tuple to (target, draft) distributions; missing
    contexts fall back to the default pair.  Lets tests force exact
    accept/reject situations.
    """

    def __init__(self, vocab_size, default_target, default_draft, table=None):
        self.vocab_size = vocab_size
        self.context_order = 0
        self._default = (default_target, default_draft)
        self._table = table or {}

    def target_dist(self, context):
        return self._table.get(tuple(context), self._default)[0]

    def draft_dist(self, context):
        return self._table.get(tuple(context), self._default)[1]
