from __future__ import annotations

import numpy as np
import pytest

from commgrid.neural import Mlp
from commgrid.training import EpisodeRecord, SymbolLogEntry

# Acceptance results collected by tests/test_acceptance.py and printed in the
# terminal summary so every criterion gets one visible pass/fail line.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def fixed_output_mlp(values, in_dim: int = 8) -> Mlp:
    """A net that outputs exactly ``values`` for any input (zero weights,
    output biases set)."""
    values = np.asarray(values, dtype=float)
    hidden = 4
    return Mlp(
        w1=np.zeros((in_dim, hidden)),
        b1=np.zeros(hidden),
        w2=np.zeros((hidden, values.size)),
        b2=values.copy(),
    )


def make_record(index: int, steps: int, symbols=None, success: bool = False) -> EpisodeRecord:
    """Fabricate an episode record; ``symbols`` is a list of
    (t, agent, symbol, context) tuples, defaulting to one C_A per agent per step."""
    if symbols is None:
        symbols = [(t, agent, 0, 0) for t in range(1, steps + 1) for agent in (0, 1)]
    entries = [SymbolLogEntry(t=t, agent=a, symbol=s, context=c) for t, a, s, c in symbols]
    return EpisodeRecord(
        index=index,
        steps=steps,
        success=success,
        total_reward=float(10 - steps if success else -steps),
        symbols=entries,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
