"""Shared fixtures and the acceptance summary printed at the end of a run."""

from __future__ import annotations

import numpy as np
import pytest

from markovwin import Hmm

ACCEPTANCE_LINES: list[str] = []


def record(label: str, ok: bool, detail: str) -> None:
    line = f"{label:<5} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)


def dirichlet_hmm(n: int, d: int, seed: int) -> Hmm:
    rng = np.random.default_rng(seed)
    T = rng.dirichlet(np.ones(n), size=n)
    E = rng.dirichlet(np.ones(d), size=n)
    p = rng.dirichlet(np.ones(n))
    return Hmm(T, E, p)


@pytest.fixture
def small_hmm() -> Hmm:
    return Hmm(
        [[0.7, 0.2, 0.1], [0.1, 0.6, 0.3], [0.3, 0.3, 0.4]],
        [[0.9, 0.1], [0.2, 0.8], [0.5, 0.5]],
        [0.5, 0.3, 0.2],
    )
