import numpy as np
import pytest
from hypothesis import strategies as st

from itebounds.core import DiscretePMF


def random_pmf(rng: np.random.Generator, size: int, pool: int = 8,
               concentration: float = 1.0, scale: float = 1.0) -> DiscretePMF:
    support = np.sort(rng.choice(pool, size=size, replace=False)).astype(float) * scale
    probs = rng.dirichlet(np.full(size, concentration))
    probs = np.maximum(probs, 1e-6)
    return DiscretePMF(support, probs / probs.sum())


def random_pair(rng: np.random.Generator, lo: int = 2, hi: int = 6):
    m, n = rng.integers(lo, hi + 1, size=2)
    conc = rng.choice([0.3, 1.0, 4.0])
    return random_pmf(rng, int(m), concentration=conc), random_pmf(rng, int(n), concentration=conc)


def delta_support(pmf1: DiscretePMF, pmf0: DiscretePMF) -> list:
    return sorted(set((pmf1.support[:, None] - pmf0.support[None, :]).ravel().tolist()))


@st.composite
def pmfs(draw, min_size: int = 1, max_size: int = 5, pool: int = 7):
    support = draw(st.lists(st.integers(0, pool - 1), min_size=min_size, max_size=max_size,
                            unique=True))
    weights = draw(st.lists(st.integers(1, 20), min_size=len(support), max_size=len(support)))
    total = sum(weights)
    order = np.argsort(support)
    return DiscretePMF(np.asarray(support, dtype=float)[order],
                       np.asarray(weights, dtype=float)[order] / total)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def uniform3():
    return DiscretePMF.uniform([0, 1, 2])


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
