import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from planarflow import builders as B  # noqa: E402

SEED = 1729


def named_maps():
    """Small deterministic maps used across suites."""
    out = {"K4": B.k4(), "cube": B.cube(), "octahedron": B.octahedron(),
           "star3": B.star(3), "star5": B.star(5), "grid3x3": B.grid(3, 3), "grid4x3": B.grid(4, 3)}
    for n in range(3, 9):
        out[f"C{n}"] = B.cycle(n)
    for n in range(1, 6):
        out[f"P{n}"] = B.path(n)
    return out


def random_triangulations(count=50, seed=SEED):
    rng = np.random.default_rng(seed)
    return [B.random_triangulation(int(rng.integers(4, 40)), rng) for _ in range(count)]


def random_maps(count=50, seed=SEED + 1, lo=4, hi=40):
    rng = np.random.default_rng(seed)
    return [B.random_map(int(rng.integers(lo, hi)), rng) for _ in range(count)]


def corpus():
    """Named maps, 20 random triangulations and 30 random maps."""
    maps = list(named_maps().items())
    maps += [(f"tri{i}", g) for i, g in enumerate(random_triangulations(20, SEED + 7))]
    maps += [(f"rnd{i}", g) for i, g in enumerate(random_maps(30, SEED + 8, 4, 30))]
    return maps


@pytest.fixture(scope="session")
def corpus_maps():
    return corpus()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
