from pathlib import Path

import numpy as np
import pytest

from zc_evolve import dataset as ds
from zc_evolve.zoo import BASELINE_FEATURES

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def synthetic_manifest() -> Path:
    return FIXTURES / "synthetic" / "manifest.json"


@pytest.fixture(scope="session")
def toy_space_manifest() -> Path:
    return FIXTURES / "toy_space" / "space.json"


def make_dataset(problem_specs, feature_names=("f0", "f1", "f2"), seed=0):
    """Small in-memory dataset; problem_specs maps id -> row count or (X, y)."""
    rng = np.random.default_rng(seed)
    problems = []
    for pid, spec in problem_specs.items():
        if isinstance(spec, int):
            X = rng.uniform(0.5, 2.0, size=(spec, len(feature_names)))
            y = rng.uniform(0.0, 1.0, size=spec)
        else:
            X, y = spec
        problems.append(ds.Problem(
            id=pid,
            arch_ids=tuple(f"{pid}-{i}" for i in range(len(y))),
            X=np.asarray(X, dtype=np.float64),
            y=np.asarray(y, dtype=np.float64),
            target_name="acc",
        ))
    return ds.BenchmarkDataset(tuple(feature_names), tuple(problems))


@pytest.fixture
def zc16_dataset():
    """Tiny dataset carrying the 16 standard metric feature names."""
    rng = np.random.default_rng(42)
    X = rng.uniform(0.5, 4.0, size=(12, 16))
    y = rng.uniform(80.0, 95.0, size=12)
    return make_dataset({"mini": (X, y)}, feature_names=BASELINE_FEATURES)


class ScriptedRng:
    """Stand-in generator whose integer draws follow a script (cycled)."""

    def __init__(self, integer_script):
        self.script = list(integer_script)
        self.pos = 0

    def integers(self, *args, **kwargs):
        value = self.script[self.pos % len(self.script)]
        self.pos += 1
        return value

    def random(self):
        return 0.0

    def permutation(self, n):
        return np.arange(n)
