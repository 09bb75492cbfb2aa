"""The bundled fixtures must be exactly reproducible by their generator scripts.

Acceptance values (the pinned search-space optimum, the planted-recovery
seed) are frozen against these bytes, so silent generator drift would
invalidate them.
"""

import subprocess
import sys
from pathlib import Path

from conftest import FIXTURES

REPO = Path(__file__).resolve().parent.parent


def _regenerate_and_compare(script: str, fixture_dir: Path, tmp_path):
    out = tmp_path / "regen"
    subprocess.run(
        [sys.executable, str(REPO / "scripts" / script), "--out", str(out)],
        check=True, capture_output=True,
    )
    regenerated = sorted(p.name for p in out.iterdir())
    committed = sorted(p.name for p in fixture_dir.iterdir())
    assert regenerated == committed
    for name in committed:
        assert (out / name).read_bytes() == (fixture_dir / name).read_bytes(), name


def test_synthetic_fixture_reproducible(tmp_path):
    _regenerate_and_compare("make_synthetic_dataset.py", FIXTURES / "synthetic", tmp_path)


def test_toy_space_fixture_reproducible(tmp_path):
    _regenerate_and_compare("make_toy_space.py", FIXTURES / "toy_space", tmp_path)
