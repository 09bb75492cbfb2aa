import json

import numpy as np
import pytest
from conftest import make_dataset
from hypothesis import given, settings
from hypothesis import strategies as st

from zc_evolve import dataset as ds
from zc_evolve.dataset import DatasetError


def write_tiny_manifest(tmp_path, rows=None, feature_names=("snip", "meco"),
                        header=None, target="val_acc"):
    rows = rows if rows is not None else [
        ["arch-0", "1.0", "2.0", "90.1"],
        ["arch-1", "1.5", "0.5", "91.2"],
        ["arch-2", "0.25", "1.25", "89.9"],
    ]
    header = header or ["arch_id", *feature_names, target]
    csv_path = tmp_path / "p1.csv"
    csv_path.write_text("\n".join(",".join(r) for r in [header, *rows]) + "\n")
    manifest = {
        "feature_names": list(feature_names),
        "problems": [{"id": "p1", "csv": "p1.csv", "target_column": target}],
    }
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

def test_load_minimal_manifest(tmp_path):
    d = ds.load_manifest(write_tiny_manifest(tmp_path))
    assert d.problem_ids == ("p1",)
    assert d.feature_names == ("snip", "meco")
    p = d.problem("p1")
    assert p.n_rows == 3
    assert p.arch_ids == ("arch-0", "arch-1", "arch-2")  # disk order preserved
    assert p.X.shape == (3, 2)
    assert p.y.tolist() == [90.1, 91.2, 89.9]


def test_load_rejects_nan_cell(tmp_path):
    path = write_tiny_manifest(tmp_path, rows=[
        ["a", "1.0", "NaN", "90.0"],
        ["b", "1.0", "2.0", "91.0"],
    ])
    with pytest.raises(DatasetError, match=r"problem 'p1', line 2, column 'meco'.*NaN"):
        ds.load_manifest(path)


def test_load_rejects_non_numeric_cell(tmp_path):
    path = write_tiny_manifest(tmp_path, rows=[
        ["a", "1.0", "high", "90.0"],
        ["b", "1.0", "2.0", "91.0"],
    ])
    with pytest.raises(DatasetError, match="line 2, column 'meco'"):
        ds.load_manifest(path)


def test_load_rejects_duplicate_arch_id(tmp_path):
    path = write_tiny_manifest(tmp_path, rows=[
        ["a", "1.0", "2.0", "90.0"],
        ["a", "1.5", "2.5", "91.0"],
    ])
    with pytest.raises(DatasetError, match="duplicate arch_id 'a'"):
        ds.load_manifest(path)


def test_load_rejects_header_mismatch(tmp_path):
    path = write_tiny_manifest(tmp_path, header=["arch_id", "snip", "wrong", "val_acc"])
    with pytest.raises(DatasetError, match="header"):
        ds.load_manifest(path)


def test_load_missing_manifest(tmp_path):
    with pytest.raises(DatasetError, match="not found"):
        ds.load_manifest(tmp_path / "nope.json")


def test_load_missing_csv(tmp_path):
    manifest = {"feature_names": ["snip"],
                "problems": [{"id": "p1", "csv": "gone.csv", "target_column": "acc"}]}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(manifest))
    with pytest.raises(DatasetError, match="csv file not found"):
        ds.load_manifest(path)


def test_load_rejects_single_row(tmp_path):
    path = write_tiny_manifest(tmp_path, rows=[["a", "1.0", "2.0", "90.0"]])
    with pytest.raises(DatasetError, match="at least 2 rows"):
        ds.load_manifest(path)


def test_suite_like_manifest(tmp_path):
    # three problems sharing 16 feature columns
    names = tuple(f"m{i:02d}" for i in range(16))
    rng = np.random.default_rng(0)
    problems = {pid: (rng.uniform(size=(4, 16)), rng.uniform(size=4))
                for pid in ("nb101-cf10", "nb201-cf10", "nb301-cf10")}
    d = make_dataset(problems, feature_names=names)
    manifest = ds.write_manifest(d, tmp_path)
    loaded = ds.load_manifest(manifest)
    assert len(loaded.problems) == 3
    assert len(loaded.feature_names) == 16


def test_feature_name_validation():
    with pytest.raises(DatasetError, match="invalid feature name"):
        make_dataset({"p": 3}, feature_names=("Snip", "meco", "x"))
    with pytest.raises(DatasetError, match="collides with an operator"):
        make_dataset({"p": 3}, feature_names=("add", "meco", "x"))
    with pytest.raises(DatasetError, match="duplicate feature"):
        make_dataset({"p": 3}, feature_names=("meco", "meco", "x"))


def test_dataset_arrays_are_read_only():
    d = make_dataset({"p": 4})
    with pytest.raises(ValueError):
        d.problem("p").X[0, 0] = 99.0


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------

def test_split_sizes():
    d = make_dataset({"p": 10})
    train, test = ds.split_train_test(d, 0.7, seed=1)
    assert len(train.indices["p"]) == 7
    assert len(test.indices["p"]) == 3


def test_split_determinism():
    d = make_dataset({"p": 10, "q": 25})
    a = ds.split_train_test(d, 0.7, seed=9)
    b = ds.split_train_test(d, 0.7, seed=9)
    for pid in ("p", "q"):
        assert np.array_equal(a[0].indices[pid], b[0].indices[pid])
        assert np.array_equal(a[1].indices[pid], b[1].indices[pid])
    c = ds.split_train_test(d, 0.7, seed=10)
    assert any(not np.array_equal(a[0].indices[pid], c[0].indices[pid]) for pid in ("p", "q"))


def test_split_rejects_too_small_side():
    # floor(0.9 * 5) = 4 train rows leaves a single test row
    d = make_dataset({"p": 5})
    with pytest.raises(ValueError, match="both sides need at least 2"):
        ds.split_train_test(d, 0.9, seed=0)


def test_split_fraction_bounds():
    d = make_dataset({"p": 10})
    for bad in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(ValueError):
            ds.split_train_test(d, bad, seed=0)


def test_split_per_problem_independence():
    # adding a problem must not perturb the split of an existing one
    d1 = make_dataset({"p": 20})
    d2 = make_dataset({"p": 20, "extra": 30})
    a, _ = ds.split_train_test(d1, 0.7, seed=3)
    b, _ = ds.split_train_test(d2, 0.7, seed=3)
    assert np.array_equal(a.indices["p"], b.indices["p"])


@settings(max_examples=100)
@given(st.integers(4, 60), st.floats(0.2, 0.8), st.integers(0, 2**32 - 1))
def test_split_partition_property(n, fraction, seed):
    d = make_dataset({"p": n})
    k = int(np.floor(fraction * n))
    if k < 2 or n - k < 2:
        with pytest.raises(ValueError):
            ds.split_train_test(d, fraction, seed)
        return
    train, test = ds.split_train_test(d, fraction, seed)
    ti, si = train.indices["p"], test.indices["p"]
    assert len(ti) == k
    assert set(ti).isdisjoint(si)
    assert sorted([*ti, *si]) == list(range(n))


# ---------------------------------------------------------------------------
# views
# ---------------------------------------------------------------------------

def test_full_view_matrix():
    d = make_dataset({"p": 3})
    m = ds.full_view(d).matrix("p")
    assert m.X.shape == (3, 3)
    assert m.y.shape == (3,)
    assert len(m.arch_ids) == 3


def test_train_view_matrix_shape():
    d = make_dataset({"p": 10})
    train, _ = ds.split_train_test(d, 0.7, seed=0)
    assert train.matrix("p").X.shape == (7, 3)


def test_unknown_problem_id():
    d = make_dataset({"p": 3})
    with pytest.raises(DatasetError, match="unknown problem id 'nb999'"):
        ds.full_view(d).matrix("nb999")


def test_view_label_validation():
    d = make_dataset({"p": 3})
    with pytest.raises(DatasetError, match="label"):
        ds.DatasetView(d, {"p": np.arange(3)}, "validation")


# ---------------------------------------------------------------------------
# round trip
# ---------------------------------------------------------------------------

def test_problem_group_metadata_round_trip(tmp_path):
    d = make_dataset({"p": 4, "q": 4})
    import dataclasses

    problems = (dataclasses.replace(d.problems[0], group="in-dataset"), d.problems[1])
    d = ds.BenchmarkDataset(d.feature_names, problems)
    manifest = ds.write_manifest(d, tmp_path)
    loaded = ds.load_manifest(manifest)
    assert loaded.problem("p").group == "in-dataset"
    assert loaded.problem("q").group is None


def test_write_load_round_trip_is_byte_identical(tmp_path):
    rng = np.random.default_rng(5)
    d = make_dataset({
        "alpha": (rng.normal(size=(6, 3)) * 10.0 ** rng.integers(-8, 8, size=(6, 3)),
                  rng.normal(size=6)),
        "beta": 9,
    })
    first_dir = tmp_path / "first"
    second_dir = tmp_path / "second"
    manifest1 = ds.write_manifest(d, first_dir)
    loaded = ds.load_manifest(manifest1)
    manifest2 = ds.write_manifest(loaded, second_dir)
    assert manifest1.read_bytes() == manifest2.read_bytes()
    for p in d.problems:
        assert (first_dir / f"{p.id}.csv").read_bytes() == (second_dir / f"{p.id}.csv").read_bytes()
    reloaded = ds.load_manifest(manifest2)
    for p, q in zip(loaded.problems, reloaded.problems):
        assert p.id == q.id and p.arch_ids == q.arch_ids
        assert np.array_equal(p.X, q.X) and np.array_equal(p.y, q.y)
