import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from nsalign.errors import FileAccessError, FormatError, InvalidInput
from nsalign.io import RunManifest, detect_format, dumps, load_embedding, save_embedding, sha256_file, write_table
from conftest import random_cloud


def test_npy_round_trip_is_bitwise(tmp_path):
    x = random_cloud(0, 30, 4)
    path = save_embedding(x, tmp_path / "x.npy")
    back = load_embedding(path)
    assert back.dtype == np.float64
    assert np.array_equal(back.view(np.uint64), x.view(np.uint64))
    assert np.array_equal(np.load(path), x)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=6), elements=finite))
def test_csv_round_trip(tmp_path_factory, x):
    path = save_embedding(x, tmp_path_factory.mktemp("csv") / "x.csv")
    back = load_embedding(path)
    assert back.shape == x.shape
    assert np.array_equal(back, x)      # 17 significant digits round-trip exactly


def test_bytes_are_deterministic(tmp_path):
    x = random_cloud(1, 20, 3)
    for name in ("a.npy", "b.npy", "a.csv", "b.csv"):
        save_embedding(x, tmp_path / name)
    assert (tmp_path / "a.npy").read_bytes() == (tmp_path / "b.npy").read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_parent_directories_created(tmp_path):
    path = save_embedding(np.eye(2), tmp_path / "deep" / "er" / "x.npy")
    assert path.exists()


def test_float32_is_widened(tmp_path):
    x = random_cloud(2, 5, 3).astype(np.float32)
    np.save(tmp_path / "f.npy", x)
    back = load_embedding(tmp_path / "f.npy")
    assert back.dtype == np.float64
    assert np.array_equal(back, x.astype(np.float64))


def test_npy_rejections(tmp_path):
    np.save(tmp_path / "v.npy", np.arange(4.0))
    with pytest.raises(FormatError, match="expected 2-D"):
        load_embedding(tmp_path / "v.npy")
    (tmp_path / "bad.npy").write_bytes(b"NOTNPY" + b"\x00" * 40)
    with pytest.raises(FormatError):
        load_embedding(tmp_path / "bad.npy")
    with open(tmp_path / "v2.npy", "wb") as fh:
        np.lib.format.write_array(fh, np.eye(2), version=(2, 0))
    with pytest.raises(FormatError, match="version"):
        load_embedding(tmp_path / "v2.npy")
    np.save(tmp_path / "i.npy", np.eye(2, dtype=np.int64))
    with pytest.raises(FormatError, match="dtype"):
        load_embedding(tmp_path / "i.npy")
    np.save(tmp_path / "f.npy", np.asfortranarray(random_cloud(3, 4, 3)))
    with pytest.raises(FormatError, match="Fortran"):
        load_embedding(tmp_path / "f.npy")
    save_embedding(np.eye(3), tmp_path / "t.npy")
    data = (tmp_path / "t.npy").read_bytes()
    (tmp_path / "t.npy").write_bytes(data[:-8])
    with pytest.raises(FormatError, match="truncated"):
        load_embedding(tmp_path / "t.npy")


def test_csv_parsing(tmp_path):
    (tmp_path / "a.csv").write_text("1,2\n3,4\n")
    assert np.array_equal(load_embedding(tmp_path / "a.csv"), [[1.0, 2.0], [3.0, 4.0]])
    (tmp_path / "h.csv").write_text("x,y\n1,2\n3,4\n")
    assert np.array_equal(load_embedding(tmp_path / "h.csv"), [[1.0, 2.0], [3.0, 4.0]])
    (tmp_path / "r.csv").write_text("1,2\n3\n")
    with pytest.raises(FormatError, match="ragged"):
        load_embedding(tmp_path / "r.csv")
    (tmp_path / "n.csv").write_text("1,2\n3,nan\n")
    with pytest.raises(InvalidInput, match="row 1, column 1"):
        load_embedding(tmp_path / "n.csv")
    (tmp_path / "w.csv").write_text("1,2\n3,abc\n")
    with pytest.raises(FormatError, match="non-numeric"):
        load_embedding(tmp_path / "w.csv")
    (tmp_path / "e.csv").write_text("x,y\n")
    with pytest.raises(FormatError):
        load_embedding(tmp_path / "e.csv")


def test_nonfinite_npy(tmp_path):
    x = np.ones((3, 2))
    x[2, 0] = np.inf
    np.save(tmp_path / "x.npy", x)
    with pytest.raises(InvalidInput, match="row 2, column 0"):
        load_embedding(tmp_path / "x.npy")


def test_format_detection(tmp_path):
    save_embedding(np.eye(2), tmp_path / "noext", format="npy")
    assert detect_format(tmp_path / "noext") == "npy"
    assert np.array_equal(load_embedding(tmp_path / "noext"), np.eye(2))
    assert detect_format("x.CSV") == "csv"
    assert detect_format("x.bin", "npy") == "npy"
    with pytest.raises(InvalidInput):
        detect_format("x", "parquet")


def test_missing_file(tmp_path):
    with pytest.raises(FileAccessError):
        load_embedding(tmp_path / "missing.npy")
    with pytest.raises(FileAccessError):
        sha256_file(tmp_path / "missing.npy")


def test_manifest(tmp_path):
    src = save_embedding(np.eye(3), tmp_path / "in.npy")
    out = tmp_path / "out.npy"
    m = RunManifest.for_inputs("reduce", {"epochs": 3, "lr": 0.01}, 5, [src], [out])
    target = m.write(out)
    assert target.name == "out.npy.manifest.json"
    doc = json.loads(target.read_text())
    assert doc["inputs"] == [{"path": str(src), "sha256": sha256_file(src)}]
    assert doc["seed"] == 5 and doc["outputs"] == [str(out)]
    assert doc["version"]
    assert m.write(out).read_bytes() == target.read_bytes()


def test_dumps_and_tables(tmp_path):
    text = dumps({"b": np.float64(0.1), "a": np.arange(2), "c": np.bool_(True)})
    assert text == '{"a": [0, 1], "b": 0.1, "c": true}'
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})
    write_table(tmp_path / "t.csv", ["m", "v"], [(0, 1 / 3), (1, 2.0)])
    assert (tmp_path / "t.csv").read_text() == "m,v\n0,0.33333333333333331\n1,2\n"
