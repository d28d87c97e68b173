import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from phasemix.dataset import (Dataset, DatasetError, HeaderMismatchError, TruncatedDatasetError, VersionMismatchError,
                              covariance_to_dataset, dataset_to_covariance, read_dataset, write_dataset)
from phasemix.states import symmetric_covariance


def _ds(values=None):
    blocks = [np.arange(5.0), np.array([0.1, -2.5e-300, np.pi])] if values is None else values
    return Dataset.from_blocks(blocks, [0.0, 0.5], beam="b1", technique="rd", setting_axis="detuning", seed=7)


@pytest.mark.parametrize("fmt", ["binary", "text"])
def test_round_trip(tmp_path, fmt):
    ds = _ds()
    path = tmp_path / f"d.{fmt}"
    write_dataset(ds, path, fmt)
    back = read_dataset(path)
    assert back.equals(ds)
    assert back.header["n_records"] == 8


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, st.integers(1, 50), elements=st.floats(allow_nan=False, allow_infinity=False)),
       st.sampled_from(["binary", "text"]))
def test_round_trip_is_bit_exact(tmp_path_factory, values, fmt):
    path = tmp_path_factory.mktemp("rt") / "d"
    ds = Dataset.single(values, seed=1)
    write_dataset(ds, path, fmt)
    assert read_dataset(path).values.tobytes() == ds.values.tobytes()


def test_truncation_reports_counts(tmp_path):
    path = tmp_path / "d.pmd"
    write_dataset(_ds(), path)
    data = path.read_bytes()
    path.write_bytes(data[:-24 * 3])
    with pytest.raises(TruncatedDatasetError) as err:
        read_dataset(path)
    assert (err.value.expected, err.value.found) == (8, 5)
    assert "8" in str(err.value) and "5" in str(err.value)


def test_text_truncation(tmp_path):
    path = tmp_path / "d.txt"
    write_dataset(_ds(), path, "text")
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(TruncatedDatasetError):
        read_dataset(path)


def test_version_mismatch(tmp_path):
    path = tmp_path / "d.pmd"
    write_dataset(_ds(), path)
    data = path.read_bytes().replace(b"PHASEMIX-DATASET 1", b"PHASEMIX-DATASET 9", 1)
    path.write_bytes(data)
    with pytest.raises(VersionMismatchError):
        read_dataset(path)


def test_header_count_mismatch(tmp_path):
    with pytest.raises(HeaderMismatchError):
        Dataset({"settings": [0.0], "counts": [3]}, [0, 0], [0, 1], [1.0, 2.0])
    path = tmp_path / "d.pmd"
    write_dataset(_ds(), path)
    data = path.read_bytes().replace(b'"n_records": 8', b'"n_records": 9', 1)
    path.write_bytes(data)
    with pytest.raises(HeaderMismatchError):
        read_dataset(path)


def test_not_a_dataset(tmp_path):
    path = tmp_path / "junk"
    path.write_bytes(b"hello\n")
    with pytest.raises(DatasetError):
        read_dataset(path)


def test_sql_normalization_at_write(tmp_path):
    ds = Dataset.single([2.0, 4.0], sql_variance=4.0, normalized=False)
    path = tmp_path / "d"
    write_dataset(ds, path)
    back = read_dataset(path)
    assert back.header["normalized"] and back.header["sql_variance"] == 4.0
    assert back.values.tolist() == [1.0, 2.0]


def test_large_scan_header(tmp_path):
    blocks = [np.zeros(1000)] * 450
    ds = Dataset.from_blocks(blocks, np.linspace(-4, 4, 450))
    assert ds.header["n_records"] == 450_000
    path = tmp_path / "scan.pmd"
    write_dataset(ds, path)
    assert read_dataset(path).header["n_records"] == 450_000


def test_covariance_serialization(tmp_path):
    V = symmetric_covariance(2.0, 1.0, 0.3, 0.1).matrix
    ds = covariance_to_dataset(V)
    assert ds.header["metadata"]["quadrature_order"] == ["p_s", "q_s", "p_a", "q_a"]
    path = tmp_path / "cov.txt"
    write_dataset(ds, path, "text")
    assert np.array_equal(dataset_to_covariance(read_dataset(path)), V)
    with pytest.raises(DatasetError):
        dataset_to_covariance(_ds())
    with pytest.raises(DatasetError):
        covariance_to_dataset(np.eye(3))
