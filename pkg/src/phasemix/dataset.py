"""Dataset container and its on-disk formats.

Binary layout::

    PHASEMIX-DATASET <version>\\n
    <header byte length>\\n
    <JSON header, utf-8>\\n
    int64[n] setting index | int64[n] sample index | float64[n] value   (little endian)

The text interchange format writes the same header as ``#``-prefixed JSON
lines followed by one ``setting sample value`` record per line, with values
printed by ``repr`` so that reading them back is lossless.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = 1
MAGIC = b"PHASEMIX-DATASET"
TEXT_MAGIC = "# PHASEMIX-DATASET-TEXT"


class DatasetError(ValueError):
    pass


class VersionMismatchError(DatasetError):
    pass


class TruncatedDatasetError(DatasetError):
    def __init__(self, expected, found):
        super().__init__(f"dataset truncated: header declares {expected} records, found {found}")
        self.expected = expected
        self.found = found


class HeaderMismatchError(DatasetError):
    pass


def _default_header():
    return {
        "format_version": FORMAT_VERSION,
        "beam": "beam",
        "technique": "hd",
        "setting_axis": "theta",
        "settings": [0.0],
        "counts": [0],
        "seed": None,
        "demod": None,
        "filter_taps": None,
        "sql_variance": 1.0,
        "normalized": True,
        "metadata": {},
    }


@dataclass
class Dataset:
    """Columnar records ``(setting_index, sample_index, value)`` plus a header."""

    header: dict
    setting_index: np.ndarray
    sample_index: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        hdr = _default_header()
        hdr.update(self.header)
        self.header = hdr
        self.setting_index = np.ascontiguousarray(self.setting_index, dtype="<i8")
        self.sample_index = np.ascontiguousarray(self.sample_index, dtype="<i8")
        self.values = np.ascontiguousarray(self.values, dtype="<f8")
        n = len(self.values)
        if len(self.setting_index) != n or len(self.sample_index) != n:
            raise DatasetError("record columns have different lengths")
        if sum(self.header["counts"]) != n:
            raise HeaderMismatchError(
                f"header counts sum to {sum(self.header['counts'])} but {n} records are present")
        if len(self.header["counts"]) != len(self.header["settings"]):
            raise HeaderMismatchError("counts and settings grids have different lengths")
        declared = self.header.get("n_records")
        if declared is not None and declared != n:
            raise HeaderMismatchError(f"header declares n_records={declared} but {n} records are present")
        self.header["n_records"] = n

    @classmethod
    def from_blocks(cls, blocks, settings, **header):
        """Build from one value array per setting."""
        blocks = [np.asarray(b, dtype=float).ravel() for b in blocks]
        if len(blocks) != len(settings):
            raise DatasetError("one block of values is required per setting")
        counts = [len(b) for b in blocks]
        setting_index = np.repeat(np.arange(len(blocks)), counts)
        sample_index = np.concatenate([np.arange(c) for c in counts]) if blocks else np.zeros(0)
        values = np.concatenate(blocks) if blocks else np.zeros(0)
        hdr = dict(header, settings=[float(s) for s in settings], counts=counts)
        return cls(hdr, setting_index, sample_index, values)

    @classmethod
    def single(cls, values, **header):
        header.setdefault("setting_axis", "theta")
        return cls.from_blocks([values], [0.0], **header)

    @property
    def n_records(self) -> int:
        return len(self.values)

    @property
    def settings(self) -> np.ndarray:
        return np.asarray(self.header["settings"], dtype=float)

    def values_for(self, i: int) -> np.ndarray:
        return self.values[self.setting_index == i]

    def blocks(self):
        return [self.values_for(i) for i in range(len(self.header["counts"]))]

    def normalized(self) -> "Dataset":
        """Copy with values in SQL units (divided by ``sqrt(sql_variance)``)."""
        if self.header["normalized"]:
            return self
        hdr = copy.deepcopy(self.header)
        hdr["normalized"] = True
        scale = np.sqrt(float(hdr["sql_variance"]))
        return Dataset(hdr, self.setting_index, self.sample_index, self.values / scale)

    def equals(self, other: "Dataset") -> bool:
        """Bit-exact equality of header and records."""
        return (self.header == other.header
                and np.array_equal(self.setting_index, other.setting_index)
                and np.array_equal(self.sample_index, other.sample_index)
                and self.values.tobytes() == other.values.tobytes())


def _header_bytes(header) -> bytes:
    return json.dumps(header, indent=2, sort_keys=True, allow_nan=False).encode("utf-8")


def write_dataset(dataset: Dataset, path, fmt: str = "binary") -> None:
    """Write ``dataset``; values are SQL-normalized first if they are not already."""
    ds = dataset.normalized()
    if fmt == "text":
        return _write_text(ds, path)
    if fmt != "binary":
        raise ValueError(f"unknown dataset format {fmt!r}")
    hdr = _header_bytes(ds.header)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC + b" %d\n" % FORMAT_VERSION)
        fh.write(b"%d\n" % len(hdr))
        fh.write(hdr + b"\n")
        fh.write(ds.setting_index.tobytes())
        fh.write(ds.sample_index.tobytes())
        fh.write(ds.values.tobytes())
    os.replace(tmp, path)


def _write_text(ds: Dataset, path) -> None:
    lines = [f"{TEXT_MAGIC} {FORMAT_VERSION}"]
    lines += ["# " + line for line in _header_bytes(ds.header).decode().splitlines()]
    lines.append("# setting_index sample_index value")
    lines += [f"{i} {j} {v!r}" for i, j, v in
              zip(ds.setting_index.tolist(), ds.sample_index.tolist(), ds.values.tolist())]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _check_version(version: int):
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"dataset format version {version}, reader supports {FORMAT_VERSION}")


def _declared_records(header) -> int:
    n = sum(header["counts"])
    if header.get("n_records", n) != n:
        raise HeaderMismatchError(
            f"header n_records={header['n_records']} disagrees with per-setting counts summing to {n}")
    return n


def read_dataset(path) -> Dataset:
    """Read a binary or text dataset, detecting the format from the first line."""
    with open(path, "rb") as fh:
        first = fh.readline()
        if first.startswith(TEXT_MAGIC.encode()):
            return _read_text(path)
        if not first.startswith(MAGIC):
            raise DatasetError(f"{path}: not a phasemix dataset")
        try:
            _check_version(int(first.split()[1]))
            hlen = int(fh.readline())
        except (IndexError, ValueError) as exc:
            if isinstance(exc, VersionMismatchError):
                raise
            raise DatasetError(f"{path}: malformed preamble") from exc
        raw = fh.read(hlen)
        if len(raw) != hlen:
            raise DatasetError(f"{path}: header truncated")
        header = json.loads(raw)
        fh.read(1)
        body = fh.read()
    n = _declared_records(header)
    found = len(body) // 24
    if len(body) != 24 * n:
        raise TruncatedDatasetError(n, found)
    cols = np.frombuffer(body, dtype="<i8", count=2 * n)
    values = np.frombuffer(body, dtype="<f8", offset=16 * n, count=n)
    return Dataset(header, cols[:n].copy(), cols[n:].copy(), values.copy())


def _read_text(path) -> Dataset:
    header_lines, rows = [], []
    with open(path) as fh:
        first = fh.readline().split()
        _check_version(int(first[-1]))
        for line in fh:
            if line.startswith("# setting_index"):
                continue
            if line.startswith("# "):
                header_lines.append(line[2:])
            elif line.strip():
                rows.append(line.split())
    header = json.loads("".join(header_lines))
    n = _declared_records(header)
    if len(rows) != n:
        raise TruncatedDatasetError(n, len(rows))
    if not rows:
        return Dataset(header, np.zeros(0), np.zeros(0), np.zeros(0))
    setting = np.array([int(r[0]) for r in rows])
    sample = np.array([int(r[1]) for r in rows])
    values = np.array([float(r[2]) for r in rows])
    return Dataset(header, setting, sample, values)


COVARIANCE_LABELS = ("p_s", "q_s", "p_a", "q_a")


def covariance_to_dataset(V, label: str = "covariance") -> Dataset:
    """Row-major covariance as a dataset: setting index = row, sample index = column."""
    m = np.asarray(V, dtype=float)
    n = m.shape[0]
    if m.shape != (n, n) or n % 4:
        raise DatasetError(f"covariance must be square with a multiple of 4 rows, got {m.shape}")
    labels = [f"{q}{k}" if n > 4 else q for k in range(n // 4) for q in COVARIANCE_LABELS]
    return Dataset.from_blocks(list(m), list(range(n)), beam=label, technique="covariance",
                               setting_axis="row", metadata={"quadrature_order": labels})


def dataset_to_covariance(ds: Dataset) -> np.ndarray:
    if ds.header["technique"] != "covariance":
        raise DatasetError(f"dataset holds a {ds.header['technique']!r} record, not a covariance")
    return np.array(ds.blocks())
