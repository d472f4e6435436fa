"""Dataset and report persistence.

A dataset lives in a directory: a ``key=value`` manifest, one matrix file
per view (``D_v x N``) and an optional label file with one integer per
line. Matrix files use the MVTD binary layout::

    b"MVTD" | version u8 (=1) | rows u64 LE | cols u64 LE | rows*cols float64 LE, column-major

or CSV with one sample per line (``N`` lines of ``D_v`` values). Every
write goes to a temporary file in the target directory which is then
renamed over the destination.
"""
from __future__ import annotations

import csv
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .msc import MultiViewDataset

MAGIC = b"MVTD"
VERSION = 1
_HEADER = struct.Struct("<4sBQQ")


class LoadError(ValueError):
    """Malformed or inconsistent input; the message names the file and offset."""

    def __init__(self, path, offset, reason: str):
        self.path = str(path)
        self.offset = offset
        super().__init__(f"{self.path}: {offset}: {reason}")


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# -- MVTD matrices ---------------------------------------------------------

def encode_matrix(m) -> bytes:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite values")
    header = _HEADER.pack(MAGIC, VERSION, m.shape[0], m.shape[1])
    return header + m.astype("<f8").tobytes(order="F")


def decode_matrix(buf: bytes, path="<bytes>") -> np.ndarray:
    if len(buf) < _HEADER.size:
        raise LoadError(path, len(buf), f"truncated header ({len(buf)} of {_HEADER.size} bytes)")
    magic, version, rows, cols = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise LoadError(path, 0, f"bad magic {magic!r}")
    if version != VERSION:
        raise LoadError(path, 4, f"unsupported format version {version}")
    want = _HEADER.size + 8 * rows * cols
    if len(buf) != want:
        raise LoadError(path, min(len(buf), want), f"expected {want} bytes for a {rows}x{cols} matrix, found {len(buf)}")
    m = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size).reshape((rows, cols), order="F")
    bad = np.flatnonzero(~np.isfinite(m.ravel(order="F")))
    if bad.size:
        raise LoadError(path, _HEADER.size + 8 * int(bad[0]), "non-finite value")
    return m.astype(np.float64)


def save_matrix(m, path) -> None:
    atomic_write_bytes(path, encode_matrix(m))


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise LoadError(path, 0, exc.strerror or str(exc)) from exc
    return decode_matrix(buf, path)


# -- CSV ---------------------------------------------------------------------

def load_csv_matrix(path) -> np.ndarray:
    """Read a CSV file with one sample per line; returns ``D x N``."""
    path = Path(path)
    rows = []
    try:
        with path.open(newline="") as fh:
            for lineno, rec in enumerate(csv.reader(fh), start=1):
                if not rec or all(not c.strip() for c in rec):
                    continue
                try:
                    vals = [float(c) for c in rec]
                except ValueError as exc:
                    raise LoadError(path, f"line {lineno}", f"not a number ({exc})") from None
                if not all(np.isfinite(vals)):
                    raise LoadError(path, f"line {lineno}", "non-finite value")
                if rows and len(vals) != len(rows[0]):
                    raise LoadError(path, f"line {lineno}", f"expected {len(rows[0])} fields, found {len(vals)}")
                rows.append(vals)
    except OSError as exc:
        raise LoadError(path, 0, exc.strerror or str(exc)) from exc
    if not rows:
        raise LoadError(path, 0, "no data")
    return np.array(rows, dtype=np.float64).T.copy(order="F")


def save_csv_matrix(m, path) -> None:
    m = np.asarray(m, dtype=np.float64)
    lines = [",".join(repr(float(v)) for v in col) for col in m.T]
    atomic_write_text(path, "\n".join(lines) + "\n")


def _load_view(path) -> np.ndarray:
    return load_csv_matrix(path) if Path(path).suffix.lower() == ".csv" else load_matrix(path)


# -- labels ------------------------------------------------------------------

def load_labels(path) -> np.ndarray:
    path = Path(path)
    out = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise LoadError(path, 0, exc.strerror or str(exc)) from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            out.append(int(line))
        except ValueError:
            raise LoadError(path, f"line {lineno}", f"not an integer: {line!r}") from None
    if not out:
        raise LoadError(path, 0, "no labels")
    return np.array(out, dtype=np.int64)


def save_labels(labels, path) -> None:
    atomic_write_text(path, "".join(f"{int(x)}\n" for x in np.asarray(labels).ravel()))


# -- manifest ----------------------------------------------------------------

@dataclass
class DatasetManifest:
    n_samples: int
    n_views: int
    n_clusters: int | None
    dims: list[int]
    view_files: list[str]
    labels_file: str | None = None

    def to_text(self) -> str:
        lines = [
            f"n_samples={self.n_samples}",
            f"n_views={self.n_views}",
            f"dims={','.join(map(str, self.dims))}",
            f"views={','.join(self.view_files)}",
        ]
        if self.n_clusters is not None:
            lines.append(f"n_clusters={self.n_clusters}")
        if self.labels_file is not None:
            lines.append(f"labels={self.labels_file}")
        return "\n".join(lines) + "\n"


def parse_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise LoadError(path, 0, exc.strerror or str(exc)) from exc
    kv: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise LoadError(path, f"line {lineno}", f"expected key=value, found {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        kv[key] = (value, lineno)

    def need(key):
        if key not in kv:
            raise LoadError(path, 0, f"missing key {key!r}")
        return kv[key]

    def as_int(key, value, lineno):
        try:
            return int(value)
        except ValueError:
            raise LoadError(path, f"line {lineno}", f"{key} must be an integer, found {value!r}") from None

    n_samples = as_int("n_samples", *need("n_samples"))
    n_views = as_int("n_views", *need("n_views"))
    dims_v, dims_line = need("dims")
    dims = [as_int("dims", d, dims_line) for d in dims_v.split(",")]
    views_v, views_line = need("views")
    views = [v.strip() for v in views_v.split(",")]
    n_clusters = as_int("n_clusters", *kv["n_clusters"]) if "n_clusters" in kv else None
    labels = kv["labels"][0] if "labels" in kv else None
    if n_views < 1:
        raise LoadError(path, f"line {kv['n_views'][1]}", "n_views must be >= 1")
    if len(dims) != n_views:
        raise LoadError(path, f"line {dims_line}", f"{len(dims)} dims listed for {n_views} views")
    if len(views) != n_views:
        raise LoadError(path, f"line {views_line}", f"{len(views)} files listed for {n_views} views")
    return DatasetManifest(n_samples, n_views, n_clusters, dims, views, labels)


def load_dataset(path) -> MultiViewDataset:
    """Load a dataset from its manifest file (or a directory holding ``manifest.txt``)."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.txt"
    man = parse_manifest(path)
    base = path.parent
    views = []
    for v, (fname, d) in enumerate(zip(man.view_files, man.dims)):
        vpath = base / fname
        x = _load_view(vpath)
        if x.shape != (d, man.n_samples):
            raise LoadError(vpath, 0, f"view {v} is {x.shape[0]}x{x.shape[1]}, manifest declares {d}x{man.n_samples}")
        views.append(x)
    labels = None
    if man.labels_file is not None:
        lpath = base / man.labels_file
        labels = load_labels(lpath)
        if labels.size != man.n_samples:
            raise LoadError(lpath, 0, f"{labels.size} labels for {man.n_samples} samples")
    try:
        return MultiViewDataset(views=views, labels=labels, num_clusters=man.n_clusters)
    except ValueError as exc:
        raise LoadError(path, 0, str(exc)) from exc


def save_dataset(dataset: MultiViewDataset, path) -> Path:
    """Write MVTD view files, labels and a manifest; returns the manifest path."""
    path = Path(path)
    if path.suffix == "":
        path = path / "manifest.txt"
    base = path.parent
    files = []
    for v, x in enumerate(dataset.views):
        fname = f"view{v}.mvtd"
        save_matrix(x, base / fname)
        files.append(fname)
    labels_file = None
    if dataset.labels is not None:
        labels_file = "labels.txt"
        save_labels(dataset.labels, base / labels_file)
    man = DatasetManifest(
        n_samples=dataset.n_samples, n_views=dataset.n_views, n_clusters=dataset.num_clusters,
        dims=[x.shape[0] for x in dataset.views], view_files=files, labels_file=labels_file,
    )
    atomic_write_text(path, man.to_text())
    return path


# -- run reports ---------------------------------------------------------------

@dataclass
class RunReport:
    config: dict = field(default_factory=dict)
    metrics: dict | None = None
    residual_trace: list[tuple[float, float]] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    labels: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, (tuple, list)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    return x


def report_to_text(report: RunReport) -> str:
    """One ``dotted.key = <json>`` line per field; floats keep full precision."""
    lines = []

    def put(key, value):
        lines.append(f"{key} = {json.dumps(_jsonable(value), allow_nan=False)}")

    for section, d in (("config", report.config), ("metrics", report.metrics),
                       ("timings", report.timings), ("extra", report.extra)):
        for k in sorted(d or {}):
            put(f"{section}.{k}", d[k])
    if report.residual_trace:
        put("trace.re", [float(r) for r, _ in report.residual_trace])
        put("trace.me", [float(m) for _, m in report.residual_trace])
    if report.labels is not None:
        put("labels", [int(x) for x in np.asarray(report.labels).ravel()])
    return "\n".join(lines) + "\n"


def report_from_text(text: str, path="<text>") -> RunReport:
    rep = RunReport()
    sections = {"config": rep.config, "timings": rep.timings, "extra": rep.extra}
    metrics: dict = {}
    re_tr = me_tr = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        key, sep, value = raw.partition(" = ")
        if not sep:
            raise LoadError(path, f"line {lineno}", "expected 'key = value'")
        try:
            val = json.loads(value)
        except json.JSONDecodeError as exc:
            raise LoadError(path, f"line {lineno}", f"bad value ({exc.msg})") from None
        head, _, tail = key.partition(".")
        if head in sections and tail:
            sections[head][tail] = val
        elif head == "metrics" and tail:
            metrics[tail] = val
        elif key == "trace.re":
            re_tr = val
        elif key == "trace.me":
            me_tr = val
        elif key == "labels":
            rep.labels = np.array(val, dtype=np.int64)
        else:
            raise LoadError(path, f"line {lineno}", f"unknown key {key!r}")
    if (re_tr is None) != (me_tr is None) or (re_tr is not None and len(re_tr) != len(me_tr)):
        raise LoadError(path, 0, "trace.re and trace.me must both be present with equal length")
    if re_tr is not None:
        rep.residual_trace = list(zip(map(float, re_tr), map(float, me_tr)))
    rep.metrics = metrics or None
    return rep


def save_report(report: RunReport, path) -> None:
    atomic_write_text(path, report_to_text(report))


def load_report(path) -> RunReport:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise LoadError(path, 0, exc.strerror or str(exc)) from exc
    return report_from_text(text, path)
