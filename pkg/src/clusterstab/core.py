"""Core data containers, reproducible seed streams, and dataset I/O.

Everything downstream builds on three small types: ``DataSet`` (weighted
point sets), ``Clustering`` (a labeling plus optional centers), and
``Seed`` (a node in a counter-based seed tree).  Randomized operations
take a ``Seed`` and derive child streams by integer index, so any cell of
a larger experiment can be re-run in isolation and reproduced bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Seed:
    """A node in a seed tree: a root integer plus a path of child indices.

    Equal (root, path) pairs always yield identical random streams;
    distinct paths yield statistically independent streams.
    """

    root: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not (0 <= int(self.root) < 2 ** 64):
            raise ValueError("seed root must be a uint64")
        object.__setattr__(self, "root", int(self.root))
        object.__setattr__(self, "path", tuple(int(i) for i in self.path))

    def child(self, index: int) -> "Seed":
        if index < 0:
            raise ValueError("stream index must be nonnegative")
        return Seed(self.root, self.path + (int(index),))

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.root, spawn_key=self.path)
        return np.random.default_rng(ss)


def derive_stream(seed: Seed, index: int) -> Seed:
    """Child seed for substream ``index``.  Shorthand for ``seed.child``."""
    return seed.child(index)


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True, order="C")
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DataSet:
    """A finite weighted point set in R^d.  Immutable after construction.

    ``id`` is an opaque provenance tag; ``subset`` records the parent tag
    and the selected row indices in it.
    """

    points: np.ndarray
    weights: np.ndarray
    id: object = "dataset"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D array, got shape %r" % (pts.shape,))
        n, d = pts.shape
        if n < 1 or d < 1:
            raise ValueError("dataset needs at least one point and one dimension")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (n,):
            raise ValueError("weights must have shape (%d,), got %r" % (n, w.shape))
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


def make_dataset(points, weights=None, id: object = "dataset") -> DataSet:
    """Build a DataSet from raw arrays.  Unit weights when none are given."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if weights is None:
        weights = np.ones(pts.shape[0] if pts.ndim == 2 else 0)
    return DataSet(points=pts, weights=np.asarray(weights, dtype=float), id=id)


def subset(data: DataSet, indices) -> DataSet:
    """Rows of ``data`` at ``indices``, in the given order.

    Indices may repeat.  The result's id records the parent id and the
    index tuple so overlap between subsets remains identifiable.
    """
    idx = np.asarray(indices, dtype=int)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("indices must be a nonempty 1-D sequence")
    if idx.min() < 0 or idx.max() >= data.n:
        raise ValueError("index out of range for dataset with %d points" % data.n)
    return DataSet(
        points=data.points[idx],
        weights=data.weights[idx],
        id=("subset", data.id, tuple(int(i) for i in idx)),
    )


@dataclass(frozen=True)
class Clustering:
    """Labels for n points into k clusters, with optional cluster centers.

    Labels are integers in [0, k).  Clusters may be empty.  ``centers``
    is a (k, d) array when the producing algorithm had centers.
    """

    labels: np.ndarray
    k: int
    centers: np.ndarray | None = None
    source_dataset: object = None

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=int)
        if lab.ndim != 1 or lab.size == 0:
            raise ValueError("labels must be a nonempty 1-D integer array")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if lab.min() < 0 or lab.max() >= self.k:
            raise ValueError("labels must lie in [0, %d)" % self.k)
        lab = np.array(lab, copy=True)
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)
        if self.centers is not None:
            c = np.asarray(self.centers, dtype=float)
            if c.ndim != 2 or c.shape[0] != self.k:
                raise ValueError("centers must have shape (k, d)")
            object.__setattr__(self, "centers", _readonly(c))

    @property
    def n(self) -> int:
        return self.labels.shape[0]


def save_dataset_csv(data: DataSet, path) -> None:
    """Write a dataset as CSV: header x1..xd, plus a final ``weight``
    column when any weight differs from 1."""
    path = Path(path)
    with_weights = bool(np.any(data.weights != 1.0))
    cols = ["x%d" % (j + 1) for j in range(data.d)]
    if with_weights:
        cols.append("weight")
    lines = [",".join(cols)]
    for i in range(data.n):
        row = [repr(float(v)) for v in data.points[i]]
        if with_weights:
            row.append(repr(float(data.weights[i])))
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def load_dataset_csv(path, id: object = None) -> DataSet:
    """Read a dataset written by ``save_dataset_csv``.

    The header row is required: columns x1..xd in order, optionally
    followed by ``weight``.
    """
    path = Path(path)
    text = path.read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty dataset file: %s" % path)
    header = [h.strip() for h in lines[0].split(",")]
    with_weights = header and header[-1] == "weight"
    coord_cols = header[:-1] if with_weights else header
    expected = ["x%d" % (j + 1) for j in range(len(coord_cols))]
    if coord_cols != expected:
        raise ValueError(
            "bad header %r; expected x1..xd optionally followed by weight" % (header,)
        )
    d = len(coord_cols)
    rows = []
    weights = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise ValueError("row has %d fields, header has %d" % (len(parts), len(header)))
        vals = [float(p) for p in parts]
        rows.append(vals[:d])
        if with_weights:
            weights.append(vals[d])
    if not rows:
        raise ValueError("dataset file has a header but no rows: %s" % path)
    return make_dataset(
        np.asarray(rows), np.asarray(weights) if with_weights else None,
        id=id if id is not None else str(path.name),
    )
