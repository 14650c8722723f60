"""Perturbed versions of a dataset, and null references for calibration.

Each generator takes a ``Seed`` and is a pure function of (inputs,
seed).  Subsampling and bootstrapping also return the parent row index
of every retained point so that clusterings of two perturbed copies can
later be compared on their overlap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataSet, Seed, subset

SCHEME_KINDS = ("subsample", "bootstrap", "noise", "projection", "fresh_sample")
DEFAULT_SUBSAMPLE_FRACTION = 0.8


@dataclass(frozen=True)
class PerturbationScheme:
    """Which perturbation to apply and its parameters.

    kind:
        subsample     draw ceil(fraction * n) points without replacement
        bootstrap     n draws with replacement, kept as multiplicity weights
        noise         add isotropic Gaussian noise of scale ``noise_scale``
        projection    random Gaussian projection to ``target_dim`` dimensions
        fresh_sample  a new sample from the generating distribution
                      (only meaningful for synthetic sources)
    """

    kind: str
    fraction: float = DEFAULT_SUBSAMPLE_FRACTION
    noise_scale: float | None = None
    target_dim: int | None = None

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError("unknown scheme kind %r; choose from %s" % (self.kind, SCHEME_KINDS))
        if self.kind == "subsample" and not (0 < self.fraction <= 1):
            raise ValueError("subsample fraction must lie in (0, 1]")
        if self.kind == "noise" and (self.noise_scale is None or self.noise_scale <= 0):
            raise ValueError("noise scheme needs a positive noise_scale")
        if self.kind == "projection" and (self.target_dim is None or self.target_dim < 1):
            raise ValueError("projection scheme needs target_dim >= 1")


def subsample(data: DataSet, fraction: float, seed: Seed):
    """Uniform subsample without replacement of ceil(fraction * n)
    points.  Returns (subsample, parent_indices).  fraction = 1 yields a
    random permutation of the data."""
    if not (0 < fraction <= 1):
        raise ValueError("fraction must lie in (0, 1]")
    m = int(np.ceil(fraction * data.n))
    rng = seed.rng()
    idx = rng.choice(data.n, size=m, replace=False)
    return subset(data, idx), idx


def bootstrap(data: DataSet, seed: Seed):
    """n uniform draws with replacement, returned as the distinct drawn
    points with integer multiplicity weights (weights sum to n).  Each
    row counts as one observation regardless of its original weight.
    Returns (resample, parent_indices) with one index per retained row."""
    rng = seed.rng()
    draws = rng.integers(0, data.n, size=data.n)
    counts = np.bincount(draws, minlength=data.n)
    kept = np.flatnonzero(counts)
    return (
        DataSet(
            points=data.points[kept],
            weights=counts[kept].astype(float),
            id=("bootstrap", data.id, tuple(int(i) for i in kept)),
        ),
        kept,
    )


def add_noise(data: DataSet, noise_scale: float, seed: Seed) -> DataSet:
    """Add i.i.d. Gaussian noise of standard deviation ``noise_scale``
    to every coordinate.  Weights are preserved."""
    if noise_scale <= 0:
        raise ValueError("noise_scale must be positive")
    rng = seed.rng()
    noisy = data.points + rng.normal(0.0, noise_scale, size=data.points.shape)
    return DataSet(points=noisy, weights=data.weights, id=("noise", data.id))


def random_projection(data: DataSet, target_dim: int, seed: Seed) -> DataSet:
    """Project onto ``target_dim`` random Gaussian directions scaled by
    1/sqrt(target_dim), so squared norms are preserved in expectation."""
    if not (1 <= target_dim):
        raise ValueError("target_dim must be at least 1")
    if target_dim > data.d:
        raise ValueError("target_dim cannot exceed the data dimension")
    rng = seed.rng()
    mat = rng.normal(0.0, 1.0, size=(data.d, target_dim)) / np.sqrt(target_dim)
    return DataSet(
        points=data.points @ mat, weights=data.weights, id=("projection", data.id)
    )


def null_uniform_box(data: DataSet, n: int, seed: Seed) -> DataSet:
    """n unit-weight points drawn uniformly from the axis-aligned
    bounding box of ``data``.  Degenerate coordinates stay constant."""
    if n < 1:
        raise ValueError("n must be at least 1")
    lo = data.points.min(axis=0)
    hi = data.points.max(axis=0)
    rng = seed.rng()
    pts = rng.uniform(lo, hi, size=(n, data.d))
    # rng.uniform(lo, lo) can round off; pin degenerate columns exactly
    flat = hi == lo
    if np.any(flat):
        pts[:, flat] = lo[flat]
    return DataSet(points=pts, weights=np.ones(n), id=("null_uniform_box", data.id))


def null_scramble(data: DataSet, seed: Seed) -> DataSet:
    """Destroy cluster structure while keeping marginals: each
    coordinate column is independently permuted.  Weights carry over
    unpermuted."""
    if data.n < 2:
        raise ValueError("scrambling needs at least two points")
    rng = seed.rng()
    pts = np.empty_like(data.points)
    for j in range(data.d):
        pts[:, j] = data.points[rng.permutation(data.n), j]
    return DataSet(points=pts, weights=data.weights, id=("null_scramble", data.id))


def apply_scheme(scheme: PerturbationScheme, data: DataSet, seed: Seed):
    """Apply a perturbation scheme to a dataset.  Returns
    (perturbed, parent_indices or None).  ``fresh_sample`` has no
    meaning for a fixed dataset and must be handled by the caller."""
    if scheme.kind == "subsample":
        return subsample(data, scheme.fraction, seed)
    if scheme.kind == "bootstrap":
        return bootstrap(data, seed)
    if scheme.kind == "noise":
        return add_noise(data, scheme.noise_scale, seed), np.arange(data.n)
    if scheme.kind == "projection":
        return random_projection(data, scheme.target_dim, seed), np.arange(data.n)
    raise ValueError("scheme %r does not apply to a fixed dataset" % scheme.kind)
