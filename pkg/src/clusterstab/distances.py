"""Distances between clusterings, plus the operators that put two
clusterings of different samples onto a common domain.

All distances operate on a ``LabelPair``: two label vectors over the
same points.  To compare clusterings of different samples, either extend
both to a shared point set through their centers
(``extend_by_centers``) or restrict both to the overlap of their source
samples (``restrict_to_overlap``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Clustering
from .kmeans import assign_labels


@dataclass(frozen=True)
class LabelPair:
    """Two labelings of the same n points, with cluster counts k_a, k_b."""

    labels_a: np.ndarray
    labels_b: np.ndarray
    k_a: int
    k_b: int

    def __post_init__(self):
        a = np.asarray(self.labels_a, dtype=int)
        b = np.asarray(self.labels_b, dtype=int)
        if a.ndim != 1 or a.shape != b.shape or a.size == 0:
            raise ValueError("label vectors must be 1-D, nonempty, equal length")
        for lab, k, name in ((a, self.k_a, "a"), (b, self.k_b, "b")):
            if k < 1 or lab.min() < 0 or lab.max() >= k:
                raise ValueError("labels_%s must lie in [0, k_%s)" % (name, name))
        a = np.array(a, copy=True)
        b = np.array(b, copy=True)
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "labels_a", a)
        object.__setattr__(self, "labels_b", b)

    @property
    def n(self) -> int:
        return self.labels_a.shape[0]


def label_pair(labels_a, labels_b, k_a: int | None = None, k_b: int | None = None) -> LabelPair:
    a = np.asarray(labels_a, dtype=int)
    b = np.asarray(labels_b, dtype=int)
    if k_a is None:
        k_a = int(a.max()) + 1 if a.size else 1
    if k_b is None:
        k_b = int(b.max()) + 1 if b.size else 1
    return LabelPair(a, b, k_a, k_b)


def _contingency(pair: LabelPair) -> np.ndarray:
    """(k_a, k_b) table of joint label counts."""
    flat = pair.labels_a * pair.k_b + pair.labels_b
    counts = np.bincount(flat, minlength=pair.k_a * pair.k_b)
    return counts.reshape(pair.k_a, pair.k_b)


def minimal_matching_distance(pair: LabelPair) -> float:
    """Smallest fraction of disagreeing points over all one-to-one
    relabelings of one side.  Solved exactly as an assignment problem on
    the (padded) agreement matrix."""
    k = max(pair.k_a, pair.k_b)
    table = np.zeros((k, k))
    table[: pair.k_a, : pair.k_b] = _contingency(pair)
    rows, cols = linear_sum_assignment(-table)
    agreement = table[rows, cols].sum()
    return float(1.0 - agreement / pair.n)


def hamming_distance(pair: LabelPair) -> float:
    """Fraction of points whose labels differ as given, no relabeling."""
    return float(np.mean(pair.labels_a != pair.labels_b))


def _pair_counts(pair: LabelPair):
    table = _contingency(pair).astype(float)
    n = pair.n
    total = n * (n - 1) / 2.0
    same_both = (table * (table - 1) / 2.0).sum()
    row = table.sum(axis=1)
    col = table.sum(axis=0)
    same_a = (row * (row - 1) / 2.0).sum()
    same_b = (col * (col - 1) / 2.0).sum()
    return total, same_both, same_a, same_b


def rand_distance(pair: LabelPair) -> float:
    """One minus the Rand index: fraction of point pairs on which the
    two clusterings disagree about co-membership."""
    total, same_both, same_a, same_b = _pair_counts(pair)
    if total == 0:
        return 0.0
    diff_both = total - same_a - same_b + same_both
    return float(1.0 - (same_both + diff_both) / total)


def jaccard_distance(pair: LabelPair) -> float:
    """One minus the Jaccard index over co-clustered point pairs."""
    _, same_both, same_a, same_b = _pair_counts(pair)
    union = same_a + same_b - same_both
    if union == 0:
        return 0.0
    return float(1.0 - same_both / union)


def variation_of_information(pair: LabelPair) -> float:
    """Sum of the two conditional entropies H(A|B) + H(B|A), in nats.
    Zero exactly when the partitions coincide up to relabeling."""
    table = _contingency(pair).astype(float)
    p = table / pair.n
    pa = p.sum(axis=1)
    pb = p.sum(axis=0)

    def ent(q):
        q = q[q > 0]
        return float(-(q * np.log(q)).sum())

    h_a = ent(pa)
    h_b = ent(pb)
    mask = p > 0
    mi = float(
        (p[mask] * (np.log(p[mask]) - np.log(np.outer(pa, pb)[mask]))).sum()
    )
    return max(0.0, h_a + h_b - 2.0 * mi)


DISTANCES = {
    "mmd": minimal_matching_distance,
    "hamming": hamming_distance,
    "rand": rand_distance,
    "jaccard": jaccard_distance,
    "vi": variation_of_information,
}


def resolve_distance(distance):
    """Accept a distance name from ``DISTANCES`` or a callable."""
    if callable(distance):
        return distance
    try:
        return DISTANCES[distance]
    except KeyError:
        raise KeyError(
            "unknown distance %r; choose from %s" % (distance, sorted(DISTANCES))
        ) from None


def extend_by_centers(clustering: Clustering, points: np.ndarray) -> np.ndarray:
    """Labels for arbitrary ``points`` under a clustering's centers."""
    if clustering.centers is None:
        raise ValueError("clustering has no centers to extend with")
    return assign_labels(np.asarray(points, dtype=float), clustering.centers)


def restrict_to_overlap(
    clust_a: Clustering,
    parent_indices_a,
    clust_b: Clustering,
    parent_indices_b,
) -> LabelPair:
    """Restrict two clusterings of subsamples of a common parent to the
    points both subsamples contain.

    ``parent_indices_*`` map each sample row to its parent row.  When an
    index repeats, its first occurrence is used.  The overlap is taken
    in increasing parent-index order.  Raises when the overlap is empty.
    """
    ia = np.asarray(parent_indices_a, dtype=int)
    ib = np.asarray(parent_indices_b, dtype=int)
    if ia.shape != (clust_a.n,) or ib.shape != (clust_b.n,):
        raise ValueError("parent index arrays must match the clustering lengths")
    shared, pos_a, pos_b = np.intersect1d(ia, ib, return_indices=True)
    if shared.size == 0:
        raise ValueError("subsamples share no parent points")
    return LabelPair(
        labels_a=clust_a.labels[pos_a],
        labels_b=clust_b.labels[pos_b],
        k_a=clust_a.k,
        k_b=clust_b.k,
    )
