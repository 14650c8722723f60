"""Weighted Lloyd iteration, initialization schemes, and run diagnostics.

Two usage modes matter for stability work.  The idealized mode restarts
Lloyd many times and keeps the best objective, approximating a global
minimizer.  The realistic mode runs Lloyd once from a single
initialization, so the outcome depends on where that initialization
lands; ``init_scheme_pruned`` implements the preliminary-center scheme
whose behavior that mode is meant to expose.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Clustering, DataSet, Seed, derive_stream

DEFAULT_MAX_ITER = 300
DEFAULT_TOL = 1e-8
DEFAULT_RESTARTS = 50


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, k) squared Euclidean distances via explicit differences; the
    # expanded x^2 - 2xc + c^2 form breaks exact ties between centers.
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def assign_labels(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Nearest-center label per point, lowest center index on ties."""
    points = np.asarray(points, dtype=float)
    centers = np.asarray(centers, dtype=float)
    if points.ndim != 2 or centers.ndim != 2 or points.shape[1] != centers.shape[1]:
        raise ValueError("points and centers must be 2-D with equal dimension")
    if centers.shape[0] < 1:
        raise ValueError("need at least one center")
    return np.argmin(_sq_dists(points, centers), axis=1)


def eval_objective(data: DataSet, centers: np.ndarray) -> float:
    """Weighted mean squared distance to the nearest center:
    (1/W) * sum_i w_i * min_k ||X_i - c_k||^2."""
    centers = np.asarray(centers, dtype=float)
    d2 = _sq_dists(data.points, centers)
    return float(np.dot(data.weights, d2.min(axis=1)) / data.total_weight)


def lloyd_step(data: DataSet, centers: np.ndarray):
    """One Lloyd update: assign to nearest center, recompute weighted
    means.  A cluster with zero assigned weight keeps its previous
    center.  Returns (new_centers, labels), labels being the assignment
    to the centers passed in."""
    centers = np.asarray(centers, dtype=float)
    k = centers.shape[0]
    labels = assign_labels(data.points, centers)
    w = data.weights
    mass = np.bincount(labels, weights=w, minlength=k)
    new_centers = centers.copy()
    occupied = mass > 0
    for j in range(data.d):
        col = np.bincount(labels, weights=w * data.points[:, j], minlength=k)
        new_centers[occupied, j] = col[occupied] / mass[occupied]
    return new_centers, labels


@dataclass(frozen=True)
class KMeansResult:
    clustering: Clustering
    objective: float
    iterations: int
    converged: bool
    init_centers: np.ndarray


def run_lloyd(
    data: DataSet,
    init_centers: np.ndarray,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> KMeansResult:
    """Iterate Lloyd updates from ``init_centers`` until the largest
    center displacement is at most ``tol`` or ``max_iter`` is reached."""
    init_centers = np.array(init_centers, dtype=float, copy=True)
    if init_centers.ndim != 2 or init_centers.shape[1] != data.d:
        raise ValueError("init_centers must be (k, d) with d matching the data")
    if not (1 <= init_centers.shape[0]):
        raise ValueError("need at least one initial center")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    centers = init_centers
    converged = False
    iterations = 0
    for _ in range(max_iter):
        new_centers, _ = lloyd_step(data, centers)
        iterations += 1
        movement = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        if movement <= tol:
            converged = True
            break
    labels = assign_labels(data.points, centers)
    clustering = Clustering(
        labels=labels, k=centers.shape[0], centers=centers, source_dataset=data.id
    )
    return KMeansResult(
        clustering=clustering,
        objective=eval_objective(data, centers),
        iterations=iterations,
        converged=converged,
        init_centers=init_centers,
    )


def _distinct_rows(data: DataSet):
    # unique rows with aggregated weights; np.unique sorts rows, which
    # keeps the reduction deterministic
    uniq, inverse = np.unique(data.points, axis=0, return_inverse=True)
    agg = np.bincount(inverse.ravel(), weights=data.weights, minlength=uniq.shape[0])
    return uniq, agg


def init_uniform_points(data: DataSet, k: int, seed: Seed) -> np.ndarray:
    """k distinct data points drawn without replacement, each distinct
    point weighted by its total weight."""
    if k < 1:
        raise ValueError("k must be at least 1")
    uniq, agg = _distinct_rows(data)
    if uniq.shape[0] < k:
        raise ValueError(
            "need %d distinct points but dataset has only %d" % (k, uniq.shape[0])
        )
    rng = seed.rng()
    idx = rng.choice(uniq.shape[0], size=k, replace=False, p=agg / agg.sum())
    return uniq[idx].copy()


def init_scheme_pruned(
    data: DataSet,
    k: int,
    seed: Seed,
    num_preliminary: int | None = None,
    min_mass: float | None = None,
) -> np.ndarray:
    """Preliminary-center initialization with pruning.

    Draws L preliminary centers uniformly from the data (weight
    proportional, without replacement), runs one Lloyd step, removes
    centers whose assigned weight fraction is below ``min_mass``, then
    picks k of the survivors by farthest-first traversal starting from a
    uniformly chosen one.  If pruning leaves fewer than k centers, the k
    heaviest preliminary centers are retained instead.

    Defaults: L = ceil(k * ln(max(k, 2))) clamped to the number of
    distinct points, min_mass = 1 / (2 L).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    uniq_count = _distinct_rows(data)[0].shape[0]
    if uniq_count < k:
        raise ValueError(
            "need %d distinct points but dataset has only %d" % (k, uniq_count)
        )
    L = num_preliminary
    if L is None:
        L = math.ceil(k * math.log(max(k, 2)))
    L = min(int(L), uniq_count)
    if L < k:
        raise ValueError("num_preliminary must be at least k")
    p0 = 1.0 / (2 * L) if min_mass is None else float(min_mass)
    if not (0 <= p0 < 1):
        raise ValueError("min_mass must lie in [0, 1)")

    prelim = init_uniform_points(data, L, derive_stream(seed, 0))
    labels = assign_labels(data.points, prelim)
    mass = np.bincount(labels, weights=data.weights, minlength=L)
    frac = mass / data.total_weight
    adjusted = prelim.copy()
    occupied = mass > 0
    for j in range(data.d):
        col = np.bincount(labels, weights=data.weights * data.points[:, j], minlength=L)
        adjusted[occupied, j] = col[occupied] / mass[occupied]

    keep = frac >= p0
    if keep.sum() < k:
        # over-pruned: fall back to the k heaviest preliminary centers
        order = np.argsort(-frac, kind="stable")
        keep = np.zeros(L, dtype=bool)
        keep[order[:k]] = True
    survivors = adjusted[keep]

    rng = derive_stream(seed, 1).rng()
    first = int(rng.integers(survivors.shape[0]))
    chosen = [first]
    min_d2 = _sq_dists(survivors, survivors[first][None, :])[:, 0]
    while len(chosen) < k:
        min_d2[chosen] = -np.inf
        nxt = int(np.argmax(min_d2))
        chosen.append(nxt)
        d2 = _sq_dists(survivors, survivors[nxt][None, :])[:, 0]
        min_d2 = np.minimum(min_d2, d2)
    return survivors[chosen].copy()


def idealized_kmeans(
    data: DataSet,
    k: int,
    seed: Seed,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> KMeansResult:
    """Best of ``restarts`` Lloyd runs from uniform data-point
    initializations.  Restart r draws its initialization from child
    stream r of ``seed``, so enlarging ``restarts`` keeps the earlier
    runs unchanged and the best objective non-increasing.  Ties keep the
    earliest restart."""
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    best = None
    for r in range(restarts):
        init = init_uniform_points(data, k, derive_stream(seed, r))
        res = run_lloyd(data, init, max_iter=max_iter, tol=tol)
        if best is None or res.objective < best.objective:
            best = res
    return best


@dataclass(frozen=True)
class InitConfigurationReport:
    """How initial centers distribute over disjoint balls around true
    component means: per-ball center counts, whether every ball received
    a center, and each center's ball index (None when outside all)."""

    counts: np.ndarray
    covered: bool
    region_assignments: tuple

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=int)
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "region_assignments", tuple(self.region_assignments))


def report_configuration(
    init_centers: np.ndarray, true_means: np.ndarray, radius: float
) -> InitConfigurationReport:
    """Classify ``init_centers`` into closed balls of ``radius`` around
    ``true_means``.  The balls must be pairwise disjoint."""
    centers = np.atleast_2d(np.asarray(init_centers, dtype=float))
    means = np.atleast_2d(np.asarray(true_means, dtype=float))
    if radius <= 0:
        raise ValueError("radius must be positive")
    if centers.shape[1] != means.shape[1]:
        raise ValueError("centers and means must share a dimension")
    m = means.shape[0]
    for a in range(m):
        for b in range(a + 1, m):
            if float(np.linalg.norm(means[a] - means[b])) <= 2 * radius:
                raise ValueError(
                    "balls of radius %g around means %d and %d overlap" % (radius, a, b)
                )
    d2 = _sq_dists(centers, means)
    nearest = np.argmin(d2, axis=1)
    inside = d2[np.arange(centers.shape[0]), nearest] <= radius ** 2
    assignments = [int(nearest[i]) if inside[i] else None for i in range(centers.shape[0])]
    counts = np.bincount(
        [a for a in assignments if a is not None], minlength=m
    ).astype(int)
    return InitConfigurationReport(
        counts=counts, covered=bool(np.all(counts >= 1)), region_assignments=assignments
    )
