"""Instability estimation, normalization, selection rules, and the
decision-boundary tube diagnostic.

The instability of an algorithm at a given k is the expected distance
between clusterings computed on two perturbed samples.  Estimators here
differ in how they spend a replicate budget: ``all_pairs`` compares
every pair of B replicate clusterings (the normalized double sum keeps
the zero diagonal), ``vs_original`` compares each replicate to a
reference clustering, and ``disjoint_pairs`` uses independent sample
pairs, which makes the estimate at sample size n meaningful for
rescaling by sqrt(n).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Clustering, DataSet, Seed, derive_stream
from .distances import (
    LabelPair,
    extend_by_centers,
    resolve_distance,
    restrict_to_overlap,
)
from .kmeans import assign_labels

COMPARISONS = ("center_extend", "overlap_restrict")
PROTOCOLS = ("all_pairs", "disjoint_pairs", "vs_original")
DEFAULT_BOOTSTRAP_RESAMPLES = 1000


@dataclass(frozen=True)
class ClusteredSample:
    """A clustering together with the sample it was computed on and,
    when the sample came out of a shared parent dataset, the parent row
    index of each sample row."""

    clustering: Clustering
    points: np.ndarray
    parent_indices: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] != self.clustering.n:
            raise ValueError("points must be (n, d) matching the clustering")
        object.__setattr__(self, "points", pts)
        if self.parent_indices is not None:
            idx = np.asarray(self.parent_indices, dtype=int)
            if idx.shape != (self.clustering.n,):
                raise ValueError("parent_indices must have one entry per point")
            object.__setattr__(self, "parent_indices", idx)


@dataclass(frozen=True)
class InstabilityEstimate:
    """An instability estimate at one (k, n) cell.

    ``distances`` holds every term of the estimator's average, so the
    mean always equals the arithmetic mean of ``distances``; for
    ``all_pairs`` that is the full replicate-by-replicate matrix
    (zero diagonal included) in row-major order.  ``stdev`` is computed
    over the distinct off-diagonal comparisons only, and ``num_pairs``
    counts those comparisons.
    """

    k: int
    n: int | None
    mean: float
    stdev: float
    num_pairs: int
    distance_name: str
    protocol: str
    distances: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=float)
        d.flags.writeable = False
        object.__setattr__(self, "distances", d)
        if self.protocol not in PROTOCOLS:
            raise ValueError("unknown protocol %r" % self.protocol)

    def pair_distances(self) -> np.ndarray:
        """The distinct comparison values (no structural zeros)."""
        if self.protocol == "all_pairs":
            b = int(round(np.sqrt(self.distances.size)))
            mat = self.distances.reshape(b, b)
            iu = np.triu_indices(b, k=1)
            return mat[iu]
        return self.distances


def _distance_label(distance) -> str:
    if isinstance(distance, str):
        return distance
    return getattr(distance, "__name__", "custom")


def _union_points(a: ClusteredSample, b: ClusteredSample) -> np.ndarray:
    """Point set both clusterings get extended to.  With parent indices
    on both sides, shared parent rows are included once; otherwise the
    two samples are concatenated."""
    if a.parent_indices is not None and b.parent_indices is not None:
        fresh = ~np.isin(b.parent_indices, a.parent_indices)
        return np.vstack([a.points, b.points[fresh]])
    return np.vstack([a.points, b.points])


def compare_replicates(
    a: ClusteredSample, b: ClusteredSample, distance, comparison: str
) -> float:
    """Distance between two replicate clusterings under the chosen
    common-domain construction."""
    distance_fn = resolve_distance(distance)
    if comparison == "center_extend":
        union = _union_points(a, b)
        pair = LabelPair(
            labels_a=extend_by_centers(a.clustering, union),
            labels_b=extend_by_centers(b.clustering, union),
            k_a=a.clustering.k,
            k_b=b.clustering.k,
        )
    elif comparison == "overlap_restrict":
        if a.parent_indices is None or b.parent_indices is None:
            raise ValueError("overlap_restrict needs parent indices on both samples")
        pair = restrict_to_overlap(
            a.clustering, a.parent_indices, b.clustering, b.parent_indices
        )
    else:
        raise ValueError("unknown comparison %r; choose from %s" % (comparison, COMPARISONS))
    return float(distance_fn(pair))


def _k_of(replicates) -> int:
    ks = {r.clustering.k for r in replicates}
    if len(ks) != 1:
        raise ValueError("replicate clusterings disagree on k: %s" % sorted(ks))
    return ks.pop()


def _spread(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def estimate_instability_all_pairs(
    replicates,
    distance="mmd",
    comparison: str = "center_extend",
    n: int | None = None,
) -> InstabilityEstimate:
    """Mean pairwise distance over all ordered replicate pairs,
    diagonal included: (1/B^2) * sum_{b,b'} d(C_b, C_b')."""
    replicates = list(replicates)
    B = len(replicates)
    if B < 2:
        raise ValueError("need at least two replicates")
    k = _k_of(replicates)
    mat = np.zeros((B, B))
    for i in range(B):
        for j in range(i + 1, B):
            d = compare_replicates(replicates[i], replicates[j], distance, comparison)
            mat[i, j] = mat[j, i] = d
    iu = np.triu_indices(B, k=1)
    return InstabilityEstimate(
        k=k,
        n=n,
        mean=float(mat.mean()),
        stdev=_spread(mat[iu]),
        num_pairs=B * (B - 1) // 2,
        distance_name=_distance_label(distance),
        protocol="all_pairs",
        distances=mat.ravel(),
    )


def estimate_instability_vs_original(
    reference: ClusteredSample,
    replicates,
    distance="mmd",
    comparison: str = "center_extend",
    n: int | None = None,
) -> InstabilityEstimate:
    """Mean distance between a reference clustering and each replicate."""
    replicates = list(replicates)
    if not replicates:
        raise ValueError("need at least one replicate")
    k = _k_of(replicates + [reference])
    vals = np.array(
        [compare_replicates(reference, r, distance, comparison) for r in replicates]
    )
    return InstabilityEstimate(
        k=k,
        n=n,
        mean=float(vals.mean()),
        stdev=_spread(vals),
        num_pairs=vals.size,
        distance_name=_distance_label(distance),
        protocol="vs_original",
        distances=vals,
    )


def estimate_instability_disjoint_pairs(
    sampler,
    algorithm,
    k: int,
    n: int,
    num_pairs: int,
    seed: Seed,
    distance="mmd",
) -> InstabilityEstimate:
    """Unbiased instability estimate from ``num_pairs`` disjoint sample
    pairs: draw 2m independent samples of size n, cluster each, and
    average the distance within consecutive pairs, comparing by center
    extension on the union.

    ``sampler(n, seed) -> DataSet`` draws a sample; ``algorithm(data,
    k, seed) -> Clustering`` must attach centers.
    """
    if num_pairs < 1:
        raise ValueError("need at least one pair")
    distance_fn = resolve_distance(distance)
    vals = np.empty(num_pairs)
    for i in range(num_pairs):
        pair_seed = derive_stream(seed, i)
        reps = []
        for side in (0, 1):
            side_seed = derive_stream(pair_seed, side)
            data = sampler(n, derive_stream(side_seed, 0))
            clust = algorithm(data, k, derive_stream(side_seed, 1))
            if clust.k != k:
                raise ValueError("algorithm returned k=%d, expected %d" % (clust.k, k))
            reps.append(ClusteredSample(clustering=clust, points=data.points))
        vals[i] = compare_replicates(reps[0], reps[1], distance_fn, "center_extend")
    return InstabilityEstimate(
        k=k,
        n=n,
        mean=float(vals.mean()),
        stdev=_spread(vals),
        num_pairs=num_pairs,
        distance_name=_distance_label(distance),
        protocol="disjoint_pairs",
        distances=vals,
    )


def permutation_null(
    clusterings,
    seed: Seed,
    distance="mmd",
    n: int | None = None,
) -> InstabilityEstimate:
    """Instability of the given clusterings after randomly permuting
    which point carries which label: clustering b keeps its label
    multiset but point i receives the label of point perm_b(i).  All
    clusterings must live on a common domain.  Aggregation matches
    ``estimate_instability_all_pairs``."""
    clusterings = list(clusterings)
    B = len(clusterings)
    if B < 2:
        raise ValueError("need at least two clusterings")
    sizes = {c.n for c in clusterings}
    if len(sizes) != 1:
        raise ValueError("permutation null needs clusterings on a common domain")
    m = sizes.pop()
    k = _k_of_clusterings(clusterings)
    distance_fn = resolve_distance(distance)
    permuted = []
    for b, clust in enumerate(clusterings):
        rng = derive_stream(seed, b).rng()
        permuted.append(clust.labels[rng.permutation(m)])
    mat = np.zeros((B, B))
    for i in range(B):
        for j in range(i + 1, B):
            pair = LabelPair(
                labels_a=permuted[i],
                labels_b=permuted[j],
                k_a=clusterings[i].k,
                k_b=clusterings[j].k,
            )
            mat[i, j] = mat[j, i] = float(distance_fn(pair))
    iu = np.triu_indices(B, k=1)
    return InstabilityEstimate(
        k=k,
        n=n,
        mean=float(mat.mean()),
        stdev=_spread(mat[iu]),
        num_pairs=B * (B - 1) // 2,
        distance_name=_distance_label(distance),
        protocol="all_pairs",
        distances=mat.ravel(),
    )


def _k_of_clusterings(clusterings) -> int:
    ks = {c.k for c in clusterings}
    if len(ks) != 1:
        raise ValueError("clusterings disagree on k: %s" % sorted(ks))
    return ks.pop()


def area_under_cdf_score(distances) -> float:
    """Stability as the area under the empirical CDF of distances in
    [0, 1]; equals one minus the mean distance."""
    d = np.asarray(distances, dtype=float)
    if d.size == 0:
        raise ValueError("need at least one distance")
    if np.any(d < 0) or np.any(d > 1):
        raise ValueError("distances must lie in [0, 1]")
    return float(1.0 - d.mean())


def rescale(estimate: InstabilityEstimate) -> float:
    """sqrt(n) times the estimated instability.  Needs the sample size
    the estimate was computed at."""
    if estimate.n is None or estimate.n < 1:
        raise ValueError("estimate carries no sample size to rescale by")
    return float(np.sqrt(estimate.n) * estimate.mean)


@dataclass(frozen=True)
class CurveRow:
    k: int
    raw: float
    null: float | None = None
    normalized: float | None = None
    rescaled: float | None = None
    p_value: float | None = None
    selected: bool = False


@dataclass(frozen=True)
class StabilityCurve:
    """Instability versus k, with optional null/normalized/rescaled
    columns and an optional selection."""

    rows: tuple
    selected_k: int | None = None
    selection_rule: str | None = None

    def __post_init__(self):
        rows = tuple(self.rows)
        if not rows:
            raise ValueError("curve needs at least one row")
        ks = [r.k for r in rows]
        if len(set(ks)) != len(ks) or sorted(ks) != ks:
            raise ValueError("curve rows must have strictly increasing k")
        object.__setattr__(self, "rows", rows)

    @property
    def ks(self):
        return [r.k for r in self.rows]

    def column(self, name: str):
        return [getattr(r, name) for r in self.rows]


CURVE_COLUMNS = ("k", "raw", "null", "normalized", "rescaled", "p_value", "selected")


def curve_to_csv_text(curve: StabilityCurve) -> str:
    lines = [",".join(CURVE_COLUMNS)]
    for r in curve.rows:
        cells = [str(r.k)]
        for name in ("raw", "null", "normalized", "rescaled", "p_value"):
            v = getattr(r, name)
            cells.append("" if v is None else repr(float(v)))
        cells.append("1" if r.selected else "0")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def curve_from_csv_text(text: str) -> StabilityCurve:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or [h.strip() for h in lines[0].split(",")] != list(CURVE_COLUMNS):
        raise ValueError("curve CSV must start with header %s" % ",".join(CURVE_COLUMNS))
    rows = []
    selected_k = None
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(CURVE_COLUMNS):
            raise ValueError("curve row has %d fields, expected %d" % (len(parts), len(CURVE_COLUMNS)))
        k = int(parts[0])
        vals = [float(p) if p != "" else None for p in parts[1:6]]
        selected = parts[6].strip() == "1"
        if selected:
            selected_k = k
        rows.append(
            CurveRow(
                k=k,
                raw=vals[0],
                null=vals[1],
                normalized=vals[2],
                rescaled=vals[3],
                p_value=vals[4],
                selected=selected,
            )
        )
    return StabilityCurve(rows=tuple(rows), selected_k=selected_k)


def normalize_curve(raw: StabilityCurve, null: StabilityCurve) -> StabilityCurve:
    """Divide the raw curve by a null curve computed on reference data
    with the same protocol.  The k grids must match and every null value
    must be positive."""
    if raw.ks != null.ks:
        raise ValueError("raw and null curves cover different k grids")
    rows = []
    for r, q in zip(raw.rows, null.rows):
        if q.raw is None or q.raw <= 0:
            raise ValueError("null instability at k=%d is not positive" % r.k)
        rows.append(
            CurveRow(
                k=r.k,
                raw=r.raw,
                null=q.raw,
                normalized=r.raw / q.raw,
                rescaled=r.rescaled,
                p_value=r.p_value,
            )
        )
    return StabilityCurve(rows=tuple(rows))


def select_k_argmin(curve: StabilityCurve, column: str = "normalized") -> int:
    """k minimizing the given column; ties go to the smallest k."""
    if column not in ("raw", "normalized", "rescaled"):
        raise ValueError("selection column must be raw, normalized, or rescaled")
    best_k = None
    best_v = None
    for r in curve.rows:
        v = getattr(r, column)
        if v is None:
            raise ValueError("row k=%d has no %s value" % (r.k, column))
        if best_v is None or v < best_v:
            best_k, best_v = r.k, v
    return best_k


def select_k_significance(
    raw_sets: dict,
    null_sets: dict,
    alpha: float,
    seed: Seed,
    num_resamples: int = DEFAULT_BOOTSTRAP_RESAMPLES,
):
    """One-sided Monte-Carlo test per k: bootstrap the null distance
    set, and take p as the add-one-corrected fraction of bootstrap
    means at or below the observed mean.  Returns (selected k or None,
    {k: p}); the selected k has the smallest p among those with
    p < alpha, smallest k on ties."""
    if set(raw_sets) != set(null_sets):
        raise ValueError("raw and null distance sets cover different k values")
    if not raw_sets:
        raise ValueError("no distance sets given")
    if not (0 < alpha < 1):
        raise ValueError("alpha must lie in (0, 1)")
    if num_resamples < 1:
        raise ValueError("num_resamples must be positive")
    p_values = {}
    for k in sorted(raw_sets):
        raw = np.asarray(raw_sets[k], dtype=float)
        null = np.asarray(null_sets[k], dtype=float)
        if raw.size == 0 or null.size == 0:
            raise ValueError("empty distance set at k=%d" % k)
        obs = raw.mean()
        rng = derive_stream(seed, k).rng()
        draws = rng.choice(null, size=(num_resamples, null.size), replace=True)
        boot_means = draws.mean(axis=1)
        p_values[k] = float((1 + np.sum(boot_means <= obs)) / (num_resamples + 1))
    passing = [(p, k) for k, p in p_values.items() if p < alpha]
    selected = min(passing)[1] if passing else None
    return selected, p_values


def tube_mass(clustering_or_centers, eval_points: DataSet, gamma: float) -> float:
    """Weight fraction of evaluation points within distance ``gamma``
    of the decision boundary induced by a set of centers.

    The distance from x to the boundary face between its assigned
    center c_i and another center c_j is
    | ||x - c_j||^2 - ||x - c_i||^2 | / (2 ||c_i - c_j||); the distance
    to the boundary is the minimum over j != i.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if isinstance(clustering_or_centers, Clustering):
        if clustering_or_centers.centers is None:
            raise ValueError("clustering has no centers")
        centers = clustering_or_centers.centers
    else:
        centers = np.asarray(clustering_or_centers, dtype=float)
    if centers.ndim != 2 or centers.shape[0] < 2:
        raise ValueError("need at least two centers")
    k = centers.shape[0]
    gaps = centers[:, None, :] - centers[None, :, :]
    center_dist = np.sqrt(np.einsum("ijd,ijd->ij", gaps, gaps))
    offdiag = center_dist[~np.eye(k, dtype=bool)]
    if np.any(offdiag == 0):
        raise ValueError("coincident centers give an ill-defined boundary")
    pts = eval_points.points
    diff = pts[:, None, :] - centers[None, :, :]
    d2 = np.einsum("nkd,nkd->nk", diff, diff)
    assigned = np.argmin(d2, axis=1)
    own = d2[np.arange(pts.shape[0]), assigned]
    # the diagonal is excluded below; keep its divisor harmless
    safe_dist = center_dist.copy()
    np.fill_diagonal(safe_dist, 1.0)
    face = np.abs(d2 - own[:, None]) / (2.0 * safe_dist[assigned])
    face[np.arange(pts.shape[0]), assigned] = np.inf
    boundary_dist = face.min(axis=1)
    in_tube = boundary_dist <= gamma
    return float(eval_points.weights[in_tube].sum() / eval_points.total_weight)
