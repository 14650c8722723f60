"""The stability-curve harness: configuration, the perturb/cluster/
compare loop over a k grid, normalization against a null reference, and
selection of k.

Seed layout.  Every randomized step derives from the root seed through
fixed stream indices, so any cell is reproducible in isolation and
results are independent of evaluation order:

    root/0               reference dataset draw
    root/1/k/b           raw cell: replicate b at cluster count k
                         (child 0 perturbs or samples, child 1 clusters)
    root/1/k             disjoint-pair estimation at k
    root/2/0             null master dataset (dataset-based schemes)
    root/2/k/b           null cell, same inner split as raw cells
    root/3/k             reference clustering at k (vs_original)
    root/4/k             significance bootstrap at k
"""
from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass

import numpy as np

from .core import DataSet, Seed, derive_stream, load_dataset_csv
from .distances import DISTANCES, extend_by_centers
from .kmeans import (
    DEFAULT_RESTARTS,
    idealized_kmeans,
    init_scheme_pruned,
    init_uniform_points,
    run_lloyd,
)
from .core import Clustering
from .perturb import (
    DEFAULT_SUBSAMPLE_FRACTION,
    PerturbationScheme,
    apply_scheme,
    null_scramble,
    null_uniform_box,
)
from .stability import (
    COMPARISONS,
    PROTOCOLS,
    ClusteredSample,
    CurveRow,
    StabilityCurve,
    estimate_instability_all_pairs,
    estimate_instability_disjoint_pairs,
    estimate_instability_vs_original,
    normalize_curve,
    permutation_null,
    rescale,
    select_k_argmin,
    select_k_significance,
)
from .synthgen import preset, sample_preset

NORMALIZATIONS = ("none", "null_uniform", "null_scramble", "permutation")
SELECTION_RULES = ("none", "argmin_raw", "argmin_normalized", "significance")
MODES = ("idealized", "realistic")
INITS = ("uniform", "pruned")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration; maps to CLI exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a stability run depends on.  Unset source-dependent
    fields (scheme, normalization, selection) are filled by
    ``resolved()``."""

    preset: str | None = None
    input_file: str | None = None
    n: int = 500
    k_min: int = 2
    k_max: int = 15
    mode: str = "idealized"
    restarts: int = DEFAULT_RESTARTS
    init: str = "uniform"
    init_preliminary: int | None = None
    init_min_mass: float | None = None
    scheme: str | None = None
    fraction: float = DEFAULT_SUBSAMPLE_FRACTION
    noise_scale: float | None = None
    target_dim: int | None = None
    protocol: str = "all_pairs"
    comparison: str = "center_extend"
    distance: str = "mmd"
    b_max: int = 20
    normalization: str | None = None
    selection: str | None = None
    alpha: float = 0.05
    seed: int | None = None

    def resolved(self) -> "ExperimentConfig":
        """Fill source-dependent defaults and validate."""
        synthetic = self.preset is not None
        scheme = self.scheme or ("fresh_sample" if synthetic else "subsample")
        normalization = self.normalization or (
            "null_uniform" if synthetic else "null_scramble"
        )
        selection = self.selection or (
            "argmin_raw" if normalization == "none" else "argmin_normalized"
        )
        cfg = dataclasses.replace(
            self, scheme=scheme, normalization=normalization, selection=selection
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if (self.preset is None) == (self.input_file is None):
            raise ConfigError("exactly one of preset and input_file must be set")
        if self.preset is not None:
            try:
                preset(self.preset)
            except KeyError as e:
                raise ConfigError(str(e)) from None
        if self.seed is None:
            raise ConfigError("a seed is required")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.preset is not None and self.n < 1:
            raise ConfigError("n must be positive")
        if not (1 <= self.k_min <= self.k_max):
            raise ConfigError("need 1 <= k_min <= k_max")
        if self.mode not in MODES:
            raise ConfigError("mode must be one of %s" % (MODES,))
        if self.mode == "idealized" and self.restarts < 1:
            raise ConfigError("restarts must be at least 1")
        if self.mode == "realistic" and self.init not in INITS:
            raise ConfigError("init must be one of %s" % (INITS,))
        if self.b_max < 2:
            raise ConfigError("b_max must be at least 2")
        try:
            scheme_obj = self.scheme_object()
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if scheme_obj.kind == "fresh_sample" and self.preset is None:
            raise ConfigError("fresh_sample needs a synthetic source")
        if self.protocol not in PROTOCOLS:
            raise ConfigError("protocol must be one of %s" % (PROTOCOLS,))
        if self.protocol == "disjoint_pairs" and scheme_obj.kind != "fresh_sample":
            raise ConfigError("disjoint_pairs estimation needs the fresh_sample scheme")
        if self.comparison not in COMPARISONS:
            raise ConfigError("comparison must be one of %s" % (COMPARISONS,))
        if scheme_obj.kind == "fresh_sample" and self.comparison != "center_extend":
            raise ConfigError("fresh samples share no points; use center_extend")
        if scheme_obj.kind == "projection" and self.comparison != "overlap_restrict":
            raise ConfigError(
                "projected replicates live in different spaces; use overlap_restrict"
            )
        if self.distance not in DISTANCES:
            raise ConfigError(
                "distance must be one of %s" % (sorted(DISTANCES),)
            )
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError("normalization must be one of %s" % (NORMALIZATIONS,))
        if self.normalization == "permutation" and scheme_obj.kind == "projection":
            raise ConfigError(
                "permutation null needs clusterings extendable to the base data"
            )
        if self.selection not in SELECTION_RULES:
            raise ConfigError("selection must be one of %s" % (SELECTION_RULES,))
        if self.selection == "argmin_normalized" and self.normalization == "none":
            raise ConfigError("argmin_normalized needs a normalization")
        if self.selection == "significance" and self.normalization == "none":
            raise ConfigError("significance selection needs a null reference")
        if not (0 < self.alpha < 1):
            raise ConfigError("alpha must lie in (0, 1)")

    def scheme_object(self) -> PerturbationScheme:
        return PerturbationScheme(
            kind=self.scheme or "fresh_sample",
            fraction=self.fraction,
            noise_scale=self.noise_scale,
            target_dim=self.target_dim,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class StabilityResult:
    config: ExperimentConfig
    curve: StabilityCurve
    raw_estimates: dict
    null_estimates: dict | None
    p_values: dict | None
    selected_k: int | None
    wall_clock_seconds: float


def _cluster(data: DataSet, k: int, seed: Seed, cfg: ExperimentConfig) -> Clustering:
    if cfg.mode == "idealized":
        return idealized_kmeans(data, k, seed, restarts=cfg.restarts).clustering
    if cfg.init == "uniform":
        init = init_uniform_points(data, k, derive_stream(seed, 0))
    else:
        init = init_scheme_pruned(
            data,
            k,
            derive_stream(seed, 0),
            num_preliminary=cfg.init_preliminary,
            min_mass=cfg.init_min_mass,
        )
    return run_lloyd(data, init).clustering


def _raw_replicates(cfg, base, source_spec, k, cell_root):
    """The B clustered replicates for one (k) cell."""
    scheme = cfg.scheme_object()
    reps = []
    for b in range(cfg.b_max):
        cell = derive_stream(cell_root, b)
        if scheme.kind == "fresh_sample":
            data, idx = sample_preset(source_spec, cfg.n, derive_stream(cell, 0))[0], None
        else:
            data, idx = apply_scheme(scheme, base, derive_stream(cell, 0))
        clust = _cluster(data, k, derive_stream(cell, 1), cfg)
        reps.append(ClusteredSample(clustering=clust, points=data.points, parent_indices=idx))
    return reps


def run_stability(config: ExperimentConfig) -> StabilityResult:
    """Compute a stability curve over the configured k grid."""
    t0 = time.perf_counter()
    cfg = config.resolved()
    root = Seed(cfg.seed)
    scheme = cfg.scheme_object()

    if cfg.preset is not None:
        source_spec = preset(cfg.preset)
        base = sample_preset(source_spec, cfg.n, derive_stream(root, 0))[0]
        n = cfg.n
    else:
        source_spec = None
        base = load_dataset_csv(cfg.input_file)
        n = base.n
        cfg = dataclasses.replace(cfg, n=n)
    if not (cfg.k_max <= n):
        raise ConfigError("k_max cannot exceed the number of points")

    ks = list(range(cfg.k_min, cfg.k_max + 1))
    raw_estimates = {}
    raw_replicates = {}
    for k in ks:
        cell_root = derive_stream(derive_stream(root, 1), k)
        if cfg.protocol == "disjoint_pairs":
            raw_estimates[k] = estimate_instability_disjoint_pairs(
                sampler=lambda m, s: sample_preset(source_spec, m, s)[0],
                algorithm=lambda d, kk, s: _cluster(d, kk, s, cfg),
                k=k,
                n=n,
                num_pairs=cfg.b_max // 2,
                seed=cell_root,
                distance=cfg.distance,
            )
            continue
        reps = _raw_replicates(cfg, base, source_spec, k, cell_root)
        raw_replicates[k] = reps
        if cfg.protocol == "all_pairs":
            raw_estimates[k] = estimate_instability_all_pairs(
                reps, distance=cfg.distance, comparison=cfg.comparison, n=n
            )
        else:
            ref_clust = _cluster(base, k, derive_stream(derive_stream(root, 3), k), cfg)
            reference = ClusteredSample(clustering=ref_clust, points=base.points,
                                        parent_indices=np.arange(base.n))
            raw_estimates[k] = estimate_instability_vs_original(
                reference, reps, distance=cfg.distance, comparison=cfg.comparison, n=n
            )

    null_estimates = None
    if cfg.normalization in ("null_uniform", "null_scramble"):
        null_estimates = _null_curve(cfg, base, source_spec, ks, root)
    elif cfg.normalization == "permutation":
        null_estimates = {}
        for k in ks:
            extended = [
                Clustering(
                    labels=extend_by_centers(r.clustering, base.points),
                    k=k,
                    source_dataset=base.id,
                )
                for r in raw_replicates[k]
            ]
            null_estimates[k] = permutation_null(
                extended,
                derive_stream(derive_stream(root, 2), k),
                distance=cfg.distance,
                n=n,
            )

    rows = []
    for k in ks:
        est = raw_estimates[k]
        rows.append(
            CurveRow(
                k=k,
                raw=est.mean,
                rescaled=rescale(est) if est.protocol == "disjoint_pairs" else None,
            )
        )
    curve = StabilityCurve(rows=tuple(rows))
    if null_estimates is not None:
        null_rows = tuple(CurveRow(k=k, raw=null_estimates[k].mean) for k in ks)
        curve = normalize_curve(curve, StabilityCurve(rows=null_rows))

    p_values = None
    selected = None
    if cfg.selection == "argmin_raw":
        selected = select_k_argmin(curve, "raw")
    elif cfg.selection == "argmin_normalized":
        selected = select_k_argmin(curve, "normalized")
    elif cfg.selection == "significance":
        raw_sets = {k: raw_estimates[k].pair_distances() for k in ks}
        null_sets = {k: null_estimates[k].pair_distances() for k in ks}
        selected, p_values = select_k_significance(
            raw_sets, null_sets, cfg.alpha, derive_stream(root, 4)
        )

    final_rows = []
    for r in curve.rows:
        final_rows.append(
            CurveRow(
                k=r.k,
                raw=r.raw,
                null=r.null,
                normalized=r.normalized,
                rescaled=r.rescaled,
                p_value=None if p_values is None else p_values[r.k],
                selected=(selected is not None and r.k == selected),
            )
        )
    curve = StabilityCurve(
        rows=tuple(final_rows), selected_k=selected, selection_rule=cfg.selection
    )
    return StabilityResult(
        config=cfg,
        curve=curve,
        raw_estimates=raw_estimates,
        null_estimates=null_estimates,
        p_values=p_values,
        selected_k=selected,
        wall_clock_seconds=time.perf_counter() - t0,
    )


def _null_curve(cfg, base, source_spec, ks, root):
    """Instability of the same pipeline on null reference data."""
    scheme = cfg.scheme_object()
    null_root = derive_stream(root, 2)
    estimates = {}

    def null_sample(m, seed):
        if cfg.normalization == "null_uniform":
            return null_uniform_box(base, m, seed)
        fresh = sample_preset(source_spec, m, derive_stream(seed, 0))[0]
        return null_scramble(fresh, derive_stream(seed, 1))

    if scheme.kind == "fresh_sample":
        if cfg.protocol == "disjoint_pairs":
            for k in ks:
                estimates[k] = estimate_instability_disjoint_pairs(
                    sampler=null_sample,
                    algorithm=lambda d, kk, s: _cluster(d, kk, s, cfg),
                    k=k,
                    n=cfg.n,
                    num_pairs=cfg.b_max // 2,
                    seed=derive_stream(null_root, k),
                    distance=cfg.distance,
                )
            return estimates
        null_base = None
        if cfg.protocol == "vs_original":
            null_base = null_sample(cfg.n, derive_stream(null_root, 0))
        for k in ks:
            cell_root = derive_stream(null_root, k)
            reps = []
            for b in range(cfg.b_max):
                cell = derive_stream(cell_root, b)
                data = null_sample(cfg.n, derive_stream(cell, 0))
                clust = _cluster(data, k, derive_stream(cell, 1), cfg)
                reps.append(ClusteredSample(clustering=clust, points=data.points))
            estimates[k] = _estimate_for_protocol(
                cfg,
                reps,
                base=null_base,
                ref_seed=derive_stream(derive_stream(null_root, 0), k),
            )
        return estimates

    # dataset-based schemes perturb one null master dataset
    if cfg.normalization == "null_uniform":
        master = null_uniform_box(base, base.n, derive_stream(null_root, 0))
    else:
        master = null_scramble(base, derive_stream(null_root, 0))
    for k in ks:
        cell_root = derive_stream(null_root, k)
        reps = []
        for b in range(cfg.b_max):
            cell = derive_stream(cell_root, b)
            data, idx = apply_scheme(scheme, master, derive_stream(cell, 0))
            clust = _cluster(data, k, derive_stream(cell, 1), cfg)
            reps.append(
                ClusteredSample(clustering=clust, points=data.points, parent_indices=idx)
            )
        estimates[k] = _estimate_for_protocol(
            cfg, reps, base=master, ref_seed=derive_stream(derive_stream(null_root, 0), k)
        )
    return estimates


def _estimate_for_protocol(cfg, reps, base, ref_seed):
    if cfg.protocol == "all_pairs":
        return estimate_instability_all_pairs(
            reps, distance=cfg.distance, comparison=cfg.comparison, n=cfg.n
        )
    if cfg.protocol == "vs_original":
        if base is None:
            raise ConfigError("vs_original needs a base dataset")
        ref = ClusteredSample(
            clustering=_cluster(base, reps[0].clustering.k, ref_seed, cfg),
            points=base.points,
            parent_indices=np.arange(base.n),
        )
        return estimate_instability_vs_original(
            ref, reps, distance=cfg.distance, comparison=cfg.comparison, n=cfg.n
        )
    raise ConfigError("unsupported protocol for this source")


def float_list(arr) -> list:
    return [float(v) for v in np.asarray(arr, dtype=float).ravel()]


def result_to_json_text(result: StabilityResult) -> str:
    """Deterministic JSON document for a stability run: full resolved
    config, seed, curve, and per-k distance sets.  Only
    ``wall_clock_seconds`` varies between identical runs."""
    doc = {
        "config": result.config.to_dict(),
        "curve": [dataclasses.asdict(r) for r in result.curve.rows],
        "selected_k": result.selected_k,
        "selection_rule": result.config.selection,
        "per_k": {
            str(k): {
                "raw_pair_distances": float_list(est.pair_distances()),
                "raw_stdev": est.stdev,
                "null_pair_distances": (
                    None
                    if result.null_estimates is None
                    else float_list(result.null_estimates[k].pair_distances())
                ),
            }
            for k, est in sorted(result.raw_estimates.items())
        },
        "p_values": (
            None
            if result.p_values is None
            else {str(k): v for k, v in sorted(result.p_values.items())}
        ),
        "wall_clock_seconds": result.wall_clock_seconds,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def strip_wall_clock(json_text: str) -> str:
    """The same document with the wall-clock measurement removed, for
    byte-level comparisons between runs."""
    doc = json.loads(json_text)
    doc.pop("wall_clock_seconds", None)
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
