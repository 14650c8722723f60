"""Synthetic data: isotropic Gaussian mixtures, a uniform square, and
the named presets used by the experiment harness.

Preset geometry notes.  "Well separated" means nearest inter-mean
distance of at least 8 standard deviations; the standard presets use 10.
``fig3b_sym`` places three equal components on an equilateral triangle
whose mirror symmetry about the y axis is exact in floating point
(negation is exact), so the designed isometry maps samples to
identically distributed samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DataSet, Seed

WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class Component:
    """One isotropic Gaussian: mean vector, standard deviation, weight."""

    mean: np.ndarray
    stdev: float
    weight: float

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if m.ndim != 1 or not np.all(np.isfinite(m)):
            raise ValueError("component mean must be a finite vector")
        m.flags.writeable = False
        object.__setattr__(self, "mean", m)
        if not (self.stdev > 0):
            raise ValueError("component stdev must be positive")
        if not (0 <= self.weight <= 1):
            raise ValueError("component weight must lie in [0, 1]")


@dataclass(frozen=True)
class MixtureSpec:
    """A finite mixture of isotropic Gaussians with weights summing to 1."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        d = comps[0].mean.shape[0]
        if any(c.mean.shape[0] != d for c in comps):
            raise ValueError("all component means must share a dimension")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError("component weights sum to %.12g, expected 1" % total)
        object.__setattr__(self, "components", comps)

    @property
    def d(self) -> int:
        return self.components[0].mean.shape[0]

    @property
    def means(self) -> np.ndarray:
        return np.stack([c.mean for c in self.components])

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])


@dataclass(frozen=True)
class UniformSquareSpec:
    """Uniform density on the unit square [0, 1]^2."""


def mixture(means, stdevs, weights) -> MixtureSpec:
    means = [np.atleast_1d(np.asarray(m, dtype=float)) for m in means]
    return MixtureSpec(
        components=tuple(
            Component(mean=m, stdev=float(s), weight=float(w))
            for m, s, w in zip(means, stdevs, weights, strict=True)
        )
    )


def sample_mixture(spec: MixtureSpec, n: int, seed: Seed):
    """Draw n points; returns (DataSet, true component labels)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = seed.rng()
    comps = rng.choice(len(spec.components), size=n, p=spec.weights)
    stdevs = np.array([c.stdev for c in spec.components])
    pts = spec.means[comps] + rng.normal(size=(n, spec.d)) * stdevs[comps, None]
    return (
        DataSet(points=pts, weights=np.ones(n), id=("mixture", n)),
        comps.astype(int),
    )


def sample_uniform_square(n: int, seed: Seed) -> DataSet:
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = seed.rng()
    return DataSet(
        points=rng.uniform(0.0, 1.0, size=(n, 2)),
        weights=np.ones(n),
        id=("uniform_square", n),
    )


def _equal(k):
    return [1.0 / k] * k


# fig3b_sym: equilateral triangle with side 10, centroid at the origin,
# mirror symmetric about the y axis.  Height split: apex at 2b, base at
# -b with b = 5 / sqrt(3).
_B3 = 5.0 / math.sqrt(3.0)

_FOUR_CORNERS = [(-5.0, -5.0), (-5.0, 5.0), (5.0, -5.0), (5.0, 5.0)]

PRESETS: dict[str, MixtureSpec | UniformSquareSpec] = {
    "fig1_four_clusters": mixture(_FOUR_CORNERS, [1.0] * 4, _equal(4)),
    "fig2_uniform": UniformSquareSpec(),
    "fig2_four_gauss": mixture(_FOUR_CORNERS, [1.0] * 4, _equal(4)),
    "fig3a_asym": mixture(
        [(0.0, 0.0), (10.0, 0.0), (25.0, 0.0)], [1.0] * 3, _equal(3)
    ),
    "fig3b_sym": mixture(
        [(0.0, 2 * _B3), (-5.0, -_B3), (5.0, -_B3)], [1.0] * 3, _equal(3)
    ),
    "fig5_equal": mixture(
        [(-5.0, -7.0), (-5.0, 7.0), (5.0, 7.0)], [1.0] * 3, _equal(3)
    ),
    "fig5_unequal": mixture(
        [(-5.0, -7.0), (-5.0, 7.0), (5.0, 7.0)], [1.0] * 3, [0.2, 0.2, 0.6]
    ),
    "thm4_two_gauss_1d": mixture([(0.0,), (20.0,)], [1.0, 1.0], _equal(2)),
}

# Exact isometries under which a preset's distribution is invariant:
# (matrix M, offset t, component permutation p) with x -> x @ M.T + t and
# component i mapping to p[i].  Only mirror maps are listed; negation
# and the offsets used here are exact in floating point.
PRESET_SYMMETRIES: dict[str, tuple[np.ndarray, np.ndarray, tuple[int, ...]]] = {
    "fig1_four_clusters": (np.diag([-1.0, 1.0]), np.zeros(2), (2, 3, 0, 1)),
    "fig2_four_gauss": (np.diag([-1.0, 1.0]), np.zeros(2), (2, 3, 0, 1)),
    "fig3b_sym": (np.diag([-1.0, 1.0]), np.zeros(2), (0, 2, 1)),
    "thm4_two_gauss_1d": (np.array([[-1.0]]), np.array([20.0]), (1, 0)),
}


def preset(name: str):
    """Look up a named data spec.  KeyError on unknown names."""
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(
            "unknown preset %r; choose from %s" % (name, sorted(PRESETS))
        ) from None


def preset_symmetry(name: str):
    """A designed isometry (matrix, component permutation) under which
    the preset is invariant, or None when none is recorded."""
    preset(name)
    return PRESET_SYMMETRIES.get(name)


def sample_preset(name_or_spec, n: int, seed: Seed):
    """Sample from a preset name or spec object.  Returns
    (DataSet, true labels or None)."""
    spec = preset(name_or_spec) if isinstance(name_or_spec, str) else name_or_spec
    if isinstance(spec, UniformSquareSpec):
        return sample_uniform_square(n, seed), None
    if isinstance(spec, MixtureSpec):
        return sample_mixture(spec, n, seed)
    raise TypeError("cannot sample from %r" % (spec,))
