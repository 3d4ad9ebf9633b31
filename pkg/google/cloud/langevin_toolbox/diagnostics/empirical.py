# -*- coding: utf-8 -*-
# Copyright 2024 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#
"""Empirical divergences between sample batches and analytic targets."""

import dataclasses
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type, Union

import numpy as np
from scipy import special, stats

from google.cloud.langevin_toolbox import constants
from google.cloud.langevin_toolbox.exceptions import (
    CoverageError,
    DimensionMismatchError,
    PartitionError,
)
from google.cloud.langevin_toolbox.samplers.annealed_langevin import SampleBatch
from google.cloud.langevin_toolbox.wrappers import mixture_core

_LOGGER = logging.getLogger(__name__)

_NEGATIVE_SLACK = 1e-10
_BISECTION_STEPS = 80
_LATTICE_POINTS = 41
_LATTICE_HALF_WIDTH = 50.0
_MAX_PARTITION_TEST_POINTS = 200_000

BatchLike = Union[SampleBatch, np.ndarray]


@dataclasses.dataclass
class DivergenceReport:
    r"""One divergence measurement with its estimator provenance.

    Attributes:
        kind (str):
            Required. One of `KL`, `FI`, `TV`, `W2-1D` or `mode-weights`.
        value (float):
            Required. Nonnegative value.
        estimator (str):
            Required. One of `quadrature`, `histogram`, `kde-score` or `sorted-1D`.
        spec (Dict[str, Any]):
            Optional. Grid or bin specification.
        mc_std_err (Optional[float]):
            Optional. Monte Carlo standard error.
        target_time (Optional[float]):
            Optional. Target-time of the measured batch.
        reference (str):
            Optional. Which analytic law was the target.
        details (Dict[str, Any]):
            Optional. Estimator-specific values.
    """
    kind: str
    value: float
    estimator: str
    spec: Dict[str, Any] = dataclasses.field(default_factory=dict)
    mc_std_err: Optional[float] = None
    target_time: Optional[float] = None
    reference: str = "mu_t"
    details: Dict[str, Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in constants.DIVERGENCE_KINDS:
            raise ValueError(f"Unknown divergence kind {self.kind!r}.")
        if self.estimator not in constants.ESTIMATORS:
            raise ValueError(f"Unknown estimator {self.estimator!r}.")
        if not self.value >= -_NEGATIVE_SLACK:
            raise ValueError(f"Divergence values must be >= 0, got {self.value}.")
        self.value = max(float(self.value), 0.0)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls: Type["DivergenceReport"], data: dict) -> "DivergenceReport":
        return cls(**data)


@dataclasses.dataclass(frozen=True)
class HalfSpace:
    r"""Cell `{x : ⟨normal, x⟩ >= offset}`, or `>` when `strict`."""

    normal: Tuple[float, ...]
    offset: float = 0.0
    strict: bool = False

    def contains(self, points: np.ndarray) -> np.ndarray:
        projection = points @ np.asarray(self.normal, dtype=float)
        return projection > self.offset if self.strict else projection >= self.offset

    def mass(self, mixture: mixture_core.GaussianMixture) -> float:
        normal = np.asarray(self.normal, dtype=float)
        means = mixture.means @ normal
        sds = np.sqrt(np.einsum("i,kij,j->k", normal, mixture.covariances, normal))
        return float(mixture.weights @ stats.norm.sf(self.offset, loc=means, scale=sds))

    def to_dict(self) -> dict:
        return {
            "type": "halfspace",
            "normal": list(self.normal),
            "offset": self.offset,
            "strict": self.strict,
        }


@dataclasses.dataclass(frozen=True)
class Box:
    r"""Cell `{x : lower <= x < upper}` coordinate-wise. Bounds may be infinite."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def contains(self, points: np.ndarray) -> np.ndarray:
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        return np.all((points >= lower) & (points < upper), axis=1)

    def mass(self, mixture: mixture_core.GaussianMixture) -> float:
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if mixture.dim == 1:
            sds = np.sqrt(mixture.covariances[:, 0, 0])
            means = mixture.means[:, 0]
            cell = stats.norm.cdf(upper[0], means, sds) - stats.norm.cdf(
                lower[0], means, sds
            )
            return float(mixture.weights @ cell)
        total = 0.0
        for weight, mean, covariance in zip(
            mixture.weights, mixture.means, mixture.covariances
        ):
            total += weight * stats.multivariate_normal(mean, covariance).cdf(
                upper, lower_limit=lower
            )
        return float(total)

    def to_dict(self) -> dict:
        return {"type": "box", "lower": list(self.lower), "upper": list(self.upper)}


Cell = Union[HalfSpace, Box]


def cell_from_dict(data: dict) -> Cell:
    kind = data.get("type")
    if kind == "halfspace":
        return HalfSpace(
            normal=tuple(float(v) for v in data["normal"]),
            offset=float(data.get("offset", 0.0)),
            strict=bool(data.get("strict", False)),
        )
    if kind == "box":
        return Box(
            lower=tuple(float(v) for v in data["lower"]),
            upper=tuple(float(v) for v in data["upper"]),
        )
    raise ValueError(f"Unknown partition cell type {kind!r}.")


def split_at(threshold: float = 0.0, axis: int = 0, dim: int = 1) -> List[Cell]:
    r"""Returns the two half-spaces `x_axis < threshold` and `x_axis >= threshold`."""
    normal = np.zeros(dim)
    normal[axis] = 1.0
    return [
        HalfSpace(normal=tuple(-normal), offset=-threshold, strict=True),
        HalfSpace(normal=tuple(normal), offset=threshold),
    ]


def _cell_breakpoints(cell: Cell, axis: int) -> List[float]:
    if isinstance(cell, Box):
        bounds = (cell.lower[axis], cell.upper[axis])
        return [bound for bound in bounds if math.isfinite(bound)]
    normal = np.asarray(cell.normal, dtype=float)
    if np.flatnonzero(normal).tolist() == [axis]:
        return [cell.offset / normal[axis]]
    return []


def _axis_test_points(partition: Sequence[Cell], axis: int) -> np.ndarray:
    breakpoints = np.array(
        sorted({b for cell in partition for b in _cell_breakpoints(cell, axis)})
    )
    if breakpoints.size == 0:
        return np.zeros(1)
    midpoints = 0.5 * (breakpoints[1:] + breakpoints[:-1])
    return np.concatenate(
        [[breakpoints[0] - 1.0], breakpoints, midpoints, [breakpoints[-1] + 1.0]]
    )


def _count_membership(
    points: np.ndarray, partition: Sequence[Cell], what: str
) -> np.ndarray:
    membership = np.stack([cell.contains(points) for cell in partition])
    hits = membership.sum(axis=0)
    if np.any(hits > 1):
        raise PartitionError(
            f"Partition cells overlap on {int(np.sum(hits > 1))} {what}."
        )
    if np.any(hits == 0):
        raise PartitionError(
            f"The partition does not cover {int(np.sum(hits == 0))} {what}."
        )
    return membership


def check_partition(partition: Sequence[Cell], dim: int) -> None:
    r"""Checks that the cells are disjoint and cover the whole space.

    Axis-aligned cells are piecewise constant between their breakpoints, so
    testing every breakpoint, every midpoint and one point beyond each end is
    exact. Oblique half-spaces are additionally checked on a lattice over
    `[-50, 50]^dim`.

    Raises:
        PartitionError: if the partition is empty, leaves a gap or overlaps.
    """
    if not partition:
        raise PartitionError("The partition has no cells.")
    axes = [_axis_test_points(partition, axis) for axis in range(dim)]
    oblique = any(
        isinstance(cell, HalfSpace) and np.count_nonzero(cell.normal) > 1
        for cell in partition
    )
    if oblique:
        lattice = np.linspace(
            -_LATTICE_HALF_WIDTH, _LATTICE_HALF_WIDTH, _LATTICE_POINTS
        )
        axes = [np.union1d(points, lattice) for points in axes]
    if math.prod(len(points) for points in axes) > _MAX_PARTITION_TEST_POINTS:
        _LOGGER.debug("Partition too fine to check over space; checking samples only.")
        return
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    _count_membership(grid, partition, "test points")


@dataclasses.dataclass
class ModeWeights:
    r"""Empirical cell fractions with binomial standard errors."""

    weights: np.ndarray
    std_errs: np.ndarray
    n: int


def _samples_of(batch: BatchLike) -> np.ndarray:
    samples = batch.samples if isinstance(batch, SampleBatch) else np.asarray(batch)
    if samples.ndim != 2:
        raise DimensionMismatchError(
            f"Expected samples of shape (n, d), got {samples.shape}."
        )
    if samples.shape[0] == 0:
        raise ValueError("The batch is empty.")
    return samples


def mode_weights(batch: BatchLike, partition: Sequence[Cell]) -> ModeWeights:
    r"""Returns the fraction of samples in each partition cell.

    Args:
        batch (BatchLike):
            Required. A SampleBatch or an `(n, d)` array.
        partition (Sequence[Cell]):
            Required. Disjoint cells that together cover the space.

    Raises:
        PartitionError: if the cells leave a gap or overlap, or a sample lies
            in no cell or in several cells.
    """
    samples = _samples_of(batch)
    check_partition(partition, samples.shape[1])
    membership = _count_membership(samples, partition, "samples")
    n = samples.shape[0]
    weights = membership.sum(axis=1) / n
    return ModeWeights(
        weights=weights, std_errs=np.sqrt(weights * (1.0 - weights) / n), n=n
    )


def analytic_mode_weights(
    mixture: mixture_core.GaussianMixture, partition: Sequence[Cell]
) -> np.ndarray:
    r"""Returns the mass each partition cell carries under an analytic mixture."""
    return np.array([cell.mass(mixture) for cell in partition])


def mode_weight_report(
    batch: BatchLike,
    target: mixture_core.GaussianMixture,
    partition: Sequence[Cell],
    target_time: Optional[float] = None,
    reference: str = "mu_t",
) -> DivergenceReport:
    r"""Compares empirical and analytic cell weights.

    The value is the total variation between the two weight vectors.
    """
    empirical = mode_weights(batch, partition)
    analytic = analytic_mode_weights(target, partition)
    return DivergenceReport(
        kind="mode-weights",
        value=0.5 * float(np.abs(empirical.weights - analytic).sum()),
        estimator="histogram",
        spec={"partition": [cell.to_dict() for cell in partition]},
        mc_std_err=float(empirical.std_errs.max()),
        target_time=target_time,
        reference=reference,
        details={
            "empirical": empirical.weights.tolist(),
            "std_errs": empirical.std_errs.tolist(),
            "analytic": analytic.tolist(),
            "n": empirical.n,
        },
    )


def _histogram_edges(
    samples: np.ndarray, target: mixture_core.GaussianMixture, bins: int
) -> List[np.ndarray]:
    edges = []
    for j in range(target.dim):
        sds = np.sqrt(target.covariances[:, j, j])
        low = min(
            float((target.means[:, j] - constants.QUADRATURE_SPAN_SD * sds).min()),
            float(samples[:, j].min()),
        )
        high = max(
            float((target.means[:, j] + constants.QUADRATURE_SPAN_SD * sds).max()),
            float(samples[:, j].max()),
        )
        edges.append(np.linspace(low, high, bins + 1))
    return edges


def _target_bin_masses(
    target: mixture_core.GaussianMixture, edges: List[np.ndarray]
) -> np.ndarray:
    if target.dim == 1:
        sds = np.sqrt(target.covariances[:, 0, 0])
        cdf = stats.norm.cdf(
            edges[0][:, None], loc=target.means[None, :, 0], scale=sds[None, :]
        )
        return np.diff(cdf, axis=0) @ target.weights

    nodes, node_weights = np.polynomial.legendre.leggauss(
        constants.GAUSS_LEGENDRE_CELL_ORDER
    )
    axes, axis_weights = [], []
    for e in edges:
        half = 0.5 * np.diff(e)
        centers = 0.5 * (e[1:] + e[:-1])
        axes.append((centers[:, None] + half[:, None] * nodes[None, :]).reshape(-1))
        axis_weights.append((half[:, None] * node_weights[None, :]).reshape(-1))
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=1)
    density = np.exp(mixture_core.log_density(target, points)).reshape(
        axes[0].size, axes[1].size
    )
    weighted = density * np.outer(axis_weights[0], axis_weights[1])
    order = constants.GAUSS_LEGENDRE_CELL_ORDER
    bins_x, bins_y = edges[0].size - 1, edges[1].size - 1
    return weighted.reshape(bins_x, order, bins_y, order).sum(axis=(1, 3))


def _mixture_cdf(target: mixture_core.GaussianMixture, x: np.ndarray) -> np.ndarray:
    sds = np.sqrt(target.covariances[:, 0, 0])
    return stats.norm.cdf(x[:, None], target.means[None, :, 0], sds[None, :]) @ (
        target.weights
    )


def mixture_quantiles(
    target: mixture_core.GaussianMixture, levels: np.ndarray
) -> np.ndarray:
    r"""Returns one-dimensional mixture quantiles by vectorized bisection."""
    sds = np.sqrt(target.covariances[:, 0, 0])
    low = np.full(levels.shape, float((target.means[:, 0] - 40.0 * sds).min()))
    high = np.full(levels.shape, float((target.means[:, 0] + 40.0 * sds).max()))
    for _ in range(_BISECTION_STEPS):
        middle = 0.5 * (low + high)
        below = _mixture_cdf(target, middle) < levels
        low = np.where(below, middle, low)
        high = np.where(below, high, middle)
    return 0.5 * (low + high)


def empirical_divergences(
    batch: BatchLike,
    target: mixture_core.GaussianMixture,
    bins: Optional[int] = None,
    kinds: Sequence[str] = ("TV", "KL", "W2-1D"),
    reference: str = "mu_t",
) -> List[DivergenceReport]:
    r"""Returns histogram TV, histogram KL and sorted-sample W2 against a target.

    KL is `KL(target ‖ histogram)` with add-ε smoothing, `ε = 1/(10·N·bins)`.
    W2 is only reported in one dimension.

    Args:
        batch (BatchLike):
            Required. A SampleBatch or an `(n, d)` array with `d <= 2`.
        target (mixture_core.GaussianMixture):
            Required. The analytic target.
        bins (Optional[int]):
            Optional. Bins per axis. Defaults to 200 in 1D and 40 in 2D.
        kinds (Sequence[str]):
            Optional. Which of `TV`, `KL` and `W2-1D` to compute.
        reference (str):
            Optional. Label of the target, recorded in each report.

    Raises:
        CoverageError: if the batch has fewer than two distinct points or the
            histogram range holds less than 90% of the target mass.
    """
    samples = _samples_of(batch)
    target_time = batch.target_time if isinstance(batch, SampleBatch) else None
    if samples.shape[1] != target.dim:
        raise DimensionMismatchError(
            f"Batch dim {samples.shape[1]} does not match target dim {target.dim}."
        )
    if target.dim > 2:
        raise DimensionMismatchError(
            "Histogram divergences are limited to dim <= 2; use mode_weights."
        )
    if np.unique(samples, axis=0).shape[0] < 2:
        raise CoverageError(
            "A batch needs at least two distinct points for histogram estimates.",
            missing_mass=1.0,
        )
    if bins is None:
        bins = constants.DEFAULT_BINS if target.dim == 1 else constants.DEFAULT_BINS_2D

    n = samples.shape[0]
    edges = _histogram_edges(samples, target, bins)
    counts, _ = np.histogramdd(samples, bins=edges)
    empirical = counts / n
    target_mass = _target_bin_masses(target, edges)
    covered = float(target_mass.sum())
    if covered < constants.HISTOGRAM_MIN_TARGET_MASS:
        raise CoverageError(
            f"Histogram range holds only {covered:.3f} of the target mass.",
            missing_mass=1.0 - covered,
        )
    target_mass = np.clip(target_mass, 0.0, None)

    epsilon = 1.0 / (10.0 * n * empirical.size)
    bin_spec = {
        "bins": bins,
        "range": [[float(e[0]), float(e[-1])] for e in edges],
        "epsilon": epsilon,
        "n": n,
        "covered_target_mass": covered,
    }

    reports = []
    if "TV" in kinds:
        tv = 0.5 * float(np.abs(empirical - target_mass).sum()) + 0.5 * (1.0 - covered)
        reports.append(
            DivergenceReport(
                kind="TV",
                value=tv,
                estimator="histogram",
                spec=bin_spec,
                target_time=target_time,
                reference=reference,
            )
        )
    if "KL" in kinds:
        q = target_mass / target_mass.sum()
        p = (empirical + epsilon) / (1.0 + epsilon * empirical.size)
        kl = float(special.xlogy(q, q).sum() - special.xlogy(q, p).sum())
        reports.append(
            DivergenceReport(
                kind="KL",
                value=kl,
                estimator="histogram",
                spec=bin_spec,
                target_time=target_time,
                reference=reference,
                details={"direction": "target||empirical"},
            )
        )
    if "W2-1D" in kinds and target.dim == 1:
        levels = (np.arange(n) + 0.5) / n
        quantiles = mixture_quantiles(target, levels)
        w2 = math.sqrt(float(np.mean(np.square(np.sort(samples[:, 0]) - quantiles))))
        reports.append(
            DivergenceReport(
                kind="W2-1D",
                value=w2,
                estimator="sorted-1D",
                spec={"n": n},
                target_time=target_time,
                reference=reference,
            )
        )
    return reports


def kde_fisher_estimate(
    batch: BatchLike,
    target: mixture_core.GaussianMixture,
    max_points: int = constants.KDE_MAX_POINTS,
) -> DivergenceReport:
    r"""Estimates `FI(sample law ‖ target)` with a leave-one-out kernel score.

    The bandwidth follows Scott's rule as chosen by `scipy.stats.gaussian_kde`.
    This estimator has high variance and is reported with that flag.
    """
    samples = _samples_of(batch)
    target_time = batch.target_time if isinstance(batch, SampleBatch) else None
    if samples.shape[0] > max_points:
        index = np.linspace(0, samples.shape[0] - 1, max_points).astype(int)
        samples = samples[index]
    m = samples.shape[0]
    if m < samples.shape[1] + 2:
        raise CoverageError("Too few points for a kernel score estimate.")

    bandwidth = np.atleast_2d(stats.gaussian_kde(samples.T).covariance)
    precision = np.linalg.inv(bandwidth)
    diff = samples[None, :, :] - samples[:, None, :]
    log_kernel = -0.5 * np.einsum("ijk,kl,ijl->ij", diff, precision, diff)
    np.fill_diagonal(log_kernel, -np.inf)
    weights = np.exp(log_kernel - special.logsumexp(log_kernel, axis=1, keepdims=True))
    kernel_score = (weights @ samples - samples) @ precision

    gap = kernel_score - mixture_core.score(target, samples)
    squared = np.square(gap).sum(axis=1)
    return DivergenceReport(
        kind="FI",
        value=float(squared.mean()),
        estimator="kde-score",
        spec={
            "bandwidth": bandwidth.tolist(),
            "subsample": m,
            "flag": "high-variance",
        },
        mc_std_err=float(squared.std(ddof=1) / math.sqrt(m)),
        target_time=target_time,
    )
