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
"""Quadrature divergences between analytic Gaussian mixtures in one or two dimensions."""

import dataclasses
import functools
import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np

from google.cloud.langevin_toolbox import constants
from google.cloud.langevin_toolbox.exceptions import (
    CoverageError,
    DimensionMismatchError,
)
from google.cloud.langevin_toolbox.wrappers import mixture_core

_LOGGER = logging.getLogger(__name__)

_CHUNK = 250_000

Integrand = Callable[[np.ndarray], np.ndarray]


@dataclasses.dataclass(frozen=True, eq=False)
class QuadratureGrid:
    r"""Tensor-product trapezoid grid.

    Attributes:
        axes (Tuple[np.ndarray, ...]):
            Required. Increasing node coordinates per axis.
    """
    axes: Tuple[np.ndarray, ...]

    def __post_init__(self):
        axes = tuple(np.asarray(axis, dtype=float) for axis in self.axes)
        if not 1 <= len(axes) <= 2:
            raise DimensionMismatchError("Quadrature grids support one or two axes.")
        for axis in axes:
            if axis.ndim != 1 or axis.size < 3 or np.any(np.diff(axis) <= 0):
                raise ValueError("Grid axes must be increasing with at least 3 nodes.")
        object.__setattr__(self, "axes", axes)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def size(self) -> int:
        return int(np.prod([axis.size for axis in self.axes]))

    @functools.cached_property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    @functools.cached_property
    def weights(self) -> np.ndarray:
        per_axis = []
        for axis in self.axes:
            gaps = np.diff(axis)
            w = np.zeros_like(axis)
            w[:-1] += 0.5 * gaps
            w[1:] += 0.5 * gaps
            per_axis.append(w)
        if self.dim == 1:
            return per_axis[0]
        return np.outer(per_axis[0], per_axis[1]).reshape(-1)

    def refined(self) -> "QuadratureGrid":
        r"""Returns the grid with a midpoint inserted in every interval."""
        axes = []
        for axis in self.axes:
            refined = np.empty(2 * axis.size - 1)
            refined[0::2] = axis
            refined[1::2] = 0.5 * (axis[1:] + axis[:-1])
            axes.append(refined)
        return QuadratureGrid(tuple(axes))

    def to_dict(self) -> dict:
        return {
            "rule": "trapezoid",
            "bounds": [[float(a[0]), float(a[-1])] for a in self.axes],
            "nodes": [int(a.size) for a in self.axes],
        }

    def integrate(self, integrand: Integrand) -> np.ndarray:
        r"""Returns `Σ w_j f(x_j)`, evaluating `f` on chunks of points."""
        total = None
        points, weights = self.points, self.weights
        for start in range(0, points.shape[0], _CHUNK):
            values = integrand(points[start : start + _CHUNK])
            part = np.tensordot(weights[start : start + _CHUNK], values, axes=(0, 0))
            total = part if total is None else total + part
        return total


def build_grid(
    *mixtures: mixture_core.GaussianMixture,
    points_per_axis: Optional[int] = None,
    span: float = constants.QUADRATURE_SPAN_SD,
) -> QuadratureGrid:
    r"""Returns a grid covering every component's mean ± `span` standard deviations.

    Args:
        mixtures (mixture_core.GaussianMixture):
            Required. One or more mixtures of the same dimension (at most 2).
        points_per_axis (Optional[int]):
            Optional. Nodes per axis. Defaults depend on the dimension.
        span (float):
            Optional. Half-width in standard deviations.
    """
    if not mixtures:
        raise ValueError("At least one mixture is required to build a grid.")
    dim = mixtures[0].dim
    if any(m.dim != dim for m in mixtures):
        raise DimensionMismatchError("All mixtures must share one dimension.")
    if dim > 2:
        raise DimensionMismatchError(
            f"Quadrature is limited to dim <= 2, got {dim}."
        )
    if points_per_axis is None:
        points_per_axis = (
            constants.QUADRATURE_POINTS_1D
            if dim == 1
            else constants.QUADRATURE_POINTS_2D
        )
    axes = []
    for j in range(dim):
        lows, highs = [], []
        for mixture in mixtures:
            sd = np.sqrt(mixture.covariances[:, j, j])
            lows.append((mixture.means[:, j] - span * sd).min())
            highs.append((mixture.means[:, j] + span * sd).max())
        axes.append(np.linspace(min(lows), max(highs), points_per_axis))
    return QuadratureGrid(tuple(axes))


def _check_pair(rho: mixture_core.GaussianMixture, pi: mixture_core.GaussianMixture):
    if rho.dim != pi.dim:
        raise DimensionMismatchError(
            f"Mixtures have different dimensions {rho.dim} and {pi.dim}."
        )
    if rho.dim > 2:
        raise DimensionMismatchError(
            f"Quadrature is limited to dim <= 2, got {rho.dim}."
        )


def check_coverage(rho: mixture_core.GaussianMixture, grid: QuadratureGrid) -> float:
    r"""Returns the grid mass of `ρ`, raising if it misses more than 1e-8."""
    mass = float(grid.integrate(lambda x: np.exp(mixture_core.log_density(rho, x))))
    missing = 1.0 - mass
    if missing > constants.COVERAGE_TOLERANCE:
        raise CoverageError(
            f"Grid covers {mass:.12f} of the mass; missing {missing:.3e}.",
            missing_mass=missing,
        )
    return mass


def integrate_adaptive(
    integrand: Integrand,
    grid: QuadratureGrid,
    tol: float = constants.QUADRATURE_REL_TOL,
    max_refinements: int = constants.QUADRATURE_MAX_REFINEMENTS,
) -> Tuple[np.ndarray, QuadratureGrid]:
    r"""Integrates on `grid`, doubling resolution until successive values agree.

    Returns:
        Tuple[np.ndarray, QuadratureGrid]:
            The converged value and the grid that produced it.
    """
    value = np.asarray(grid.integrate(integrand))
    for _ in range(max_refinements):
        finer = grid.refined()
        finer_value = np.asarray(finer.integrate(integrand))
        change = np.max(np.abs(finer_value - value))
        scale = max(float(np.max(np.abs(finer_value))), 1e-6)
        grid, value = finer, finer_value
        if change <= tol * scale:
            return value, grid
    _LOGGER.warning(
        "Quadrature did not reach tolerance %.1e after %d refinements.",
        tol,
        max_refinements,
    )
    return value, grid


def _prepare(rho, pi, grid):
    _check_pair(rho, pi)
    grid = grid or build_grid(rho)
    if grid.dim != rho.dim:
        raise DimensionMismatchError("Grid dimension does not match the mixtures.")
    check_coverage(rho, grid)
    return grid


def kl_quadrature(
    rho: mixture_core.GaussianMixture,
    pi: mixture_core.GaussianMixture,
    grid: Optional[QuadratureGrid] = None,
    tol: float = constants.QUADRATURE_REL_TOL,
) -> float:
    r"""Returns `KL(ρ‖π) = ∫ ρ log(ρ/π)` by adaptive trapezoid quadrature.

    Args:
        rho (mixture_core.GaussianMixture):
            Required. First argument `ρ`.
        pi (mixture_core.GaussianMixture):
            Required. Reference `π`.
        grid (Optional[QuadratureGrid]):
            Optional. Starting grid. Defaults to `ρ`'s mean ± 12 sd.
        tol (float):
            Optional. Relative tolerance between successive refinements.

    Raises:
        CoverageError: if the grid misses more than 1e-8 of `ρ`'s mass.
    """
    grid = _prepare(rho, pi, grid)

    def integrand(x: np.ndarray) -> np.ndarray:
        log_rho = mixture_core.log_density(rho, x)
        return np.exp(log_rho) * (log_rho - mixture_core.log_density(pi, x))

    value, _ = integrate_adaptive(integrand, grid, tol)
    return float(value)


def score_gap_quadrature(
    rho: mixture_core.GaussianMixture,
    first: mixture_core.GaussianMixture,
    second: mixture_core.GaussianMixture,
    grid: Optional[QuadratureGrid] = None,
    tol: float = constants.QUADRATURE_REL_TOL,
) -> float:
    r"""Returns `E_ρ‖∇log first − ∇log second‖²` by quadrature."""
    _check_pair(rho, first)
    grid = _prepare(rho, second, grid)

    def integrand(x: np.ndarray) -> np.ndarray:
        gap = mixture_core.score(first, x) - mixture_core.score(second, x)
        return np.exp(mixture_core.log_density(rho, x)) * np.square(gap).sum(axis=1)

    value, _ = integrate_adaptive(integrand, grid, tol)
    return float(value)


def fisher_quadrature(
    rho: mixture_core.GaussianMixture,
    pi: mixture_core.GaussianMixture,
    grid: Optional[QuadratureGrid] = None,
    tol: float = constants.QUADRATURE_REL_TOL,
) -> float:
    r"""Returns `FI(ρ‖π) = ∫ ρ ‖∇log ρ − ∇log π‖²` with analytic scores.

    Raises:
        CoverageError: if the grid misses more than 1e-8 of `ρ`'s mass.
    """
    return score_gap_quadrature(rho, rho, pi, grid, tol)


def kl_monte_carlo(
    rho: mixture_core.GaussianMixture,
    pi: mixture_core.GaussianMixture,
    n: int,
    rng: np.random.Generator,
    chunk: int = 1_000_000,
) -> Tuple[float, float]:
    r"""Returns a Monte Carlo estimate of `KL(ρ‖π)` and its standard error."""
    _check_pair(rho, pi)
    total, total_sq, drawn = 0.0, 0.0, 0
    while drawn < n:
        size = min(chunk, n - drawn)
        x = rho.sample(size, rng)
        terms = mixture_core.log_density(rho, x) - mixture_core.log_density(pi, x)
        total += float(terms.sum())
        total_sq += float(np.square(terms).sum())
        drawn += size
    mean = total / n
    variance = max(total_sq / n - mean * mean, 0.0)
    return mean, math.sqrt(variance / n)


def density_upper_bound(dim: int, t: float) -> float:
    r"""Returns `(2π(1 − e^{-2t}))^{-d/2}`, a bound on every smoothed density."""
    t = mixture_core.SmoothTime(t).t
    if t == 0:
        return math.inf
    return (2.0 * math.pi * -math.expm1(-2.0 * t)) ** (-dim / 2.0)


def convolution_smoothed_density(
    p: mixture_core.GaussianMixture, t: float, x: np.ndarray
) -> np.ndarray:
    r"""Returns the one-dimensional smoothed density by direct convolution.

    Evaluates `∫ p(y) N(x; e^{-t} y, 1 − e^{-2t}) dy` with a trapezoid rule
    whose spacing is a twentieth of the narrowest feature.
    """
    if p.dim != 1:
        raise DimensionMismatchError("The convolution oracle is one-dimensional.")
    t = mixture_core.SmoothTime(t).t
    x = np.asarray(x, dtype=float).reshape(-1)
    if t == 0:
        return np.exp(mixture_core.log_density(p, x[:, None]))
    decay = math.exp(-t)
    noise_sd = math.sqrt(-math.expm1(-2.0 * t))
    prior_sd = float(np.sqrt(p.covariances[:, 0, 0]).min())
    spacing = min(prior_sd, noise_sd / decay) / 20.0

    sds = np.sqrt(p.covariances[:, 0, 0])
    low = float((p.means[:, 0] - constants.QUADRATURE_SPAN_SD * sds).min())
    high = float((p.means[:, 0] + constants.QUADRATURE_SPAN_SD * sds).max())
    y = np.linspace(low, high, int(math.ceil((high - low) / spacing)) + 1)
    weights = QuadratureGrid((y,)).weights

    prior_density = np.exp(mixture_core.log_density(p, y[:, None]))
    kernel = np.exp(
        -0.5 * np.square((x[:, None] - decay * y[None, :]) / noise_sd)
    ) / (noise_sd * math.sqrt(2.0 * math.pi))
    return kernel @ (weights * prior_density)
