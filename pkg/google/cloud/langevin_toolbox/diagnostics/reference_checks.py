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
"""Analytic reference instances and regularity checks for the posterior path."""

import dataclasses
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from google.cloud.langevin_toolbox.diagnostics import quadrature
from google.cloud.langevin_toolbox.exceptions import DimensionMismatchError
from google.cloud.langevin_toolbox.wrappers import likelihood, mixture_core

_BOUND_SLACK = 1e-9


def symmetric_two_mode_prior(ell: float, dim: int = 1) -> mixture_core.GaussianMixture:
    r"""Returns `½N(−ℓe_1, I) + ½N(ℓe_1, I)`."""
    offset = np.zeros(dim)
    offset[0] = ell
    return mixture_core.GaussianMixture(
        weights=np.array([0.5, 0.5]),
        means=np.stack([-offset, offset]),
        covariances=np.stack([np.eye(dim), np.eye(dim)]),
    )


def flipped_posterior_instance(
    ell: float,
) -> Tuple[mixture_core.GaussianMixture, likelihood.QuadraticPotential]:
    r"""Returns the two-mode prior and the potential `R(x) = (x + ℓ)²/ℓ²`.

    The tilted posterior puts weight `1/(1 + e^{-4 + 8/(ℓ² + 2)})` on the
    component at `−ℓ`; the other component sits at `ℓ(ℓ² − 2)/(ℓ² + 2)`.
    """
    potential = likelihood.QuadraticPotential(
        A=np.array([[1.0]]), y=np.array([-ell]), noise_var=ell * ell / 2.0
    )
    return symmetric_two_mode_prior(ell), potential


def flipped_weight(ell: float) -> float:
    r"""Returns the posterior weight of the component at `−ℓ`."""
    return 1.0 / (1.0 + math.exp(-4.0 + 8.0 / (ell * ell + 2.0)))


@dataclasses.dataclass
class FlippedPosterior:
    r"""A posterior and its weight-swapped copy, with their divergences.

    Attributes:
        p_R (mixture_core.GaussianMixture):
            The tilted two-mode posterior.
        p_R_flipped (mixture_core.GaussianMixture):
            The same components with swapped weights.
        fi (float):
            `FI(p_R_flipped ‖ p_R)` by quadrature.
        kl (float):
            `KL(p_R_flipped ‖ p_R)` by quadrature.
    """

    p_R: mixture_core.GaussianMixture
    p_R_flipped: mixture_core.GaussianMixture
    fi: float
    kl: float

    def __iter__(self):
        return iter((self.p_R, self.p_R_flipped, self.fi, self.kl))


def flipped_posterior_example(ell: float) -> FlippedPosterior:
    r"""Builds a posterior whose weight-swapped copy has small Fisher divergence.

    Args:
        ell (float):
            Required. Mode separation `ℓ >= 2`.

    Returns:
        FlippedPosterior:
            Both mixtures with `FI` of order `ℓ² e^{-ℓ²/2}` and `KL` bounded away from 0.
    """
    if not ell >= 2:
        raise ValueError(f"ell must be >= 2, got {ell}.")
    prior, potential = flipped_posterior_instance(ell)
    p_R = mixture_core.tilt(prior, potential)
    p_R_flipped = mixture_core.GaussianMixture(
        weights=p_R.weights[::-1].copy(),
        means=p_R.means,
        covariances=p_R.covariances,
    )
    grid = quadrature.build_grid(p_R_flipped, p_R)
    return FlippedPosterior(
        p_R=p_R,
        p_R_flipped=p_R_flipped,
        fi=quadrature.fisher_quadrature(p_R_flipped, p_R, grid),
        kl=quadrature.kl_quadrature(p_R_flipped, p_R, grid),
    )


@dataclasses.dataclass
class SubgaussianReport:
    r"""Posterior moments against the subgaussian-posterior bounds.

    The bounds are `‖E Y‖² <= 3𝔯𝔪²` and
    `E‖Y‖² <= 9𝔯𝔪²(𝔪 + ‖𝔵‖/2)² d + 3𝔯𝔪²`, with `𝔪` the prior proxy from
    `mixture_core.regularity_constants` and `𝔯` the upper curvature of `R`.
    """

    posterior_mean: List[float]
    mean_norm_sq: float
    second_moment: float
    m_proxy: float
    curvature: float
    distance: float
    mean_bound: float
    second_moment_bound: float

    @property
    def mean_ok(self) -> bool:
        return self.mean_norm_sq <= self.mean_bound + _BOUND_SLACK

    @property
    def second_moment_ok(self) -> bool:
        return self.second_moment <= self.second_moment_bound + _BOUND_SLACK

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.second_moment_ok

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data.update(
            mean_ok=self.mean_ok,
            second_moment_ok=self.second_moment_ok,
        )
        return data


def subgaussian_posterior_check(
    prior: mixture_core.GaussianMixture,
    R: likelihood.QuadraticPotential,
    grid: Optional[quadrature.QuadratureGrid] = None,
) -> SubgaussianReport:
    r"""Computes the tilted posterior's moments by quadrature and their bounds.

    Args:
        prior (mixture_core.GaussianMixture):
            Required. A prior of dimension at most 2.
        R (likelihood.QuadraticPotential):
            Required. The measurement potential.
        grid (Optional[quadrature.QuadratureGrid]):
            Optional. Quadrature grid. Defaults to the posterior's mean ± 12 sd.
    """
    if prior.dim > 2:
        raise DimensionMismatchError("The subgaussian check is limited to dim <= 2.")
    posterior = mixture_core.tilt(prior, R)
    grid = grid or quadrature.build_grid(posterior)
    quadrature.check_coverage(posterior, grid)

    def integrand(x: np.ndarray) -> np.ndarray:
        density = np.exp(mixture_core.log_density(posterior, x))
        return density[:, None] * np.concatenate(
            [x, np.square(x).sum(axis=1, keepdims=True)], axis=1
        )

    moments, _ = quadrature.integrate_adaptive(integrand, grid)
    mean = moments[:-1]
    m = mixture_core.regularity_constants(prior).m_subgaussian
    curvature = R.curvature
    mean_bound = 3.0 * curvature * m * m
    return SubgaussianReport(
        posterior_mean=mean.tolist(),
        mean_norm_sq=float(mean @ mean),
        second_moment=float(moments[-1]),
        m_proxy=m,
        curvature=curvature,
        distance=R.distance,
        mean_bound=mean_bound,
        second_moment_bound=9.0
        * curvature
        * m
        * m
        * (m + R.distance / 2.0) ** 2
        * prior.dim
        + mean_bound,
    )


def mixed_relative_error(value: np.ndarray, reference: np.ndarray) -> np.ndarray:
    r"""Returns `|value − reference| / max(|reference|, 1)`."""
    return np.abs(value - reference) / np.maximum(np.abs(reference), 1.0)


def dt_finite_difference_error(
    p: mixture_core.GaussianMixture,
    t: float,
    x: np.ndarray,
    h: float = 1e-5,
) -> np.ndarray:
    r"""Returns the mixed relative gap between `∂_t log p_t` and a central difference."""
    analytic = np.atleast_1d(mixture_core.dt_log_density(p, t, x))
    forward = np.atleast_1d(
        mixture_core.log_density(mixture_core.ou_smooth(p, t + h), x)
    )
    backward = np.atleast_1d(
        mixture_core.log_density(mixture_core.ou_smooth(p, t - h), x)
    )
    return mixed_relative_error(analytic, (forward - backward) / (2.0 * h))


@dataclasses.dataclass
class RegularityReport:
    r"""Density bound, time-derivative and subgaussian checks for one instance."""

    times: List[float]
    max_density_ratio: float
    dt_max_error: float
    subgaussian: SubgaussianReport

    @property
    def density_bound_ok(self) -> bool:
        return self.max_density_ratio <= 1.0 + 1e-12

    @property
    def dt_ok(self) -> bool:
        return self.dt_max_error <= 1e-5

    @property
    def passed(self) -> bool:
        return self.density_bound_ok and self.dt_ok and self.subgaussian.passed

    def to_dict(self) -> dict:
        return {
            "times": self.times,
            "max_density_ratio": self.max_density_ratio,
            "dt_max_error": self.dt_max_error,
            "density_bound_ok": self.density_bound_ok,
            "dt_ok": self.dt_ok,
            "subgaussian": self.subgaussian.to_dict(),
        }


def regularity_report(
    prior: mixture_core.GaussianMixture,
    R: likelihood.QuadraticPotential,
    times: Sequence[float] = (0.1, 0.5, 1.0),
    points_per_axis: int = 101,
) -> RegularityReport:
    r"""Runs the smoothed-density bound, the `∂_t log p_t` agreement and the
    subgaussian-posterior check on one prior and potential.
    """
    grid = quadrature.build_grid(prior, points_per_axis=points_per_axis)
    points = grid.points
    density_ratio, dt_error = 0.0, 0.0
    for t in times:
        smoothed = mixture_core.ou_smooth(prior, t)
        density = np.exp(mixture_core.log_density(smoothed, points))
        bound = quadrature.density_upper_bound(prior.dim, t)
        density_ratio = max(density_ratio, float(density.max()) / bound)
        dt_error = max(
            dt_error, float(dt_finite_difference_error(prior, t, points).max())
        )
    return RegularityReport(
        times=[float(t) for t in times],
        max_density_ratio=density_ratio,
        dt_max_error=dt_error,
        subgaussian=subgaussian_posterior_check(prior, R),
    )
