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

import math

import numpy as np
import pytest

from google.cloud.langevin_toolbox.exceptions import (
    DimensionMismatchError,
    InvalidMixtureError,
    SmoothTimeDomainError,
)
from google.cloud.langevin_toolbox.wrappers import mixture_core
from google.cloud.langevin_toolbox.wrappers.likelihood import QuadraticPotential


def _random_mixture(rng, dim, components=3):
    factors = rng.normal(size=(components, dim, dim))
    covariances = factors @ np.swapaxes(factors, 1, 2) + 0.5 * np.eye(dim)
    return mixture_core.GaussianMixture(
        weights=rng.dirichlet(np.ones(components)),
        means=2.0 * rng.normal(size=(components, dim)),
        covariances=covariances,
    )


@pytest.fixture
def two_mode():
    return mixture_core.GaussianMixture.from_components(
        [(0.5, -3.0, 1.0), (0.5, 3.0, 1.0)]
    )


def test_mixture_rejects_weights_not_summing_to_one():
    with pytest.raises(InvalidMixtureError, match="sum to 1"):
        mixture_core.GaussianMixture.from_components(
            [(0.5, 0.0, 1.0), (0.6, 1.0, 1.0)]
        )


def test_mixture_rejects_nonpositive_weight():
    with pytest.raises(InvalidMixtureError, match="strictly positive"):
        mixture_core.GaussianMixture.from_components(
            [(1.5, 0.0, 1.0), (-0.5, 1.0, 1.0)]
        )


def test_mixture_rejects_singular_covariance():
    with pytest.raises(InvalidMixtureError, match="positive definite"):
        mixture_core.GaussianMixture.from_components(
            [(1.0, [0.0, 0.0], np.zeros((2, 2)))]
        )


def test_mixture_rejects_asymmetric_covariance():
    with pytest.raises(InvalidMixtureError, match="symmetric"):
        mixture_core.GaussianMixture.from_components(
            [(1.0, [0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])]
        )


def test_mixture_rejects_mixed_dimensions():
    with pytest.raises(DimensionMismatchError):
        mixture_core.GaussianMixture.from_components(
            [(0.5, 0.0, 1.0), (0.5, [0.0, 0.0], np.eye(2))]
        )


def test_mixture_arrays_are_read_only(two_mode):
    with pytest.raises(ValueError):
        two_mode.means[0, 0] = 1.0


def test_from_dict_and_to_dict(two_mode):
    actual = mixture_core.GaussianMixture.from_dict(two_mode.to_dict())

    np.testing.assert_array_equal(actual.weights, two_mode.weights)
    np.testing.assert_array_equal(actual.means, two_mode.means)
    np.testing.assert_array_equal(actual.covariances, two_mode.covariances)


def test_from_dict_with_wrong_declared_dim(two_mode):
    data = two_mode.to_dict()
    data["dim"] = 2

    with pytest.raises(DimensionMismatchError):
        mixture_core.GaussianMixture.from_dict(data)


def test_from_dict_missing_components():
    with pytest.raises(InvalidMixtureError, match="Malformed"):
        mixture_core.GaussianMixture.from_dict({"dim": 1})


def test_log_density_of_standard_gaussian():
    gamma = mixture_core.standard_gaussian(2)

    actual = mixture_core.log_density(gamma, np.zeros(2))

    assert actual == pytest.approx(-math.log(2.0 * math.pi))


def test_log_density_batch_shape(two_mode):
    actual = mixture_core.log_density(two_mode, np.zeros((5, 1)))

    assert actual.shape == (5,)
    expected = -0.5 * math.log(2 * math.pi) - 4.5
    np.testing.assert_allclose(actual, expected)


def test_log_density_rejects_wrong_dimension(two_mode):
    with pytest.raises(DimensionMismatchError):
        mixture_core.log_density(two_mode, np.zeros(2))


def test_score_of_standard_gaussian():
    gamma = mixture_core.standard_gaussian(3)
    x = np.array([[1.0, -2.0, 0.5], [0.0, 0.0, 4.0]])

    np.testing.assert_allclose(mixture_core.score(gamma, x), -x)


def test_score_matches_finite_difference():
    rng = np.random.default_rng(7)
    p = _random_mixture(rng, 2)
    x = rng.normal(size=2)
    h = 1e-6

    expected = [
        (
            mixture_core.log_density(p, x + h * e)
            - mixture_core.log_density(p, x - h * e)
        )
        / (2 * h)
        for e in np.eye(2)
    ]

    np.testing.assert_allclose(
        mixture_core.score(p, x), expected, rtol=1e-6, atol=1e-7
    )


def test_score_matches_finite_difference_at_random_points():
    rng = np.random.default_rng(11)
    h = 1e-6
    for _ in range(5):
        p = _random_mixture(rng, 2)
        x = 2.0 * rng.normal(size=(200, 2))

        expected = np.stack(
            [
                (
                    mixture_core.log_density(p, x + h * e)
                    - mixture_core.log_density(p, x - h * e)
                )
                / (2 * h)
                for e in np.eye(2)
            ],
            axis=1,
        )

        np.testing.assert_allclose(
            mixture_core.score(p, x), expected, rtol=1e-6, atol=1e-6
        )


def test_ou_smooth_single_component():
    p = mixture_core.GaussianMixture.from_components([(1.0, 2.0, 0.25)])

    actual = mixture_core.ou_smooth(p, math.log(2.0))

    assert actual.means[0, 0] == pytest.approx(1.0)
    assert actual.covariances[0, 0, 0] == pytest.approx(0.8125)


def test_ou_smooth_keeps_standard_gaussian():
    gamma = mixture_core.standard_gaussian(2)

    actual = mixture_core.ou_smooth(gamma, mixture_core.SmoothTime(0.7))

    np.testing.assert_allclose(actual.means, 0.0, atol=1e-15)
    np.testing.assert_allclose(actual.covariances[0], np.eye(2))


def test_ou_smooth_at_zero_returns_prior(two_mode):
    assert mixture_core.ou_smooth(two_mode, 0.0) is two_mode


def test_ou_smooth_rejects_negative_time(two_mode):
    with pytest.raises(SmoothTimeDomainError):
        mixture_core.ou_smooth(two_mode, -0.1)


@pytest.mark.parametrize("dim", [1, 2])
def test_ou_smooth_semigroup(dim):
    rng = np.random.default_rng(20 + dim)
    for _ in range(5):
        p = _random_mixture(rng, dim)
        s, t = rng.uniform(0.05, 2.0, size=2)

        composed = mixture_core.ou_smooth(mixture_core.ou_smooth(p, s), t)
        direct = mixture_core.ou_smooth(p, s + t)

        np.testing.assert_allclose(composed.weights, direct.weights, atol=1e-12)
        np.testing.assert_allclose(composed.means, direct.means, atol=1e-12)
        np.testing.assert_allclose(
            composed.covariances, direct.covariances, rtol=1e-12, atol=1e-12
        )


def _max_score_slope(p, grid):
    scores = mixture_core.score(p, grid[:, None])[:, 0]
    return float(np.abs(np.diff(scores) / np.diff(grid)).max())


@pytest.mark.parametrize(
    "components",
    [
        [(0.5, -3.0, 1.0), (0.5, 3.0, 1.0)],
        [(0.3, -2.0, 0.5), (0.7, 1.0, 0.25)],
    ],
)
def test_smoothing_does_not_raise_score_lipschitz(components):
    p = mixture_core.GaussianMixture.from_components(components)
    grid = np.linspace(-8.0, 8.0, 4001)
    bound = max(1.0, _max_score_slope(p, grid)) * (1.0 + 1e-3)

    for t in (0.25, 1.0):
        assert _max_score_slope(mixture_core.ou_smooth(p, t), grid) <= bound


def test_score_slope_within_regularity_constant(two_mode):
    grid = np.linspace(-8.0, 8.0, 4001)
    lipschitz = mixture_core.regularity_constants(two_mode).score_lipschitz

    for t in (0.0, 0.25, 1.0):
        slope = _max_score_slope(mixture_core.ou_smooth(two_mode, t), grid)
        assert slope <= lipschitz * (1.0 + 1e-3)


@pytest.mark.parametrize("dim", [1, 2])
def test_tweedie_identity(dim):
    rng = np.random.default_rng(dim)
    for _ in range(5):
        p = _random_mixture(rng, dim)
        for _ in range(40):
            t = rng.uniform(0.05, 3.0)
            x_t = rng.normal(size=dim) * 2.0
            smoothed = mixture_core.ou_smooth(p, t)

            lhs = -math.expm1(-2.0 * t) * mixture_core.score(smoothed, x_t)
            rhs = math.exp(-t) * mixture_core.posterior_mean(p, t, x_t) - x_t

            np.testing.assert_allclose(lhs, rhs, rtol=1e-8, atol=1e-10)


def test_posterior_mean_of_standard_gaussian():
    gamma = mixture_core.standard_gaussian(1)
    x_t = np.array([[0.3], [-2.0]])

    actual = mixture_core.posterior_mean(gamma, 0.5, x_t)

    np.testing.assert_allclose(actual, math.exp(-0.5) * x_t)


def test_posterior_mean_rejects_zero_time(two_mode):
    with pytest.raises(SmoothTimeDomainError, match="> 0"):
        mixture_core.posterior_mean(two_mode, 0.0, np.zeros(1))


@pytest.mark.parametrize("dim", [1, 2])
def test_dt_log_density_matches_finite_difference(dim):
    rng = np.random.default_rng(10 + dim)
    p = _random_mixture(rng, dim)
    x = rng.normal(size=(20, dim))
    h = 1e-5
    for t in (0.1, 0.5, 1.0):
        forward = mixture_core.log_density(mixture_core.ou_smooth(p, t + h), x)
        backward = mixture_core.log_density(mixture_core.ou_smooth(p, t - h), x)

        actual = mixture_core.dt_log_density(p, t, x)

        np.testing.assert_allclose(
            actual, (forward - backward) / (2 * h), rtol=1e-5, atol=1e-6
        )


def test_dt_log_density_rejects_zero_time(two_mode):
    with pytest.raises(SmoothTimeDomainError):
        mixture_core.dt_log_density(two_mode, 0.0, np.zeros(1))


def test_tilt_conjugate_gaussian():
    gamma = mixture_core.standard_gaussian(1)
    R = QuadraticPotential(A=[[1.0]], y=[1.0], noise_var=1.0)

    actual = mixture_core.tilt(gamma, R)

    assert actual.means[0, 0] == pytest.approx(0.5)
    assert actual.covariances[0, 0, 0] == pytest.approx(0.5)


@pytest.mark.parametrize("ell", [3.0, 4.0])
def test_tilt_two_mode_exact_parameters(ell):
    prior = mixture_core.GaussianMixture.from_components(
        [(0.5, -ell, 1.0), (0.5, ell, 1.0)]
    )
    R = QuadraticPotential(A=[[1.0]], y=[ell], noise_var=ell * ell / 2.0)

    actual = mixture_core.tilt(prior, R)

    variance = ell * ell / (ell * ell + 2.0)
    np.testing.assert_allclose(actual.covariances[:, 0, 0], [variance, variance])
    assert actual.means[1, 0] == pytest.approx(ell)
    assert actual.means[0, 0] == pytest.approx(
        -ell * (ell * ell - 2.0) / (ell * ell + 2.0)
    )
    assert actual.weights[0] / actual.weights[1] == pytest.approx(
        math.exp(-4.0 + 8.0 / (ell * ell + 2.0))
    )


def test_tilt_rejects_dimension_mismatch(two_mode):
    R = QuadraticPotential(A=np.eye(2), y=np.zeros(2), noise_var=1.0)

    with pytest.raises(DimensionMismatchError):
        mixture_core.tilt(two_mode, R)


def test_mean_and_second_moment(two_mode):
    assert two_mode.mean()[0] == pytest.approx(0.0)
    assert two_mode.second_moment() == pytest.approx(10.0)


def test_sample_moments(two_mode):
    rng = np.random.default_rng(0)

    samples = two_mode.sample(100000, rng)

    assert samples.shape == (100000, 1)
    assert abs(samples.mean()) < 4 * math.sqrt(10.0 / 100000)
    assert np.mean(samples < 0) == pytest.approx(0.5, abs=0.01)


def test_marginal():
    p = mixture_core.GaussianMixture.from_components(
        [(1.0, [1.0, 2.0], [[2.0, 0.3], [0.3, 1.0]])]
    )

    actual = p.marginal(1)

    assert actual.dim == 1
    assert actual.means[0, 0] == 2.0
    assert actual.covariances[0, 0, 0] == 1.0


def test_responsibilities_sum_to_one(two_mode):
    actual = two_mode.responsibilities(np.linspace(-5, 5, 11)[:, None])

    np.testing.assert_allclose(actual.sum(axis=0), 1.0)


def test_regularity_constants_standard_gaussian():
    actual = mixture_core.regularity_constants(mixture_core.standard_gaussian(2))

    assert actual.m_subgaussian == pytest.approx(1.0)
    assert actual.score_lipschitz == pytest.approx(1.0)
    assert actual.dim == 2


def test_regularity_constants_two_mode(two_mode):
    actual = mixture_core.regularity_constants(two_mode)

    assert actual.m_subgaussian == pytest.approx(4.0)
    assert actual.score_lipschitz == pytest.approx(8.0)


def test_regularity_constants_unequal_covariances():
    p = mixture_core.GaussianMixture.from_components(
        [(0.5, -1.0, 1.0), (0.5, 1.0, 2.0)]
    )

    actual = mixture_core.regularity_constants(p)

    assert math.isinf(actual.score_lipschitz)


def test_smooth_time_rejects_nan():
    with pytest.raises(SmoothTimeDomainError):
        mixture_core.SmoothTime(float("nan"))
