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

from google.cloud.langevin_toolbox.diagnostics import empirical
from google.cloud.langevin_toolbox.diagnostics.empirical import (
    Box,
    DivergenceReport,
    HalfSpace,
)
from google.cloud.langevin_toolbox.exceptions import (
    CoverageError,
    DimensionMismatchError,
    PartitionError,
)
from google.cloud.langevin_toolbox.samplers.annealed_langevin import SampleBatch
from google.cloud.langevin_toolbox.wrappers import mixture_core


def _gaussian(mean: float, var: float = 1.0) -> mixture_core.GaussianMixture:
    return mixture_core.GaussianMixture(
        weights=[1.0], means=[[mean]], covariances=[[[var]]]
    )


@pytest.fixture
def gaussian_samples():
    return np.random.default_rng(0).standard_normal((100_000, 1))


def _by_kind(reports):
    return {report.kind: report for report in reports}


def test_divergences_of_exact_samples_are_small(gaussian_samples):
    reports = _by_kind(
        empirical.empirical_divergences(gaussian_samples, _gaussian(0.0))
    )

    assert set(reports) == {"TV", "KL", "W2-1D"}
    assert reports["TV"].value < 0.03
    assert reports["TV"].estimator == "histogram"
    assert reports["KL"].value < 0.01
    assert reports["KL"].details == {"direction": "target||empirical"}
    assert reports["W2-1D"].value < 0.05
    assert reports["W2-1D"].estimator == "sorted-1D"


def test_divergences_detect_shift(gaussian_samples):
    reports = _by_kind(
        empirical.empirical_divergences(gaussian_samples + 1.0, _gaussian(0.0))
    )

    expected_tv = math.erf(0.5 / math.sqrt(2.0))
    assert reports["TV"].value == pytest.approx(expected_tv, abs=0.03)
    assert reports["W2-1D"].value == pytest.approx(1.0, abs=0.05)
    assert reports["KL"].value > 0.3


def test_divergences_record_bin_spec_and_batch_time(gaussian_samples):
    batch = SampleBatch(
        samples=gaussian_samples[:5000],
        target_time=0.25,
        algorithm_iter=10,
        config_hash="abc",
        seed=0,
    )

    reports = empirical.empirical_divergences(
        batch, _gaussian(0.0), bins=50, kinds=("TV",), reference="mu_0"
    )

    assert len(reports) == 1
    assert reports[0].target_time == 0.25
    assert reports[0].reference == "mu_0"
    assert reports[0].spec["bins"] == 50
    assert reports[0].spec["n"] == 5000
    assert reports[0].spec["epsilon"] == pytest.approx(1.0 / (10 * 5000 * 50))


def test_divergences_in_two_dimensions():
    samples = np.random.default_rng(1).standard_normal((50_000, 2))

    reports = _by_kind(
        empirical.empirical_divergences(samples, mixture_core.standard_gaussian(2))
    )

    assert set(reports) == {"TV", "KL"}
    assert reports["TV"].value < 0.08
    assert reports["TV"].spec["covered_target_mass"] == pytest.approx(1.0, abs=1e-8)


def test_single_point_batch_raises_coverage_error():
    with pytest.raises(CoverageError):
        empirical.empirical_divergences(np.zeros((10, 1)), _gaussian(0.0))


def test_divergences_reject_dimension_mismatch(gaussian_samples):
    with pytest.raises(DimensionMismatchError):
        empirical.empirical_divergences(
            np.zeros((10, 2)), _gaussian(0.0)
        )
    with pytest.raises(DimensionMismatchError):
        empirical.empirical_divergences(
            np.zeros((10, 3)), mixture_core.standard_gaussian(3)
        )


def test_empty_batch_rejected():
    with pytest.raises(ValueError, match="empty"):
        empirical.empirical_divergences(np.zeros((0, 1)), _gaussian(0.0))


def test_mixture_quantiles():
    actual = empirical.mixture_quantiles(_gaussian(1.0, 4.0), np.array([0.5, 0.975]))

    np.testing.assert_allclose(actual, [1.0, 1.0 + 2 * 1.959963984540054], rtol=1e-9)


def test_mode_weights_split_at_zero():
    samples = np.array([[-1.0], [-2.0], [3.0], [4.0], [0.0]])

    actual = empirical.mode_weights(samples, empirical.split_at(0.0))

    np.testing.assert_allclose(actual.weights, [0.4, 0.6])
    np.testing.assert_allclose(actual.std_errs, [math.sqrt(0.24 / 5)] * 2)
    assert actual.n == 5


def test_mode_weights_overlapping_cells():
    partition = [HalfSpace((1.0,), 0.0), HalfSpace((1.0,), -1.0)]

    with pytest.raises(PartitionError, match="overlap"):
        empirical.mode_weights(np.array([[0.5]]), partition)


def test_mode_weights_uncovered_samples():
    partition = [Box((-1.0,), (0.0,))]

    with pytest.raises(PartitionError, match="cover"):
        empirical.mode_weights(np.array([[-0.5], [2.0]]), partition)


def test_mode_weights_empty_partition():
    with pytest.raises(PartitionError):
        empirical.mode_weights(np.array([[0.0]]), [])


def test_mode_weights_partition_with_gap_outside_the_samples():
    partition = [HalfSpace((-1.0,), 0.0, strict=True)]

    with pytest.raises(PartitionError, match="cover"):
        empirical.mode_weights(np.array([[-1.0], [-2.0]]), partition)


def test_mode_weights_partition_missing_the_boundary():
    partition = [
        HalfSpace((-1.0,), 0.0, strict=True),
        HalfSpace((1.0,), 0.0, strict=True),
    ]

    with pytest.raises(PartitionError, match="cover 1 test points"):
        empirical.mode_weights(np.array([[-1.0], [1.0]]), partition)


@pytest.mark.parametrize(
    "partition,dim",
    [
        (empirical.split_at(0.0), 1),
        (empirical.split_at(0.5, axis=1, dim=2), 2),
        (
            [
                Box((-math.inf,), (-1.0,)),
                Box((-1.0,), (1.0,)),
                Box((1.0,), (math.inf,)),
            ],
            1,
        ),
        (
            [
                Box((-math.inf, -math.inf), (0.0, math.inf)),
                Box((0.0, -math.inf), (math.inf, 0.0)),
                Box((0.0, 0.0), (math.inf, math.inf)),
            ],
            2,
        ),
        (
            [
                HalfSpace((-1.0, -1.0), 0.0, strict=True),
                HalfSpace((1.0, 1.0), 0.0),
            ],
            2,
        ),
    ],
)
def test_check_partition_accepts_tilings(partition, dim):
    empirical.check_partition(partition, dim)


def test_check_partition_rejects_oblique_gap():
    partition = [
        HalfSpace((-1.0, -1.0), 5.0, strict=True),
        HalfSpace((1.0, 1.0), 0.0),
    ]

    with pytest.raises(PartitionError, match="cover"):
        empirical.check_partition(partition, 2)


def test_check_partition_rejects_overlapping_boxes():
    partition = [Box((-math.inf,), (1.0,)), Box((0.0,), (math.inf,))]

    with pytest.raises(PartitionError, match="overlap"):
        empirical.check_partition(partition, 1)


def test_analytic_mode_weights():
    two_mode = mixture_core.GaussianMixture(
        weights=[0.25, 0.75], means=[[-3.0], [3.0]], covariances=[[[1.0]], [[1.0]]]
    )

    actual = empirical.analytic_mode_weights(two_mode, empirical.split_at(0.0))

    np.testing.assert_allclose(actual, [0.25, 0.75], atol=2e-3)
    assert actual.sum() == pytest.approx(1.0)


def test_box_mass():
    assert Box((-math.inf,), (0.0,)).mass(_gaussian(0.0)) == pytest.approx(0.5)
    quadrant = Box((0.0, 0.0), (math.inf, math.inf))
    assert quadrant.mass(mixture_core.standard_gaussian(2)) == pytest.approx(
        0.25, abs=1e-4
    )


def test_split_at_second_axis():
    lower, upper = empirical.split_at(1.0, axis=1, dim=2)
    points = np.array([[5.0, 0.5], [5.0, 1.0]])

    np.testing.assert_array_equal(lower.contains(points), [True, False])
    np.testing.assert_array_equal(upper.contains(points), [False, True])


def test_mode_weight_report():
    rng = np.random.default_rng(2)
    two_mode = mixture_core.GaussianMixture(
        weights=[0.5, 0.5], means=[[-3.0], [3.0]], covariances=[[[1.0]], [[1.0]]]
    )
    samples = two_mode.sample(20_000, rng)

    actual = empirical.mode_weight_report(
        samples, two_mode, empirical.split_at(0.0), target_time=0.5
    )

    assert actual.kind == "mode-weights"
    assert actual.target_time == 0.5
    assert actual.value < 0.02
    assert actual.details["n"] == 20_000
    assert actual.details["analytic"] == pytest.approx([0.5, 0.5])
    assert len(actual.spec["partition"]) == 2


@pytest.mark.parametrize(
    "data",
    [
        {"type": "halfspace", "normal": [0.0, 1.0], "offset": 2.0, "strict": True},
        {"type": "box", "lower": [-1.0], "upper": [1.0]},
    ],
)
def test_cell_dict_round_trip(data):
    actual = empirical.cell_from_dict(data)

    assert actual.to_dict() == data


def test_cell_from_dict_unknown_type():
    with pytest.raises(ValueError, match="cell type"):
        empirical.cell_from_dict({"type": "ball"})


def test_divergence_report_validation():
    with pytest.raises(ValueError, match="kind"):
        DivergenceReport(kind="JS", value=0.1, estimator="histogram")
    with pytest.raises(ValueError, match="estimator"):
        DivergenceReport(kind="KL", value=0.1, estimator="guess")
    with pytest.raises(ValueError, match=">= 0"):
        DivergenceReport(kind="KL", value=-0.1, estimator="histogram")


def test_divergence_report_clips_round_off():
    actual = DivergenceReport(kind="KL", value=-1e-12, estimator="quadrature")

    assert actual.value == 0.0


def test_divergence_report_dict_round_trip():
    report = DivergenceReport(
        kind="FI",
        value=0.2,
        estimator="kde-score",
        spec={"subsample": 10},
        mc_std_err=0.01,
        target_time=0.3,
        reference="mu_0",
    )

    actual = DivergenceReport.from_dict(report.to_dict())

    assert actual == report


def test_kde_fisher_estimate():
    samples = np.random.default_rng(3).standard_normal((3000, 1))

    matched = empirical.kde_fisher_estimate(samples, _gaussian(0.0))
    shifted = empirical.kde_fisher_estimate(samples, _gaussian(2.0))

    assert matched.kind == "FI"
    assert matched.estimator == "kde-score"
    assert matched.spec["subsample"] == 2000
    assert matched.spec["flag"] == "high-variance"
    assert matched.value < 0.4
    assert shifted.value == pytest.approx(4.0, rel=0.15)


def test_kde_fisher_estimate_needs_points():
    with pytest.raises(CoverageError):
        empirical.kde_fisher_estimate(np.array([[0.0], [1.0]]), _gaussian(0.0))
