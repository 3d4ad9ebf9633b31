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

import json

import numpy as np
import pytest

from google.cloud.langevin_toolbox.exceptions import DimensionMismatchError
from google.cloud.langevin_toolbox.wrappers import likelihood


@pytest.fixture
def conjugate():
    return likelihood.QuadraticPotential(A=[[1.0]], y=[1.0], noise_var=1.0)


def test_potential_value_and_gradient(conjugate):
    assert likelihood.potential(conjugate, 3.0) == pytest.approx(2.0)
    np.testing.assert_allclose(likelihood.grad_potential(conjugate, [3.0]), [2.0])


def test_potential_batch_shape(conjugate):
    x = np.array([[0.0], [1.0], [2.0]])

    actual = likelihood.potential(conjugate, x)

    np.testing.assert_allclose(actual, [0.5, 0.0, 0.5])
    assert likelihood.grad_potential(conjugate, x).shape == (3, 1)


def test_potential_vanishes_at_minimizer_of_inconsistent_system():
    R = likelihood.QuadraticPotential(
        A=[[1.0], [1.0]], y=[0.0, 2.0], noise_var=1.0
    )

    assert R.r_min == pytest.approx(1.0)
    np.testing.assert_allclose(R.minimizer, [1.0])
    assert likelihood.potential(R, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert likelihood.potential(R, 0.0) > 0


def test_rank_deficient_operator():
    R = likelihood.QuadraticPotential(A=[[1.0, 0.0]], y=[2.0], noise_var=1.0)

    lower, upper = likelihood.curvature_bounds(R)

    assert lower == 0.0
    assert upper == pytest.approx(1.0)
    np.testing.assert_allclose(R.minimizer, [2.0, 0.0], atol=1e-12)
    assert R.distance == pytest.approx(2.0)
    assert likelihood.potential(R, [2.0, 5.0]) == pytest.approx(0.0, abs=1e-12)


def test_curvature_scales_with_noise_variance():
    R = likelihood.QuadraticPotential(
        A=[[2.0, 0.0], [0.0, 1.0]], y=[0.0, 0.0], noise_var=0.5
    )

    assert likelihood.curvature_bounds(R) == pytest.approx((2.0, 8.0))
    assert R.curvature == pytest.approx(8.0)


def test_gradient_matches_finite_difference():
    rng = np.random.default_rng(3)
    R = likelihood.QuadraticPotential(
        A=rng.normal(size=(3, 2)), y=rng.normal(size=3), noise_var=0.7
    )
    x = rng.normal(size=2)
    h = 1e-6
    expected = [
        (likelihood.potential(R, x + h * e) - likelihood.potential(R, x - h * e))
        / (2 * h)
        for e in np.eye(2)
    ]

    np.testing.assert_allclose(
        likelihood.grad_potential(R, x), expected, rtol=1e-6, atol=1e-7
    )


def test_zero_potential():
    R = likelihood.zero_potential(2)

    assert R.dim == 2
    np.testing.assert_allclose(likelihood.potential(R, np.ones((4, 2))), np.zeros(4))
    assert likelihood.curvature_bounds(R) == (0.0, 0.0)


def test_potential_rejects_wrong_dimension(conjugate):
    with pytest.raises(DimensionMismatchError):
        likelihood.potential(conjugate, [1.0, 2.0])


def test_potential_rejects_mismatched_measurement():
    with pytest.raises(DimensionMismatchError):
        likelihood.QuadraticPotential(A=[[1.0, 0.0]], y=[1.0, 2.0], noise_var=1.0)


@pytest.mark.parametrize("noise_var", [0.0, -1.0, float("inf")])
def test_potential_rejects_bad_noise_variance(noise_var):
    with pytest.raises(ValueError, match="noise_var"):
        likelihood.QuadraticPotential(A=[[1.0]], y=[0.0], noise_var=noise_var)


def test_potential_rejects_non_finite_entries():
    with pytest.raises(ValueError, match="finite"):
        likelihood.QuadraticPotential(A=[[float("nan")]], y=[0.0], noise_var=1.0)


def test_potential_arrays_are_read_only(conjugate):
    with pytest.raises(ValueError):
        conjugate.A[0, 0] = 2.0


def test_from_dict_round_trip(conjugate):
    actual = likelihood.QuadraticPotential.from_dict(conjugate.to_dict())

    np.testing.assert_array_equal(actual.A, conjugate.A)
    np.testing.assert_array_equal(actual.y, conjugate.y)
    assert actual.noise_var == conjugate.noise_var


def test_from_dict_missing_key():
    with pytest.raises(ValueError, match="Malformed"):
        likelihood.QuadraticPotential.from_dict({"A": [[1.0]], "y": [0.0]})


def test_from_file(tmp_path, conjugate):
    file_path = tmp_path / "measurement.json"
    file_path.write_text(json.dumps(conjugate.to_dict()))

    actual = likelihood.QuadraticPotential.from_file(str(file_path))

    assert actual.to_dict() == conjugate.to_dict()
