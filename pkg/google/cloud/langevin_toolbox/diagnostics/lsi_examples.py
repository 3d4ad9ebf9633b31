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
"""Log-Sobolev test-function ratios on thickened curves and their tilts."""

import dataclasses
import math
from typing import Tuple

import numpy as np
from scipy import special

from google.cloud.langevin_toolbox import constants
from google.cloud.langevin_toolbox.exceptions import DegenerateTestFunctionError
from google.cloud.langevin_toolbox.wrappers import likelihood
from google.cloud.langevin_toolbox.wrappers.curve_measure import (
    CurveMeasure,
    Segment,
    TestFunction,
)

_ENERGY_FLOOR = 1e-14


def lsi_ratio(mu: CurveMeasure, f: TestFunction) -> float:
    r"""Returns `Ent_μ(f²) / ∫‖∇f‖² dμ`, a lower bound on the LSI constant of `μ`.

    Args:
        mu (CurveMeasure):
            Required. The measure.
        f (TestFunction):
            Required. A test function defined on every segment of `mu`.

    Raises:
        DegenerateTestFunctionError: if `f` has zero gradient energy or `f = 0`.
    """
    missing = {s.label for s in mu.segments} - set(f.values)
    if missing:
        raise ValueError(f"Test function is undefined on segments {sorted(missing)}.")

    second_moment, entropy_term, energy = 0.0, 0.0, 0.0
    for label, (points, weights) in mu.quadrature().items():
        squared = np.square(f.values[label](points))
        gradient = np.asarray(f.gradients[label](points))
        second_moment += float(weights @ squared)
        entropy_term += float(weights @ special.xlogy(squared, squared))
        energy += float(weights @ np.square(gradient).sum(axis=1))

    if second_moment <= 0 or energy <= _ENERGY_FLOOR * second_moment:
        raise DegenerateTestFunctionError(
            f"Test function {f.name!r} has no gradient energy under the measure."
        )
    entropy = entropy_term - float(special.xlogy(second_moment, second_moment))
    return max(entropy, 0.0) / energy


def _quadratic_tilt(scale: Tuple[float, float]) -> likelihood.QuadraticPotential:
    # R(x) = Σ scale_j x_j² with σ² = 1/2.
    return likelihood.QuadraticPotential(
        A=np.diag(np.sqrt(scale)), y=np.zeros(2), noise_var=0.5
    )


def segment_instance(
    ell: float, thickness: float = constants.DEFAULT_TUBE_THICKNESS
) -> Tuple[CurveMeasure, CurveMeasure]:
    r"""Returns the flat segment `[−e^ℓ, e^ℓ] × {0}` and its tilt by `e^{-x_1²}`.

    The flat measure has `lsi_ratio(μ, x_1) = (log 3/3 − 2/9) e^{2ℓ}`, while the
    tilted measure is strongly log-concave along the segment.
    """
    if not ell >= 1:
        raise ValueError(f"ell must be >= 1, got {ell}.")
    half_length = math.exp(ell)
    mu = CurveMeasure(
        segments=(Segment((-half_length, 0.0), (half_length, 0.0), "segment"),),
        thickness=thickness,
    )
    return mu, mu.with_tilt(_quadratic_tilt((1.0, 0.0)))


def segment_test_function() -> TestFunction:
    return TestFunction.linear(["segment"], direction=(1.0, 0.0), name="x")


@dataclasses.dataclass
class UShapeInstance:
    r"""The three-segment curve, its Gaussian tilt and the bottleneck ratios.

    Attributes:
        mu (CurveMeasure):
            Legs `a` and `c` at `x = ∓1` over `y ∈ [0, ℓ]`, bar `b` at height `ℓ`.
        mu_R (CurveMeasure):
            `mu` tilted by `e^{-‖x‖²/2}`.
        ratio (float):
            Test-function ratio under `mu_R`.
        untilted_ratio (float):
            The same ratio under `mu`.
        ell (float):
            Leg height.
    """

    mu: CurveMeasure
    mu_R: CurveMeasure
    ratio: float
    untilted_ratio: float
    ell: float

    @property
    def bar_mass(self) -> float:
        return self.mu.mass("b")

    @property
    def tilted_bar_mass(self) -> float:
        return self.mu_R.mass("b")

    def bar_mass_bracket(self) -> Tuple[float, float]:
        r"""Returns bounds on `∫_b e^{-‖x‖²/2} dμ` from the tilt along the bar.

        On the bar `ℓ² <= ‖x‖² <= ℓ² + 1`, so the unnormalized tilted mass lies
        in `[e^{-(ℓ²+1)/2} μ(b), e^{-ℓ²/2} e^{1/2} μ(b)]`.
        """
        base = math.exp(-self.ell * self.ell / 2.0) * self.bar_mass
        return base * math.exp(-0.5), base * math.exp(0.5)

    @property
    def bar_mass_within_bracket(self) -> bool:
        lower, upper = self.bar_mass_bracket()
        return lower <= self.mu_R.unnormalized_mass("b") <= upper

    def __iter__(self):
        return iter((self.mu, self.mu_R, self.ratio))


def u_shape_test_function() -> TestFunction:
    r"""Returns `0` on `a`, `x_1 + 1` on `b` and `2` on `c`."""

    def zero(points: np.ndarray) -> np.ndarray:
        return np.zeros(points.shape[0])

    def two(points: np.ndarray) -> np.ndarray:
        return np.full(points.shape[0], 2.0)

    def flat(points: np.ndarray) -> np.ndarray:
        return np.zeros_like(points)

    def bar(points: np.ndarray) -> np.ndarray:
        return points[:, 0] + 1.0

    def bar_gradient(points: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.array([1.0, 0.0]), points.shape)

    return TestFunction(
        values={"a": zero, "b": bar, "c": two},
        gradients={"a": flat, "b": bar_gradient, "c": flat},
        name="bottleneck",
    )


def u_shape_instance(
    ell: float, thickness: float = constants.DEFAULT_TUBE_THICKNESS
) -> UShapeInstance:
    r"""Builds the U-shaped curve whose Gaussian tilt has a mass bottleneck.

    The tilt shrinks the bar's unnormalized mass by a factor of order
    `e^{-ℓ²/2}`, so the tilted ratio grows like `e^{ℓ²/2}` while the untilted
    one stays polynomial.
    """
    if not ell >= 2:
        raise ValueError(f"ell must be >= 2, got {ell}.")
    mu = CurveMeasure(
        segments=(
            Segment((-1.0, 0.0), (-1.0, ell), "a"),
            Segment((-1.0, ell), (1.0, ell), "b"),
            Segment((1.0, 0.0), (1.0, ell), "c"),
        ),
        thickness=thickness,
    )
    mu_R = mu.with_tilt(_quadratic_tilt((0.5, 0.5)))
    f = u_shape_test_function()
    return UShapeInstance(
        mu=mu,
        mu_R=mu_R,
        ratio=lsi_ratio(mu_R, f),
        untilted_ratio=lsi_ratio(mu, f),
        ell=float(ell),
    )
