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
"""Errors raised by the Langevin toolbox."""

from typing import Optional


class DimensionMismatchError(ValueError):
    """A vector or matrix disagrees with the dimension of a value."""


class InvalidMixtureError(ValueError):
    """Mixture weights or covariances violate the mixture invariants."""


class SmoothTimeDomainError(ValueError):
    """An OU time lies outside the domain of an operation."""


class PartitionError(ValueError):
    """Mode-weight cells overlap or do not cover the samples."""


class DegenerateTestFunctionError(ValueError):
    """A test function has zero gradient energy under a measure."""


class CoverageError(ValueError):
    r"""A grid or histogram misses too much probability mass.

    Attributes:
        missing_mass (float):
            Estimate of the mass that falls outside the grid or histogram.
    """

    def __init__(self, message: str, missing_mass: float = float("nan")):
        super().__init__(message)
        self.missing_mass = missing_mass


class ConfigError(ValueError):
    r"""An experiment or sampler config fails validation.

    Attributes:
        field (str):
            Dotted path of the offending field, e.g. ``sampler.step_size``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NumericalBlowupError(ArithmeticError):
    r"""A Langevin iterate became non-finite or left the blowup limit.

    Attributes:
        phase (str):
            `warm_start` or `anneal`.
        iteration (int):
            Algorithm iteration at which the failure was detected.
        chain (Optional[int]):
            Global index of the first failing chain, when known.
    """

    def __init__(
        self,
        message: str,
        iteration: int,
        phase: str = "",
        chain: Optional[int] = None,
    ):
        super().__init__(message)
        self.iteration = iteration
        self.phase = phase
        self.chain = chain

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "iteration": self.iteration,
            "chain": self.chain,
        }


# Raised by library code for bad instances; the runner reports them as config
# failures.
INPUT_ERRORS = (
    ConfigError,
    CoverageError,
    DegenerateTestFunctionError,
    DimensionMismatchError,
    InvalidMixtureError,
    PartitionError,
    SmoothTimeDomainError,
)
