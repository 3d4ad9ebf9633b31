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
"""Convex quadratic measurement potentials."""

import dataclasses
import functools
import json
from typing import Tuple, Type, Union

import numpy as np

from google.cloud.langevin_toolbox.exceptions import DimensionMismatchError


@dataclasses.dataclass(frozen=True, eq=False)
class QuadraticPotential:
    r"""Measurement potential `R(x) = ‖Ax − y‖²/(2σ²) − R_min`.

    The potential is shifted by its least-squares minimum so that
    `R(𝔵) = 0` at the minimum-norm minimizer `𝔵`.

    Attributes:
        A (np.ndarray):
            Required. Measurement operator of shape `(m, d)`. May be rank deficient.
        y (np.ndarray):
            Required. Measurement of shape `(m,)`.
        noise_var (float):
            Required. Noise variance `σ² > 0`.
    """
    A: np.ndarray
    y: np.ndarray
    noise_var: float

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if A.ndim == 1:
            A = A[None, :]
        if A.ndim != 2 or A.shape[0] != y.shape[0]:
            raise DimensionMismatchError(
                f"A must have shape (m, d) with m = len(y) = {y.shape[0]}, got {A.shape}."
            )
        noise_var = float(self.noise_var)
        if not np.isfinite(noise_var) or noise_var <= 0:
            raise ValueError(f"noise_var must be finite and > 0, got {noise_var}.")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
            raise ValueError("A and y must be finite.")
        A.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "noise_var", noise_var)

    @classmethod
    def from_dict(cls: Type["QuadraticPotential"], data: dict) -> "QuadraticPotential":
        r"""Parses `{A: nested arrays, y: array, noise_var}`."""
        try:
            return cls(A=data["A"], y=data["y"], noise_var=data["noise_var"])
        except (KeyError, TypeError) as e:
            raise ValueError(f"Malformed potential JSON: missing {e}.") from e

    @classmethod
    def from_file(
        cls: Type["QuadraticPotential"], file_path: str
    ) -> "QuadraticPotential":
        with open(file_path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "y": self.y.tolist(), "noise_var": self.noise_var}

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @functools.cached_property
    def hessian(self) -> np.ndarray:
        return self.A.T @ self.A / self.noise_var

    @functools.cached_property
    def linear_term(self) -> np.ndarray:
        return self.A.T @ self.y / self.noise_var

    @functools.cached_property
    def minimizer(self) -> np.ndarray:
        r"""The minimum-norm least-squares solution `𝔵`."""
        solution, *_ = np.linalg.lstsq(self.A, self.y, rcond=None)
        return solution

    @functools.cached_property
    def r_min(self) -> float:
        residual = self.A @ self.minimizer - self.y
        return float(residual @ residual / (2.0 * self.noise_var))

    @property
    def distance(self) -> float:
        r"""`𝔇 = ‖𝔵‖`."""
        return float(np.linalg.norm(self.minimizer))

    @property
    def curvature(self) -> float:
        r"""Upper curvature bound `𝔯 = λ_max(AᵀA)/σ²`."""
        return curvature_bounds(self)[1]

    def as_points(self, x: np.ndarray) -> Tuple[np.ndarray, bool]:
        points = np.asarray(x, dtype=float)
        if points.ndim == 0 and self.dim == 1:
            return points.reshape(1, 1), True
        if points.ndim == 1 and points.shape[0] == self.dim:
            return points[None, :], True
        if points.ndim == 2 and points.shape[1] == self.dim:
            return points, False
        raise DimensionMismatchError(
            f"Expected shape ({self.dim},) or (n, {self.dim}), got {points.shape}."
        )


def zero_potential(dim: int) -> QuadraticPotential:
    r"""Returns `R ≡ 0` in `dim` dimensions (`A = 0`)."""
    return QuadraticPotential(A=np.zeros((1, dim)), y=np.zeros(1), noise_var=1.0)


def potential(R: QuadraticPotential, x: np.ndarray) -> Union[float, np.ndarray]:
    r"""Returns `‖Ax − y‖²/(2σ²) − R_min` for a point or a batch of points."""
    points, single = R.as_points(x)
    residual = points @ R.A.T - R.y
    values = np.square(residual).sum(axis=1) / (2.0 * R.noise_var) - R.r_min
    return float(values[0]) if single else values


def grad_potential(R: QuadraticPotential, x: np.ndarray) -> np.ndarray:
    r"""Returns `Aᵀ(Ax − y)/σ²` for a point or a batch of points."""
    points, single = R.as_points(x)
    values = points @ R.hessian - R.linear_term
    return values[0] if single else values


def curvature_bounds(R: QuadraticPotential) -> Tuple[float, float]:
    r"""Returns the extreme eigenvalues of the constant Hessian `AᵀA/σ²`.

    Returns:
        Tuple[float, float]:
            `(lower, upper)`. `lower` is clipped at 0 for rank-deficient `A`.
    """
    eigenvalues = np.linalg.eigvalsh(R.hessian)
    return max(0.0, float(eigenvalues[0])), float(eigenvalues[-1])
