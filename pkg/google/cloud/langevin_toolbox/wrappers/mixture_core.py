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
"""Closed-form Gaussian mixtures: densities, scores, OU smoothing and tilting."""

import dataclasses
import functools
import json
import math
from typing import Iterable, Sequence, Tuple, Type, Union

import numpy as np
from scipy import special

from google.cloud.langevin_toolbox import constants
from google.cloud.langevin_toolbox.exceptions import (
    DimensionMismatchError,
    InvalidMixtureError,
    SmoothTimeDomainError,
)
from google.cloud.langevin_toolbox.wrappers.likelihood import QuadraticPotential

_LOG_2PI = math.log(2.0 * math.pi)


@dataclasses.dataclass(frozen=True)
class SmoothTime:
    r"""Time along the Ornstein-Uhlenbeck channel.

    Attributes:
        t (float):
            Required. Nonnegative OU time. `0` is the raw prior.
    """
    t: float

    def __post_init__(self):
        t = float(self.t)
        if not math.isfinite(t) or t < 0:
            raise SmoothTimeDomainError(f"OU time must be finite and >= 0, got {t}.")
        object.__setattr__(self, "t", t)


TimeLike = Union[float, SmoothTime]


def _time_value(t: TimeLike, positive: bool = False) -> float:
    value = t.t if isinstance(t, SmoothTime) else SmoothTime(t).t
    if positive and value == 0.0:
        raise SmoothTimeDomainError(
            "OU time must be > 0 for this operation; the derivative diverges at t = 0."
        )
    return value


@dataclasses.dataclass(frozen=True)
class RegularityConstants:
    r"""Regularity constants of a prior.

    Attributes:
        m_subgaussian (float):
            Required. Subgaussian parameter proxy, at least 1.
        score_lipschitz (float):
            Required. Lipschitz constant of the prior score, at least 1.
            `inf` when the score is not globally Lipschitz.
        dim (int):
            Required. Ambient dimension.
    """
    m_subgaussian: float
    score_lipschitz: float
    dim: int

    def __post_init__(self):
        if self.m_subgaussian < 1 or self.score_lipschitz < 1:
            raise ValueError("Regularity constants must be >= 1.")
        if self.dim < 1:
            raise ValueError("dim must be >= 1.")


@dataclasses.dataclass(frozen=True, eq=False)
class GaussianMixture:
    r"""Weighted mixture of Gaussians.

    Priors, smoothed priors and every posterior along the tilted path are
    values of this type. Arrays are stored read-only.

    Attributes:
        weights (np.ndarray):
            Required. Shape `(K,)`, strictly positive, summing to 1.
        means (np.ndarray):
            Required. Shape `(K, d)`.
        covariances (np.ndarray):
            Required. Shape `(K, d, d)`, symmetric positive definite.
    """
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float).reshape(-1)
        means = np.array(self.means, dtype=float)
        covariances = np.array(self.covariances, dtype=float)

        if means.ndim != 2 or means.shape[0] != weights.shape[0]:
            raise DimensionMismatchError(
                f"means must have shape (K, d) with K = {weights.shape[0]}, got {means.shape}."
            )
        k, d = means.shape
        if covariances.shape != (k, d, d):
            raise DimensionMismatchError(
                f"covariances must have shape {(k, d, d)}, got {covariances.shape}."
            )
        if k == 0 or d == 0:
            raise InvalidMixtureError("A mixture needs at least one component.")
        if not (
            np.all(np.isfinite(weights))
            and np.all(np.isfinite(means))
            and np.all(np.isfinite(covariances))
        ):
            raise InvalidMixtureError("Mixture parameters must be finite.")
        if np.any(weights <= 0):
            raise InvalidMixtureError("Mixture weights must be strictly positive.")
        if abs(weights.sum() - 1.0) > constants.WEIGHT_SUM_TOLERANCE:
            raise InvalidMixtureError(
                f"Mixture weights must sum to 1, got {weights.sum()!r}."
            )

        asymmetry = np.abs(covariances - np.swapaxes(covariances, 1, 2)).max()
        if asymmetry > constants.SYMMETRY_TOLERANCE * max(
            1.0, np.abs(covariances).max()
        ):
            raise InvalidMixtureError("Covariances must be symmetric.")
        covariances = 0.5 * (covariances + np.swapaxes(covariances, 1, 2))

        min_eigenvalue = np.linalg.eigvalsh(covariances).min()
        if min_eigenvalue <= constants.MIN_EIGENVALUE_FLOOR:
            raise InvalidMixtureError(
                f"Covariances must be positive definite, minimum eigenvalue {min_eigenvalue!r}."
            )

        for name, value in (
            ("weights", weights),
            ("means", means),
            ("covariances", covariances),
        ):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def from_components(
        cls: Type["GaussianMixture"],
        components: Iterable[Tuple[float, Sequence[float], Sequence[Sequence[float]]]],
    ) -> "GaussianMixture":
        r"""Builds a mixture from `(weight, mean, covariance)` triples.

        Scalar means and variances are accepted for one-dimensional mixtures.
        """
        weights, means, covariances = [], [], []
        for weight, mean, covariance in components:
            mean = np.atleast_1d(np.asarray(mean, dtype=float))
            covariance = np.atleast_2d(np.asarray(covariance, dtype=float))
            weights.append(float(weight))
            means.append(mean)
            covariances.append(covariance)
        try:
            return cls(
                weights=np.array(weights),
                means=np.stack(means),
                covariances=np.stack(covariances),
            )
        except ValueError as e:
            if isinstance(e, (DimensionMismatchError, InvalidMixtureError)):
                raise
            raise DimensionMismatchError(
                "All components must share the same dimension."
            ) from e

    @classmethod
    def from_dict(cls: Type["GaussianMixture"], data: dict) -> "GaussianMixture":
        r"""Parses `{dim, components: [{weight, mean, cov}]}`."""
        try:
            components = [
                (item["weight"], item["mean"], item["cov"])
                for item in data["components"]
            ]
        except (KeyError, TypeError) as e:
            raise InvalidMixtureError(f"Malformed mixture JSON: missing {e}.") from e
        mixture = cls.from_components(components)
        if "dim" in data and int(data["dim"]) != mixture.dim:
            raise DimensionMismatchError(
                f"Declared dim {data['dim']} does not match component dim {mixture.dim}."
            )
        return mixture

    @classmethod
    def from_file(cls: Type["GaussianMixture"], file_path: str) -> "GaussianMixture":
        with open(file_path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "components": [
                {
                    "weight": float(weight),
                    "mean": mean.tolist(),
                    "cov": covariance.tolist(),
                }
                for weight, mean, covariance in zip(
                    self.weights, self.means, self.covariances
                )
            ],
        }

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @functools.cached_property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)

    @functools.cached_property
    def cholesky(self) -> np.ndarray:
        return np.linalg.cholesky(self.covariances)

    @functools.cached_property
    def _cholesky_inverse(self) -> np.ndarray:
        return np.linalg.inv(self.cholesky)

    @functools.cached_property
    def precisions(self) -> np.ndarray:
        inverse = self._cholesky_inverse
        return np.einsum("kji,kjl->kil", inverse, inverse)

    @functools.cached_property
    def log_determinants(self) -> np.ndarray:
        return 2.0 * np.log(np.diagonal(self.cholesky, axis1=1, axis2=2)).sum(axis=1)

    def as_points(self, x: np.ndarray) -> Tuple[np.ndarray, bool]:
        r"""Returns `x` as an `(n, d)` array and whether it was a single point."""
        points = np.asarray(x, dtype=float)
        if points.ndim == 0 and self.dim == 1:
            return points.reshape(1, 1), True
        if points.ndim == 1:
            if points.shape[0] != self.dim:
                raise DimensionMismatchError(
                    f"Expected a vector of dimension {self.dim}, got {points.shape[0]}."
                )
            return points[None, :], True
        if points.ndim == 2 and points.shape[1] == self.dim:
            return points, False
        raise DimensionMismatchError(
            f"Expected shape ({self.dim},) or (n, {self.dim}), got {points.shape}."
        )

    def component_log_densities(self, points: np.ndarray) -> np.ndarray:
        r"""Returns `log w_i + log N(x; m_i, Σ_i)` with shape `(K, n)`."""
        diff = points[None, :, :] - self.means[:, None, :]
        whitened = np.einsum("kij,knj->kni", self._cholesky_inverse, diff)
        mahalanobis = np.square(whitened).sum(axis=-1)
        return self.log_weights[:, None] - 0.5 * (
            self.dim * _LOG_2PI + self.log_determinants[:, None] + mahalanobis
        )

    def responsibilities(self, x: np.ndarray) -> np.ndarray:
        r"""Returns component posterior probabilities with shape `(K, n)`."""
        points, _ = self.as_points(x)
        terms = self.component_log_densities(points)
        return np.exp(terms - special.logsumexp(terms, axis=0))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        r"""Draws `n` exact samples, returned with shape `(n, d)`."""
        labels = rng.choice(self.n_components, size=n, p=self.weights)
        noise = rng.standard_normal((n, self.dim))
        return self.means[labels] + np.einsum(
            "nij,nj->ni", self.cholesky[labels], noise
        )

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def second_moment(self) -> float:
        r"""Returns `E‖X‖²`."""
        traces = np.trace(self.covariances, axis1=1, axis2=2)
        return float(self.weights @ (traces + np.square(self.means).sum(axis=1)))

    def marginal(self, axis: int) -> "GaussianMixture":
        r"""Returns the one-dimensional marginal along a coordinate axis."""
        return GaussianMixture(
            weights=self.weights,
            means=self.means[:, [axis]],
            covariances=self.covariances[:, [axis]][:, :, [axis]],
        )


def standard_gaussian(dim: int) -> GaussianMixture:
    r"""Returns the standard Gaussian `γ = N(0, I)` in `dim` dimensions."""
    return GaussianMixture(
        weights=np.ones(1),
        means=np.zeros((1, dim)),
        covariances=np.eye(dim)[None, :, :],
    )


def log_density(p: GaussianMixture, x: np.ndarray) -> Union[float, np.ndarray]:
    r"""Returns `log Σ_i w_i N(x; m_i, Σ_i)`.

    Args:
        p (GaussianMixture):
            Required. The mixture.
        x (np.ndarray):
            Required. A point of shape `(d,)` or a batch of shape `(n, d)`.

    Returns:
        Union[float, np.ndarray]:
            A float for a single point, otherwise an array of shape `(n,)`.
    """
    points, single = p.as_points(x)
    values = special.logsumexp(p.component_log_densities(points), axis=0)
    return float(values[0]) if single else values


def _score_points(p: GaussianMixture, points: np.ndarray) -> np.ndarray:
    terms = p.component_log_densities(points)
    resp = np.exp(terms - special.logsumexp(terms, axis=0))
    diff = p.means[:, None, :] - points[None, :, :]
    return np.einsum("kn,kij,knj->ni", resp, p.precisions, diff)


def score(p: GaussianMixture, x: np.ndarray) -> np.ndarray:
    r"""Returns `∇log p(x) = Σ_i r_i(x) Σ_i^{-1}(m_i − x)`.

    Args:
        p (GaussianMixture):
            Required. The mixture.
        x (np.ndarray):
            Required. A point of shape `(d,)` or a batch of shape `(n, d)`.

    Returns:
        np.ndarray:
            Shape `(d,)` for a single point, otherwise `(n, d)`.
    """
    points, single = p.as_points(x)
    values = _score_points(p, points)
    return values[0] if single else values


def ou_smooth(p: GaussianMixture, t: TimeLike) -> GaussianMixture:
    r"""Returns the law at time `t` of the OU process started from `p`.

    Each component maps to `(w_i, e^{-t} m_i, e^{-2t} Σ_i + (1 − e^{-2t}) I)`.
    `t = 0` returns `p` itself.
    """
    t = _time_value(t)
    if t == 0.0:
        return p
    decay = math.exp(-t)
    noise = -math.expm1(-2.0 * t)
    return GaussianMixture(
        weights=p.weights,
        means=decay * p.means,
        covariances=decay * decay * p.covariances + noise * np.eye(p.dim),
    )


def dt_log_density(
    p: GaussianMixture, t: TimeLike, x: np.ndarray
) -> Union[float, np.ndarray]:
    r"""Returns `∂_t log p_t(x)` by differentiating the smoothed parameters.

    With `C(t) = e^{-2t}Σ + (1 − e^{-2t})I` and `m(t) = e^{-t}m`, a component
    moves as `C' = 2(I − C)` and `m' = −m(t)`.

    Raises:
        SmoothTimeDomainError: if `t = 0`.
    """
    t = _time_value(t, positive=True)
    smoothed = ou_smooth(p, t)
    points, single = smoothed.as_points(x)

    terms = smoothed.component_log_densities(points)
    resp = np.exp(terms - special.logsumexp(terms, axis=0))
    diff = points[None, :, :] - smoothed.means[:, None, :]
    u = np.einsum("kij,knj->kni", smoothed.precisions, diff)

    trace_term = np.trace(smoothed.precisions, axis1=1, axis2=2) - p.dim
    drift_term = np.einsum("kni,ki->kn", u, smoothed.means)
    quadratic_term = np.square(u).sum(axis=-1) - (u * diff).sum(axis=-1)
    per_component = -trace_term[:, None] - drift_term + quadratic_term

    values = (resp * per_component).sum(axis=0)
    return float(values[0]) if single else values


def posterior_mean(p: GaussianMixture, t: TimeLike, x_t: np.ndarray) -> np.ndarray:
    r"""Returns `E[x_0 | e^{-t}x_0 + √(1 − e^{-2t}) η = x_t]` for `x_0 ∼ p`.

    Satisfies `(1 − e^{-2t}) ∇log p_t(x_t) = e^{-t} E[x_0 | x_t] − x_t`.

    Raises:
        SmoothTimeDomainError: if `t = 0`.
    """
    t = _time_value(t, positive=True)
    decay = math.exp(-t)
    smoothed = ou_smooth(p, t)
    points, single = smoothed.as_points(x_t)

    terms = smoothed.component_log_densities(points)
    resp = np.exp(terms - special.logsumexp(terms, axis=0))
    gain = decay * np.einsum("kij,kjl->kil", p.covariances, smoothed.precisions)
    innovation = points[None, :, :] - smoothed.means[:, None, :]
    conditional = p.means[:, None, :] + np.einsum("kij,knj->kni", gain, innovation)

    values = np.einsum("kn,kni->ni", resp, conditional)
    return values[0] if single else values


def tilt(p: GaussianMixture, R: QuadraticPotential) -> GaussianMixture:
    r"""Returns the mixture proportional to `p(x) e^{-R(x)}`.

    Each component's precision gains `AᵀA/σ²`, its mean moves to the
    conjugate update, and its weight is multiplied by the component's
    marginal likelihood before renormalization.
    """
    if R.dim != p.dim:
        raise DimensionMismatchError(
            f"Potential dim {R.dim} does not match mixture dim {p.dim}."
        )
    precisions = p.precisions + R.hessian[None, :, :]
    covariances = np.linalg.inv(precisions)
    covariances = 0.5 * (covariances + np.swapaxes(covariances, 1, 2))

    natural = np.einsum("kij,kj->ki", p.precisions, p.means) + R.linear_term
    means = np.einsum("kij,kj->ki", covariances, natural)

    _, tilted_log_dets = np.linalg.slogdet(precisions)
    log_factors = 0.5 * (
        -p.log_determinants
        - tilted_log_dets
        + np.einsum("ki,ki->k", natural, means)
        - np.einsum("ki,ki->k", p.means, np.einsum("kij,kj->ki", p.precisions, p.means))
    )
    log_weights = p.log_weights + log_factors
    weights = np.exp(log_weights - special.logsumexp(log_weights))
    return GaussianMixture(
        weights=weights / weights.sum(),
        means=means,
        covariances=covariances,
    )


def regularity_constants(p: GaussianMixture) -> RegularityConstants:
    r"""Returns documented proxies for the prior's regularity constants.

    The subgaussian proxy is `max‖m_i‖ + max λ_max(Σ_i)`. The score Lipschitz
    constant is finite only when all components share one covariance `Σ = P⁻¹`,
    in which case the score Jacobian is `−P + Cov_r(P m_i)` and its norm is at
    most `max(λ_max(P), diam{P m_i}²/4 − λ_min(P))`. Both are floored at 1.
    """
    spectral_radius = np.linalg.eigvalsh(p.covariances).max()
    m_proxy = float(np.linalg.norm(p.means, axis=1).max() + spectral_radius)

    shared = p.covariances[0]
    if np.allclose(p.covariances, shared[None], rtol=1e-12, atol=1e-14):
        eigenvalues = np.linalg.eigvalsh(p.precisions[0])
        natural = p.means @ p.precisions[0]
        diameter = max(
            (
                float(np.linalg.norm(natural[i] - natural[j]))
                for i in range(p.n_components)
                for j in range(i + 1, p.n_components)
            ),
            default=0.0,
        )
        lipschitz = max(
            float(eigenvalues.max()), 0.25 * diameter**2 - float(eigenvalues.min())
        )
    else:
        lipschitz = math.inf

    return RegularityConstants(
        m_subgaussian=max(1.0, m_proxy),
        score_lipschitz=max(1.0, lipschitz),
        dim=p.dim,
    )
