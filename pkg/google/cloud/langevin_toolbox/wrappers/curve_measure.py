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
"""Thickened-curve measures in the plane and piecewise test functions."""

import dataclasses
import functools
import math
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple, Type

import numpy as np

from google.cloud.langevin_toolbox import constants
from google.cloud.langevin_toolbox.wrappers import likelihood

_JOINT_TOLERANCE = 1e-9


@dataclasses.dataclass(frozen=True)
class Segment:
    r"""A labelled line segment in ℝ².

    Attributes:
        start (Tuple[float, float]):
            Required. First endpoint.
        end (Tuple[float, float]):
            Required. Second endpoint.
        label (str):
            Required. Unique label within a measure.
    """
    start: Tuple[float, float]
    end: Tuple[float, float]
    label: str

    def __post_init__(self):
        start = tuple(float(v) for v in self.start)
        end = tuple(float(v) for v in self.end)
        if len(start) != 2 or len(end) != 2:
            raise ValueError("Segment endpoints must be points in the plane.")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "end", end)
        if self.length <= 0:
            raise ValueError(f"Segment {self.label!r} has zero length.")

    @property
    def length(self) -> float:
        return math.dist(self.start, self.end)

    @property
    def tangent(self) -> np.ndarray:
        return (np.array(self.end) - np.array(self.start)) / self.length

    @property
    def normal(self) -> np.ndarray:
        tangent = self.tangent
        return np.array([-tangent[1], tangent[0]])

    def distance_to(self, point: np.ndarray) -> float:
        start = np.array(self.start)
        along = np.clip((point - start) @ self.tangent, 0.0, self.length)
        return float(np.linalg.norm(point - (start + along * self.tangent)))


@dataclasses.dataclass(frozen=True, eq=False)
class CurveMeasure:
    r"""Uniform measure on a tube around a union of segments, optionally tilted.

    The untilted measure spreads mass uniformly along arc length and across
    the tube. A tilt multiplies the density by `e^{-R}` before normalizing.

    Attributes:
        segments (Tuple[Segment, ...]):
            Required. The segments of the curve.
        thickness (float):
            Optional. Tube width.
        tilt_potential (Optional[likelihood.QuadraticPotential]):
            Optional. Two-dimensional potential of the tilt.
        allow_disconnected (bool):
            Optional. Accept a curve whose segments do not touch.
    """
    segments: Tuple[Segment, ...]
    thickness: float = constants.DEFAULT_TUBE_THICKNESS
    tilt_potential: Optional[likelihood.QuadraticPotential] = None
    allow_disconnected: bool = False

    def __post_init__(self):
        segments = tuple(self.segments)
        object.__setattr__(self, "segments", segments)
        if not segments:
            raise ValueError("A curve measure needs at least one segment.")
        labels = [segment.label for segment in segments]
        if len(set(labels)) != len(labels):
            raise ValueError(f"Segment labels must be unique, got {labels}.")
        if not self.thickness > 0:
            raise ValueError(f"thickness must be > 0, got {self.thickness}.")
        if self.tilt_potential is not None and self.tilt_potential.dim != 2:
            raise ValueError("The tilt potential must be two-dimensional.")
        if not self.connected and not self.allow_disconnected:
            raise ValueError(
                "Segments are disconnected; pass allow_disconnected=True to accept."
            )

    @classmethod
    def from_dict(cls: Type["CurveMeasure"], data: dict) -> "CurveMeasure":
        tilt = data.get("tilt")
        return cls(
            segments=tuple(
                Segment(start=item["start"], end=item["end"], label=item["label"])
                for item in data["segments"]
            ),
            thickness=data.get("thickness", constants.DEFAULT_TUBE_THICKNESS),
            tilt_potential=(
                likelihood.QuadraticPotential.from_dict(tilt) if tilt else None
            ),
            allow_disconnected=data.get("allow_disconnected", False),
        )

    def to_dict(self) -> dict:
        return {
            "segments": [
                {"label": s.label, "start": list(s.start), "end": list(s.end)}
                for s in self.segments
            ],
            "thickness": self.thickness,
            "tilt": self.tilt_potential.to_dict() if self.tilt_potential else None,
            "allow_disconnected": self.allow_disconnected,
        }

    def with_tilt(
        self, tilt_potential: Optional[likelihood.QuadraticPotential]
    ) -> "CurveMeasure":
        return dataclasses.replace(self, tilt_potential=tilt_potential)

    def with_thickness(self, thickness: float) -> "CurveMeasure":
        return dataclasses.replace(self, thickness=thickness)

    @property
    def total_length(self) -> float:
        return sum(segment.length for segment in self.segments)

    @functools.cached_property
    def connected(self) -> bool:
        r"""Whether the segments form one connected set.

        Two segments touch when an endpoint of one lies on the other.
        """
        parent = list(range(len(self.segments)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i, first in enumerate(self.segments):
            for j, second in enumerate(self.segments[i + 1 :], start=i + 1):
                endpoints = [first.start, first.end, second.start, second.end]
                touching = (
                    min(second.distance_to(np.array(p)) for p in endpoints[:2])
                    <= _JOINT_TOLERANCE
                    or min(first.distance_to(np.array(p)) for p in endpoints[2:])
                    <= _JOINT_TOLERANCE
                )
                if touching:
                    parent[find(i)] = find(j)
        return len({find(i) for i in range(len(self.segments))}) == 1

    def _tilt_factor(self, points: np.ndarray) -> np.ndarray:
        if self.tilt_potential is None:
            return np.ones(points.shape[0])
        return np.exp(-likelihood.potential(self.tilt_potential, points))

    @functools.cached_property
    def _base_nodes(self) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
        along_nodes, along_weights = np.polynomial.legendre.leggauss(
            constants.LSI_GAUSS_LEGENDRE_ORDER
        )
        across_nodes, across_weights = np.polynomial.legendre.leggauss(
            constants.LSI_CROSS_SECTION_ORDER
        )
        total_length = self.total_length
        nodes = {}
        for segment in self.segments:
            panels = max(
                constants.LSI_PANELS_MIN,
                math.ceil(segment.length * constants.LSI_PANELS_PER_UNIT_LENGTH),
            )
            edges = np.linspace(0.0, segment.length, panels + 1)
            half = 0.5 * np.diff(edges)
            centers = 0.5 * (edges[1:] + edges[:-1])
            s = (centers[:, None] + half[:, None] * along_nodes[None, :]).reshape(-1)
            ds = (half[:, None] * along_weights[None, :]).reshape(-1)

            w = 0.5 * self.thickness * across_nodes
            dw = 0.5 * across_weights

            points = (
                np.array(segment.start)[None, None, :]
                + s[:, None, None] * segment.tangent[None, None, :]
                + w[None, :, None] * segment.normal[None, None, :]
            ).reshape(-1, 2)
            weights = (ds[:, None] * dw[None, :]).reshape(-1) / total_length
            nodes[segment.label] = (points, weights)
        return nodes

    @functools.cached_property
    def _tilted_masses(self) -> Dict[str, float]:
        return {
            label: float(weights @ self._tilt_factor(points))
            for label, (points, weights) in self._base_nodes.items()
        }

    def partition_function(self) -> float:
        r"""Returns `∫ e^{-R} dμ` under the untilted, normalized measure."""
        return sum(self._tilted_masses.values())

    def quadrature(self) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
        r"""Returns per-segment quadrature nodes and normalized weights.

        Returns:
            Dict[str, Tuple[np.ndarray, np.ndarray]]:
                Label to `(points of shape (n, 2), weights of shape (n,))`.
                Weights sum to 1 over all segments.
        """
        z = self.partition_function()
        return {
            label: (points, weights * self._tilt_factor(points) / z)
            for label, (points, weights) in self._base_nodes.items()
        }

    def unnormalized_mass(self, label: str) -> float:
        r"""Returns `∫_label e^{-R} dμ` under the untilted, normalized measure."""
        if label not in self._tilted_masses:
            raise KeyError(f"Unknown segment label {label!r}.")
        return self._tilted_masses[label]

    def mass(self, label: str) -> float:
        r"""Returns the probability the measure assigns to one segment."""
        return self.unnormalized_mass(label) / self.partition_function()

    def density(self, points: np.ndarray) -> np.ndarray:
        r"""Returns the planar density of the tube measure at `points` `(n, 2)`.

        Overlaps of tubes at joints are ignored.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.zeros(points.shape[0], dtype=bool)
        for segment in self.segments:
            offset = points - np.array(segment.start)[None, :]
            along = offset @ segment.tangent
            across = offset @ segment.normal
            inside |= (
                (along >= 0)
                & (along <= segment.length)
                & (np.abs(across) <= 0.5 * self.thickness)
            )
        scale = self.total_length * self.thickness * self.partition_function()
        return np.where(inside, self._tilt_factor(points) / scale, 0.0)


@dataclasses.dataclass(frozen=True)
class TestFunction:
    r"""A test function defined piece by piece over labelled segments.

    Attributes:
        values (Mapping[str, Callable[[np.ndarray], np.ndarray]]):
            Required. Label to a function of points `(n, 2)` returning `(n,)`.
        gradients (Mapping[str, Callable[[np.ndarray], np.ndarray]]):
            Required. Label to a function of points `(n, 2)` returning `(n, 2)`.
        name (str):
            Optional. Display name.
    """
    __test__ = False

    values: Mapping[str, Callable[[np.ndarray], np.ndarray]]
    gradients: Mapping[str, Callable[[np.ndarray], np.ndarray]]
    name: str = ""

    def __post_init__(self):
        if set(self.values) != set(self.gradients):
            raise ValueError("Values and gradients must cover the same segments.")

    @classmethod
    def linear(
        cls: Type["TestFunction"],
        labels: Sequence[str],
        direction: Sequence[float] = (1.0, 0.0),
        offset: float = 0.0,
        name: str = "",
    ) -> "TestFunction":
        r"""Returns `f(x) = ⟨direction, x⟩ + offset` on every listed segment."""
        direction = np.asarray(direction, dtype=float)

        def value(points: np.ndarray) -> np.ndarray:
            return points @ direction + offset

        def gradient(points: np.ndarray) -> np.ndarray:
            return np.broadcast_to(direction, points.shape)

        return cls(
            values={label: value for label in labels},
            gradients={label: gradient for label in labels},
            name=name or f"linear{tuple(direction.tolist())}",
        )

    @classmethod
    def constant(
        cls: Type["TestFunction"], labels: Sequence[str], value: float
    ) -> "TestFunction":
        return cls.linear(labels, direction=(0.0, 0.0), offset=value, name="constant")

    def scaled(self, factor: float) -> "TestFunction":
        return TestFunction(
            values={
                label: (lambda points, fn=fn: factor * fn(points))
                for label, fn in self.values.items()
            },
            gradients={
                label: (lambda points, fn=fn: factor * fn(points))
                for label, fn in self.gradients.items()
            },
            name=f"{factor}*{self.name}",
        )
