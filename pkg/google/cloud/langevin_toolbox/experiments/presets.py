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
"""Built-in experiment and suite presets."""

import copy
import dataclasses
from typing import Any, Dict, List, Mapping, Tuple

import immutabledict

from google.cloud.langevin_toolbox.exceptions import ConfigError


@dataclasses.dataclass(frozen=True)
class Preset:
    r"""A named, shipped config.

    Attributes:
        description (str):
            Required. One-line summary shown by `preset list`.
        config (Mapping[str, Any]):
            Required. The raw experiment or suite JSON document.
    """

    description: str
    config: Mapping[str, Any]


def _two_mode_prior(ell: float) -> Dict[str, Any]:
    return {
        "dim": 1,
        "components": [
            {"weight": 0.5, "mean": [-ell], "cov": [[1.0]]},
            {"weight": 0.5, "mean": [ell], "cov": [[1.0]]},
        ],
    }


def _scalar_potential(y: float, noise_var: float) -> Dict[str, Any]:
    return {"A": [[1.0]], "y": [y], "noise_var": noise_var}


_TWO_MODE_SAMPLER = {
    "warm_up_iters": 2000,
    "warm_start_time": 2.0,
    "rate": 64.0,
    "step_size": 1e-3,
    "chains": 100000,
    "seed": 0,
    "checkpoint_times": [1.0, 0.5, 0.25],
}

PRESETS = immutabledict.immutabledict(
    {
        "gaussian-identity": Preset(
            description="Standard Gaussian prior with a flat potential; samples should match N(0, 1).",
            config={
                "name": "gaussian-identity",
                "kind": "sampling",
                "prior": {"standard_gaussian": 1},
                "measurement": {"A": [[0.0]], "y": [0.0], "noise_var": 1.0},
                "sampler": {
                    "warm_up_iters": 500,
                    "warm_start_time": 1.0,
                    "rate": 4.0,
                    "step_size": 0.01,
                    "chains": 100000,
                    "seed": 0,
                },
                "diagnostics": {"divergences": ["TV", "KL", "W2-1D", "mode-weights"]},
            },
        ),
        "warm-start-conjugate": Preset(
            description="Gaussian prior tilted by (x - 1)^2/2; every posterior on the path is N(0.5, 0.5).",
            config={
                "name": "warm-start-conjugate",
                "kind": "sampling",
                "prior": {"standard_gaussian": 1},
                "measurement": _scalar_potential(1.0, 1.0),
                "sampler": {
                    "warm_up_iters": 2000,
                    "warm_start_step": 5e-3,
                    "warm_start_time": 1.0,
                    "rate": 1.0,
                    "step_size": 0.01,
                    "chains": 100000,
                    "seed": 0,
                    "checkpoint_times": [1.0],
                },
                "diagnostics": {"divergences": ["TV", "KL", "W2-1D"]},
            },
        ),
        "two-mode": Preset(
            description="Prior modes at -3 and 3 with measurement (x - 3)^2/9; annealing at rate 64.",
            config={
                "name": "two-mode",
                "kind": "sampling",
                "prior": _two_mode_prior(3.0),
                "measurement": _scalar_potential(3.0, 4.5),
                "sampler": dict(_TWO_MODE_SAMPLER),
                "diagnostics": {"divergences": ["TV", "KL", "W2-1D", "mode-weights"]},
            },
        ),
        "appendixF-l3": Preset(
            description="Prior modes at -3 and 3 with measurement (x + 3)^2/9; the heavy posterior mode sits at -3.",
            config={
                "name": "appendixF-l3",
                "kind": "sampling",
                "prior": _two_mode_prior(3.0),
                "measurement": _scalar_potential(-3.0, 4.5),
                "sampler": dict(_TWO_MODE_SAMPLER),
                "diagnostics": {
                    "divergences": ["TV", "KL", "W2-1D", "mode-weights"],
                    "partition": [
                        {
                            "type": "halfspace",
                            "normal": [-1.0],
                            "offset": 0.0,
                            "strict": True,
                        },
                        {"type": "halfspace", "normal": [1.0], "offset": 0.0},
                    ],
                },
            },
        ),
        "flipped-posterior-l3": Preset(
            description="Weight-swapped two-mode posterior at separation 3: small FI, large KL.",
            config={
                "name": "flipped-posterior-l3",
                "kind": "flipped-posterior",
                "flipped": {"ell": 3.0},
            },
        ),
        "flipped-posterior-l4": Preset(
            description="Weight-swapped two-mode posterior at separation 4.",
            config={
                "name": "flipped-posterior-l4",
                "kind": "flipped-posterior",
                "flipped": {"ell": 4.0},
            },
        ),
        "lsi-segment-l2": Preset(
            description="Flat segment of half-length e^2 and its Gaussian tilt.",
            config={
                "name": "lsi-segment-l2",
                "kind": "lsi",
                "lsi": {"instance": "segment", "ell": 2.0},
            },
        ),
        "lsi-segment-l3": Preset(
            description="Flat segment of half-length e^3 and its Gaussian tilt.",
            config={
                "name": "lsi-segment-l3",
                "kind": "lsi",
                "lsi": {"instance": "segment", "ell": 3.0},
            },
        ),
        "lsi-u-shape-l3": Preset(
            description="U-shaped curve of height 3 whose Gaussian tilt has a mass bottleneck.",
            config={
                "name": "lsi-u-shape-l3",
                "kind": "lsi",
                "lsi": {"instance": "u-shape", "ell": 3.0},
            },
        ),
    }
)

SUITE_PRESETS = immutabledict.immutabledict(
    {
        "kappa-sweep": Preset(
            description="Two-mode instance at rates 1, 4, 16 and 64 with five seeds each.",
            config={
                "name": "kappa-sweep",
                "members": [
                    {
                        "preset": "two-mode",
                        "label": f"two-mode-kappa{rate}",
                        "seeds": [0, 1, 2, 3, 4],
                        "overrides": {
                            "sampler": {
                                "rate": float(rate),
                                "stop_time": 0.3,
                                "chains": 20000,
                                "checkpoint_times": [],
                            },
                            "diagnostics": {
                                "divergences": ["TV", "KL", "mode-weights"],
                                "compare_true_posterior": False,
                            },
                        },
                    }
                    for rate in (1, 4, 16, 64)
                ],
                "summary": {"kind": "KL", "group_by": "sampler.rate"},
            },
        ),
    }
)


def list_presets() -> List[Tuple[str, str, str]]:
    r"""Returns `(name, kind, description)` for every experiment and suite preset."""
    rows = [
        (name, preset.config["kind"], preset.description)
        for name, preset in sorted(PRESETS.items())
    ]
    rows.extend(
        (name, "suite", preset.description)
        for name, preset in sorted(SUITE_PRESETS.items())
    )
    return rows


def get_preset(name: str) -> Dict[str, Any]:
    r"""Returns a fresh copy of an experiment preset's raw config.

    Raises:
        ConfigError: if no experiment preset has that name.
    """
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}")
    return copy.deepcopy(dict(PRESETS[name].config))


def get_suite_preset(name: str) -> Dict[str, Any]:
    if name not in SUITE_PRESETS:
        raise ConfigError("preset", f"unknown suite preset {name!r}")
    return copy.deepcopy(dict(SUITE_PRESETS[name].config))
