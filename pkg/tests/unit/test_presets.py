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

import pytest

from google.cloud.langevin_toolbox.diagnostics import empirical
from google.cloud.langevin_toolbox.exceptions import ConfigError
from google.cloud.langevin_toolbox.experiments import config, presets
from google.cloud.langevin_toolbox.wrappers import mixture_core


@pytest.mark.parametrize("name", sorted(presets.PRESETS))
def test_every_preset_parses(name):
    cfg = config.ExperimentConfig.from_dict(presets.get_preset(name))

    assert cfg.name == name
    assert cfg.kind == presets.PRESETS[name].config["kind"]


def test_suite_preset_members_parse():
    suite = config.SuiteConfig.from_dict(presets.get_suite_preset("kappa-sweep"))

    for member in suite.members:
        for data, base_dir in member.runs():
            cfg = config.ExperimentConfig.from_dict(data, base_dir=base_dir)
            assert cfg.sampler.stop_time == 0.3
            assert cfg.sampler.checkpoint_times == ()
    rates = [
        config.ExperimentConfig.from_dict(member.runs()[0][0]).sampler.rate
        for member in suite.members
    ]
    assert rates == [1.0, 4.0, 16.0, 64.0]


def test_get_preset_returns_a_copy():
    first = presets.get_preset("two-mode")
    first["sampler"]["rate"] = 1.0

    assert presets.get_preset("two-mode")["sampler"]["rate"] == 64.0


def test_two_mode_presets_share_the_sampler():
    two_mode = presets.get_preset("two-mode")
    mirrored = presets.get_preset("appendixF-l3")

    assert two_mode["sampler"] == mirrored["sampler"]
    assert mirrored["measurement"]["y"] == [-3.0]


def test_two_mode_tilt_preset_loads_by_name():
    cfg = config.load_experiment("appendixF-l3")

    assert cfg.name == "appendixF-l3"
    assert cfg.kind == "sampling"
    weights = empirical.analytic_mode_weights(
        mixture_core.tilt(cfg.prior, cfg.measurement), cfg.diagnostics.partition
    )
    assert weights[0] == pytest.approx(
        1.0 / (1.0 + math.exp(-4.0 + 8.0 / 11.0)), abs=2e-3
    )
    assert weights.sum() == pytest.approx(1.0)


def test_unknown_preset():
    with pytest.raises(ConfigError) as e:
        presets.get_preset("three-mode")

    assert e.value.field == "preset"
    with pytest.raises(ConfigError):
        presets.get_suite_preset("two-mode")


def test_list_presets():
    rows = presets.list_presets()

    names = [name for name, _, _ in rows]
    assert names[-1] == "kappa-sweep"
    assert ("kappa-sweep", "suite") == rows[-1][:2]
    assert set(names[:-1]) == set(presets.PRESETS)
    assert all(description for _, _, description in rows)
