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
from google.cloud.langevin_toolbox import version as package_version

__version__ = package_version.__version__

from .diagnostics import empirical, lsi_examples, quadrature, reference_checks
from .experiments import config, presets, runner
from .samplers import annealed_langevin, streams
from .utilities import io_utilities
from .wrappers import curve_measure, likelihood, mixture_core

__all__ = (
    mixture_core,
    likelihood,
    curve_measure,
    annealed_langevin,
    streams,
    quadrature,
    empirical,
    reference_checks,
    lsi_examples,
    config,
    presets,
    runner,
    io_utilities,
)
