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

import immutabledict

USER_AGENT_PRODUCT = "langevin-toolbox"

JSON_EXTENSION = ".json"
CSV_EXTENSION = ".csv"
MARKDOWN_EXTENSION = ".md"

MANIFEST_FILE_NAME = "manifest.json"
ERROR_FILE_NAME = "error.json"
TIMINGS_FILE_NAME = "timings.json"
SUMMARY_FILE_NAME = "summary.md"
DIVERGENCE_FILE_NAME = "divergences.csv"
SUITE_SUMMARY_FILE_NAME = "suite_summary.csv"

OUTPUT_ROOT_ENV_VAR = "LANGEVIN_TOOLBOX_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "langevin_runs"

# Mixture validation.
WEIGHT_SUM_TOLERANCE = 1e-12
MIN_EIGENVALUE_FLOOR = 1e-12
SYMMETRY_TOLERANCE = 1e-10

# Sampler.
BLOWUP_LIMIT = 1e8
CHAIN_BLOCK_SIZE = 8192
DEFAULT_WARM_START_ACCURACY = 0.1
DEFAULT_AVERAGING_POINTS = 4
CHECKPOINT_MODES = frozenset({"snapshot", "averaged"})

# Stream phases for counter-based chain streams.
PHASE_WARM_START = 0
PHASE_ANNEAL = 1
PHASE_AVERAGING = 2

# Quadrature.
QUADRATURE_SPAN_SD = 12.0
QUADRATURE_REL_TOL = 1e-8
COVERAGE_TOLERANCE = 1e-8
QUADRATURE_MAX_REFINEMENTS = 6
QUADRATURE_POINTS_1D = 2001
QUADRATURE_POINTS_2D = 201

# Empirical diagnostics.
DEFAULT_BINS = 200
DEFAULT_BINS_2D = 40
HISTOGRAM_MIN_TARGET_MASS = 0.9
KDE_MAX_POINTS = 2000
GAUSS_LEGENDRE_CELL_ORDER = 8

# Log-Sobolev ratios.
DEFAULT_TUBE_THICKNESS = 1e-2
LSI_PANELS_MIN = 2048
LSI_PANELS_PER_UNIT_LENGTH = 64
LSI_GAUSS_LEGENDRE_ORDER = 8
LSI_CROSS_SECTION_ORDER = 8

DIVERGENCE_KINDS = ("KL", "FI", "TV", "W2-1D", "mode-weights")
ESTIMATORS = ("quadrature", "histogram", "kde-score", "sorted-1D")

EXPERIMENT_KINDS = ("sampling", "lsi", "flipped-posterior")

EXIT_CODES = immutabledict.immutabledict(
    {
        "ok": 0,
        "verification": 1,
        "config": 2,
        "blowup": 3,
        "filesystem": 4,
    }
)
