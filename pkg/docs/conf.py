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
# google-cloud-langevin-toolbox documentation build configuration file

import os
import sys

sys.path.insert(0, os.path.abspath(".."))

from google.cloud.langevin_toolbox import version as package_version  # noqa: E402

needs_sphinx = "1.5.5"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
    "recommonmark",
]

autoclass_content = "both"
autodoc_default_options = {"members": True}

source_suffix = [".rst", ".md"]
root_doc = "index"

project = "google-cloud-langevin-toolbox"
copyright = "2024, Google"
author = "Google APIs"
release = package_version.__version__
version = ".".join(release.split(".")[0:2])

exclude_patterns = ["_build", "**/.nox/**/*", "samples/snippets/README.rst"]

pygments_style = "sphinx"

html_theme = "alabaster"
html_theme_options = {
    "description": "Annealed Langevin posterior sampling with analytic diagnostics",
    "font_family": "'Roboto', Georgia, sans",
    "head_font_family": "'Roboto', Georgia, serif",
    "code_font_family": "'Roboto Mono', 'Consolas', monospace",
}
htmlhelp_basename = "google-cloud-langevin-toolbox-doc"

intersphinx_mapping = {
    "python": ("https://python.readthedocs.org/en/latest/", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "pandas": ("https://pandas.pydata.org/pandas-docs/stable/", None),
}

napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_include_special_with_doc = True
napoleon_use_param = True
napoleon_use_rtype = True
