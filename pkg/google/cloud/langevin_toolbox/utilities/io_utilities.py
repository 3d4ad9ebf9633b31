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
"""Local filesystem utilities: canonical JSON, digests and CSV bundles."""
import hashlib
import json
import os
import tempfile
from typing import Any, Dict, Mapping, Optional, Tuple

import pandas as pd

from google.cloud.langevin_toolbox import constants

_HEADER_PREFIX = "# "


def canonical_json(value: Any) -> str:
    r"""Returns the canonical JSON text used for hashing.

    Keys are sorted, separators carry no whitespace and floats use their
    shortest round-trip representation.
    """
    return json.dumps(value, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_digest(value: Any) -> str:
    r"""Returns the SHA-256 hex digest of `canonical_json(value)`."""
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()


def file_digest(file_path: str) -> str:
    r"""Returns the SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(file_path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _atomic_write(file_path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(file_path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_path, file_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def write_json(file_path: str, data: Any) -> None:
    r"""Writes `data` as indented, key-sorted JSON, replacing the file atomically.

    Args:
        file_path (str):
            Required. Destination path. Parent directories are created.
        data (Any):
            Required. A JSON-serializable value.
    """
    _atomic_write(file_path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(file_path: str) -> Any:
    with open(file_path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_text(file_path: str, text: str) -> None:
    _atomic_write(file_path, text)


def write_csv(
    file_path: str, frame: pd.DataFrame, header: Optional[Mapping[str, Any]] = None
) -> None:
    r"""Writes a DataFrame as CSV preceded by `# key: value` metadata lines.

    Args:
        file_path (str):
            Required. Destination path.
        frame (pd.DataFrame):
            Required. The rows to write. The index is not written.
        header (Optional[Mapping[str, Any]]):
            Optional. Metadata written in key order before the column header.
    """
    lines = [
        f"{_HEADER_PREFIX}{key}: {value}" for key, value in (header or {}).items()
    ]
    body = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    _atomic_write(file_path, "".join(f"{line}\n" for line in lines) + body)


def read_csv(file_path: str) -> Tuple[Dict[str, str], pd.DataFrame]:
    r"""Reads a CSV written by `write_csv`.

    Returns:
        Tuple[Dict[str, str], pd.DataFrame]:
            The metadata header and the rows.
    """
    header = read_csv_header(file_path)
    frame = pd.read_csv(file_path, skiprows=len(header))
    return header, frame


def read_csv_header(file_path: str) -> Dict[str, str]:
    header: Dict[str, str] = {}
    with open(file_path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith(_HEADER_PREFIX):
                break
            key, _, value = line[len(_HEADER_PREFIX) :].rstrip("\n").partition(": ")
            header[key] = value
    return header


def resolve_output_root(
    cli_output: Optional[str] = None, config_output: Optional[str] = None
) -> Tuple[str, Optional[str]]:
    r"""Returns the output root and the environment override that was seen.

    Precedence is the `--out` flag, then the config's `output_dir`, then the
    `LANGEVIN_TOOLBOX_OUTPUT_ROOT` environment variable, then the default.

    Returns:
        Tuple[str, Optional[str]]:
            The output root and the value of the environment variable, if set.
    """
    env_value = os.environ.get(constants.OUTPUT_ROOT_ENV_VAR)
    root = cli_output or config_output or env_value or constants.DEFAULT_OUTPUT_ROOT
    return root, env_value


def checkpoint_file_name(index: int, target_time: float) -> str:
    r"""Returns the sample CSV name for the `index`-th emitted batch."""
    return f"samples_{index:03d}_t{target_time:.6f}{constants.CSV_EXTENSION}"
