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

import hashlib
import os

import pandas as pd
import pytest

from google.cloud.langevin_toolbox import constants
from google.cloud.langevin_toolbox.utilities import io_utilities


def test_canonical_json_sorts_keys_without_whitespace():
    actual = io_utilities.canonical_json({"b": [1, 2.5], "a": {"y": None, "x": True}})

    assert actual == '{"a":{"x":true,"y":null},"b":[1,2.5]}'


def test_canonical_json_rejects_nan():
    with pytest.raises(ValueError):
        io_utilities.canonical_json({"value": float("nan")})


def test_config_digest_ignores_key_order():
    first = io_utilities.config_digest({"a": 1, "b": 2})
    second = io_utilities.config_digest({"b": 2, "a": 1})

    assert first == second
    assert first == hashlib.sha256(b'{"a":1,"b":2}').hexdigest()


def test_file_digest(tmp_path):
    file_path = tmp_path / "data.txt"
    file_path.write_bytes(b"langevin")

    actual = io_utilities.file_digest(str(file_path))

    assert actual == hashlib.sha256(b"langevin").hexdigest()


def test_write_json_creates_parents_and_sorts(tmp_path):
    file_path = str(tmp_path / "nested" / "out.json")

    io_utilities.write_json(file_path, {"b": 1, "a": [1, 2]})

    with open(file_path, "r", encoding="utf-8") as f:
        text = f.read()
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")
    assert io_utilities.read_json(file_path) == {"a": [1, 2], "b": 1}
    assert [name for name in os.listdir(tmp_path / "nested")] == ["out.json"]


def test_write_text_replaces_file(tmp_path):
    file_path = str(tmp_path / "summary.md")

    io_utilities.write_text(file_path, "first")
    io_utilities.write_text(file_path, "second")

    with open(file_path, "r", encoding="utf-8") as f:
        assert f.read() == "second"


def test_csv_round_trip_with_header(tmp_path):
    file_path = str(tmp_path / "table.csv")
    frame = pd.DataFrame({"x_1": [0.1, -2.5], "x_2": [3.0, 1e-20]})

    io_utilities.write_csv(file_path, frame, header={"config_hash": "abc", "seed": 3})
    header, actual = io_utilities.read_csv(file_path)

    assert header == {"config_hash": "abc", "seed": "3"}
    assert io_utilities.read_csv_header(file_path) == header
    pd.testing.assert_frame_equal(actual, frame, check_exact=False, rtol=1e-15)


def test_csv_without_header(tmp_path):
    file_path = str(tmp_path / "table.csv")

    io_utilities.write_csv(file_path, pd.DataFrame({"a": [1, 2]}))
    header, actual = io_utilities.read_csv(file_path)

    assert header == {}
    assert actual["a"].tolist() == [1, 2]


def test_resolve_output_root_precedence(monkeypatch):
    monkeypatch.setenv(constants.OUTPUT_ROOT_ENV_VAR, "/from/env")

    assert io_utilities.resolve_output_root("cli", "config") == ("cli", "/from/env")
    assert io_utilities.resolve_output_root(None, "config") == ("config", "/from/env")
    assert io_utilities.resolve_output_root() == ("/from/env", "/from/env")


def test_resolve_output_root_default(monkeypatch):
    monkeypatch.delenv(constants.OUTPUT_ROOT_ENV_VAR, raising=False)

    assert io_utilities.resolve_output_root() == (constants.DEFAULT_OUTPUT_ROOT, None)


def test_checkpoint_file_name():
    assert io_utilities.checkpoint_file_name(2, 0.25) == "samples_002_t0.250000.csv"
