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

import json

import pytest

from google.cloud.langevin_toolbox import cli, constants
from google.cloud.langevin_toolbox import version as package_version
from google.cloud.langevin_toolbox.experiments import presets


@pytest.fixture(autouse=True)
def no_output_root_env(monkeypatch):
    monkeypatch.delenv(constants.OUTPUT_ROOT_ENV_VAR, raising=False)


def _last_json_line(text):
    return json.loads(text.strip().splitlines()[-1])


def test_preset_list(capsys):
    actual = cli.main(["preset", "list"])

    out = capsys.readouterr().out
    assert actual == 0
    assert len(out.splitlines()) == len(presets.PRESETS) + len(presets.SUITE_PRESETS)
    assert "appendixF-l3" in out
    assert "kappa-sweep" in out


def test_preset_show(capsys):
    actual = cli.main(["preset", "show", "lsi-segment-l2"])

    assert actual == 0
    assert json.loads(capsys.readouterr().out) == presets.get_preset("lsi-segment-l2")


def test_preset_show_suite(capsys):
    actual = cli.main(["preset", "show", "kappa-sweep"])

    assert actual == 0
    assert json.loads(capsys.readouterr().out)["name"] == "kappa-sweep"


def test_preset_show_unknown(capsys):
    actual = cli.main(["preset", "show", "nope"])

    error = _last_json_line(capsys.readouterr().err)
    assert actual == 2
    assert error["type"] == "ConfigError"
    assert error["field"] == "preset"


def test_run_and_verify(tmp_path, capsys):
    actual = cli.main(["run", "lsi-segment-l2", "--out", str(tmp_path)])

    out_dir = tmp_path / "lsi-segment-l2"
    assert actual == 0
    assert f"Report bundle: {out_dir}" in capsys.readouterr().out
    assert cli.main(["verify", str(out_dir / "manifest.json")]) == 0
    assert "Verified:" in capsys.readouterr().out


def test_run_config_error_prints_json(tmp_path, capsys):
    config_path = tmp_path / "bad.json"
    config_path.write_text(
        json.dumps({"name": "bad", "kind": "flipped-posterior", "flipped": {"ell": 1}})
    )

    actual = cli.main(["run", str(config_path), "--out", str(tmp_path)])

    error = _last_json_line(capsys.readouterr().err)
    assert actual == 2
    assert error["field"] == "flipped.ell"


def test_verify_missing_manifest(tmp_path, capsys):
    actual = cli.main(["verify", str(tmp_path / "manifest.json")])

    assert actual == 4
    assert "FileNotFoundError" in capsys.readouterr().err


def test_empty_suite(tmp_path, capsys):
    suite_path = tmp_path / "suite.json"
    suite_path.write_text(json.dumps({"name": "empty", "members": []}))

    actual = cli.main(["suite", str(suite_path)])

    assert actual == 2
    assert _last_json_line(capsys.readouterr().err)["field"] == "members"


def test_suite_seed_offsets_member_seeds(tmp_path):
    member = {
        "name": "conjugate",
        "kind": "sampling",
        "prior": {"standard_gaussian": 1},
        "measurement": {"A": [[1.0]], "y": [1.0], "noise_var": 1.0},
        "sampler": {
            "warm_up_iters": 100,
            "warm_start_time": 0.5,
            "rate": 2.0,
            "step_size": 0.1,
            "stop_time": 0.2,
            "chains": 200,
        },
    }
    suite_path = tmp_path / "suite.json"
    suite_path.write_text(
        json.dumps(
            {
                "name": "seeded",
                "members": [{"label": "c", "config": member, "seeds": [0, 1]}],
            }
        )
    )

    actual = cli.main(
        ["suite", str(suite_path), "--seed", "5", "--out", str(tmp_path / "out")]
    )

    assert actual == 0
    for seed in (5, 6):
        manifest_path = tmp_path / "out" / "seeded" / f"c-seed{seed}" / "manifest.json"
        assert json.loads(manifest_path.read_text())["seed"] == seed


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["--version"])

    assert e.value.code == 0
    assert package_version.__version__ in capsys.readouterr().out


def test_missing_command():
    with pytest.raises(SystemExit):
        cli.main([])
