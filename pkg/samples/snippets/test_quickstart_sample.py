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


import pytest

from samples.snippets import quickstart_sample


def test_quickstart_sample_preset(tmp_path, capsys: pytest.CaptureFixture) -> None:
    result = quickstart_sample.quickstart_sample(
        preset="warm-start-conjugate", output_root=str(tmp_path), chains=2000
    )
    out, _ = capsys.readouterr()

    assert result.exit_code == 0
    assert "Run Successfully Completed!" in out
    assert "Final TV to mu_t:" in out


def test_quickstart_sample_lsi_preset(tmp_path, capsys: pytest.CaptureFixture) -> None:
    quickstart_sample.quickstart_sample(
        preset="lsi-segment-l2", output_root=str(tmp_path)
    )
    out, _ = capsys.readouterr()

    assert "type=lsi-ratio" in out
    assert "passed=True" in out


def test_quickstart_sample_config_path(
    tmp_path, capsys: pytest.CaptureFixture
) -> None:
    config_path = tmp_path / "flipped.json"
    config_path.write_text(
        '{"name": "flipped", "kind": "flipped-posterior", "flipped": {"ell": 3}}'
    )

    result = quickstart_sample.quickstart_sample(
        config_path=str(config_path), output_root=str(tmp_path / "runs")
    )
    out, _ = capsys.readouterr()

    assert result.exit_code == 0
    assert "type=flipped-posterior" in out


def test_quickstart_sample_no_input() -> None:
    with pytest.raises(ValueError, match="No experiment source provided."):
        quickstart_sample.quickstart_sample()
