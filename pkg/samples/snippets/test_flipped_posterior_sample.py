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

from samples.snippets import flipped_posterior_sample


def test_flipped_posterior_sample(capsys: pytest.CaptureFixture) -> None:
    example = flipped_posterior_sample.flipped_posterior_sample(ell=3.0)
    out, _ = capsys.readouterr()

    assert "Mode separation: 3.0" in out
    assert "FI(flipped || p_R)" in out
    assert example.kl >= 0.5


def test_flipped_posterior_sample_small_ell() -> None:
    with pytest.raises(ValueError, match="ell must be >= 2"):
        flipped_posterior_sample.flipped_posterior_sample(ell=1.0)
