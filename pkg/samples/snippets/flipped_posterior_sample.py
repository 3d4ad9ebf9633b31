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


# [START langevin_toolbox_flipped_posterior]
from google.cloud.langevin_toolbox.diagnostics import reference_checks

# TODO(developer): Uncomment these variables before running the sample.
# ell = 3.0


def flipped_posterior_sample(ell: float) -> reference_checks.FlippedPosterior:
    example = reference_checks.flipped_posterior_example(ell)

    print(f"Mode separation: {ell}")
    print(f"\t Weights of p_R: {example.p_R.weights.tolist()}")
    print(f"\t Weights of the flipped copy: {example.p_R_flipped.weights.tolist()}")
    print(f"FI(flipped || p_R) = {example.fi:.4g}")
    print(f"KL(flipped || p_R) = {example.kl:.4g}")

    # [END langevin_toolbox_flipped_posterior]

    return example
