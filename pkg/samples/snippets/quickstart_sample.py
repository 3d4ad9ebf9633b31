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


# [START langevin_toolbox_quickstart]
from typing import Optional

from google.cloud.langevin_toolbox.experiments import runner
from google.cloud.langevin_toolbox.experiments.config import Overrides

# TODO(developer): Uncomment these variables before running the sample.
# Given a built-in preset
# preset = "warm-start-conjugate"

# Or, given an experiment config JSON in path local/path/to/config.json
# config_path = "local/path/to/config.json"

# output_root = "local/path/to/runs"
# chains = 10000


def quickstart_sample(
    preset: Optional[str] = None,
    config_path: Optional[str] = None,
    output_root: Optional[str] = None,
    chains: Optional[int] = None,
) -> runner.RunResult:
    source = preset or config_path
    if not source:
        raise ValueError("No experiment source provided.")

    result = runner.run_experiment(
        source, overrides=Overrides(chains=chains), output_root=output_root
    )
    if result.exit_code != 0:
        print(f"Run failed: {result.error['type']}: {result.error['message']}")
        return result

    manifest = result.manifest
    print("Run Successfully Completed!")
    print(f"\t Report bundle: {result.output_dir}")
    print(f"\t Config hash: {manifest['config_hash']}")

    for checkpoint in manifest["checkpoints"]:
        print(
            f"Batch {checkpoint['index']} at t={checkpoint['target_time']:.6g}"
            f" ({checkpoint['mode']}, {checkpoint['n']} samples)"
        )

    for kind in ("TV", "KL", "W2-1D"):
        value = runner.final_divergence(manifest, kind)
        if value is not None:
            print(f"Final {kind} to mu_t: {value:.4g}")

    # Only recorded for the LSI and flipped-posterior experiment kinds
    for record in manifest["records"]:
        if record["type"] in ("lsi-ratio", "flipped-posterior"):
            print(_format_record(record))

    # [END langevin_toolbox_quickstart]

    return result


def _format_record(record: dict) -> str:
    return ", ".join(f"{key}={value}" for key, value in record.items())
