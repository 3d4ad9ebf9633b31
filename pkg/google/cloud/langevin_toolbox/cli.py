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
"""Command line: `run`, `suite`, `verify` and `preset list|show`."""

import argparse
import json
import logging
import sys
from typing import List, Optional

from google.cloud.langevin_toolbox import constants
from google.cloud.langevin_toolbox import version as package_version
from google.cloud.langevin_toolbox.exceptions import ConfigError
from google.cloud.langevin_toolbox.experiments import presets, runner
from google.cloud.langevin_toolbox.experiments.config import Overrides

_LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def _add_override_flags(parser: argparse.ArgumentParser, seed_help: str) -> None:
    parser.add_argument("--seed", type=int, help=seed_help)
    parser.add_argument("--out", help="Output root for report bundles.")
    parser.add_argument("--chains", type=int, help="Override sampler.chains.")
    parser.add_argument(
        "--kappa",
        type=float,
        help="Override sampler.rate; unset step size and stop time are re-derived.",
    )
    parser.add_argument("--delta", type=float, help="Override sampler.step_size.")
    parser.add_argument(
        "--progress", action="store_true", help="Show progress bars while sampling."
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="langevin-toolbox",
        description="Annealed Langevin posterior sampling with analytic diagnostics.",
    )
    parser.add_argument(
        "--version", action="version", version=package_version.__version__
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="-v for INFO logging, -vv for DEBUG.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one experiment config or preset.")
    run.add_argument("config", help="Config JSON path or preset name.")
    _add_override_flags(run, "Override sampler.seed.")

    suite = commands.add_parser("suite", help="Run a suite config or suite preset.")
    suite.add_argument("suite", help="Suite JSON path or suite preset name.")
    _add_override_flags(suite, "Base seed added to every member's listed seeds.")

    verify = commands.add_parser("verify", help="Re-hash a report bundle.")
    verify.add_argument("manifest", help="Path to manifest.json.")

    preset = commands.add_parser("preset", help="Inspect built-in presets.")
    preset_commands = preset.add_subparsers(dest="preset_command", required=True)
    preset_commands.add_parser("list", help="List presets.")
    show = preset_commands.add_parser("show", help="Print a preset config.")
    show.add_argument("name")
    return parser


def _overrides(args: argparse.Namespace) -> Overrides:
    return Overrides(
        seed=args.seed,
        chains=args.chains,
        rate=args.kappa,
        step_size=args.delta,
        output_dir=args.out,
    )


def _report_error(error: Optional[dict], output_dir: Optional[str]) -> None:
    if error is None:
        return
    if output_dir is None:
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
    else:
        print(f"{error['type']}: {error['message']}", file=sys.stderr)


def _run(args: argparse.Namespace) -> int:
    result = runner.run_experiment(
        args.config, overrides=_overrides(args), progress=args.progress
    )
    _report_error(result.error, result.output_dir)
    if result.output_dir is not None:
        print(f"Report bundle: {result.output_dir}")
    return result.exit_code


def _suite(args: argparse.Namespace) -> int:
    result = runner.run_suite(
        args.suite, overrides=_overrides(args), progress=args.progress
    )
    for failure in result.failures:
        print(json.dumps(failure, sort_keys=True), file=sys.stderr)
    if result.summary_path is not None:
        print(f"Suite summary: {result.summary_path}")
    return result.exit_code


def _verify(args: argparse.Namespace) -> int:
    try:
        result = runner.verify(args.manifest)
    except OSError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return constants.EXIT_CODES["filesystem"]
    if result.ok:
        print("Verified: config hash and artifact digests match.")
    return result.exit_code


def _preset(args: argparse.Namespace) -> int:
    if args.preset_command == "list":
        for name, kind, description in presets.list_presets():
            print(f"{name:<24} {kind:<18} {description}")
        return constants.EXIT_CODES["ok"]
    try:
        if args.name in presets.SUITE_PRESETS:
            config = presets.get_suite_preset(args.name)
        else:
            config = presets.get_preset(args.name)
    except ConfigError as e:
        error = {"type": "ConfigError", "field": e.field, "message": str(e)}
        print(json.dumps(error), file=sys.stderr)
        return constants.EXIT_CODES["config"]
    print(json.dumps(config, indent=2, sort_keys=True))
    return constants.EXIT_CODES["ok"]


_COMMANDS = {"run": _run, "suite": _suite, "verify": _verify, "preset": _preset}


def main(argv: Optional[List[str]] = None) -> int:
    r"""Entry point of the `langevin-toolbox` console script.

    Returns:
        int:
            The process exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=_LOG_LEVELS[min(args.verbose, len(_LOG_LEVELS) - 1)],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return _COMMANDS[args.command](args)
