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
"""Runs experiments and suites into reproducible report bundles."""

from concurrent import futures
import dataclasses
import json
import logging
import math
import os
import sys
import time
from typing import Any, Dict, List, Optional, Tuple, Union

from jinja2 import Environment, PackageLoader
import numpy as np
import pandas as pd

from google.cloud.langevin_toolbox import constants
from google.cloud.langevin_toolbox import version as package_version
from google.cloud.langevin_toolbox.diagnostics import (
    empirical,
    lsi_examples,
    quadrature,
    reference_checks,
)
from google.cloud.langevin_toolbox.exceptions import (
    INPUT_ERRORS,
    ConfigError,
    CoverageError,
    DimensionMismatchError,
    NumericalBlowupError,
    PartitionError,
)
from google.cloud.langevin_toolbox.experiments import config as config_module
from google.cloud.langevin_toolbox.experiments.config import (
    ExperimentConfig,
    Overrides,
    SuiteConfig,
)
from google.cloud.langevin_toolbox.samplers import annealed_langevin
from google.cloud.langevin_toolbox.samplers.annealed_langevin import SampleBatch
from google.cloud.langevin_toolbox.utilities import io_utilities
from google.cloud.langevin_toolbox.wrappers import mixture_core

_LOGGER = logging.getLogger(__name__)

_DIAGNOSTIC_WORKERS = 4
_MONTE_CARLO_KL_SAMPLES = 100_000
_TIME_MATCH = 1e-9
_RUN_ERRORS = INPUT_ERRORS + (NumericalBlowupError, OSError)
_WEIGHT_SLACK = 1e-12

ConfigSource = Union[str, dict, ExperimentConfig]


def _banner(phase: str, state: str = "Started") -> None:
    print(f"-------- {phase} {state} --------")


def _error_record(error: BaseException, exit_code: int) -> Dict[str, Any]:
    record: Dict[str, Any] = {
        "type": type(error).__name__,
        "message": str(error),
        "exit_code": exit_code,
    }
    if isinstance(error, ConfigError):
        record["field"] = error.field
    if isinstance(error, NumericalBlowupError):
        record.update(error.to_dict())
    return record


def _exit_code(error: BaseException) -> int:
    if isinstance(error, NumericalBlowupError):
        return constants.EXIT_CODES["blowup"]
    if isinstance(error, OSError):
        return constants.EXIT_CODES["filesystem"]
    return constants.EXIT_CODES["config"]


@dataclasses.dataclass
class RunManifest:
    r"""Append-only record of one run, rewritten atomically after every change.

    Attributes:
        file_path (str):
            Required. Location of `manifest.json`.
        data (Dict[str, Any]):
            Required. The JSON document.
    """

    file_path: str
    data: Dict[str, Any]

    @classmethod
    def start(
        cls,
        file_path: str,
        config: ExperimentConfig,
        output_root_env: Optional[str] = None,
    ) -> "RunManifest":
        manifest = cls(
            file_path=file_path,
            data={
                "software": {
                    "name": constants.USER_AGENT_PRODUCT,
                    "version": package_version.__version__,
                },
                "name": config.name,
                "kind": config.kind,
                "config_hash": config.config_hash,
                "config": config.to_dict(),
                "seed": config.seed,
                "output_root_env": output_root_env,
                "status": "running",
                "phases": {},
                "checkpoints": [],
                "divergences": [],
                "records": [],
                "artifacts": {},
                "volatile_artifacts": [constants.TIMINGS_FILE_NAME],
            },
        )
        manifest.flush()
        return manifest

    @classmethod
    def load(cls, file_path: str) -> "RunManifest":
        return cls(file_path=file_path, data=io_utilities.read_json(file_path))

    @property
    def directory(self) -> str:
        return os.path.dirname(self.file_path)

    def flush(self) -> None:
        io_utilities.write_json(self.file_path, self.data)

    def append(self, section: str, record: Dict[str, Any]) -> None:
        self.data[section].append(record)
        self.flush()

    def record_phase(self, phase: str, values: Dict[str, Any]) -> None:
        if phase in self.data["phases"]:
            raise ValueError(f"Phase {phase!r} is already recorded.")
        self.data["phases"][phase] = values
        self.flush()

    def set_once(self, key: str, value: Any) -> None:
        if key in self.data:
            raise ValueError(f"Manifest key {key!r} is already set.")
        self.data[key] = value
        self.flush()

    def add_artifact(self, file_name: str) -> str:
        digest = io_utilities.file_digest(os.path.join(self.directory, file_name))
        self.data["artifacts"][file_name] = digest
        self.flush()
        return digest

    def finish(self, status: str, error: Optional[Dict[str, Any]] = None) -> None:
        self.data["status"] = status
        if error is not None:
            self.data["error"] = error
        self.flush()


@dataclasses.dataclass
class RunResult:
    r"""Outcome of `run_experiment`.

    Attributes:
        exit_code (int):
            0 on success, otherwise the code of the failure class.
        output_dir (Optional[str]):
            The bundle directory, when one was created.
        manifest (Optional[Dict[str, Any]]):
            The final manifest document.
        error (Optional[Dict[str, Any]]):
            The machine-readable error record of a failed run.
    """

    exit_code: int
    output_dir: Optional[str] = None
    manifest: Optional[Dict[str, Any]] = None
    error: Optional[Dict[str, Any]] = None


def _parse_experiment(
    source: ConfigSource,
    overrides: Optional[Overrides],
    base_dir: Optional[str] = None,
) -> ExperimentConfig:
    if isinstance(source, ExperimentConfig):
        return source
    if isinstance(source, dict):
        return ExperimentConfig.from_dict(
            source, base_dir=base_dir, overrides=overrides
        )
    return config_module.load_experiment(source, overrides=overrides)


def _problem(
    batch: SampleBatch, reference: str, diagnostic: str, error: Exception
) -> Dict[str, Any]:
    return {
        "type": "diagnostic-error",
        "target_time": batch.target_time,
        "reference": reference,
        "diagnostic": diagnostic,
        "error": type(error).__name__,
        "message": str(error),
    }


def _batch_diagnostics(
    cfg: ExperimentConfig,
    batch: SampleBatch,
    posterior: Optional[mixture_core.GaussianMixture],
) -> Tuple[List[empirical.DivergenceReport], List[Dict[str, Any]]]:
    r"""Measures one batch against `μ_t` and, optionally, `μ_0`."""
    spec = cfg.diagnostics
    smoothed = mixture_core.ou_smooth(cfg.prior, batch.target_time)
    targets = [("mu_t", mixture_core.tilt(smoothed, cfg.measurement))]
    if posterior is not None:
        targets.append(("mu_0", posterior))
    histogram_kinds = [kind for kind in spec.divergences if kind != "mode-weights"]

    reports: List[empirical.DivergenceReport] = []
    problems: List[Dict[str, Any]] = []
    for reference, target in targets:
        if histogram_kinds and target.dim <= 2:
            try:
                reports.extend(
                    empirical.empirical_divergences(
                        batch,
                        target,
                        bins=spec.bins,
                        kinds=histogram_kinds,
                        reference=reference,
                    )
                )
            except (CoverageError, DimensionMismatchError) as e:
                problems.append(_problem(batch, reference, "histogram", e))
        if "mode-weights" in spec.divergences:
            try:
                reports.append(
                    empirical.mode_weight_report(
                        batch, target, spec.partition, batch.target_time, reference
                    )
                )
            except PartitionError as e:
                problems.append(_problem(batch, reference, "mode-weights", e))
        if spec.kde_fisher:
            try:
                report = empirical.kde_fisher_estimate(batch, target)
                report.reference = reference
                reports.append(report)
            except CoverageError as e:
                problems.append(_problem(batch, reference, "kde-score", e))
    _LOGGER.debug(
        "Diagnostics at target-time %.6g: %d reports.", batch.target_time, len(reports)
    )
    return reports, problems


def _mode_weight_check(report: empirical.DivergenceReport) -> Dict[str, Any]:
    empirical_weights = np.array(report.details["empirical"])
    analytic = np.array(report.details["analytic"])
    std_errs = np.array(report.details["std_errs"])
    gaps = np.abs(empirical_weights - analytic)
    return {
        "type": "mode-weights-check",
        "target_time": report.target_time,
        "reference": report.reference,
        "empirical": empirical_weights.tolist(),
        "analytic": analytic.tolist(),
        "std_errs": std_errs.tolist(),
        "within_3_std_err": bool(np.all(gaps <= 3.0 * std_errs + _WEIGHT_SLACK)),
        "heavier_cell_matches": bool(
            int(np.argmax(empirical_weights)) == int(np.argmax(analytic))
        ),
    }


def _best_checkpoint(
    cfg: ExperimentConfig, manifest: RunManifest
) -> Optional[Dict[str, Any]]:
    r"""Returns the Fisher-window checkpoint with the smallest histogram KL to `μ_0`."""
    window = annealed_langevin.fisher_window_times(cfg.sampler)
    candidates = [
        record
        for record in manifest.data["divergences"]
        if record["kind"] == "KL"
        and record["reference"] == "mu_0"
        and any(abs(record["target_time"] - t) <= _TIME_MATCH for t in window)
    ]
    if not candidates:
        return None
    best = min(candidates, key=lambda record: (record["value"], record["checkpoint"]))
    return {
        "checkpoint": best["checkpoint"],
        "target_time": best["target_time"],
        "kl_to_posterior": best["value"],
        "rule": "smallest histogram KL to mu_0 over the Fisher window",
    }


def _stopping_bias(
    cfg: ExperimentConfig, posterior: mixture_core.GaussianMixture
) -> Dict[str, Any]:
    r"""Returns the analytic gap between `μ_τ` and `μ_0`."""
    tau = cfg.sampler.stop_time
    mu_tau = mixture_core.tilt(mixture_core.ou_smooth(cfg.prior, tau), cfg.measurement)
    record: Dict[str, Any] = {"type": "stopping-bias", "target_time": tau}
    try:
        grid = quadrature.build_grid(mu_tau, posterior)
        record["kl"] = quadrature.kl_quadrature(mu_tau, posterior, grid)
        record["fi"] = quadrature.fisher_quadrature(mu_tau, posterior, grid)
    except (CoverageError, DimensionMismatchError) as e:
        record["error"] = str(e)
    return record


def _divergence_frame(records: List[Dict[str, Any]]) -> pd.DataFrame:
    columns = [
        "checkpoint",
        "target_time",
        "kind",
        "reference",
        "estimator",
        "value",
        "std_err",
    ]
    return pd.DataFrame(
        [
            {
                "checkpoint": record["checkpoint"],
                "target_time": record["target_time"],
                "kind": record["kind"],
                "reference": record["reference"],
                "estimator": record["estimator"],
                "value": record["value"],
                "std_err": (
                    math.nan if record["mc_std_err"] is None else record["mc_std_err"]
                ),
            }
            for record in records
        ],
        columns=columns,
    )


def _run_sampling(
    cfg: ExperimentConfig, manifest: RunManifest, progress: bool
) -> Dict[str, float]:
    out_dir = manifest.directory
    _banner("Sampling")
    run = annealed_langevin.run_algorithm(
        cfg.prior,
        cfg.measurement,
        cfg.sampler,
        config_hash=cfg.config_hash,
        progress=progress,
    )
    _banner("Sampling", "Completed")

    timings = {}
    for phase, values in run.metadata.items():
        timings[phase] = values["seconds"]
        manifest.record_phase(
            phase, {key: value for key, value in values.items() if key != "seconds"}
        )

    _LOGGER.info("Writing sample batches to %s.", out_dir)
    batches = run.checkpoints + [run.final]
    for index, batch in enumerate(batches):
        file_name = io_utilities.checkpoint_file_name(index, batch.target_time)
        batch.to_csv(os.path.join(out_dir, file_name))
        manifest.add_artifact(file_name)
        manifest.append(
            "checkpoints",
            {
                "index": index,
                "file": file_name,
                "target_time": batch.target_time,
                "algorithm_iter": batch.algorithm_iter,
                "mode": batch.mode,
                "n": len(batch),
            },
        )

    _banner("Diagnostics")
    started = time.perf_counter()
    posterior = (
        mixture_core.tilt(cfg.prior, cfg.measurement)
        if cfg.diagnostics.compare_true_posterior
        else None
    )
    diagnostics_pool = futures.ThreadPoolExecutor(max_workers=_DIAGNOSTIC_WORKERS)
    jobs = [
        diagnostics_pool.submit(_batch_diagnostics, cfg, batch, posterior)
        for batch in batches
    ]
    futures.wait(jobs)
    diagnostics_pool.shutdown()

    final_index = len(batches) - 1
    for index, job in enumerate(jobs):
        reports, problems = job.result()
        for report in reports:
            manifest.append("divergences", {"checkpoint": index, **report.to_dict()})
            if (
                index == final_index
                and report.kind == "mode-weights"
                and report.reference == "mu_t"
            ):
                manifest.append("records", _mode_weight_check(report))
        for problem in problems:
            manifest.append("records", problem)
    if posterior is not None:
        manifest.append("records", _stopping_bias(cfg, posterior))
        if cfg.sampler.fisher_window:
            best = _best_checkpoint(cfg, manifest)
            if best is not None:
                manifest.set_once("best_checkpoint", best)
    timings["diagnostics"] = time.perf_counter() - started
    _banner("Diagnostics", "Completed")

    io_utilities.write_csv(
        os.path.join(out_dir, constants.DIVERGENCE_FILE_NAME),
        _divergence_frame(manifest.data["divergences"]),
        header={"config_hash": cfg.config_hash, "seed": str(cfg.sampler.seed)},
    )
    manifest.add_artifact(constants.DIVERGENCE_FILE_NAME)
    return timings


def _write_instance(manifest: RunManifest, cfg: ExperimentConfig, instance: dict):
    io_utilities.write_json(
        os.path.join(manifest.directory, "instance.json"),
        {"config_hash": cfg.config_hash, **instance},
    )
    manifest.add_artifact("instance.json")


def _run_lsi(cfg: ExperimentConfig, manifest: RunManifest) -> Dict[str, float]:
    spec = cfg.lsi
    _banner("LSI Ratios")
    started = time.perf_counter()
    if spec.instance == "segment":
        mu, mu_R = lsi_examples.segment_instance(spec.ell, spec.thickness)
        f = lsi_examples.segment_test_function()
        ratio = lsi_examples.lsi_ratio(mu, f)
        tilted_ratio = lsi_examples.lsi_ratio(mu_R, f)
        lower_bound = 0.1 * math.exp(spec.ell)
        record = {
            "type": "lsi-ratio",
            "instance": spec.instance,
            "ell": spec.ell,
            "test_function": f.name,
            "ratio": ratio,
            "ratio_lower_bound": lower_bound,
            "tilted_ratio": tilted_ratio,
            "tilted_ratio_upper_bound": 2.0,
            "passed": bool(ratio >= lower_bound and tilted_ratio <= 2.0),
        }
    else:
        instance = lsi_examples.u_shape_instance(spec.ell, spec.thickness)
        mu, mu_R = instance.mu, instance.mu_R
        lower_bound = math.exp(spec.ell**2 / 4.0)
        upper_bound = 10.0 * spec.ell**2
        record = {
            "type": "lsi-ratio",
            "instance": spec.instance,
            "ell": spec.ell,
            "test_function": lsi_examples.u_shape_test_function().name,
            "ratio": instance.untilted_ratio,
            "ratio_upper_bound": upper_bound,
            "tilted_ratio": instance.ratio,
            "tilted_ratio_lower_bound": lower_bound,
            "bar_mass": instance.bar_mass,
            "tilted_bar_mass": instance.tilted_bar_mass,
            "unnormalized_tilted_bar_mass": mu_R.unnormalized_mass("b"),
            "bar_mass_bracket": list(instance.bar_mass_bracket()),
            "bar_mass_within_bracket": instance.bar_mass_within_bracket,
            "passed": bool(
                instance.ratio >= lower_bound and instance.untilted_ratio <= upper_bound
            ),
        }
    manifest.append("records", record)
    _write_instance(manifest, cfg, {"mu": mu.to_dict(), "mu_R": mu_R.to_dict()})
    _banner("LSI Ratios", "Completed")
    return {"lsi": time.perf_counter() - started}


def _run_flipped(cfg: ExperimentConfig, manifest: RunManifest) -> Dict[str, float]:
    ell = cfg.flipped.ell
    _banner("Flipped Posterior")
    started = time.perf_counter()
    example = reference_checks.flipped_posterior_example(ell)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(0)))
    kl_mc, kl_mc_std_err = quadrature.kl_monte_carlo(
        example.p_R_flipped, example.p_R, _MONTE_CARLO_KL_SAMPLES, rng
    )
    fi_bound = 10.0 * ell * ell * math.exp(-ell * ell / 2.0)
    manifest.append(
        "records",
        {
            "type": "flipped-posterior",
            "ell": ell,
            "heavy_weight": reference_checks.flipped_weight(ell),
            "fi": example.fi,
            "fi_upper_bound": fi_bound,
            "fi_within_bound": bool(example.fi <= fi_bound),
            "kl": example.kl,
            "kl_monte_carlo": kl_mc,
            "kl_monte_carlo_std_err": kl_mc_std_err,
        },
    )
    _write_instance(
        manifest,
        cfg,
        {"p_R": example.p_R.to_dict(), "p_R_flipped": example.p_R_flipped.to_dict()},
    )
    _banner("Flipped Posterior", "Completed")
    return {"flipped_posterior": time.perf_counter() - started}


def _markdown(frame: pd.DataFrame) -> str:
    if frame.empty:
        return ""
    return frame.to_markdown(index=False, floatfmt=".6g")


def render_summary(manifest: Dict[str, Any]) -> str:
    r"""Renders the Markdown run summary of a manifest document.

    Args:
        manifest (Dict[str, Any]):
            Required. A manifest document as written by `run_experiment`.

    Returns:
        str:
            The Markdown summary.
    """
    phases = pd.DataFrame(
        [{"phase": phase, **values} for phase, values in manifest["phases"].items()]
    )
    checkpoints = pd.DataFrame(manifest["checkpoints"])
    divergences = _divergence_frame(manifest["divergences"])
    environment = Environment(
        loader=PackageLoader("google.cloud.langevin_toolbox", "templates"),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )
    template = environment.get_template("run_summary_template.md.j2")
    return template.render(
        name=manifest["name"],
        kind=manifest["kind"],
        config_hash=manifest["config_hash"],
        software=manifest["software"],
        seed=manifest["seed"],
        phases=_markdown(phases),
        checkpoints=_markdown(checkpoints),
        divergences=_markdown(divergences),
        records=manifest["records"],
    )


def run_experiment(
    config: ConfigSource,
    overrides: Optional[Overrides] = None,
    output_root: Optional[str] = None,
    progress: bool = False,
    base_dir: Optional[str] = None,
) -> RunResult:
    r"""Runs one experiment and writes its report bundle.

    The bundle lives in `<output root>/<name>/` and holds `manifest.json`,
    one sample CSV per emitted batch, `divergences.csv`, `summary.md` and
    the volatile `timings.json`. A failed run writes `error.json` instead of
    the summary.

    Args:
        config (ConfigSource):
            Required. A config file path, a preset name, a raw config dict or
            a parsed ExperimentConfig.
        overrides (Optional[Overrides]):
            Optional. Command-line overrides.
        output_root (Optional[str]):
            Optional. Output root taking precedence over every other source.
        progress (bool):
            Optional. Show progress bars while sampling.
        base_dir (Optional[str]):
            Optional. Directory for relative paths inside a raw config dict.

    Returns:
        RunResult:
            The exit code, bundle directory, manifest and error record.
    """
    try:
        cfg = _parse_experiment(config, overrides, base_dir)
    except (ConfigError, OSError) as e:
        code = _exit_code(e)
        _LOGGER.error("Could not load the experiment config: %s", e)
        return RunResult(exit_code=code, error=_error_record(e, code))

    cli_output = output_root or (overrides.output_dir if overrides else None)
    root, env_value = io_utilities.resolve_output_root(cli_output, cfg.output_dir)
    out_dir = os.path.join(root, cfg.name)
    try:
        os.makedirs(out_dir, exist_ok=True)
        stale_error = os.path.join(out_dir, constants.ERROR_FILE_NAME)
        if os.path.exists(stale_error):
            os.remove(stale_error)
        manifest = RunManifest.start(
            os.path.join(out_dir, constants.MANIFEST_FILE_NAME), cfg, env_value
        )
    except OSError as e:
        code = _exit_code(e)
        _LOGGER.error("Could not create the report bundle in %s: %s", out_dir, e)
        return RunResult(exit_code=code, error=_error_record(e, code))

    _LOGGER.info("Running %s (%s) into %s.", cfg.name, cfg.kind, out_dir)
    started = time.perf_counter()
    try:
        if cfg.kind == config_module.SAMPLING:
            timings = _run_sampling(cfg, manifest, progress)
        elif cfg.kind == config_module.LSI:
            timings = _run_lsi(cfg, manifest)
        else:
            timings = _run_flipped(cfg, manifest)

        io_utilities.write_text(
            os.path.join(out_dir, constants.SUMMARY_FILE_NAME),
            render_summary(manifest.data),
        )
        manifest.add_artifact(constants.SUMMARY_FILE_NAME)
        timings["total"] = time.perf_counter() - started
        io_utilities.write_json(
            os.path.join(out_dir, constants.TIMINGS_FILE_NAME),
            {"config_hash": cfg.config_hash, "seconds": timings},
        )
        manifest.finish("succeeded")
    except _RUN_ERRORS as e:
        code = _exit_code(e)
        error = _error_record(e, code)
        _LOGGER.error("Run %s failed: %s", cfg.name, e)
        try:
            io_utilities.write_json(
                os.path.join(out_dir, constants.ERROR_FILE_NAME), error
            )
            manifest.finish("failed", error)
        except OSError:
            _LOGGER.exception("Could not record the failure of %s.", cfg.name)
        return RunResult(
            exit_code=code, output_dir=out_dir, manifest=manifest.data, error=error
        )

    return RunResult(
        exit_code=constants.EXIT_CODES["ok"], output_dir=out_dir, manifest=manifest.data
    )


def final_divergence(
    manifest: Dict[str, Any], kind: str, reference: str = "mu_t"
) -> Optional[float]:
    r"""Returns the value of `kind` measured on the final batch, if recorded."""
    if not manifest["checkpoints"]:
        return None
    final_index = manifest["checkpoints"][-1]["index"]
    for record in manifest["divergences"]:
        if (
            record["checkpoint"] == final_index
            and record["kind"] == kind
            and record["reference"] == reference
        ):
            return record["value"]
    return None


@dataclasses.dataclass
class SuiteResult:
    r"""Outcome of `run_suite`.

    Attributes:
        exit_code (int):
            0 when every member run succeeded.
        summary_path (Optional[str]):
            Location of the suite summary CSV.
        summary (Optional[pd.DataFrame]):
            One row per member.
        failures (List[Dict[str, Any]]):
            Error records of failed member runs.
    """

    exit_code: int
    summary_path: Optional[str] = None
    summary: Optional[pd.DataFrame] = None
    failures: List[Dict[str, Any]] = dataclasses.field(default_factory=list)


_SUITE_COLUMNS = [
    "member",
    "group",
    "rate",
    "step_size",
    "stop_time",
    "kind",
    "mean",
    "std_err",
    "n_seeds",
    "failed",
    "config_hashes",
]


def _summary_row(
    label: str, suite: SuiteConfig, manifests: List[Dict[str, Any]], failed: int
) -> Dict[str, Any]:
    values = [
        value
        for value in (final_divergence(m, suite.summary_kind) for m in manifests)
        if value is not None
    ]
    first = manifests[0]["config"] if manifests else {}
    sampler = first.get("sampler") or {}
    n = len(values)
    return {
        "member": label,
        "group": config_module.lookup(first, suite.group_by),
        "rate": sampler.get("rate"),
        "step_size": sampler.get("step_size"),
        "stop_time": sampler.get("stop_time"),
        "kind": suite.summary_kind,
        "mean": float(np.mean(values)) if values else math.nan,
        "std_err": float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else math.nan,
        "n_seeds": n,
        "failed": failed,
        "config_hashes": ";".join(m["config_hash"] for m in manifests),
    }


def run_suite(
    suite: Union[str, SuiteConfig],
    overrides: Optional[Overrides] = None,
    progress: bool = False,
) -> SuiteResult:
    r"""Runs every member of a suite and writes the cross-run summary CSV.

    A failing member does not stop the suite; the exit code is that of the
    first failure.

    Args:
        suite (Union[str, SuiteConfig]):
            Required. A suite file path, a suite preset name or a parsed SuiteConfig.
        overrides (Optional[Overrides]):
            Optional. Overrides applied to every member run. The seed is a
            base added to each member's listed seeds.
        progress (bool):
            Optional. Show progress bars while sampling.

    Returns:
        SuiteResult:
            The exit code, summary location, summary rows and member failures.
    """
    try:
        if not isinstance(suite, SuiteConfig):
            suite = config_module.load_suite(suite)
    except (ConfigError, OSError) as e:
        code = _exit_code(e)
        _LOGGER.error("Could not load the suite: %s", e)
        return SuiteResult(exit_code=code, failures=[_error_record(e, code)])

    root, _ = io_utilities.resolve_output_root(
        overrides.output_dir if overrides else None, suite.output_root
    )
    suite_dir = os.path.join(root, suite.name)
    member_overrides = (
        dataclasses.replace(overrides, output_dir=None, seed=None)
        if overrides
        else None
    )
    base_seed = overrides.seed if overrides else None

    _banner("Suite")
    exit_code = constants.EXIT_CODES["ok"]
    failures: List[Dict[str, Any]] = []
    rows = []
    for member in suite.members:
        manifests: List[Dict[str, Any]] = []
        failed = 0
        try:
            runs = member.runs(base_seed)
        except (ConfigError, OSError) as e:
            runs = []
            failed = 1
            code = _exit_code(e)
            failures.append({"member": member.label, **_error_record(e, code)})
            exit_code = exit_code or code
        for data, base_dir in runs:
            result = run_experiment(
                data,
                overrides=member_overrides,
                output_root=suite_dir,
                progress=progress,
                base_dir=base_dir,
            )
            if result.exit_code != constants.EXIT_CODES["ok"]:
                failed += 1
                failures.append({"member": member.label, **result.error})
                exit_code = exit_code or result.exit_code
                print(f"Member run failed: {member.label} ({result.error['type']})")
                continue
            manifests.append(result.manifest)
        rows.append(_summary_row(member.label, suite, manifests, failed))
    _banner("Suite", "Completed")

    summary = pd.DataFrame(rows, columns=_SUITE_COLUMNS)
    summary_path = os.path.join(suite_dir, constants.SUITE_SUMMARY_FILE_NAME)
    try:
        os.makedirs(suite_dir, exist_ok=True)
        io_utilities.write_csv(
            summary_path,
            summary,
            header={
                "suite": suite.name,
                "summary_kind": suite.summary_kind,
                "group_by": suite.group_by,
            },
        )
    except OSError as e:
        code = _exit_code(e)
        failures.append(_error_record(e, code))
        return SuiteResult(
            exit_code=exit_code or code, summary=summary, failures=failures
        )

    if failures:
        print(f"{len(failures)} member runs failed")
    return SuiteResult(
        exit_code=exit_code,
        summary_path=summary_path,
        summary=summary,
        failures=failures,
    )


@dataclasses.dataclass
class VerifyResult:
    ok: bool
    problems: List[str]

    @property
    def exit_code(self) -> int:
        return constants.EXIT_CODES["ok" if self.ok else "verification"]


def verify(manifest_path: str) -> VerifyResult:
    r"""Re-hashes a bundle's config and artifacts against its manifest.

    Args:
        manifest_path (str):
            Required. Path to `manifest.json`.

    Returns:
        VerifyResult:
            `ok` and the list of mismatches found.

    Raises:
        OSError: if the manifest cannot be read.
    """
    problems: List[str] = []
    try:
        manifest = io_utilities.read_json(manifest_path)
    except json.JSONDecodeError as e:
        return VerifyResult(ok=False, problems=[f"manifest is not valid JSON: {e}"])

    expected = manifest.get("config_hash")
    if io_utilities.config_digest(manifest.get("config")) != expected:
        problems.append("config_hash does not match the embedded config")

    directory = os.path.dirname(manifest_path)
    for file_name, digest in sorted(manifest.get("artifacts", {}).items()):
        file_path = os.path.join(directory, file_name)
        if not os.path.exists(file_path):
            problems.append(f"{file_name}: missing")
            continue
        if io_utilities.file_digest(file_path) != digest:
            problems.append(f"{file_name}: sha256 mismatch")
        if file_name.endswith(constants.CSV_EXTENSION):
            found = io_utilities.read_csv_header(file_path).get("config_hash")
        elif file_name.endswith(constants.JSON_EXTENSION):
            found = io_utilities.read_json(file_path).get("config_hash")
        else:
            with open(file_path, "r", encoding="utf-8") as f:
                found = expected if expected and expected in f.read() else None
        if found != expected:
            problems.append(f"{file_name}: config hash {found!r} != {expected!r}")
    if manifest.get("status") != "succeeded":
        problems.append(f"run status is {manifest.get('status')!r}")

    for problem in problems:
        print(problem, file=sys.stderr)
    return VerifyResult(ok=not problems, problems=problems)
