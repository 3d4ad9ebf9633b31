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
"""Experiment and suite configs: parsing, defaults and field-level validation."""

import copy
import dataclasses
import json
import math
import os
from typing import Any, Dict, List, Optional, Tuple, Type

from google.cloud.langevin_toolbox import constants
from google.cloud.langevin_toolbox.diagnostics import empirical
from google.cloud.langevin_toolbox.exceptions import ConfigError, PartitionError
from google.cloud.langevin_toolbox.experiments import presets
from google.cloud.langevin_toolbox.samplers.annealed_langevin import SamplerConfig
from google.cloud.langevin_toolbox.utilities import io_utilities
from google.cloud.langevin_toolbox.wrappers import likelihood, mixture_core

SAMPLING, LSI, FLIPPED_POSTERIOR = constants.EXPERIMENT_KINDS

LSI_INSTANCES = ("segment", "u-shape")
EMPIRICAL_DIVERGENCES = ("TV", "KL", "W2-1D", "mode-weights")

_EXPERIMENT_FIELDS = frozenset(
    {
        "name",
        "kind",
        "prior",
        "measurement",
        "sampler",
        "diagnostics",
        "lsi",
        "flipped",
        "output_dir",
    }
)
_SUITE_FIELDS = frozenset({"name", "output_root", "members", "summary"})
_MEMBER_SOURCES = ("config", "path", "preset")


def _check_fields(data: Any, allowed: frozenset, field: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(field, "must be a JSON object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        prefix = f"{field}." if field != "<root>" else ""
        raise ConfigError(f"{prefix}{unknown[0]}", "unknown field")


def _resolve_path(path: str, base_dir: Optional[str]) -> str:
    if base_dir and not os.path.isabs(path):
        return os.path.join(base_dir, path)
    return path


def _load_json(file_path: str) -> Any:
    r"""Reads a JSON document; `OSError` propagates, bad JSON is a ConfigError."""
    try:
        return io_utilities.read_json(file_path)
    except json.JSONDecodeError as e:
        raise ConfigError("<root>", f"{file_path} is not valid JSON: {e}") from e


def _deep_merge(base: dict, overrides: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _resolve_prior(spec: Any, base_dir: Optional[str]) -> mixture_core.GaussianMixture:
    if not isinstance(spec, dict):
        raise ConfigError("prior", "must be a JSON object")
    try:
        if "standard_gaussian" in spec:
            dim = spec["standard_gaussian"]
            if not (isinstance(dim, int) and dim >= 1):
                raise ConfigError("prior.standard_gaussian", "must be an integer >= 1")
            return mixture_core.standard_gaussian(dim)
        if "path" in spec:
            return mixture_core.GaussianMixture.from_dict(
                _load_json(_resolve_path(spec["path"], base_dir))
            )
        return mixture_core.GaussianMixture.from_dict(spec)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError("prior", str(e)) from e


def _resolve_measurement(
    spec: Any, base_dir: Optional[str]
) -> likelihood.QuadraticPotential:
    if not isinstance(spec, dict):
        raise ConfigError("measurement", "must be a JSON object")
    try:
        if "path" in spec:
            spec = _load_json(_resolve_path(spec["path"], base_dir))
        return likelihood.QuadraticPotential.from_dict(spec)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError("measurement", str(e)) from e


@dataclasses.dataclass(frozen=True)
class Overrides:
    r"""Command-line overrides, applied to the raw config before resolution.

    Attributes:
        seed (Optional[int]):
            Optional. Replaces `sampler.seed`.
        chains (Optional[int]):
            Optional. Replaces `sampler.chains`.
        rate (Optional[float]):
            Optional. Replaces `sampler.rate`; unset `δ` and `τ` are re-derived.
        step_size (Optional[float]):
            Optional. Replaces `sampler.step_size`.
        output_dir (Optional[str]):
            Optional. Output root, taking precedence over the config and the
            environment.
    """

    seed: Optional[int] = None
    chains: Optional[int] = None
    rate: Optional[float] = None
    step_size: Optional[float] = None
    output_dir: Optional[str] = None

    def sampler_fields(self) -> Dict[str, Any]:
        values = {
            "seed": self.seed,
            "chains": self.chains,
            "rate": self.rate,
            "step_size": self.step_size,
        }
        return {key: value for key, value in values.items() if value is not None}

    def apply(self, data: dict) -> dict:
        r"""Returns a copy of a raw experiment dict with the overrides applied."""
        data = copy.deepcopy(data)
        fields = self.sampler_fields()
        if fields and data.get("kind", SAMPLING) == SAMPLING:
            sampler = data.get("sampler") or {}
            if not isinstance(sampler, dict):
                raise ConfigError("sampler", "must be a JSON object")
            sampler.update(fields)
            data["sampler"] = sampler
        return data


@dataclasses.dataclass(frozen=True)
class DiagnosticsSpec:
    r"""Which diagnostics the runner computes at every emitted batch.

    Attributes:
        divergences (Tuple[str, ...]):
            Optional. Subset of `TV`, `KL`, `W2-1D` and `mode-weights`.
        bins (Optional[int]):
            Optional. Histogram bins per axis.
        partition (Tuple[empirical.Cell, ...]):
            Optional. Mode-weight cells. Defaults to the split at `x_1 = 0`.
        compare_true_posterior (bool):
            Optional. Also measure every batch against `μ_0`.
        kde_fisher (bool):
            Optional. Add the kernel-score Fisher divergence estimate.
    """

    divergences: Tuple[str, ...] = EMPIRICAL_DIVERGENCES
    bins: Optional[int] = None
    partition: Tuple[empirical.Cell, ...] = ()
    compare_true_posterior: bool = True
    kde_fisher: bool = False

    @classmethod
    def from_dict(
        cls: Type["DiagnosticsSpec"], data: Optional[dict], dim: int
    ) -> "DiagnosticsSpec":
        data = {} if data is None else data
        _check_fields(
            data,
            frozenset(
                {
                    "divergences",
                    "bins",
                    "partition",
                    "compare_true_posterior",
                    "kde_fisher",
                }
            ),
            "diagnostics",
        )
        divergences = tuple(data.get("divergences", EMPIRICAL_DIVERGENCES))
        for kind in divergences:
            if kind not in EMPIRICAL_DIVERGENCES:
                raise ConfigError(
                    "diagnostics.divergences",
                    f"unknown divergence {kind!r}; expected one of {list(EMPIRICAL_DIVERGENCES)}",
                )

        bins = data.get("bins")
        if bins is not None and not (isinstance(bins, int) and bins >= 2):
            raise ConfigError("diagnostics.bins", "must be an integer >= 2")

        try:
            partition = tuple(
                empirical.cell_from_dict(cell) for cell in data.get("partition", ())
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError("diagnostics.partition", str(e)) from e
        for cell in partition:
            width = len(getattr(cell, "normal", getattr(cell, "lower", ())))
            if width != dim:
                raise ConfigError(
                    "diagnostics.partition",
                    f"cell dimension {width} does not match dim {dim}",
                )
        if partition:
            try:
                empirical.check_partition(partition, dim)
            except PartitionError as e:
                raise ConfigError("diagnostics.partition", str(e)) from e
        if not partition and "mode-weights" in divergences:
            partition = tuple(empirical.split_at(0.0, dim=dim))

        return cls(
            divergences=divergences,
            bins=bins,
            partition=partition,
            compare_true_posterior=bool(data.get("compare_true_posterior", True)),
            kde_fisher=bool(data.get("kde_fisher", False)),
        )

    def to_dict(self) -> dict:
        return {
            "divergences": list(self.divergences),
            "bins": self.bins,
            "partition": [cell.to_dict() for cell in self.partition],
            "compare_true_posterior": self.compare_true_posterior,
            "kde_fisher": self.kde_fisher,
        }


@dataclasses.dataclass(frozen=True)
class LsiSpec:
    instance: str
    ell: float
    thickness: float = constants.DEFAULT_TUBE_THICKNESS

    @classmethod
    def from_dict(cls: Type["LsiSpec"], data: Any) -> "LsiSpec":
        _check_fields(data, frozenset({"instance", "ell", "thickness"}), "lsi")
        instance = data.get("instance")
        if instance not in LSI_INSTANCES:
            raise ConfigError("lsi.instance", f"must be one of {list(LSI_INSTANCES)}")
        ell = data.get("ell")
        minimum = 1.0 if instance == "segment" else 2.0
        if not (
            isinstance(ell, (int, float)) and math.isfinite(ell) and ell >= minimum
        ):
            raise ConfigError("lsi.ell", f"must be a number >= {minimum:g}")
        thickness = data.get("thickness", constants.DEFAULT_TUBE_THICKNESS)
        if not (isinstance(thickness, (int, float)) and thickness > 0):
            raise ConfigError("lsi.thickness", "must be > 0")
        return cls(instance=instance, ell=float(ell), thickness=float(thickness))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class FlippedSpec:
    ell: float

    @classmethod
    def from_dict(cls: Type["FlippedSpec"], data: Any) -> "FlippedSpec":
        _check_fields(data, frozenset({"ell"}), "flipped")
        ell = data.get("ell")
        if not (isinstance(ell, (int, float)) and math.isfinite(ell) and ell >= 2):
            raise ConfigError("flipped.ell", "must be a number >= 2")
        return cls(ell=float(ell))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True, eq=False)
class ExperimentConfig:
    r"""A fully resolved experiment.

    Prior and measurement files are read at parse time and every default is
    filled in, so `to_dict` is self-contained and `config_hash` covers the
    values that actually ran.

    Attributes:
        name (str):
            Required. Experiment name; also the bundle directory name.
        kind (str):
            Required. `sampling`, `lsi` or `flipped-posterior`.
        prior (Optional[mixture_core.GaussianMixture]):
            Optional. The prior `p` of a sampling experiment.
        measurement (Optional[likelihood.QuadraticPotential]):
            Optional. The potential `R` of a sampling experiment.
        sampler (Optional[SamplerConfig]):
            Optional. Sampler knobs of a sampling experiment.
        diagnostics (DiagnosticsSpec):
            Optional. Diagnostics computed per batch.
        lsi (Optional[LsiSpec]):
            Optional. The log-Sobolev instance of an `lsi` experiment.
        flipped (Optional[FlippedSpec]):
            Optional. The instance of a `flipped-posterior` experiment.
        output_dir (Optional[str]):
            Optional. Output root. Not part of the config hash.
    """

    name: str
    kind: str = SAMPLING
    prior: Optional[mixture_core.GaussianMixture] = None
    measurement: Optional[likelihood.QuadraticPotential] = None
    sampler: Optional[SamplerConfig] = None
    diagnostics: DiagnosticsSpec = dataclasses.field(default_factory=DiagnosticsSpec)
    lsi: Optional[LsiSpec] = None
    flipped: Optional[FlippedSpec] = None
    output_dir: Optional[str] = None

    @classmethod
    def from_dict(
        cls: Type["ExperimentConfig"],
        data: Any,
        base_dir: Optional[str] = None,
        overrides: Optional[Overrides] = None,
    ) -> "ExperimentConfig":
        r"""Parses and validates a raw experiment dict.

        Args:
            data (Any):
                Required. The decoded JSON document.
            base_dir (Optional[str]):
                Optional. Directory against which relative `path` entries resolve.
            overrides (Optional[Overrides]):
                Optional. Command-line overrides.

        Raises:
            ConfigError: with the dotted path of the first invalid field.
            OSError: if a referenced prior or measurement file cannot be read.
        """
        _check_fields(data, _EXPERIMENT_FIELDS, "<root>")
        if overrides is not None:
            data = overrides.apply(data)

        name = data.get("name")
        if not (isinstance(name, str) and name.strip()):
            raise ConfigError("name", "must be a non-empty string")
        if os.sep in name or name in (".", ".."):
            raise ConfigError("name", "must not contain path separators")
        kind = data.get("kind", SAMPLING)
        if kind not in constants.EXPERIMENT_KINDS:
            raise ConfigError(
                "kind", f"must be one of {list(constants.EXPERIMENT_KINDS)}"
            )
        output_dir = data.get("output_dir")
        if output_dir is not None and not isinstance(output_dir, str):
            raise ConfigError("output_dir", "must be a string")

        values: Dict[str, Any] = {"name": name, "kind": kind, "output_dir": output_dir}
        if kind == SAMPLING:
            for field in ("lsi", "flipped"):
                if data.get(field) is not None:
                    raise ConfigError(field, f"not allowed for kind {kind!r}")
            if data.get("prior") is None:
                raise ConfigError("prior", "is required")
            if data.get("measurement") is None:
                raise ConfigError("measurement", "is required")
            prior = _resolve_prior(data["prior"], base_dir)
            measurement = _resolve_measurement(data["measurement"], base_dir)
            if prior.dim != measurement.dim:
                raise ConfigError(
                    "measurement",
                    f"dimension {measurement.dim} does not match prior dimension {prior.dim}",
                )
            sampler = data.get("sampler") or {}
            if not isinstance(sampler, dict):
                raise ConfigError("sampler", "must be a JSON object")
            values.update(
                prior=prior,
                measurement=measurement,
                sampler=SamplerConfig.from_dict(sampler),
                diagnostics=DiagnosticsSpec.from_dict(
                    data.get("diagnostics"), prior.dim
                ),
            )
        else:
            for field in ("prior", "measurement", "sampler", "diagnostics"):
                if data.get(field) is not None:
                    raise ConfigError(field, f"not allowed for kind {kind!r}")
            if kind == LSI:
                if data.get("lsi") is None:
                    raise ConfigError("lsi", "is required")
                values["lsi"] = LsiSpec.from_dict(data["lsi"])
            else:
                if data.get("flipped") is None:
                    raise ConfigError("flipped", "is required")
                values["flipped"] = FlippedSpec.from_dict(data["flipped"])
        return cls(**values)

    @classmethod
    def from_file(
        cls: Type["ExperimentConfig"],
        file_path: str,
        overrides: Optional[Overrides] = None,
    ) -> "ExperimentConfig":
        return cls.from_dict(
            _load_json(file_path),
            base_dir=os.path.dirname(os.path.abspath(file_path)),
            overrides=overrides,
        )

    def to_dict(self) -> dict:
        r"""Returns the resolved config. `output_dir` is left out."""
        data: Dict[str, Any] = {"name": self.name, "kind": self.kind}
        if self.kind == SAMPLING:
            data.update(
                prior=self.prior.to_dict(),
                measurement=self.measurement.to_dict(),
                sampler=self.sampler.to_dict(),
                diagnostics=self.diagnostics.to_dict(),
            )
        elif self.kind == LSI:
            data["lsi"] = self.lsi.to_dict()
        else:
            data["flipped"] = self.flipped.to_dict()
        return data

    @property
    def config_hash(self) -> str:
        return io_utilities.config_digest(self.to_dict())

    @property
    def seed(self) -> Optional[int]:
        return self.sampler.seed if self.sampler is not None else None


@dataclasses.dataclass(frozen=True)
class SuiteMember:
    r"""One suite entry; its source is resolved when the member runs.

    Attributes:
        label (str):
            Required. Row label in the suite summary.
        source (Dict[str, Any]):
            Required. One of `{"config": {...}}`, `{"path": ...}` or `{"preset": ...}`.
        seeds (Tuple[int, ...]):
            Optional. One run per seed; empty means the config's own seed.
        overrides (Dict[str, Any]):
            Optional. Nested values merged into the member config.
        base_dir (Optional[str]):
            Optional. Directory against which a relative `path` resolves.
    """

    label: str
    source: Dict[str, Any]
    seeds: Tuple[int, ...] = ()
    overrides: Dict[str, Any] = dataclasses.field(default_factory=dict)
    base_dir: Optional[str] = None

    def load(self) -> Tuple[dict, Optional[str]]:
        r"""Returns the raw member config with overrides merged, and its base dir."""
        base_dir = self.base_dir
        if "config" in self.source:
            data = self.source["config"]
        elif "preset" in self.source:
            data = presets.get_preset(self.source["preset"])
        else:
            path = _resolve_path(self.source["path"], base_dir)
            data = _load_json(path)
            base_dir = os.path.dirname(os.path.abspath(path))
        if not isinstance(data, dict):
            raise ConfigError(f"members.{self.label}", "config must be a JSON object")
        return _deep_merge(data, self.overrides), base_dir

    def runs(
        self, base_seed: Optional[int] = None
    ) -> List[Tuple[dict, Optional[str]]]:
        r"""Returns one raw config per seed, each renamed `<label>-seed<seed>`.

        Args:
            base_seed (Optional[int]):
                Optional. Offset added to every listed seed. A sampling member
                without a seed list runs with `base_seed` itself.
        """
        data, base_dir = self.load()
        if not self.seeds:
            if base_seed is not None and data.get("kind", SAMPLING) == SAMPLING:
                data = _deep_merge(data, {"sampler": {"seed": base_seed}})
            return [(data, base_dir)]
        runs = []
        for listed in self.seeds:
            seed = listed + (base_seed or 0)
            run = _deep_merge(data, {"sampler": {"seed": seed}})
            run["name"] = f"{self.label}-seed{seed}"
            runs.append((run, base_dir))
        return runs


@dataclasses.dataclass(frozen=True)
class SuiteConfig:
    r"""A list of experiments sharing an output root and a summary.

    Attributes:
        name (str):
            Required. Suite name; the member bundles live under `<root>/<name>/`.
        members (Tuple[SuiteMember, ...]):
            Required. At least one member.
        output_root (Optional[str]):
            Optional. Output root shared by every member.
        summary_kind (str):
            Optional. Divergence kind aggregated per member.
        group_by (str):
            Optional. Dotted config path reported as the grouping column.
    """

    name: str
    members: Tuple[SuiteMember, ...]
    output_root: Optional[str] = None
    summary_kind: str = "KL"
    group_by: str = "sampler.rate"

    @classmethod
    def from_dict(
        cls: Type["SuiteConfig"], data: Any, base_dir: Optional[str] = None
    ) -> "SuiteConfig":
        _check_fields(data, _SUITE_FIELDS, "<root>")
        name = data.get("name")
        if not (isinstance(name, str) and name.strip()):
            raise ConfigError("name", "must be a non-empty string")
        members_data = data.get("members") or []
        if not isinstance(members_data, list):
            raise ConfigError("members", "must be a list")
        if not members_data:
            raise ConfigError("members", "the suite is empty")

        members = []
        labels = set()
        for index, member in enumerate(members_data):
            field = f"members.{index}"
            _check_fields(
                member,
                frozenset(_MEMBER_SOURCES) | {"label", "seeds", "overrides"},
                field,
            )
            sources = [key for key in _MEMBER_SOURCES if key in member]
            if len(sources) != 1:
                raise ConfigError(
                    field, f"needs exactly one of {list(_MEMBER_SOURCES)}"
                )
            source = {sources[0]: member[sources[0]]}
            label = member.get("label") or _default_label(source, index)
            if label in labels:
                raise ConfigError(f"{field}.label", f"duplicate label {label!r}")
            labels.add(label)
            seeds = member.get("seeds", [])
            if not (
                isinstance(seeds, list)
                and all(isinstance(s, int) and 0 <= s < 2**64 for s in seeds)
            ):
                raise ConfigError(f"{field}.seeds", "must be a list of 64-bit seeds")
            overrides = member.get("overrides", {})
            if not isinstance(overrides, dict):
                raise ConfigError(f"{field}.overrides", "must be a JSON object")
            members.append(
                SuiteMember(
                    label=label,
                    source=source,
                    seeds=tuple(seeds),
                    overrides=overrides,
                    base_dir=base_dir,
                )
            )

        summary = data.get("summary") or {}
        _check_fields(summary, frozenset({"kind", "group_by"}), "summary")
        summary_kind = summary.get("kind", "KL")
        if summary_kind not in EMPIRICAL_DIVERGENCES:
            raise ConfigError(
                "summary.kind", f"must be one of {list(EMPIRICAL_DIVERGENCES)}"
            )
        output_root = data.get("output_root")
        if output_root is not None and not isinstance(output_root, str):
            raise ConfigError("output_root", "must be a string")
        return cls(
            name=name,
            members=tuple(members),
            output_root=output_root,
            summary_kind=summary_kind,
            group_by=summary.get("group_by", "sampler.rate"),
        )

    @classmethod
    def from_file(cls: Type["SuiteConfig"], file_path: str) -> "SuiteConfig":
        return cls.from_dict(
            _load_json(file_path), base_dir=os.path.dirname(os.path.abspath(file_path))
        )


def _default_label(source: Dict[str, Any], index: int) -> str:
    if "preset" in source:
        return str(source["preset"])
    if "path" in source:
        return os.path.splitext(os.path.basename(str(source["path"])))[0]
    config = source["config"]
    if isinstance(config, dict) and isinstance(config.get("name"), str):
        return config["name"]
    return f"member-{index}"


def lookup(data: dict, dotted: str) -> Any:
    r"""Returns `data[a][b]...` for `dotted = "a.b..."`, or None when absent."""
    value: Any = data
    for part in dotted.split("."):
        if not isinstance(value, dict) or part not in value:
            return None
        value = value[part]
    return value


def load_experiment(
    source: str, overrides: Optional[Overrides] = None
) -> ExperimentConfig:
    r"""Parses a config file, or a built-in preset when `source` names one."""
    if not os.path.exists(source) and source in presets.PRESETS:
        return ExperimentConfig.from_dict(
            presets.get_preset(source), overrides=overrides
        )
    return ExperimentConfig.from_file(source, overrides=overrides)


def load_suite(source: str) -> SuiteConfig:
    r"""Parses a suite file, or a built-in suite preset when `source` names one."""
    if not os.path.exists(source) and source in presets.SUITE_PRESETS:
        return SuiteConfig.from_dict(presets.get_suite_preset(source))
    return SuiteConfig.from_file(source)
