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
"""Warm-start and annealed Langevin Monte Carlo over the tilted posterior path."""

import dataclasses
import logging
import math
import time
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Type

import numpy as np
import pandas as pd
from tqdm import tqdm

from google.cloud.langevin_toolbox import constants
from google.cloud.langevin_toolbox.exceptions import (
    ConfigError,
    DimensionMismatchError,
    NumericalBlowupError,
)
from google.cloud.langevin_toolbox.samplers.streams import ChainStreams
from google.cloud.langevin_toolbox.utilities import io_utilities
from google.cloud.langevin_toolbox.wrappers import likelihood, mixture_core

_LOGGER = logging.getLogger(__name__)

_TIME_SLACK = 1e-12


def _field(name: str) -> str:
    return f"sampler.{name}"


@dataclasses.dataclass(frozen=True)
class SamplerConfig:
    r"""All knobs of the two-phase sampler.

    Unset `step_size`, `stop_time` and `warm_start_step` take their coupled
    defaults: `δ = κ^{-1/4}`, `τ = (T_ws κ/δ)^{3/4} δ/κ` and a warm-start step
    `ε²/(β κ_c d)` computed from the potential at run time.

    Attributes:
        warm_up_iters (int):
            Optional. Warm-start LMC iterations `T`.
        warm_start_time (float):
            Optional. Target-time `T_ws` at which annealing starts.
        rate (float):
            Optional. Slow-down factor `κ >= 1`.
        step_size (Optional[float]):
            Optional. Annealing step `δ > 0`.
        stop_time (Optional[float]):
            Optional. Target-time `τ` at which annealing halts.
        chains (int):
            Optional. Number of independent chains.
        seed (int):
            Optional. 64-bit unsigned seed.
        checkpoint_times (Tuple[float, ...]):
            Optional. Target-times in `[τ, T_ws]` at which batches are emitted.
        warm_start_step (Optional[float]):
            Optional. Warm-start LMC step size.
        checkpoint_mode (str):
            Optional. `snapshot` or `averaged`.
        averaging_points (int):
            Optional. Bridge points per chain pooled by an averaged checkpoint.
        diagnostics (bool):
            Optional. Whether divergence diagnostics will be requested. Requires `τ > 0`.
        fisher_window (bool):
            Optional. Add checkpoints spread over the iteration window
            `[N^α, 2N^α]` with `N = T_ws κ/δ`.
        fisher_window_alpha (float):
            Optional. Exponent `α` of the window.
        fisher_window_count (int):
            Optional. Number of window checkpoints.
    """
    warm_up_iters: int = 1000
    warm_start_time: float = 2.0
    rate: float = 1.0
    step_size: Optional[float] = None
    stop_time: Optional[float] = None
    chains: int = 1000
    seed: int = 0
    checkpoint_times: Tuple[float, ...] = ()
    warm_start_step: Optional[float] = None
    checkpoint_mode: str = "snapshot"
    averaging_points: int = constants.DEFAULT_AVERAGING_POINTS
    diagnostics: bool = True
    fisher_window: bool = False
    fisher_window_alpha: float = 0.75
    fisher_window_count: int = 5

    def __post_init__(self):
        if not (isinstance(self.warm_up_iters, int) and self.warm_up_iters >= 1):
            raise ConfigError(_field("warm_up_iters"), "must be an integer >= 1")
        if not (math.isfinite(self.warm_start_time) and self.warm_start_time > 0):
            raise ConfigError(_field("warm_start_time"), "must be > 0")
        if not (math.isfinite(self.rate) and self.rate >= 1):
            raise ConfigError(_field("rate"), "must be >= 1")
        if not (isinstance(self.chains, int) and self.chains >= 1):
            raise ConfigError(_field("chains"), "must be a positive integer")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ConfigError(_field("seed"), "must be a 64-bit unsigned integer")
        if self.checkpoint_mode not in constants.CHECKPOINT_MODES:
            raise ConfigError(
                _field("checkpoint_mode"),
                f"must be one of {sorted(constants.CHECKPOINT_MODES)}",
            )
        if self.averaging_points < 1:
            raise ConfigError(_field("averaging_points"), "must be >= 1")
        if self.warm_start_step is not None and not self.warm_start_step > 0:
            raise ConfigError(_field("warm_start_step"), "must be > 0")

        step_size = self.step_size
        if step_size is None:
            step_size = self.rate ** (-0.25)
        if not (math.isfinite(step_size) and step_size > 0):
            raise ConfigError(_field("step_size"), "must be > 0")
        object.__setattr__(self, "step_size", float(step_size))

        if self.total_iterations < 1:
            raise ConfigError(
                _field("warm_start_time"),
                "T_ws * rate / step_size must be at least one annealing iteration",
            )

        stop_time = self.stop_time
        if stop_time is None:
            stop_time = self.total_iterations**0.75 * self.step_size / self.rate
        if not (math.isfinite(stop_time) and 0 <= stop_time <= self.warm_start_time):
            raise ConfigError(_field("stop_time"), "must lie in [0, warm_start_time]")
        if self.diagnostics and stop_time <= 0:
            raise ConfigError(
                _field("stop_time"),
                "must be > 0 when diagnostics are requested; the bounds diverge at 0",
            )
        object.__setattr__(self, "stop_time", float(stop_time))

        checkpoints = set(float(c) for c in self.checkpoint_times)
        for checkpoint in checkpoints:
            if not (
                self.stop_time - _TIME_SLACK
                <= checkpoint
                <= self.warm_start_time + _TIME_SLACK
            ):
                raise ConfigError(
                    _field("checkpoint_times"),
                    f"{checkpoint} lies outside [{self.stop_time}, {self.warm_start_time}]",
                )
        if self.fisher_window:
            checkpoints.update(fisher_window_times(self))
        object.__setattr__(self, "checkpoint_times", tuple(sorted(checkpoints)))

    @classmethod
    def from_dict(cls: Type["SamplerConfig"], data: dict) -> "SamplerConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(_field(unknown[0]), "unknown field")
        values = dict(data)
        if "checkpoint_times" in values:
            values["checkpoint_times"] = tuple(values["checkpoint_times"])
        try:
            return cls(**values)
        except TypeError as e:
            raise ConfigError("sampler", str(e)) from e

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["checkpoint_times"] = list(self.checkpoint_times)
        return data

    def config_hash(self) -> str:
        return io_utilities.config_digest(self.to_dict())

    @property
    def total_iterations(self) -> int:
        r"""Index `N_ws = round(T_ws κ/δ)` of the first annealing iterate."""
        return int(round(self.warm_start_time * self.rate / self.step_size))

    @property
    def stop_index(self) -> int:
        r"""Index `N_τ = round(τ κ/δ)` of the final annealing iterate."""
        return int(round(self.stop_time * self.rate / self.step_size))

    @property
    def annealing_iterations(self) -> int:
        return self.total_iterations - self.stop_index

    def index_time(self, index: int) -> float:
        r"""Target-time `i δ/κ` of iterate `i`."""
        return index * self.step_size / self.rate

    def checkpoint_indices(self) -> List[int]:
        indices = {
            min(
                self.total_iterations,
                max(self.stop_index, int(round(c * self.rate / self.step_size))),
            )
            for c in self.checkpoint_times
        }
        return sorted(indices, reverse=True)

    def resolve_warm_start_step(self, R: likelihood.QuadraticPotential) -> float:
        r"""Returns the warm-start step, defaulting to `ε²/(β κ_c d)`.

        `β = 1 + λ_max(AᵀA/σ²)` and `κ_c = β/(1 + λ_min(AᵀA/σ²))` are the
        smoothness and condition number of `½‖x‖² + R(x)`, and `ε = 0.1`.
        """
        if self.warm_start_step is not None:
            return float(self.warm_start_step)
        lower, upper = likelihood.curvature_bounds(R)
        smoothness = 1.0 + upper
        condition = smoothness / (1.0 + lower)
        return constants.DEFAULT_WARM_START_ACCURACY**2 / (
            smoothness * condition * R.dim
        )


def fisher_window_times(cfg: SamplerConfig) -> Tuple[float, ...]:
    r"""Returns checkpoint target-times spread over `[N^α, 2N^α]`, `N = T_ws κ/δ`.

    Times outside `[τ, T_ws]` are dropped.
    """
    n = cfg.warm_start_time * cfg.rate / cfg.step_size
    low = n**cfg.fisher_window_alpha
    indices = np.unique(
        np.round(np.linspace(low, 2.0 * low, cfg.fisher_window_count)).astype(int)
    )
    times = [cfg.index_time(int(i)) for i in indices]
    return tuple(
        t
        for t in times
        if cfg.stop_time - _TIME_SLACK <= t <= cfg.warm_start_time + _TIME_SLACK
    )


@dataclasses.dataclass(eq=False)
class ChainState:
    r"""Position of one chain and the target it currently tracks.

    Attributes:
        position (np.ndarray):
            Required. Current iterate of shape `(d,)`.
        algorithm_iter (int):
            Required. Annealing index `i` of the iterate.
        target_time (float):
            Required. Target-time `i δ/κ`.
    """
    position: np.ndarray
    algorithm_iter: int
    target_time: float


@dataclasses.dataclass(eq=False)
class SampleBatch:
    r"""Multi-chain samples recorded at one target-time.

    Attributes:
        samples (np.ndarray):
            Required. Shape `(n, d)`.
        target_time (float):
            Required. Target-time of the recorded iterate.
        algorithm_iter (int):
            Required. Annealing index of the recorded iterate.
        config_hash (str):
            Required. Digest of the config that produced the batch.
        seed (int):
            Required. Seed of the run.
        mode (str):
            Optional. `snapshot`, `averaged` or `final`.
    """
    samples: np.ndarray
    target_time: float
    algorithm_iter: int
    config_hash: str
    seed: int
    mode: str = "snapshot"

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2:
            raise DimensionMismatchError(
                f"samples must have shape (n, d), got {samples.shape}."
            )
        self.samples = samples

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]

    def header(self) -> Dict[str, str]:
        return {
            "config_hash": self.config_hash,
            "seed": str(self.seed),
            "target_time": repr(float(self.target_time)),
            "algorithm_iter": str(self.algorithm_iter),
            "mode": self.mode,
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            self.samples, columns=[f"x_{i + 1}" for i in range(self.dim)]
        )

    def to_csv(self, file_path: str) -> None:
        io_utilities.write_csv(file_path, self.to_frame(), header=self.header())

    @classmethod
    def from_csv(cls: Type["SampleBatch"], file_path: str) -> "SampleBatch":
        header, frame = io_utilities.read_csv(file_path)
        return cls(
            samples=frame.to_numpy(dtype=float),
            target_time=float(header["target_time"]),
            algorithm_iter=int(header["algorithm_iter"]),
            config_hash=header["config_hash"],
            seed=int(header["seed"]),
            mode=header.get("mode", "snapshot"),
        )


@dataclasses.dataclass
class SamplerRun:
    r"""Output of `run_algorithm`; unpacks as `(final, checkpoints)`."""

    final: SampleBatch
    checkpoints: List[SampleBatch]
    metadata: Dict[str, Dict[str, float]]

    def __iter__(self) -> Iterator:
        return iter((self.final, self.checkpoints))


def lmc_step(
    x: np.ndarray,
    drift: np.ndarray,
    delta: float,
    noise: np.ndarray,
    iteration: Optional[int] = None,
) -> np.ndarray:
    r"""Returns `x + δ·drift + √(2δ)·noise`.

    Args:
        x (np.ndarray):
            Required. Current iterate or a batch of iterates.
        drift (np.ndarray):
            Required. Drift evaluated at `x`.
        delta (float):
            Required. Step size.
        noise (np.ndarray):
            Required. Standard normal draws shaped like `x`.
        iteration (Optional[int]):
            Optional. Iterate index reported on failure.

    Raises:
        NumericalBlowupError: if the drift is not finite.
    """
    drift = np.asarray(drift, dtype=float)
    finite = np.isfinite(drift)
    if not finite.all():
        chain = None
        if drift.ndim == 2:
            chain = int(np.flatnonzero(~finite.all(axis=1))[0])
        raise NumericalBlowupError(
            f"Non-finite drift at iteration {iteration}.",
            iteration=iteration if iteration is not None else -1,
            chain=chain,
        )
    return x + delta * drift + math.sqrt(2.0 * delta) * noise


def _guard(x: np.ndarray, phase: str, iteration: int) -> None:
    bad = ~(np.abs(x) <= constants.BLOWUP_LIMIT).all(axis=1)
    if bad.any():
        chain = int(np.flatnonzero(bad)[0])
        raise NumericalBlowupError(
            f"Chain {chain} left the blowup limit {constants.BLOWUP_LIMIT:g} "
            f"during {phase} at iteration {iteration}.",
            iteration=iteration,
            phase=phase,
            chain=chain,
        )


def _stack_positions(chains: Sequence[ChainState]) -> np.ndarray:
    return np.stack([np.asarray(chain.position, dtype=float) for chain in chains])


def warm_start(
    R: likelihood.QuadraticPotential,
    cfg: SamplerConfig,
    rng: Optional[ChainStreams] = None,
    progress: bool = False,
) -> List[ChainState]:
    r"""Runs LMC toward `μ_∞ ∝ γ e^{-R}` from standard Gaussian draws.

    Args:
        R (likelihood.QuadraticPotential):
            Required. The measurement potential.
        cfg (SamplerConfig):
            Required. Sampler config; uses `chains`, `warm_up_iters` and the
            warm-start step.
        rng (Optional[ChainStreams]):
            Optional. Chain streams, derived from `cfg.seed` when omitted.
        progress (bool):
            Optional. Show a progress bar.

    Returns:
        List[ChainState]:
            One state per chain, positioned at target-time `T_ws`.
    """
    streams = rng or ChainStreams(cfg.seed)
    normals = streams.block_generators(constants.PHASE_WARM_START, cfg.chains)
    step = cfg.resolve_warm_start_step(R)
    _LOGGER.info(
        "Warm start: %d chains, %d iterations, step %.6g.",
        cfg.chains,
        cfg.warm_up_iters,
        step,
    )

    x = normals.standard_normal(R.dim)
    for iteration in tqdm(
        range(1, cfg.warm_up_iters + 1), desc="warm start", disable=not progress
    ):
        drift = -x - likelihood.grad_potential(R, x)
        try:
            x = lmc_step(x, drift, step, normals.standard_normal(R.dim), iteration)
        except NumericalBlowupError as e:
            e.phase = "warm_start"
            raise
        _guard(x, "warm_start", iteration)

    return [
        ChainState(
            position=position,
            algorithm_iter=cfg.total_iterations,
            target_time=cfg.warm_start_time,
        )
        for position in x
    ]


def _bridge_points(
    x: np.ndarray,
    drift: np.ndarray,
    noise: np.ndarray,
    delta: float,
    bridge_noise: np.ndarray,
) -> np.ndarray:
    r"""Returns Brownian-bridge interpolants of one step, chain-major `(n·P, d)`.

    The step's Brownian increment is `√δ·noise`; point `k` sits at fraction
    `u_k = (k + ½)/P` of the step.
    """
    points = bridge_noise.shape[0]
    fractions = (np.arange(points) + 0.5) / points
    increment = math.sqrt(delta) * noise
    pooled = np.stack(
        [
            x
            + u * delta * drift
            + math.sqrt(2.0)
            * (u * increment + math.sqrt(u * (1.0 - u) * delta) * bridge_noise[k])
            for k, u in enumerate(fractions)
        ],
        axis=1,
    )
    return pooled.reshape(-1, x.shape[1])


def anneal(
    chains: Sequence[ChainState],
    prior: mixture_core.GaussianMixture,
    R: likelihood.QuadraticPotential,
    cfg: SamplerConfig,
    rng: Optional[ChainStreams] = None,
    config_hash: Optional[str] = None,
    progress: bool = False,
) -> List[SampleBatch]:
    r"""Tracks `μ_t ∝ p_t e^{-R}` from `T_ws` down to `τ`.

    Iterate `i` moves to `i − 1` with drift `∇log p_{iδ/κ} − ∇R`.

    Args:
        chains (Sequence[ChainState]):
            Required. Warm-started chains at target-time `T_ws`.
        prior (mixture_core.GaussianMixture):
            Required. The prior `p`.
        R (likelihood.QuadraticPotential):
            Required. The measurement potential.
        cfg (SamplerConfig):
            Required. Sampler config.
        rng (Optional[ChainStreams]):
            Optional. Chain streams, derived from `cfg.seed` when omitted.
        config_hash (Optional[str]):
            Optional. Digest stamped on the batches. Defaults to `cfg.config_hash()`.
        progress (bool):
            Optional. Show a progress bar.

    Returns:
        List[SampleBatch]:
            Checkpoint batches in emission order (decreasing target-time),
            followed by the final batch at `τ`.
    """
    if prior.dim != R.dim:
        raise DimensionMismatchError(
            f"Prior dim {prior.dim} does not match potential dim {R.dim}."
        )
    if any(
        abs(chain.target_time - cfg.warm_start_time) > _TIME_SLACK for chain in chains
    ):
        raise ValueError("All chains must be positioned at target-time T_ws.")
    if len(chains) != cfg.chains:
        raise ValueError(f"Expected {cfg.chains} chains, got {len(chains)}.")

    streams = rng or ChainStreams(cfg.seed)
    normals = streams.block_generators(constants.PHASE_ANNEAL, cfg.chains)
    bridge_normals = streams.block_generators(constants.PHASE_AVERAGING, cfg.chains)
    config_hash = config_hash or cfg.config_hash()
    delta = cfg.step_size
    checkpoints = set(cfg.checkpoint_indices())
    first, last = cfg.total_iterations, cfg.stop_index

    def batch(samples: np.ndarray, index: int, mode: str) -> SampleBatch:
        return SampleBatch(
            samples=samples,
            target_time=cfg.index_time(index),
            algorithm_iter=index,
            config_hash=config_hash,
            seed=cfg.seed,
            mode=mode,
        )

    _LOGGER.info(
        "Annealing: %d chains, iterations %d -> %d, step %.6g, rate %.6g.",
        cfg.chains,
        first,
        last,
        delta,
        cfg.rate,
    )
    x = _stack_positions(chains)
    batches: List[SampleBatch] = []
    if first in checkpoints:
        batches.append(batch(x.copy(), first, "snapshot"))

    for index in tqdm(range(first, last, -1), desc="annealing", disable=not progress):
        smoothed = mixture_core.ou_smooth(prior, cfg.index_time(index))
        drift = mixture_core.score(smoothed, x) - likelihood.grad_potential(R, x)
        noise = normals.standard_normal(R.dim)
        try:
            x_next = lmc_step(x, drift, delta, noise, index)
        except NumericalBlowupError as e:
            e.phase = "anneal"
            raise
        _guard(x_next, "anneal", index - 1)

        if index - 1 in checkpoints:
            if cfg.checkpoint_mode == "averaged":
                pooled = _bridge_points(
                    x,
                    drift,
                    noise,
                    delta,
                    bridge_normals.standard_normal(R.dim, (cfg.averaging_points,)),
                )
                batches.append(batch(pooled, index - 1, "averaged"))
            else:
                batches.append(batch(x_next.copy(), index - 1, "snapshot"))
            _LOGGER.debug("Checkpoint at target-time %.6g.", cfg.index_time(index - 1))
        x = x_next

    batches.append(batch(x, last, "final"))
    return batches


def run_algorithm(
    prior: mixture_core.GaussianMixture,
    R: likelihood.QuadraticPotential,
    cfg: SamplerConfig,
    config_hash: Optional[str] = None,
    progress: bool = False,
) -> SamplerRun:
    r"""Runs the warm start followed by annealing.

    Returns:
        SamplerRun:
            The final batch at `τ`, the checkpoint batches and per-phase
            iteration counts and wall-clock seconds.
    """
    if prior.dim != R.dim:
        raise DimensionMismatchError(
            f"Prior dim {prior.dim} does not match potential dim {R.dim}."
        )
    streams = ChainStreams(cfg.seed)

    started = time.perf_counter()
    chains = warm_start(R, cfg, streams, progress=progress)
    warm_seconds = time.perf_counter() - started

    started = time.perf_counter()
    batches = anneal(chains, prior, R, cfg, streams, config_hash, progress=progress)
    anneal_seconds = time.perf_counter() - started

    metadata = {
        "warm_start": {
            "iterations": cfg.warm_up_iters,
            "step_size": cfg.resolve_warm_start_step(R),
            "seconds": warm_seconds,
        },
        "anneal": {
            "iterations": cfg.annealing_iterations,
            "first_index": cfg.total_iterations,
            "last_index": cfg.stop_index,
            "seconds": anneal_seconds,
        },
    }
    return SamplerRun(final=batches[-1], checkpoints=batches[:-1], metadata=metadata)
