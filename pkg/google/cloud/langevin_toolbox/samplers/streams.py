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
"""Counter-based random streams for blocks of Langevin chains."""

import dataclasses
from typing import List, Tuple

import numpy as np

from google.cloud.langevin_toolbox import constants

_MAX_SEED = 2**64


@dataclasses.dataclass(frozen=True)
class ChainStreams:
    r"""Splits one seed into independent Philox streams per chain block.

    Chains are grouped into fixed-size blocks. Block `b` in phase `p` draws from
    `Philox(SeedSequence(seed, spawn_key=(p, b)))`. The draws are fixed for a given
    seed and chain count however the blocks are scheduled. Changing the chain
    count changes the draws of every chain in the last, partial block.

    Attributes:
        seed (int):
            Required. A 64-bit unsigned seed.
        block_size (int):
            Optional. Chains per block.
    """
    seed: int
    block_size: int = constants.CHAIN_BLOCK_SIZE

    def __post_init__(self):
        if not 0 <= int(self.seed) < _MAX_SEED:
            raise ValueError(
                f"seed must be a 64-bit unsigned integer, got {self.seed}."
            )
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1.")

    def blocks(self, chains: int) -> List[Tuple[int, int, int]]:
        r"""Returns `(block, start, stop)` chain ranges covering `chains` chains."""
        return [
            (block, start, min(start + self.block_size, chains))
            for block, start in enumerate(range(0, chains, self.block_size))
        ]

    def generator(self, phase: int, block: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(int(self.seed), spawn_key=(phase, block))
        return np.random.Generator(np.random.Philox(sequence))

    def block_generators(self, phase: int, chains: int) -> "BlockNormals":
        return BlockNormals(
            generators=[self.generator(phase, b) for b, _, _ in self.blocks(chains)],
            sizes=[stop - start for _, start, stop in self.blocks(chains)],
        )


@dataclasses.dataclass
class BlockNormals:
    r"""Draws standard normals for all chains, one generator per block."""

    generators: List[np.random.Generator]
    sizes: List[int]

    def standard_normal(self, dim: int, leading: Tuple[int, ...] = ()) -> np.ndarray:
        r"""Returns normals of shape `leading + (chains, dim)`.

        Each block fills its own chain rows, so row `i` only depends on the
        stream of the block that owns chain `i`.
        """
        parts = [
            generator.standard_normal(leading + (size, dim))
            for generator, size in zip(self.generators, self.sizes)
        ]
        return np.concatenate(parts, axis=len(leading))
