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

import numpy as np
import pytest

from google.cloud.langevin_toolbox.samplers.streams import ChainStreams


def test_blocks_cover_all_chains():
    streams = ChainStreams(seed=1, block_size=4)

    actual = streams.blocks(10)

    assert actual == [(0, 0, 4), (1, 4, 8), (2, 8, 10)]


def test_generator_is_deterministic():
    first = ChainStreams(seed=7).generator(0, 3).standard_normal(5)
    second = ChainStreams(seed=7).generator(0, 3).standard_normal(5)

    np.testing.assert_array_equal(first, second)


def test_phases_and_blocks_are_distinct_streams():
    streams = ChainStreams(seed=7)
    base = streams.generator(0, 0).standard_normal(5)

    assert not np.array_equal(base, streams.generator(1, 0).standard_normal(5))
    assert not np.array_equal(base, streams.generator(0, 1).standard_normal(5))
    assert not np.array_equal(
        base, ChainStreams(seed=8).generator(0, 0).standard_normal(5)
    )


def test_block_normals_shape():
    normals = ChainStreams(seed=2, block_size=3).block_generators(0, 7)

    actual = normals.standard_normal(2, leading=(4,))

    assert actual.shape == (4, 7, 2)


def test_chain_rows_depend_only_on_their_block():
    small = ChainStreams(seed=5, block_size=4).block_generators(1, 4)
    large = ChainStreams(seed=5, block_size=4).block_generators(1, 10)

    np.testing.assert_array_equal(
        small.standard_normal(3), large.standard_normal(3)[:4]
    )


def test_draws_fixed_for_a_chain_count():
    first = ChainStreams(seed=5, block_size=4).block_generators(0, 6)
    second = ChainStreams(seed=5, block_size=4).block_generators(0, 6)
    wider = ChainStreams(seed=5, block_size=4).block_generators(0, 7)

    for _ in range(2):
        expected = first.standard_normal(1)
        np.testing.assert_array_equal(second.standard_normal(1), expected)
        widened = wider.standard_normal(1)
    np.testing.assert_array_equal(widened[:4], expected[:4])
    assert not np.array_equal(widened[4:6], expected[4:6])


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ValueError, match="64-bit"):
        ChainStreams(seed=seed)


def test_block_size_must_be_positive():
    with pytest.raises(ValueError, match="block_size"):
        ChainStreams(seed=0, block_size=0)
