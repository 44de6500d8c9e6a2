from __future__ import annotations

import pytest

from sceneforge.rng import SplitMix64, derive_seed


class TestSplitMix64:
    def test_reference_vector(self):
        # Known-answer outputs for seed 0; any reimplementation in another
        # language must reproduce these exactly.
        rng = SplitMix64(0)
        assert [rng.next_u64() for _ in range(3)] == [
            0xE220A8397B1DCDAF,
            0x6E789E6AA1B965F4,
            0x06C45D188009454F,
        ]

    def test_streams_are_reproducible(self):
        a = SplitMix64(1234567)
        b = SplitMix64(1234567)
        assert [a.below(10) for _ in range(20)] == [b.below(10) for _ in range(20)]

    def test_uniform_range(self):
        rng = SplitMix64(9)
        values = [rng.uniform() for _ in range(1000)]
        assert all(0.0 <= v < 1.0 for v in values)
        assert 0.4 < sum(values) / len(values) < 0.6

    def test_below_bounds(self):
        rng = SplitMix64(3)
        assert all(0 <= rng.below(7) < 7 for _ in range(200))
        with pytest.raises(ValueError):
            rng.below(0)

    def test_shuffle_is_permutation(self):
        rng = SplitMix64(5)
        items = list(range(50))
        shuffled = list(items)
        rng.shuffle(shuffled)
        assert sorted(shuffled) == items
        assert shuffled != items  # astronomically unlikely to be identity

    def test_sample_distinct(self):
        rng = SplitMix64(8)
        picked = rng.sample(list(range(30)), 10)
        assert len(picked) == len(set(picked)) == 10
        with pytest.raises(ValueError):
            rng.sample([1, 2], 3)


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(1, "scene", 5) == derive_seed(1, "scene", 5)

    def test_parts_matter(self):
        assert derive_seed(1, "a") != derive_seed(1, "b")
        assert derive_seed(1, "a", 0) != derive_seed(1, "a", 1)
        assert derive_seed(1, "a") != derive_seed(2, "a")
