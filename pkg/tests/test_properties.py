"""Property-based checks for the parsing, scoring, and executor layers."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

import reference as ref
from hintrelic.config import parse_seed_list, parse_sizes
from hintrelic.executors import execute
from hintrelic.features import FeatureSpec, Kind, Location, Stage
from hintrelic.instances import make_array_instance
from hintrelic.metrics import mean_stderr, micro_f1

POINTER = FeatureSpec("p", Stage.OUTPUT, Location.NODE, Kind.POINTER)


class TestParserProperties:
    @given(st.lists(st.integers(1, 16), min_size=1, max_size=6))
    def test_size_list_round_trips(self, sizes):
        assert parse_sizes(",".join(str(s) for s in sizes)) == tuple(sizes)

    @given(st.integers(1, 16), st.integers(0, 8))
    def test_size_range_is_inclusive(self, lo, span):
        got = parse_sizes(f"{lo}..{lo + span}")
        assert got == tuple(range(lo, lo + span + 1))
        assert len(got) == span + 1

    @given(st.lists(st.integers(0, 10**6), min_size=0, max_size=8))
    def test_seed_list_round_trips(self, seeds):
        assert parse_seed_list(",".join(str(s) for s in seeds)) == tuple(seeds)


class TestMetricProperties:
    @given(
        st.integers(2, 8),
        st.integers(0, 2**32 - 1),
    )
    def test_micro_f1_bounded_and_exact_at_match(self, n, seed):
        rng = np.random.default_rng(seed)
        true = [{"p": rng.integers(0, n, n)}]
        pred = [{"p": rng.integers(0, n, n)}]
        score = micro_f1((POINTER,), pred, true)
        assert 0.0 <= score <= 1.0
        assert micro_f1((POINTER,), true, true) == 1.0

    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=10))
    def test_mean_stderr_bounds(self, values):
        mean, stderr = mean_stderr(values)
        assert min(values) - 1e-12 <= mean <= max(values) + 1e-12
        assert stderr >= 0.0


class TestSortingExecutorProperty:
    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.integers(-(10**6), 10**6), min_size=1, max_size=8, unique=True
        )
    )
    def test_insertion_sort_chain_sorts_any_distinct_keys(self, keys):
        # keys the random sampler would never produce still sort correctly
        inst = make_array_instance("insertion_sort", [float(k) for k in keys])
        order = ref.chain_to_order(execute(inst).outputs["pred"])
        assert [keys[i] for i in order] == sorted(keys)
