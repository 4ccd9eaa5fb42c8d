import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dime.errors import DegenerateAnchorError, RejectedInputError
from dime.harness import (
    StaircaseConfig,
    log_sigma_grid,
    relative_normalize,
    run_bandwidth_sweep,
    run_grid,
    run_staircase,
    sliding_stats,
    summarize_grid,
)
from dime.synthdata import true_mi

SMALL = dict(d=3, mi_levels=(0.5, 2.0), iterations_per_level=6, batch_size=24, window=4)


class TestStaircaseConfig:
    def test_defaults(self):
        cfg = StaircaseConfig()
        assert cfg.initial_sigma == pytest.approx(math.sqrt(20))
        assert cfg.total_iterations == 2500

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"mi_levels": ()},
            {"mi_levels": (4, 2)},
            {"mi_levels": (-1,)},
            {"iterations_per_level": 0},
            {"batch_size": 1},
            {"window": 0},
            {"permutations": 0},
            {"sigma_init": 0.0},
            {"alpha": 0.0},
            {"lr": -1.0},
            {"seed": -1},
            {"family": "cauchy"},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(RejectedInputError):
            StaircaseConfig(**kwargs)


class TestStaircase:
    def test_record_count_and_fields(self):
        cfg = StaircaseConfig(**SMALL)
        records = list(run_staircase(cfg))
        assert len(records) == cfg.total_iterations
        assert [r.iteration for r in records] == list(range(12))
        assert [r.level for r in records] == [0] * 6 + [1] * 6
        for r in records:
            assert r.true_mi == true_mi(cfg.d, r.rho)
            assert r.sigma_x == r.sigma_y == pytest.approx(math.sqrt(3))
        assert records[-1].true_mi == pytest.approx(2.0, abs=1e-12)

    def test_window_stats_match_sliding_stats(self):
        records = list(run_staircase(StaircaseConfig(**SMALL)))
        means, variances = sliding_stats(records, 4)
        np.testing.assert_allclose([r.window_mean for r in records], means, rtol=0, atol=1e-15)
        np.testing.assert_allclose([r.window_var for r in records], variances, rtol=0, atol=1e-15)

    def test_replay_is_exact(self):
        cfg = StaircaseConfig(**SMALL, optimize=True, lr=0.05)
        assert list(run_staircase(cfg)) == list(run_staircase(cfg))

    def test_seed_changes_output(self):
        a = list(run_staircase(StaircaseConfig(**SMALL, seed=1)))
        b = list(run_staircase(StaircaseConfig(**SMALL, seed=2)))
        assert a != b

    def test_optimize_moves_bandwidths(self):
        records = list(run_staircase(StaircaseConfig(**SMALL, optimize=True, lr=0.05)))
        assert records[0].sigma_x == pytest.approx(math.sqrt(3))
        assert records[-1].sigma_x != records[0].sigma_x
        assert records[-1].sigma_x != records[-1].sigma_y

    def test_tied_bandwidths(self):
        records = list(run_staircase(StaircaseConfig(**SMALL, optimize=True, lr=0.05, tie=True)))
        assert all(r.sigma_x == r.sigma_y for r in records)

    def test_matrix_mi_optional(self):
        records = list(run_staircase(StaircaseConfig(**SMALL, track_matrix_mi=False)))
        assert all(math.isnan(r.matrix_mi) for r in records)
        records = list(run_staircase(StaircaseConfig(**SMALL)))
        assert all(r.dime_value <= r.matrix_mi + 1e-9 for r in records)

    def test_independent_level_centres_on_zero(self):
        cfg = StaircaseConfig(d=5, mi_levels=(0.0,), iterations_per_level=60, batch_size=64, window=40)
        records = list(run_staircase(cfg))
        values = np.array([r.dime_value for r in records[20:]])
        assert all(r.rho == 0.0 and r.true_mi == 0.0 for r in records)
        assert abs(records[-1].window_mean) <= 3 * values.std(ddof=1) / math.sqrt(len(values))


class TestRelativeNormalize:
    def test_example(self):
        np.testing.assert_array_equal(relative_normalize([2, 2, 4, 4], (0, 2)), [1, 1, 2, 2])

    def test_constant(self):
        np.testing.assert_array_equal(relative_normalize([5.0] * 7, (3, 6)), np.ones(7))

    def test_records(self):
        records = list(run_staircase(StaircaseConfig(**SMALL)))
        out = relative_normalize(records, (6, 12))
        assert np.mean(out[6:12]) == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_anchor(self):
        with pytest.raises(DegenerateAnchorError):
            relative_normalize([0.0, 1e-13, 3.0], (0, 2))

    @pytest.mark.parametrize("anchor", [(0, 0), (2, 1), (-1, 2), (0, 5)])
    def test_bad_anchor(self, anchor):
        with pytest.raises(RejectedInputError):
            relative_normalize([1.0, 2.0, 3.0], anchor)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=60),
    st.data(),
)
def test_normalize_round_trip(values, data):
    start = data.draw(st.integers(0, len(values) - 1))
    end = data.draw(st.integers(start + 1, len(values)))
    ref = float(np.mean(values[start:end]))
    if abs(ref) <= 1e-6:
        return
    out = relative_normalize(values, (start, end))
    assert np.mean(out[start:end]) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(out * ref, values, rtol=1e-12, atol=1e-12 * max(1.0, abs(ref)))


class TestSlidingStats:
    def test_window_one(self):
        means, variances = sliding_stats([3.0, -1.0, 2.5], 1)
        np.testing.assert_array_equal(means, [3.0, -1.0, 2.5])
        np.testing.assert_array_equal(variances, [0.0, 0.0, 0.0])

    def test_constant(self):
        _, variances = sliding_stats([4.2] * 10, 3)
        np.testing.assert_array_equal(variances, np.zeros(10))

    def test_example(self):
        means, variances = sliding_stats([1, 2, 3], 2)
        np.testing.assert_allclose(means, [1, 1.5, 2.5], rtol=0, atol=1e-15)
        np.testing.assert_allclose(variances, [0, 0.25, 0.25], rtol=0, atol=1e-15)

    def test_rejects(self):
        with pytest.raises(RejectedInputError):
            sliding_stats([], 3)
        with pytest.raises(RejectedInputError):
            sliding_stats([1.0], 0)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=80))
    def test_full_window_is_global(self, values):
        means, variances = sliding_stats(values, len(values))
        scale = max(1.0, max(abs(v) for v in values))
        assert means[-1] == pytest.approx(np.mean(values), abs=1e-12 * scale)
        assert variances[-1] == pytest.approx(np.var(values), abs=1e-12 * scale * scale)


class TestSweep:
    def test_grid(self):
        grid = log_sigma_grid(20)
        assert grid.size == 20
        assert grid[0] == pytest.approx(1e-2 * math.sqrt(20))
        assert grid[-1] == pytest.approx(1e2 * math.sqrt(20))

    def test_small_sweep_shape(self):
        n = 64
        rows = run_bandwidth_sweep(d=4, n=n, target_mi=4.0, sigma_grid=log_sigma_grid(4, points=10))
        assert len(rows) == 10
        assert rows[0].matrix_mi == pytest.approx(math.log(n), abs=1e-2)
        assert rows[0].dime_value < 0.2 * max(r.dime_value for r in rows)
        assert rows[-1].dime_value < 0.2 * max(r.dime_value for r in rows)
        assert rows[-1].matrix_mi <= 0.05 * math.log(n)
        assert all(r.dime_value <= r.matrix_mi + 1e-9 for r in rows)

    def test_deterministic(self):
        kwargs = dict(d=3, n=24, sigma_grid=log_sigma_grid(3, points=10), seed=5)
        assert run_bandwidth_sweep(**kwargs) == run_bandwidth_sweep(**kwargs)

    @pytest.mark.parametrize(
        "grid",
        [np.geomspace(0.1, 10, 9), np.linspace(0.1, 10, 12), np.geomspace(10, 0.1, 12), np.r_[-1.0, np.geomspace(0.1, 10, 11)]],
    )
    def test_rejects_bad_grid(self, grid):
        with pytest.raises(RejectedInputError):
            run_bandwidth_sweep(d=2, n=8, sigma_grid=grid)


class TestGrid:
    def test_rows_and_summary(self):
        rows = run_grid(batch_sizes=(16, 32), dims=(2, 6), iterations=3, repeats=2)
        assert len(rows) == 2 * 2 * 2 * 2
        assert [(r.n, r.d, r.mode, r.repeat) for r in rows][:4] == [
            (16, 2, "fixed", 0),
            (16, 2, "fixed", 1),
            (16, 2, "learned", 0),
            (16, 2, "learned", 1),
        ]
        for r in rows:
            assert r.rho == pytest.approx(math.sqrt(-math.expm1(-20 / r.d)))
            if r.mode == "fixed":
                assert r.sigma_x == r.sigma_y == pytest.approx(math.sqrt(r.d / 2))
        summary = summarize_grid(rows)
        assert len(summary) == 8 and all(s.repeats == 2 for s in summary)
        first = summary[0]
        assert first.dime_mean == pytest.approx(np.mean([rows[0].dime_mean, rows[1].dime_mean]))

    def test_modes_share_batches(self):
        rows = run_grid(batch_sizes=(16,), dims=(3,), iterations=1, repeats=1)
        fixed, learned = rows
        # the first value is computed before any bandwidth update
        assert fixed.dime_mean == learned.dime_mean

    def test_deterministic(self):
        kwargs = dict(batch_sizes=(12,), dims=(2,), iterations=2, repeats=2, seed=3)
        assert run_grid(**kwargs) == run_grid(**kwargs)

    @pytest.mark.parametrize(
        "kwargs",
        [{"batch_sizes": ()}, {"dims": ()}, {"modes": ("other",)}, {"batch_sizes": (1,)}, {"iterations": 0}],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(RejectedInputError):
            run_grid(**kwargs)
