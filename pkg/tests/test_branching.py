#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# IMPORTS #############################################################################################################

from math import exp

import numpy as np

import pytest

from branching import (
	HORIZON_POINTS, CTBranchParams, catastrophe_survival, check_lineage, many_to_one_check_ct, many_to_one_check_dt,
	many_to_one_dt_exact, offspring_boxes, simulate_brw_ct, simulate_brw_dt, survival_experiment_ct,
	survival_experiment_dt,
)

from envlat import EnvSpec, Mark, MarkSet, OffspringSpec, sample_mark_set, sample_offspring_field

from increments import IncrementDist, lazy_srw, srw

from model import InvalidParameter

from replicas import run_replicas


# FIXTURES ############################################################################################################


@pytest.fixture
def mixed() -> OffspringSpec:
	return OffspringSpec((((0.5, 0.0, 0.5), 0.5), ((0.2, 0.3, 0.5), 0.5)))


@pytest.fixture
def marks() -> MarkSet:
	return MarkSet(2.0, 4, [
		Mark(0.3, (0,), -1.0), Mark(0.7, (1,), -0.5), Mark(1.1, (-1,), -1.0), Mark(1.6, (0,), -0.25),
	])


# TESTS ###############################################################################################################


class TestDiscreteTime:
	def test_single_descendant(self):
		eta = sample_offspring_field(OffspringSpec.deterministic(1), 5, offspring_boxes(srw(), 5), 0)
		state = simulate_brw_dt(eta, srw(), seed=1)

		assert state.totals == [1] * 6
		assert not state.extinct

	def test_extinction(self):
		eta = sample_offspring_field(OffspringSpec.deterministic(0), 4, offspring_boxes(srw(), 4), 0)
		state = simulate_brw_dt(eta, srw(), seed=1)

		assert state.extinct
		assert state.totals == [1, 0, 0, 0, 0]

	def test_binary_splitting_in_place(self):
		walk = IncrementDist.dirac(0)
		eta = sample_offspring_field(OffspringSpec.deterministic(2), 6, offspring_boxes(walk, 6), 0)
		state = simulate_brw_dt(eta, walk, seed=2)

		assert state.counts == {(0,): 64}
		assert state.totals == [2**s for s in range(7)]

	def test_population_cap(self):
		walk = IncrementDist.dirac(0)
		eta = sample_offspring_field(OffspringSpec.deterministic(2), 6, offspring_boxes(walk, 6), 0)
		state = simulate_brw_dt(eta, walk, seed=2, population_cap=10)

		assert state.capped
		assert not state.extinct
		assert state.generation == 4

	def test_horizon(self):
		eta = sample_offspring_field(OffspringSpec.deterministic(1), 2, offspring_boxes(srw(), 2), 0)

		with pytest.raises(InvalidParameter):
			simulate_brw_dt(eta, srw(), 3)


class TestManyToOne:
	def test_deterministic_offspring(self):
		eta = sample_offspring_field(OffspringSpec.deterministic(2), 3, offspring_boxes(srw(), 3), 0)

		assert many_to_one_dt_exact(eta, srw(), 3) == pytest.approx(8.0)

		report = many_to_one_check_dt(OffspringSpec.deterministic(2), srw(), 3, 20, 4)

		assert report.verdict
		assert report.mc.mean == 8.0

	@pytest.mark.parametrize("walk", [srw(), lazy_srw()])
	def test_random_offspring(self, mixed, walk):
		report = many_to_one_check_dt(mixed, walk, 4, 4_000, 31)

		assert report.verdict
		assert report.capped == 0

	def test_reproducible(self, mixed):
		a = many_to_one_check_dt(mixed, srw(), 3, 200, 8)
		b = many_to_one_check_dt(mixed, srw(), 3, 200, 8, threads=2)

		assert a.mc == b.mc

	def test_continuous_time(self, marks):
		report = many_to_one_check_ct(marks, CTBranchParams(1.0, 0.5, 2.0), 5_000, 1e-8, 12)

		assert report.verdict
		assert report.slack == pytest.approx(exp(1.0) * 1e-8)


class TestContinuousTime:
	def test_no_branching(self):
		run = simulate_brw_ct(MarkSet(3.0, 2), CTBranchParams(2.0, 0.0, 3.0), seed=0)

		assert run.total == 1
		assert check_lineage(run)
		assert all(event.kind == "jump" for event in run.events)

	def test_lineage(self, marks):
		for seed in range(20):
			run = simulate_brw_ct(marks, CTBranchParams(1.0, 1.0, 2.0), seed=seed)

			assert check_lineage(run)

	def test_longer_horizons_extend_runs(self, marks):
		for seed in range(30):
			short = simulate_brw_ct(marks, CTBranchParams(1.0, 1.0, 1.0), seed=seed, record_events=False)
			long = simulate_brw_ct(marks, CTBranchParams(1.0, 1.0, 2.0), seed=seed, record_events=False)

			if short.extinction_time is not None:
				assert long.extinction_time == short.extinction_time
			if long.total > 0:
				assert short.total > 0

	def test_broken_lineage(self, marks):
		run = simulate_brw_ct(MarkSet(2.0, 2), CTBranchParams(0.0, 1.0, 2.0), seed=3)
		forged = run._replace(alive=run.alive + [10**6])

		assert not check_lineage(forged)

	def test_disaster_at_the_origin(self):
		marks = MarkSet(1.0, 1, [Mark(0.5, (0,), -1.0)])
		run = simulate_brw_ct(marks, CTBranchParams(0.0, 2.0, 1.0), seed=5)

		assert run.total == 0
		assert run.extinction_time == 0.5
		assert check_lineage(run)

	def test_rejects_bonuses(self):
		marks = MarkSet(1.0, 1, [Mark(0.5, (0,), 0.5)])

		with pytest.raises(InvalidParameter):
			simulate_brw_ct(marks, CTBranchParams(1.0, 1.0, 1.0), seed=0)

		with pytest.raises(InvalidParameter):
			CTBranchParams(1.0, -1.0, 1.0).validate()

	@pytest.mark.slow
	def test_yule_growth(self):
		lam, horizon, n = 0.7, 2.0, 20_000
		totals = run_replicas(
			lambda rng: simulate_brw_ct(MarkSet(horizon, 1), CTBranchParams(0.0, lam, horizon), record_events=False,
				rng=rng).total,
			6, n,
		)
		mean, se = np.mean(totals), np.std(totals, ddof=1) / np.sqrt(n)

		assert abs(mean - exp(lam * horizon)) <= 3.0 * se


class TestSurvival:
	def test_disasters_kill_any_population(self):
		for max_population in (5, 20, 200):
			lo, hi = catastrophe_survival(1.0, 3.0, 5.0, max_population=max_population)

			assert lo == pytest.approx(exp(-5.0), rel=1e-6)
			assert hi == pytest.approx(exp(-5.0), rel=1e-6)

	def test_catastrophes_without_branching(self):
		lo, hi = catastrophe_survival(1.5, 0.0, 2.0)

		assert lo == pytest.approx(exp(-3.0))
		assert hi == pytest.approx(exp(-3.0))

	def test_branching_without_catastrophes(self):
		lo, hi = catastrophe_survival(1e-12, 1.0, 1.0, max_population=400)

		assert hi == pytest.approx(1.0)
		assert lo <= hi

	def test_partial_killing(self):
		lo, hi = catastrophe_survival(1.0, 1.0, 1.0, EnvSpec.constant(-0.5), max_population=100)

		assert 0.0 < lo <= hi < 1.0

		with pytest.raises(InvalidParameter):
			catastrophe_survival(1.0, 1.0, 1.0, EnvSpec.constant(0.5))

	def test_discrete_table(self):
		spec = OffspringSpec((((0.0, 0.0, 1.0), 0.5), ((0.0, 1.0), 0.5)))
		table = survival_experiment_dt(spec, {"srw": srw(), "lazy": lazy_srw()}, 4, 40, 3, n_env=50)

		assert [row["walk"] for row in table.rows] == ["srw", "lazy"]
		assert all(row["survival_frequency"] == 1.0 for row in table.rows)
		assert all(row["sign_agreement"] for row in table.rows)
		assert len(table.by_horizon) == 10

	def test_discrete_horizon_profile(self):
		spec = OffspringSpec((((0.5, 0.0, 0.5), 0.5), ((0.3, 0.4, 0.3), 0.5)))
		table = survival_experiment_dt(spec, {"srw": srw(), "lazy": lazy_srw()}, 6, 200, 9, n_env=50)

		for label in ("srw", "lazy"):
			curve = [row["survival_frequency"] for row in table.by_horizon if row["walk"] == label]

			assert curve[0] == 1.0
			assert curve[-1] < 1.0
			assert all(b <= a for a, b in zip(curve, curve[1:]))

	def test_discrete_capped_runs_are_excluded(self):
		table = survival_experiment_dt(OffspringSpec.deterministic(2), {"srw": srw()}, 6, 10, 1, n_env=10, population_cap=10)

		assert table.rows[0]["capped"] == 10
		assert np.isnan(table.rows[0]["survival_frequency"])

	def test_continuous_horizon_profile(self):
		table = survival_experiment_ct(1.0, [0.0, 1.0], [0.5], 2.0, 300, 5, n_env=20)

		for row in table.rows:
			curve = [
				point["survival_frequency"] for point in table.by_horizon
				if (point["kappa"], point["lambda"]) == (row["kappa"], row["lambda"])
			]

			assert len(curve) == HORIZON_POINTS
			assert curve[0] == 1.0
			assert curve[-1] == row["survival_frequency"]
			assert all(b <= a for a, b in zip(curve, curve[1:]))

	def test_continuous_capped_runs_are_excluded(self):
		n = 400
		table = survival_experiment_ct(1.0, [0.0], [3.0], 5.0, n, 7, n_env=20, population_cap=20)
		row = table.rows[0]
		survivors = row["survival_lower"] * n

		assert row["capped"] > 0
		assert row["survival_frequency"] == pytest.approx(survivors / (n - row["capped"]))
		assert row["survival_frequency"] < 0.05
		assert row["survival_lower"] <= exp(-5.0) <= row["survival_upper"]

	@pytest.mark.slow
	def test_catastrophe_oracle(self):
		"""At rest, a branching walk on a site hit by disasters is the birth-catastrophe chain."""

		rate, lam, horizon, cap = 1.0, 0.5, 2.0, 200

		def survives(rng: np.random.Generator) -> bool:
			marks = sample_mark_set(rate, EnvSpec.constant(-1.0), horizon, 0, rng)
			run = simulate_brw_ct(marks, CTBranchParams(0.0, lam, horizon), population_cap=cap, record_events=False, rng=rng)

			return run.total > 0

		n = 20_000
		frequency = float(np.mean(run_replicas(survives, 14, n)))
		lo, hi = catastrophe_survival(rate, lam, horizon)
		se = np.sqrt(frequency * (1.0 - frequency) / n)

		assert lo - 3.0 * se <= frequency <= hi + 3.0 * se
		assert frequency == pytest.approx(exp(-rate * horizon), abs=3.0 * se)

	@pytest.mark.slow
	def test_continuous_table(self):
		table = survival_experiment_ct(1.0, [0.0, 2.0], [0.5], 2.0, 400, 23, n_env=50, population_cap=500)

		assert len(table.rows) == 2
		assert table.by_horizon[0]["lambda"] == 0.5
		assert all(0.0 <= row["survival_frequency"] <= 1.0 for row in table.rows)
