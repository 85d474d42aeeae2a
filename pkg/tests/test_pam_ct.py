#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# IMPORTS #############################################################################################################

from math import exp, log

import numpy as np

import pytest

from envlat import EnvSpec, Mark, MarkSet, sample_mark_set

from model import DegenerateEstimate, InvalidParameter, ResourceExceeded

from pam_ct import (
	annealed_exponent, annealed_from_samples, annealed_mean_mc, bonus_factor, certified_radius, covering_mark_set,
	ct_partition_exact, ct_partition_mc, feynman_kac_crosscheck, lyapunov_annealed_estimate, lyapunov_quenched_estimate,
	pam_ode_solve, sample_ct_partition_functions,
)

from scipy.stats import poisson  # type: ignore


# FIXTURES ############################################################################################################


@pytest.fixture
def marks() -> MarkSet:
	return MarkSet(2.0, 3, [
		Mark(0.3, (0,), -1.0), Mark(0.7, (1,), -1.0), Mark(1.1, (-1,), -0.5), Mark(1.6, (0,), 0.5),
	])


# TESTS ###############################################################################################################


class TestExactEnclosure:
	def test_frozen_walk(self, marks):
		interval = ct_partition_exact(marks, 0.0)

		assert interval.lo == interval.hi == 0.0

	def test_frozen_walk_among_soft_marks(self):
		marks = MarkSet(1.0, 1, [Mark(0.2, (0,), 0.5), Mark(0.4, (1,), -1.0), Mark(0.6, (0,), -0.5)])

		assert ct_partition_exact(marks, 0.0).lo == pytest.approx(0.75)

	def test_no_marks(self):
		interval = ct_partition_exact(MarkSet(3.0, 5), 2.0, epsilon=1e-9)

		assert interval.contains(1.0)
		assert interval.width <= 1e-9

	@pytest.mark.parametrize("epsilon", [1e-4, 1e-8])
	def test_width(self, marks, epsilon):
		interval = ct_partition_exact(marks, 1.0, epsilon=epsilon)

		assert 0.0 <= interval.lo <= interval.hi
		assert interval.width <= epsilon

	def test_single_disaster_at_the_origin(self):
		"""A walk of rate `kappa` dodges a disaster at `(s, 0)` iff it is away from the origin at time `s`."""

		marks = MarkSet(1.0, 2, [Mark(0.5, (0,), -1.0)])
		kappa = 2.0
		# P(X_s = 0) for the rate-kappa simple random walk on Z
		at_origin = exp(-kappa * 0.5) * float(np.i0(kappa * 0.5))

		assert ct_partition_exact(marks, kappa, epsilon=1e-10).contains(1.0 - at_origin, 1e-10)

	def test_rejects_bad_arguments(self, marks):
		with pytest.raises(InvalidParameter):
			ct_partition_exact(marks, -1.0)

		with pytest.raises(InvalidParameter):
			ct_partition_exact(marks, 1.0, epsilon=0.0)

	def test_radius_cap(self):
		with pytest.raises(ResourceExceeded):
			ct_partition_exact(MarkSet(10.0, 1), 50.0, epsilon=1e-12, cap=10)

	def test_certified_radius(self):
		radius = certified_radius(3.0, 1.0, 1e-8)

		assert poisson.sf(radius - 1, 3.0) <= 1e-8
		assert poisson.sf(radius - 2, 3.0) > 1e-8


class TestMonteCarlo:
	def test_enclosure(self):
		marks = sample_mark_set(1.0, EnvSpec.constant(-1.0), 1.0, 8, 21)
		interval = ct_partition_exact(marks, 1.0)
		estimate = ct_partition_mc(marks, 1.0, None, 20_000, 5)

		assert interval.contains(estimate.mean, 3.0 * estimate.se + 1e-12)

	def test_reproducible(self, marks):
		a = ct_partition_mc(marks, 1.0, None, 3_000, 17)
		b = ct_partition_mc(marks, 1.0, None, 3_000, 17, threads=2)

		assert a == b

	def test_frozen_paths(self, marks):
		estimate = ct_partition_mc(marks, 0.0, None, 100, 1)

		assert estimate.mean == 0.0

	@pytest.mark.slow
	def test_annealed_mean(self):
		"""Averaged over environments, the partition function has mean `e^{-t}` under unit disasters."""

		law = EnvSpec.constant(-1.0)
		estimate = annealed_mean_mc(1.0, law, 2.0, 1.0, 100_000, 7)

		assert annealed_exponent(1.0, law) == -1.0
		assert estimate.agrees_with(exp(-1.0), 3.0, 1e-6)

	def test_annealed_mean_at_rest(self):
		law = EnvSpec(((-0.5, 0.5), (1.0, 0.5)))
		estimate = annealed_mean_mc(0.5, law, 0.0, 2.0, 20_000, 3)

		assert estimate.agrees_with(exp(annealed_exponent(0.5, law) * 2.0), 4.0)


class TestOde:
	def test_crosscheck(self, marks):
		check = feynman_kac_crosscheck(marks, 1.5, epsilon=1e-8)

		assert check.verdict
		assert check.interval.width <= 1e-8

	def test_flat_solution(self):
		solution = pam_ode_solve(MarkSet(1.0, 1), 1.0, None, 20, 0.1, 1e-7)

		assert solution.value == pytest.approx(1.0, abs=1e-7)

	def test_small_box(self, marks):
		with pytest.raises(InvalidParameter):
			pam_ode_solve(marks, 5.0, None, 1, 0.1, 1e-9)

		with pytest.raises(InvalidParameter):
			pam_ode_solve(marks, 1.0, None, 30, 0.0)


class TestCoveringMarks:
	def test_bonuses_grow_the_box(self):
		kappa, t, epsilon = 1.0, 1.0, 1e-6
		marks = covering_mark_set(1.0, EnvSpec.constant(1.0), kappa, t, epsilon, np.random.default_rng(3))
		weight = bonus_factor(marks, t)

		assert weight > 1.0
		assert marks.box_radius > certified_radius(kappa, t, epsilon / 2.0)
		assert marks.box_radius >= certified_radius(kappa, t, epsilon / (2.0 * weight))
		assert ct_partition_exact(marks, kappa, t, epsilon).radius <= marks.box_radius

	def test_killing_marks_keep_the_box(self):
		marks = covering_mark_set(1.0, EnvSpec.constant(-1.0), 2.0, 1.0, 1e-6, np.random.default_rng(3))

		assert marks.box_radius == certified_radius(2.0, 1.0, 5e-7)

	def test_frozen_walk(self):
		assert covering_mark_set(1.0, EnvSpec.constant(1.0), 0.0, 1.0, 1e-6, np.random.default_rng(3)).box_radius == 0


class TestLyapunov:
	def test_common_environments(self):
		values = sample_ct_partition_functions(1.0, EnvSpec.constant(-1.0), [0.0, 0.5, 2.0], 1.0, 20, 4)

		assert values.shape == (20, 3)
		assert set(np.unique(values[:, 0])) <= {0.0, 1.0}

	def test_annealed_from_samples(self):
		estimate = annealed_from_samples(np.array([1.0, 4.0, 4.0, 1.0]), 0.5, 2.0)

		assert estimate.estimate == pytest.approx(log(1.5))

		with pytest.raises(DegenerateEstimate):
			annealed_from_samples(np.zeros(3), 0.5, 1.0)

	def test_annealed_order(self):
		with pytest.raises(InvalidParameter):
			lyapunov_annealed_estimate(1.0, EnvSpec.constant(-1.0), 1.0, 0.0, 1.0, 10, 0)

	@pytest.mark.slow
	def test_quenched_trend_in_the_jump_rate(self):
		law = EnvSpec.constant(-1.0)
		slow = lyapunov_quenched_estimate(1.0, law, 0.5, 4.0, 400, 12)
		fast = lyapunov_quenched_estimate(1.0, law, 2.0, 4.0, 400, 12)

		assert slow.estimate <= fast.estimate + 3.0 * np.hypot(slow.se, fast.se)

	@pytest.mark.slow
	@pytest.mark.parametrize("r, increasing", [(0.5, True), (2.0, False)])
	def test_annealed_trend_in_the_jump_rate(self, r, increasing):
		law = EnvSpec.constant(-1.0)
		slow = lyapunov_annealed_estimate(1.0, law, 0.5, r, 4.0, 400, 13)
		fast = lyapunov_annealed_estimate(1.0, law, 2.0, r, 4.0, 400, 13)
		se = 3.0 * np.hypot(slow.se, fast.se)

		assert slow.estimate <= fast.estimate + se if increasing else fast.estimate <= slow.estimate + se
