#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# IMPORTS #############################################################################################################

import numpy as np

import pytest

from envlat import EnvSpec, TreeEnv, sample_tree_env

from increments import TreeIncrementDist, is_majorized

from model import InvalidParameter, ResourceExceeded

from treepoly import (
	InhomogWalk, canonical_node_order, check_order, homogeneous, interpolation_ladder, necessity_check, necessity_env,
	reversed_tie_order, tree_interpolation_check, tree_partition_function, tree_theorem_sufficiency_check,
)


# FIXTURES ############################################################################################################


@pytest.fixture
def uniform() -> TreeIncrementDist:
	return TreeIncrementDist.uniform(2)


@pytest.fixture
def point() -> TreeIncrementDist:
	return TreeIncrementDist([1.0, 0.0])


# TESTS ###############################################################################################################


class TestPartitionFunction:
	def test_empty_environment(self):
		env = TreeEnv(3, 3, tuple(np.zeros(3**s) for s in range(1, 4)))

		assert tree_partition_function(env, homogeneous(TreeIncrementDist([0.2, 0.3, 0.5]))).value == pytest.approx(1.0)

	@pytest.mark.parametrize("r", [1, 2, 3])
	def test_one_open_child(self, r):
		p = TreeIncrementDist([0.2, 0.3, 0.5])

		assert tree_partition_function(necessity_env(r, 3), homogeneous(p)).value == pytest.approx(p(r))

	def test_constant_environment(self, uniform):
		env = TreeEnv(2, 2, (np.full(2, 0.5), np.full(4, 0.5)))

		assert tree_partition_function(env, homogeneous(uniform)).value == pytest.approx(1.5**2)

	def test_direct_sum(self):
		env = TreeEnv(2, 2, (np.array([1.0, -0.5]), np.array([0.0, 1.0, -1.0, 2.0])))
		p = TreeIncrementDist([0.3, 0.7])
		expected = 0.3 * 2.0 * (0.3 * 1.0 + 0.7 * 2.0) + 0.7 * 0.5 * (0.3 * 0.0 + 0.7 * 3.0)

		assert tree_partition_function(env, homogeneous(p)).value == pytest.approx(expected)

	def test_overrides(self):
		env = TreeEnv(2, 2, (np.array([1.0, -0.5]), np.array([0.0, 1.0, -1.0, 2.0])))
		walk = InhomogWalk(TreeIncrementDist([0.3, 0.7]), {(2,): TreeIncrementDist([1.0, 0.0])})
		expected = 0.3 * 2.0 * (0.3 * 1.0 + 0.7 * 2.0) + 0.7 * 0.5 * 0.0

		assert tree_partition_function(env, walk).value == pytest.approx(expected)

	def test_depth_mismatch(self, uniform):
		env = TreeEnv(2, 1, (np.zeros(2),))

		with pytest.raises(InvalidParameter):
			tree_partition_function(env, homogeneous(uniform), 2)

		with pytest.raises(InvalidParameter):
			tree_partition_function(env, homogeneous(TreeIncrementDist.uniform(3)), 1)


class TestNecessity:
	def test_identical_laws(self, point):
		assert necessity_check(point, point)

	def test_uniform_against_point_mass(self, uniform, point):
		assert necessity_check(uniform, point)
		assert not necessity_check(point, uniform)

	def test_agrees_with_majorization(self):
		rng = np.random.default_rng(8)

		for _ in range(200):
			arity = int(rng.integers(2, 5))
			p, q = TreeIncrementDist(rng.dirichlet(np.ones(arity))), TreeIncrementDist(rng.dirichlet(np.ones(arity)))

			assert necessity_check(p, q) == is_majorized(p, q).verdict


class TestSufficiency:
	def test_identical_laws(self, point):
		assert tree_theorem_sufficiency_check(point, point, EnvSpec.bernoulli_obstacles(0.5), 2).verdict

	def test_binary_tree(self, uniform, point):
		report = tree_theorem_sufficiency_check(uniform, point, EnvSpec(((-1.0, 0.5), (0.0, 0.5))), 2)

		assert report.verdict
		assert report.mean_gap == pytest.approx(0.0, abs=1e-12)

	def test_uniform_is_minimal(self):
		spec = EnvSpec(((-1.0, 0.5), (1.0, 0.5)))

		for p in ([0.6, 0.3, 0.1], [1.0, 0.0, 0.0], [0.2, 0.2, 0.6]):
			assert tree_theorem_sufficiency_check(TreeIncrementDist.uniform(3), TreeIncrementDist(p), spec, 2).verdict

	def test_precondition(self, uniform, point):
		with pytest.raises(InvalidParameter):
			tree_theorem_sufficiency_check(point, uniform, EnvSpec.bernoulli_obstacles(0.5), 2)

	def test_cap(self, uniform, point):
		with pytest.raises(ResourceExceeded):
			tree_theorem_sufficiency_check(uniform, point, EnvSpec.bernoulli_obstacles(0.5), 4, cap=1_000)


class TestInterpolation:
	def test_orders(self):
		order = canonical_node_order(2, 3)

		assert order[:4] == [(1, 1), (1, 2), (2, 1), (2, 2)]
		assert order[-1] == ()
		assert check_order(order, 2, 3)
		assert check_order(reversed_tie_order(2, 3), 2, 3)
		assert not check_order(list(reversed(order)), 2, 3)

	def test_identical_laws(self, uniform):
		env = sample_tree_env(EnvSpec(((-0.5, 0.5), (1.0, 0.5))), 2, 2, 1)

		for i in range(3):
			report = tree_interpolation_check(uniform, uniform, env, 2, i)

			assert report.passed
			assert report.w_i == pytest.approx(report.w_next)

	def test_blocked_pivot(self, uniform):
		env = TreeEnv(2, 2, (np.array([-1.0, 0.5]), np.array([1.0, 0.0, -0.5, 0.25])))
		report = tree_interpolation_check(uniform, TreeIncrementDist([0.8, 0.2]), env, 2, 0)

		assert report.pivot == (1,)
		assert report.b == 0.0
		assert report.w_i == pytest.approx(report.a)
		assert report.w_next == pytest.approx(report.a)

	@pytest.mark.parametrize("seed", range(5))
	def test_random_environments(self, seed):
		p, q = TreeIncrementDist([0.6, 0.4]), TreeIncrementDist([0.9, 0.1])
		env = sample_tree_env(EnvSpec(((-1.0, 0.2), (0.0, 0.3), (1.5, 0.5))), 2, 2, seed)

		for order in (canonical_node_order(2, 2), reversed_tie_order(2, 2)):
			for i in range(len(order)):
				assert tree_interpolation_check(p, q, env, 2, i, 1e-12, order).passed

	def test_ternary_pivots(self):
		p, q = TreeIncrementDist([0.4, 0.3, 0.3]), TreeIncrementDist([0.7, 0.2, 0.1])
		env = sample_tree_env(EnvSpec(((-0.5, 0.5), (0.5, 0.5))), 3, 2, 9)

		assert all(tree_interpolation_check(p, q, env, 2, i).passed for i in range(4))

	def test_pivot_range(self, uniform):
		env = sample_tree_env(EnvSpec.constant(0.0), 2, 2, 0)

		with pytest.raises(InvalidParameter):
			tree_interpolation_check(uniform, uniform, env, 2, 3)

	def test_arity_cap(self):
		law = TreeIncrementDist.uniform(6)
		env = sample_tree_env(EnvSpec.constant(0.0), 6, 1, 0)

		with pytest.raises(ResourceExceeded):
			tree_interpolation_check(law, law, env, 1, 0)

	def test_ladder(self):
		ladder = interpolation_ladder(
			TreeIncrementDist([0.5, 0.5]), TreeIncrementDist([0.8, 0.2]), EnvSpec(((-1.0, 0.3), (0.0, 0.4), (1.0, 0.3))), 2,
		)

		assert ladder.passed
		assert len(ladder.laws) == 4
		assert all(float(law.mean) == pytest.approx(1.0) for law in ladder.laws)
