#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# IMPORTS #############################################################################################################

import numpy as np

import pytest

from envlat import (
	Box, EnvSpec, Mark, MarkSet, OffspringSpec, TreeEnv, apply_elementary_shift, constant_field, enumerate_lattice_fields,
	enumerate_tree_envs, extend_mark_set, sample_lattice_field, sample_mark_set, sample_offspring_field, shift_lattice,
)

from model import InvalidParameter, ResourceExceeded, WindowError


# FIXTURES ############################################################################################################


@pytest.fixture
def window() -> tuple[Box, ...]:
	return tuple(Box.cube(s) for s in range(1, 4))


# TESTS ###############################################################################################################


class TestEnvSpec:
	def test_mean_factor(self):
		assert EnvSpec.bernoulli_obstacles(0.3).mean_factor == pytest.approx(0.7)
		assert EnvSpec(((-0.5, 0.5), (0.5, 0.5))).mean_factor == pytest.approx(1.0)

	@pytest.mark.parametrize("atoms", [
		((-1.5, 1.0),),
		((0.0, 0.4), (1.0, 0.4)),
		((0.0, -0.1), (1.0, 1.1)),
		(),
	])
	def test_rejects_malformed(self, atoms):
		with pytest.raises(InvalidParameter):
			EnvSpec(atoms)


class TestLatticeField:
	def test_sampling_is_deterministic(self, window):
		spec = EnvSpec(((-1.0, 0.2), (0.0, 0.5), (2.0, 0.3)))
		a, b = sample_lattice_field(spec, 3, window, 42), sample_lattice_field(spec, 3, window, 42)

		assert all(np.array_equal(x, y) for x, y in zip(a.values, b.values))

	def test_lookup_outside_window(self, window):
		field = constant_field(0.0, window)

		assert field.value(1, (1,)) == 0.0

		with pytest.raises(WindowError):
			field.value(1, (2,))

		with pytest.raises(WindowError):
			field.value(4, (0,))

	def test_enumeration_is_a_law(self):
		window = (Box.cube(1),)
		fields = list(enumerate_lattice_fields(EnvSpec.bernoulli_obstacles(0.3), 1, window))

		assert len(fields) == 2**3
		assert sum(prob for _, prob in fields) == pytest.approx(1.0, abs=1e-12)
		assert len({tuple(field.values[0].tolist()) for field, _ in fields}) == 8

	def test_enumeration_cap(self, window):
		with pytest.raises(ResourceExceeded):
			enumerate_lattice_fields(EnvSpec.bernoulli_obstacles(0.5), 3, window, cap=100)

	def test_shift_reads_along_the_path(self, window):
		field = sample_lattice_field(EnvSpec(((0.0, 0.5), (1.0, 0.5))), 3, window, 7)
		shifted = shift_lattice(field, [0, 1, 0, -1])

		assert shifted.value(1, (0,)) == field.value(1, (1,))
		assert shifted.value(2, (1,)) == field.value(2, (1,))
		assert shifted.value(3, (0,)) == field.value(3, (-1,))


class TestMarkSet:
	def test_rejects_ties_and_out_of_range_marks(self):
		marks = MarkSet(1.0, 2, [Mark(0.5, (0,), -1.0)])

		with pytest.raises(InvalidParameter):
			marks.add(Mark(0.5, (1,), -1.0))

		with pytest.raises(InvalidParameter):
			marks.add(Mark(1.5, (0,), -1.0))

		with pytest.raises(InvalidParameter):
			marks.add(Mark(0.2, (0,), -2.0))

	def test_reversal(self):
		marks = MarkSet(2.0, 1, [Mark(0.5, (0,), -1.0), Mark(1.5, (1,), 0.5)])
		reversed_marks = marks.reversed()

		assert [(mark.time, mark.site) for mark in reversed_marks] == [(0.5, (1,)), (1.5, (0,))]

	def test_sorted_by_time(self):
		marks = sample_mark_set(2.0, EnvSpec.constant(-1.0), 3.0, 2, 11)
		times = [mark.time for mark in marks]

		assert times == sorted(times)
		assert all(-2 <= mark.site[0] <= 2 for mark in marks)

	def test_no_mark_frequency(self):
		"""At unit rate on one site over [0, 1], there is no mark with probability e^-1."""

		rng = np.random.default_rng(3)
		n = 20_000
		empty = sum(len(sample_mark_set(1.0, EnvSpec.constant(-1.0), 1.0, 0, rng)) == 0 for _ in range(n))
		expected = np.exp(-1.0)

		assert abs(empty / n - expected) <= 3.0 * np.sqrt(expected * (1.0 - expected) / n)

	def test_extension(self):
		rng = np.random.default_rng(5)
		marks = sample_mark_set(2.0, EnvSpec.constant(0.5), 1.0, 1, rng)
		grown = extend_mark_set(marks, 3, rng)
		fresh = [mark for mark in grown if mark not in list(marks)]

		assert grown.box_radius == 3
		assert set(marks).issubset(set(grown))
		assert fresh and all(1 < max(abs(c) for c in mark.site) <= 3 for mark in fresh)
		assert all(mark.r == 0.5 for mark in fresh)

		with pytest.raises(InvalidParameter):
			extend_mark_set(grown, 2, rng)


class TestTreeEnv:
	def test_level_sizes(self):
		with pytest.raises(InvalidParameter):
			TreeEnv(2, 2, (np.zeros(2), np.zeros(3)))

	def test_enumeration(self):
		envs = list(enumerate_tree_envs(EnvSpec.bernoulli_obstacles(0.5), 2, 2))

		assert len(envs) == 2**6
		assert sum(prob for _, prob in envs) == pytest.approx(1.0)

	def test_elementary_shift_swaps_subtrees(self):
		env = TreeEnv(2, 2, (np.array([1.0, 2.0]), np.array([3.0, 4.0, 5.0, 6.0])))
		shifted = apply_elementary_shift(env, (), (2, 1))

		assert shifted.levels[0].tolist() == [2.0, 1.0]
		assert shifted.levels[1].tolist() == [5.0, 6.0, 3.0, 4.0]

		with pytest.raises(InvalidParameter):
			apply_elementary_shift(env, (), (1, 1))


class TestOffspring:
	def test_omega_spec(self):
		spec = OffspringSpec((((0.5, 0.0, 0.5), 0.5), ((0.0, 1.0), 0.5)))

		assert spec.means.tolist() == [1.0, 1.0]
		assert spec.omega_spec().atoms == ((0.0, 1.0),)
		assert spec.nondegenerate

	def test_degenerate_atoms(self):
		assert not OffspringSpec.deterministic(0).nondegenerate

	def test_omega_field_drops_generation_zero(self):
		spec = OffspringSpec.deterministic(2)
		boxes = (Box.cube(0), Box.cube(1), Box.cube(2))
		field = sample_offspring_field(spec, 3, boxes, 5)

		assert field.root_factor == 2.0
		assert field.omega_field().horizon == 2
		assert field.omega_field().value(1, (-1,)) == 1.0
