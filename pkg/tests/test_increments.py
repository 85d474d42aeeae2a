#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# IMPORTS #############################################################################################################

import numpy as np

import pytest

from increments import (
	CTWalkParams, IncrementDist, TreeIncrementDist, binomial_increments, binomial_witness, convolve, ct_srw_kernel,
	enumerate_paths, heavy_tail_increments, is_majorized, is_symmetric_unimodal, lazy_srw, reach_window, srw,
	uniformization_cutoff,
)

from model import InvalidParameter

from scipy.stats import poisson  # type: ignore


# TESTS ###############################################################################################################


class TestIncrementDist:
	def test_simple_walks(self):
		assert srw().as_dict() == {(-1,): 0.5, (1,): 0.5}
		assert lazy_srw(hold=0.5).prob(0) == pytest.approx(0.5)
		assert len(srw(2)) == 4

	@pytest.mark.parametrize("support, probs", [
		([0, 0], [0.5, 0.5]),
		([0, 1], [0.7, 0.7]),
		([0, 1], [1.5, -0.5]),
		([], []),
	])
	def test_rejects_malformed(self, support, probs):
		with pytest.raises(InvalidParameter):
			IncrementDist(np.array(support), np.array(probs))

	def test_heavy_tail_is_symmetric(self):
		law = heavy_tail_increments(1.0, 4)

		assert law.probs.sum() == pytest.approx(1.0)
		assert is_symmetric_unimodal(law)


class TestConvolution:
	def test_binomials(self):
		law = convolve(binomial_increments(1, 0.5), binomial_increments(1, 0.5))

		assert law.as_dict() == pytest.approx({(0,): 0.25, (1,): 0.5, (2,): 0.25})

	def test_binomial_witness(self):
		law = convolve(binomial_increments(2, 0.3), binomial_witness(2, 5, 0.3))
		target = binomial_increments(5, 0.3)

		for k in range(6):
			assert law.prob(k) == pytest.approx(target.prob(k), abs=1e-12)

	def test_dirac_is_neutral(self):
		law = heavy_tail_increments(2.0, 3)
		convolved = convolve(law, IncrementDist.dirac(0))

		assert convolved.as_dict() == pytest.approx(law.as_dict())

	def test_dimension_mismatch(self):
		with pytest.raises(InvalidParameter):
			convolve(srw(1), srw(2))

	def test_srw_twice(self):
		assert convolve(srw(), srw()).as_dict() == pytest.approx({(-2,): 0.25, (0,): 0.5, (2,): 0.25})


class TestPaths:
	def test_reach_window(self):
		boxes = reach_window(srw(), binomial_increments(2, 0.5), t=2)

		assert boxes[0].lo == (-1,) and boxes[0].hi == (2,)
		assert boxes[1].lo == (-2,) and boxes[1].hi == (4,)

	def test_enumerated_paths_are_a_law(self):
		paths = list(enumerate_paths(lazy_srw(), 3))

		assert len(paths) == 27
		assert sum(prob for _, prob in paths) == pytest.approx(1.0)
		assert all(path.shape == (4, 1) and path[0, 0] == 0 for path, _ in paths)

	def test_per_step_walk(self):
		walk = [srw(), IncrementDist.dirac(0), srw()]

		assert len(list(enumerate_paths(walk, 3))) == 4

		with pytest.raises(InvalidParameter):
			list(enumerate_paths(walk, 4))


class TestMajorization:
	def test_uniform_is_minimal(self):
		assert is_majorized([0.5, 0.5], [1.0, 0.0]).verdict
		assert not is_majorized([1.0, 0.0], [0.5, 0.5]).verdict

	def test_certificate_gaps(self):
		certificate = is_majorized([0.2, 0.6, 0.2], [0.1, 0.8, 0.1])

		assert certificate.verdict
		assert certificate.gaps == pytest.approx([0.2, 0.1, 0.0])

	def test_failing_index_and_mass(self):
		certificate = is_majorized([0.7, 0.3], [0.5, 0.5])

		assert certificate.failing_index == 0
		assert not certificate.mass_mismatch
		assert is_majorized([0.5, 0.5], [0.5, 0.4]).mass_mismatch

	def test_permutations(self):
		assert is_majorized(TreeIncrementDist([0.25, 0.25, 0.5]), TreeIncrementDist([0.5, 0.25, 0.25])).verdict

	def test_symmetric_unimodal(self):
		assert is_symmetric_unimodal(IncrementDist(np.array([-1, 0, 1]), np.array([0.2, 0.6, 0.2])))
		assert not is_symmetric_unimodal(IncrementDist(np.array([-1, 0, 1]), np.array([0.6, 0.2, 0.2])))
		assert not is_symmetric_unimodal(IncrementDist(np.array([-1, 0, 1]), np.array([0.4, 0.2, 0.4])))


class TestUniformization:
	def test_cutoff(self):
		cutoff = uniformization_cutoff(3.0, 1e-9)

		assert poisson.sf(cutoff, 3.0) < 1e-9
		assert poisson.sf(cutoff - 1, 3.0) >= 1e-9
		assert uniformization_cutoff(0.0, 1e-9) == 0

	def test_kernel(self):
		matrix, bound = ct_srw_kernel(CTWalkParams(1.0), 1.0, 12, 1e-10)
		center = 12

		assert bound < 1e-8
		assert matrix[center].sum() == pytest.approx(1.0, abs=1e-8)
		assert matrix[center, center + 1] == pytest.approx(matrix[center, center - 1])

	def test_frozen_walk(self):
		matrix, bound = ct_srw_kernel(CTWalkParams(0.0), 2.0, 3, 1e-10)

		assert np.allclose(matrix, np.eye(7))
		assert bound == 0.0

	def test_rejects_negative_rate(self):
		with pytest.raises(InvalidParameter):
			ct_srw_kernel(CTWalkParams(-1.0), 1.0, 3, 1e-6)
