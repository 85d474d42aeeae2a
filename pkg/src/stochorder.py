#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Stochastic order testers: the exact concave order between finite laws, its empirical counterpart, the convolution
coupling identity, the concave-sum characterization of majorization, and an exploratory scan over symmetric unimodal
step laws."""

# IMPORTS #############################################################################################################

from __future__ import annotations

import logging
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from envlat import ENUMERATION_CAP, EnvSpec, enumerate_lattice_fields, shift_lattice

from increments import (
	IncrementDist, Walk, convolve, enumerate_paths, heavy_tail_increments, is_majorized, is_symmetric_unimodal,
	reach_window, walk_steps,
)

from model import FiniteDist, InvalidParameter

from polymer_dt import free_energy_estimate, joint_partition_distribution, partition_function

from replicas import rng_for

from scipy.stats import norm  # type: ignore

from timed import timed_callable


# DATA ################################################################################################################

"""Two-sided confidence of a 3-sigma normal band."""
THREE_SIGMA = 0.9973

"""Sample size below which empirical reports carry a warning."""
SMALL_SAMPLE = 30


# CLASSES #############################################################################################################


class ConcaveOrderReport(NamedTuple):
	"""The outcome of an exact test of `X <=_cv Y`.

	Attributes
	----------
	verdict : bool
		Whether `E X = E Y` and `E[min(X, a)] <= E[min(Y, a)]` at every test point, within tolerance.
	mean_gap : float
		`E X - E Y`.
	test_points : np.ndarray
		The atoms of both laws.
	gaps : np.ndarray
		`E[min(X, a)] - E[min(Y, a)]` at every test point.
	worst_violation : float
		The largest gap (non-positive when the order holds).
	worst_point : float
		Where the largest gap is attained.
	"""

	verdict: bool
	mean_gap: float
	test_points: np.ndarray
	gaps: np.ndarray
	worst_violation: float
	worst_point: float


class EmpiricalOrderReport(NamedTuple):
	"""The outcome of an empirical test of `X <=_cv Y` from samples.

	Attributes
	----------
	verdict : bool
		True when consistent with the order, false on a violation at the stated confidence.
	grid : np.ndarray
		The test points.
	gaps : np.ndarray
		Estimates of `E[min(X, a)] - E[min(Y, a)]`.
	ses : np.ndarray
		Their standard errors.
	violations : list[float]
		Test points where `gap - z * se > 0`.
	mean_gap : float
		Estimate of `E X - E Y`.
	mean_se : float
		Its standard error.
	mean_consistent : bool
		Whether `|mean_gap| <= z * mean_se`.
	z : float
		The normal quantile used.
	n : tuple[int, int]
		The sample sizes.
	small_sample : bool
		Set when a sample has fewer than 30 entries.
	bonferroni : bool
		Whether the confidence was split over the grid.
	"""

	verdict: bool
	grid: np.ndarray
	gaps: np.ndarray
	ses: np.ndarray
	violations: list[float]
	mean_gap: float
	mean_se: float
	mean_consistent: bool
	z: float
	n: tuple[int, int]
	small_sample: bool
	bonferroni: bool


class CouplingReport(NamedTuple):
	"""The outcome of a pointwise check of `sum_y Q(y) Z^{p1}(theta^y omega) = Z^{p1 * q}(omega)`.

	Attributes
	----------
	defect : float
		The largest absolute difference over the enumerated environments.
	verdict : bool
		Whether the defect is within tolerance.
	environments : int
		The number of environments enumerated.
	shift_paths : int
		The number of `q`-paths summed over.
	"""

	defect: float
	verdict: bool
	environments: int
	shift_paths: int


class ConjectureScan(NamedTuple):
	"""Rows of an exploratory scan: random symmetric unimodal pairs, and the heavy-tail family."""

	pairs: list[dict]
	family: list[dict]
	counterexamples: list[int]


# FUNCTIONS ###########################################################################################################


def _angle_expectations(law: FiniteDist, points: np.ndarray) -> np.ndarray:
	return np.minimum(law.values[:, None], points[None, :]).T @ law.probs


def concave_order_exact(x: FiniteDist, y: FiniteDist, tol: float = 1e-9) -> ConcaveOrderReport:
	"""Decides `X <=_cv Y` for finite laws.

	On a finite support, the angle functions `min(., a)` at the atoms together with the affine functions generate the
	cone of concave functions, so the order holds iff the means agree and every angle expectation of `X` is at most the
	one of `Y`.

	Parameters
	----------
	x, y : FiniteDist
		Scalar laws with non-negative atoms.
	tol : float, optional
		Two-sided slack on the means, one-sided slack on the angle functions (default: 1e-9).

	Returns
	-------
	ConcaveOrderReport
		The verdict and every gap.
	"""

	if x.values.ndim != 1 or y.values.ndim != 1:
		raise InvalidParameter("The concave order compares laws of scalar variables.")

	points = np.union1d(x.values, y.values)
	gaps = _angle_expectations(x, points) - _angle_expectations(y, points)
	mean_gap = float(x.mean - y.mean)
	worst = int(np.argmax(gaps))
	verdict = abs(mean_gap) <= tol and bool(np.all(gaps <= tol))

	return ConcaveOrderReport(verdict, mean_gap, points, gaps, float(gaps[worst]), float(points[worst]))


def default_grid(x: np.ndarray, y: np.ndarray, points: int = 20) -> np.ndarray:
	"""Test points at evenly spaced quantiles of the pooled samples."""

	return np.unique(np.quantile(np.concatenate([x, y]), np.linspace(0.0, 1.0, points)))


def concave_order_empirical(
	x: Sequence[float],
	y: Sequence[float],
	grid: Optional[Sequence[float]] = None,
	confidence: float = THREE_SIGMA,
	paired: bool = False,
	bonferroni: bool = False,
) -> EmpiricalOrderReport:
	"""Tests `X <=_cv Y` from samples, with normal-approximation confidence bands on every angle-function gap.

	Parameters
	----------
	x, y : Sequence[float]
		Samples of `X` and `Y`; of equal length when paired.
	grid : Optional[Sequence[float]], optional
		Test points (default: 20 quantiles of the pooled samples).
	confidence : float, optional
		Two-sided confidence of each band (default: 0.9973, i.e. 3 sigma).
	paired : bool, optional
		Whether `x[k]` and `y[k]` were drawn together (default: False).
	bonferroni : bool, optional
		Split the confidence over the grid points (default: False).

	Returns
	-------
	EmpiricalOrderReport
		The verdict, with every gap and its standard error.
	"""

	x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)

	if paired and len(x) != len(y):
		raise InvalidParameter(f"Paired samples must have equal sizes, got {len(x)} and {len(y)}.")
	elif min(len(x), len(y)) < 2:
		raise InvalidParameter("Each sample needs at least two entries.")

	grid = default_grid(x, y) if grid is None else np.asarray(grid, dtype=float)
	alpha = (1.0 - confidence) / (len(grid) if bonferroni else 1)
	z = float(norm.ppf(1.0 - alpha / 2.0))
	fx = np.concatenate([np.minimum(x[:, None], grid[None, :]), x[:, None]], axis=1)
	fy = np.concatenate([np.minimum(y[:, None], grid[None, :]), y[:, None]], axis=1)

	if paired:
		differences = fx - fy
		gaps = differences.mean(axis=0)
		ses = differences.std(axis=0, ddof=1) / np.sqrt(len(x))
	else:
		gaps = fx.mean(axis=0) - fy.mean(axis=0)
		ses = np.sqrt(fx.var(axis=0, ddof=1) / len(x) + fy.var(axis=0, ddof=1) / len(y))

	small_sample = min(len(x), len(y)) < SMALL_SAMPLE

	if small_sample:
		logging.warning(f"Empirical concave order test on small samples ({len(x)}, {len(y)}).")

	violations = [float(a) for a, gap, se in zip(grid, gaps[:-1], ses[:-1]) if gap - z * se > 0.0]
	mean_consistent = bool(abs(gaps[-1]) <= z * ses[-1])

	return EmpiricalOrderReport(
		not violations and mean_consistent, grid, gaps[:-1], ses[:-1], violations, float(gaps[-1]), float(ses[-1]),
		mean_consistent, z, (len(x), len(y)), small_sample, bonferroni,
	)


def convolve_walks(p: Walk, q: Walk, t: int) -> list[IncrementDist]:
	"""The walk whose `s`-th step law is the convolution of the `s`-th step laws of `p` and `q`."""

	return [convolve(a, b) for a, b in zip(walk_steps(p, t), walk_steps(q, t))]


@timed_callable("Checking the convolution coupling identity...")
def coupling_identity_check(
	spec: EnvSpec, p1: Walk, q: Walk, t: int, cap: int = ENUMERATION_CAP, tol: float = 1e-12,
) -> CouplingReport:
	"""Checks `sum_y Q(y) Z^{p1}_t(theta^y omega) = Z^{p1 * q}_t(omega)` for every environment.

	The environments are enumerated on the reachable set of the `p1 * q` walk, which contains every cell the shifted
	`p1` walks read.

	Parameters
	----------
	spec : EnvSpec
		The single-site law.
	p1 : Walk
		The walk `P^1`.
	q : Walk
		The walk `Q` the environment is shifted along.
	t : int
		The horizon.
	cap : int, optional
		The enumeration cap (default: 10**7).
	tol : float, optional
		The largest defect accepted (default: 1e-12).

	Returns
	-------
	CouplingReport
		The largest defect and the verdict.

	Raises
	------
	ResourceExceeded
		If the enumeration exceeds the cap.
	"""

	p2 = convolve_walks(p1, q, t)
	inner = reach_window(p1, t=t)
	shifts = list(enumerate_paths(q, t))
	defect, environments = 0.0, 0

	for field, _ in enumerate_lattice_fields(spec, t, reach_window(p2, t=t), cap):
		mixture = sum(prob * partition_function(shift_lattice(field, y, inner), p1, t).value for y, prob in shifts)
		defect = max(defect, abs(mixture - partition_function(field, p2, t).value))
		environments += 1

	logging.info(f"Coupling defect {defect:.3g} over {environments} environments and {len(shifts)} shift paths.")

	return CouplingReport(defect, defect <= tol, environments, len(shifts))


def convolution_order_check(
	spec: EnvSpec, p1: Walk, q: Walk, t: int, cap: int = ENUMERATION_CAP, tol: float = 1e-10,
) -> ConcaveOrderReport:
	"""Checks `Z^{p1}_t <=_cv Z^{p1 * q}_t` on the exact joint law."""

	law = joint_partition_distribution(spec, p1, convolve_walks(p1, q, t), t, cap)

	return concave_order_exact(law.marginal(0), law.marginal(1), tol)


def majorization_concave_sum_check(
	c: Union[Sequence[float], np.ndarray], d: Union[Sequence[float], np.ndarray], tol: float = 1e-12,
) -> bool:
	"""Whether `sum f(c_i) >= sum f(d_i)` for every `f` in `{min(., a)}` and for `f = +-identity`, which characterizes
	`c <=_M d`.

	Raises
	------
	InvalidParameter
		If the lengths differ or an entry is negative.
	"""

	c, d = np.asarray(c, dtype=float), np.asarray(d, dtype=float)

	if c.shape != d.shape or c.ndim != 1:
		raise InvalidParameter(f"Majorization compares vectors of equal length, got {c.shape} and {d.shape}.")
	elif np.any(c < 0) or np.any(d < 0):
		raise InvalidParameter("Majorization compares non-negative vectors.")

	points = np.union1d(c, d)
	sums_c = np.minimum(c[:, None], points[None, :]).sum(axis=0)
	sums_d = np.minimum(d[:, None], points[None, :]).sum(axis=0)

	return abs(c.sum() - d.sum()) <= tol and bool(np.all(sums_c >= sums_d - tol))


def random_symmetric_unimodal(radius: int, rng: np.random.Generator) -> IncrementDist:
	"""A random symmetric unimodal law on `{-radius..radius}`."""

	levels = np.sort(rng.uniform(0.0, 1.0, radius + 1))[::-1]
	weights = np.concatenate([levels[:0:-1], levels])

	return IncrementDist(np.arange(-radius, radius + 1), weights / weights.sum())


@timed_callable("Scanning symmetric unimodal pairs...")
def conjecture_scan(
	radius: int,
	t: int,
	spec: EnvSpec,
	pairs: int,
	seed: int,
	alphas: Sequence[float] = (),
	free_energy_horizon: int = 8,
	n_env: int = 200,
	cap: int = ENUMERATION_CAP,
	tol: float = 1e-10,
) -> ConjectureScan:
	"""Explores whether, for symmetric unimodal laws, `p <=_M q` goes with `Z^q_t <=_cv Z^p_t`. Nothing is asserted.

	Parameters
	----------
	radius : int
		The support radius of the step laws.
	t : int
		The horizon of the exact comparisons.
	spec : EnvSpec
		The single-site law.
	pairs : int
		The number of random pairs.
	seed : int
		The master seed.
	alphas : Sequence[float], optional
		Exponents of the heavy-tail family, compared consecutively.
	free_energy_horizon : int, optional
		The horizon of the free-energy estimates of the family (default: 8).
	n_env : int, optional
		Environments per free-energy estimate (default: 200).

	Returns
	-------
	ConjectureScan
		One row per pair and per consecutive family pair, and the indices of pairs where majorization held without the
		order.
	"""

	rng = rng_for(seed)
	rows, family, counterexamples = [], [], []

	for k in range(pairs):
		p, q = random_symmetric_unimodal(radius, rng), random_symmetric_unimodal(radius, rng)
		law = joint_partition_distribution(spec, q, p, t, cap)
		order = concave_order_exact(law.marginal(0), law.marginal(1), tol)
		majorized = is_majorized(p, q).verdict
		rows.append({
			"pair": k,
			"p": p.probs.tolist(),
			"q": q.probs.tolist(),
			"p_majorized_by_q": majorized,
			"q_majorized_by_p": is_majorized(q, p).verdict,
			"zq_cv_zp": order.verdict,
			"worst_violation": order.worst_violation,
		})

		if majorized and not order.verdict:
			counterexamples.append(k)

	laws = [heavy_tail_increments(alpha, radius) for alpha in alphas]

	for k, (alpha, law_) in enumerate(zip(alphas, laws)):
		estimate = free_energy_estimate(spec, law_, free_energy_horizon, n_env, seed + k + 1)
		row = {
			"alpha": alpha,
			"symmetric_unimodal": is_symmetric_unimodal(law_),
			"free_energy": estimate.estimate,
			"free_energy_se": estimate.se,
			"survival_fraction": estimate.survival_fraction,
		}

		if k + 1 < len(laws):
			row["majorized_by_next"] = is_majorized(law_, laws[k + 1]).verdict

		family.append(row)

	return ConjectureScan(rows, family, counterexamples)
