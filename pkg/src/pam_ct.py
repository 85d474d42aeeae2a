#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Continuous-time partition functions in environments of space-time marks: certified enclosures by uniformization,
Monte Carlo over walk paths, the parabolic Anderson equation solved forward in time, and Lyapunov exponent
estimators."""

# IMPORTS #############################################################################################################

from __future__ import annotations

import logging
from math import ceil, exp, log
from typing import NamedTuple, Optional, Sequence

import numpy as np

from envlat import EnvSpec, MarkSet, extend_mark_set, sample_mark_set

from increments import propagate, stencil, uniformization_cutoff

from model import DegenerateEstimate, IntervalEstimate, InvalidParameter, MCEstimate, MassProfile, ResourceExceeded

from polymer_dt import FreeEnergyEstimate, free_energy_from_samples

from replicas import run_indexed_replicas, run_replicas

from scipy.stats import poisson  # type: ignore


# DATA ################################################################################################################

"""Largest box radius the exact enclosure may use."""
RADIUS_CAP = 2_000

"""Paths simulated per replica by the Monte Carlo estimators."""
PATH_BATCH = 2_000


# CLASSES #############################################################################################################


class OdeSolution(NamedTuple):
	"""The solution `u(t, .)` of the parabolic Anderson equation on a box, and its value at the origin."""

	profile: MassProfile
	value: float


class CrossCheck(NamedTuple):
	"""`u(t, 0)` against the exact enclosure of the partition function of the time-reversed marks."""

	ode_value: float
	interval: IntervalEstimate
	defect: float
	verdict: bool


# FUNCTIONS ###########################################################################################################


def bonus_factor(marks: MarkSet, t: float) -> float:
	"""The largest weight a path can collect: the product of `1 + r` over the marks with `r > 0`."""

	return float(np.prod([1.0 + mark.r for mark in marks.until(t) if mark.r > 0.0]))


def annealed_exponent(rate: float, law: EnvSpec) -> float:
	"""`alpha = log E[Z_1] = rate (R - 1)`, so that `E[Z_t] = e^{alpha t}` for every jump rate."""

	return rate * (law.mean_factor - 1.0)


def certified_radius(kappa: float, t: float, epsilon: float, cap: int = RADIUS_CAP) -> int:
	"""The smallest radius `R >= 1` such that the walk makes at least `R` jumps by time `t` with probability at most
	`epsilon`.

	Raises
	------
	ResourceExceeded
		If that radius exceeds the cap.
	"""

	rate_time = kappa * t
	radius = max(1, int(poisson.isf(epsilon, rate_time)) + 1) if rate_time > 0 else 1

	while radius > 1 and poisson.sf(radius - 2, rate_time) <= epsilon:
		radius -= 1

	while poisson.sf(radius - 1, rate_time) > epsilon:
		radius += 1

	if radius > cap:
		raise ResourceExceeded(
			f"Accuracy {epsilon:g} requires box radius {radius} and series cutoff "
			f"{uniformization_cutoff(rate_time, epsilon)}, beyond the radius cap {cap}.",
		)

	return radius


def _flat_index(site: Sequence[int], radius: int) -> Optional[int]:
	if any(abs(c) > radius for c in site):
		return None

	return int(np.ravel_multi_index(tuple(c + radius for c in site), (2 * radius + 1,) * len(site)))


def ct_partition_exact(
	marks: MarkSet, kappa: float, t: Optional[float] = None, epsilon: float = 1e-6, cap: int = RADIUS_CAP,
) -> IntervalEstimate:
	"""Encloses `Z_t = E^kappa[prod over marks (s, i, r) with X_s = i of (1 + r)]` in an interval of width at most
	`epsilon`.

	The mass profile is evolved between consecutive marks by the uniformized kernel of the walk killed outside a box of
	radius `R`, and multiplied by `1 + r` at every mark. The lower bound is the mass left in the box; the upper bound
	adds, weighted by the largest attainable bonus, the probability of leaving the box and the truncated series tails.

	Parameters
	----------
	marks : MarkSet
		The environment.
	kappa : float
		The jump rate.
	t : Optional[float], optional
		The horizon (default: the horizon of the mark set).
	epsilon : float, optional
		The declared accuracy (default: 1e-6).
	cap : int, optional
		The largest box radius allowed.

	Returns
	-------
	IntervalEstimate
		The enclosure, which has width zero when `kappa == 0`.

	Raises
	------
	InvalidParameter
		If `epsilon <= 0` or `kappa < 0`.
	ResourceExceeded
		If the accuracy requires a radius beyond the cap.
	"""

	t = marks.horizon if t is None else t

	if epsilon <= 0 or kappa < 0:
		raise InvalidParameter(f"Need epsilon > 0 and kappa >= 0, got {epsilon}, {kappa}.")

	active = marks.until(t)
	origin = (0,) * marks.dim

	if kappa == 0.0:
		value = float(np.prod([1.0 + mark.r for mark in active if mark.site == origin]))

		return IntervalEstimate(value, value, 0, 0, epsilon)

	weight = bonus_factor(marks, t)
	budget = epsilon / (2.0 * weight)
	radius = certified_radius(kappa, t, budget, cap)
	step = stencil(radius, marks.dim)
	mass = np.zeros(step.shape[0])
	mass[_flat_index(origin, radius)] = 1.0
	segment_budget = budget / (len(active) + 1)
	times = [mark.time for mark in active] + [t]
	previous, tails, largest = 0.0, 0.0, 0

	for k, time in enumerate(times):
		rate_time = kappa * (time - previous)
		cutoff = uniformization_cutoff(rate_time, segment_budget)
		mass = propagate(mass, step, rate_time, cutoff)
		tails += float(poisson.sf(cutoff, rate_time)) if rate_time > 0 else 0.0
		largest = max(largest, cutoff)
		previous = time

		if k < len(active):
			index = _flat_index(active[k].site, radius)

			if index is not None:
				mass[index] *= 1.0 + active[k].r

	lo = float(mass.sum())
	hi = lo + weight * (float(poisson.sf(radius - 1, kappa * t)) + tails)
	logging.debug(f"Enclosure over {len(active)} marks: radius {radius}, largest cutoff {largest}, width {hi - lo:.3g}.")

	return IntervalEstimate(lo, hi, radius, largest, epsilon)


def _displacements(jumps: np.ndarray, d: int, rng: np.random.Generator) -> np.ndarray:
	"""Displacements of simple random walks after the given numbers of jumps, of shape `(len(jumps), d)`."""

	if d == 1:
		return (2 * rng.binomial(jumps, 0.5) - jumps).reshape(-1, 1)

	counts = rng.multinomial(jumps, np.full(2 * d, 1.0 / (2 * d)))

	return counts[:, 1::2] - counts[:, 0::2]


def _path_weights(
	owners: np.ndarray,
	times: np.ndarray,
	sites: np.ndarray,
	factors: np.ndarray,
	kappa: float,
	paths: int,
	rng: np.random.Generator,
) -> np.ndarray:
	"""Weights `prod (1 + r)` over the marks hit by independent rate-`kappa` walks.

	Mark `k` belongs to path `owners[k]`; marks are sorted by owner, then time. Positions at mark times are sampled from
	the Poisson numbers of jumps between consecutive marks of the same path, which has the law of exponential holding
	times observed at those instants.
	"""

	weights = np.ones(paths)

	if len(owners) == 0:
		return weights

	first = np.ones(len(owners), dtype=bool)
	first[1:] = owners[1:] != owners[:-1]
	gaps = np.where(first, times, np.diff(times, prepend=0.0))
	moves = _displacements(rng.poisson(kappa * gaps), sites.shape[1], rng)
	positions = np.cumsum(moves, axis=0)
	starts = np.flatnonzero(first)
	offsets = np.repeat(positions[starts] - moves[starts], np.diff(np.append(starts, len(owners))), axis=0)
	hit = np.all(positions - offsets == sites, axis=1)
	np.multiply.at(weights, owners[hit], factors[hit])

	return weights


def ct_partition_mc(
	marks: MarkSet, kappa: float, t: Optional[float], n: int, seed: int, threads: int = 1,
) -> MCEstimate:
	"""Estimates `Z_t` by averaging path weights over `n` independent rate-`kappa` walks in the fixed marks.

	Raises
	------
	InvalidParameter
		If `n < 1`.
	"""

	t = marks.horizon if t is None else t

	if n < 1:
		raise InvalidParameter(f"Need at least one path, got {n}.")

	active = marks.until(t)
	times = np.array([mark.time for mark in active])
	sites = np.array([mark.site for mark in active], dtype=np.int64).reshape(-1, marks.dim)
	factors = np.array([1.0 + mark.r for mark in active])
	sizes = [min(PATH_BATCH, n - start) for start in range(0, n, PATH_BATCH)]

	def replica(index: int, rng: np.random.Generator) -> np.ndarray:
		paths = sizes[index]

		return _path_weights(
			np.repeat(np.arange(paths), len(active)), np.tile(times, paths), np.tile(sites, (paths, 1)),
			np.tile(factors, paths), kappa, paths, rng,
		)

	batches = run_indexed_replicas(replica, seed, len(sizes), threads)

	return MCEstimate.from_samples(np.concatenate(batches))


def annealed_mean_mc(
	rate: float, law: EnvSpec, kappa: float, t: float, n: int, seed: int, epsilon: float = 1e-6, d: int = 1,
	threads: int = 1,
) -> MCEstimate:
	"""Estimates `E[Z_t]` over environments and paths jointly: every path runs in its own environment, sampled on a box
	the walk leaves with probability at most `epsilon`.

	The target is `exp(alpha t)`, with `alpha = rate (R - 1)`, whatever the jump rate.
	"""

	# a path leaving the box loses at most its expected weight, e^{alpha t}
	radius = certified_radius(kappa, t, epsilon * min(1.0, exp(-annealed_exponent(rate, law) * t))) if kappa > 0 else 0
	sizes = [min(PATH_BATCH, n - start) for start in range(0, n, PATH_BATCH)]
	n_sites = (2 * radius + 1) ** d

	def replica(index: int, rng: np.random.Generator) -> np.ndarray:
		paths = sizes[index]
		counts = rng.poisson(rate * t, size=paths * n_sites)
		owners = np.repeat(np.repeat(np.arange(paths), n_sites), counts)
		flat_sites = np.repeat(np.tile(np.arange(n_sites), paths), counts)
		sites = np.stack(np.unravel_index(flat_sites, (2 * radius + 1,) * d), axis=1) - radius
		times = rng.uniform(0.0, t, size=len(owners))
		factors = 1.0 + law.sample(rng, len(owners))
		order = np.lexsort((times, owners))

		return _path_weights(owners[order], times[order], sites[order], factors[order], kappa, paths, rng)

	return MCEstimate.from_samples(np.concatenate(run_indexed_replicas(replica, seed, len(sizes), threads)))


def pam_ode_solve(
	marks: MarkSet, kappa: float, t: Optional[float], radius: int, step: float, tol: float = 1e-7,
) -> OdeSolution:
	"""Solves `du = kappa (Delta u) dt + u(s-, i) omega(ds, i)` from `u(0, .) = 1` on `{-radius..radius}^d` (zero outside),
	with the mass at `i` multiplied by `1 + r` at every mark `(s, i, r)`.

	Between marks, each sub-step of length at most `step` applies the uniformized exponential of the generator.

	Raises
	------
	InvalidParameter
		If `step <= 0`, or if the box is too small for the walk to stay inside it up to `tol`.
	"""

	t = marks.horizon if t is None else t

	if step <= 0:
		raise InvalidParameter(f"The step must be positive, got {step}.")

	weight = bonus_factor(marks, t)
	required = certified_radius(kappa, t, tol / (2.0 * weight)) if kappa > 0 else 0

	if radius < required:
		raise InvalidParameter(f"Box radius {radius} is too small: tolerance {tol:g} requires radius {required}.")

	generator = stencil(max(radius, 1), marks.dim)
	u = np.ones((2 * max(radius, 1) + 1) ** marks.dim)
	active = marks.until(t)
	times = [mark.time for mark in active] + [t]
	previous = 0.0
	pieces = sum(max(1, ceil((time - prev) / step)) for prev, time in zip([0.0] + times[:-1], times))
	budget = tol / (2.0 * weight * pieces)

	for k, time in enumerate(times):
		count = max(1, ceil((time - previous) / step))

		for _ in range(count):
			rate_time = kappa * (time - previous) / count
			u = propagate(u, generator, rate_time, uniformization_cutoff(rate_time, budget))

		previous = time

		if k < len(active):
			index = _flat_index(active[k].site, max(radius, 1))

			if index is not None:
				u[index] *= 1.0 + active[k].r

	shape = (2 * max(radius, 1) + 1,) * marks.dim
	profile = MassProfile(t, (-max(radius, 1),) * marks.dim, u.reshape(shape))

	return OdeSolution(profile, profile.at((0,) * marks.dim))


def feynman_kac_crosscheck(
	marks: MarkSet, kappa: float, t: Optional[float] = None, epsilon: float = 1e-7, step: float = 0.05,
	tol: float = 1e-6,
) -> CrossCheck:
	"""Compares `u(t, 0)` with the exact enclosure of `Z_t` for the marks reversed in time, `s -> t - s`."""

	t = marks.horizon if t is None else t
	interval = ct_partition_exact(marks.reversed(t), kappa, t, epsilon)
	solution = pam_ode_solve(marks, kappa, t, max(interval.radius, 1), step, epsilon)
	defect = max(0.0, interval.lo - solution.value, solution.value - interval.hi)

	return CrossCheck(solution.value, interval, defect, defect <= tol)


def covering_mark_set(
	rate: float, law: EnvSpec, kappa: float, t: float, epsilon: float, rng: np.random.Generator, d: int = 1,
	cap: int = RADIUS_CAP,
) -> MarkSet:
	"""Samples marks on a box that covers the radius `ct_partition_exact` certifies at jump rate `kappa`.

	That radius grows with the bonuses the marks carry, so the box is extended with fresh marks on the added sites
	until it covers the radius required by the bonus factor of its own marks.

	Raises
	------
	ResourceExceeded
		If the required radius exceeds the cap.
	"""

	if kappa == 0.0:
		return sample_mark_set(rate, law, t, 0, rng, d)

	marks = sample_mark_set(rate, law, t, certified_radius(kappa, t, epsilon / 2.0, cap), rng, d)

	while True:
		required = certified_radius(kappa, t, epsilon / (2.0 * bonus_factor(marks, t)), cap)

		if required <= marks.box_radius:
			return marks

		marks = extend_mark_set(marks, required, rng)


def sample_ct_partition_functions(
	rate: float, law: EnvSpec, kappas: Sequence[float], t: float, n: int, seed: int, epsilon: float = 1e-6,
	d: int = 1, threads: int = 1,
) -> np.ndarray:
	"""Samples `n` mark sets and returns the enclosure midpoints of `Z_t` for every jump rate in each, of shape
	`(n, len(kappas))`; all rates see the same environments."""

	def replica(rng: np.random.Generator) -> list[float]:
		marks = covering_mark_set(rate, law, max(kappas), t, epsilon, rng, d)

		return [ct_partition_exact(marks, kappa, t, epsilon).midpoint for kappa in kappas]

	return np.array(run_replicas(replica, seed, n, threads, desc="mark sets"), dtype=float).reshape(n, len(kappas))


def lyapunov_quenched_estimate(
	rate: float, law: EnvSpec, kappa: float, t: float, n_env: int, seed: int, epsilon: float = 1e-6,
	threads: int = 1,
) -> FreeEnergyEstimate:
	"""Estimates the quenched Lyapunov exponent by `(1/t) log Z_t` over `n_env` environments, conditioning on `Z_t > 0`
	and reporting the surviving fraction.

	Raises
	------
	DegenerateEstimate
		If every sampled `Z_t` vanishes.
	"""

	return free_energy_from_samples(sample_ct_partition_functions(rate, law, [kappa], t, n_env, seed, epsilon, 1,
		threads)[:, 0], t)


def annealed_from_samples(values: np.ndarray, r: float, t: float) -> FreeEnergyEstimate:
	"""`(1/(r t)) log mean(Z^r)` with its delta-method standard error.

	Raises
	------
	DegenerateEstimate
		If every sample vanishes.
	"""

	values = np.asarray(values, dtype=float)
	moments = values**r
	mean = float(moments.mean())

	if mean == 0.0:
		raise DegenerateEstimate("Degenerate: every sample of Z_t vanished, the annealed exponent is -inf.")

	se = float(moments.std(ddof=1) / np.sqrt(len(moments))) / (mean * r * t) if len(moments) > 1 else float("nan")

	return FreeEnergyEstimate(log(mean) / (r * t), se, float(np.mean(values > 0.0)), len(values))


def lyapunov_annealed_estimate(
	rate: float, law: EnvSpec, kappa: float, r: float, t: float, n_env: int, seed: int, epsilon: float = 1e-6,
	threads: int = 1,
) -> FreeEnergyEstimate:
	"""Estimates the `r`-th annealed Lyapunov exponent `(1/(r t)) log E[Z_t^r]` over `n_env` environments.

	Raises
	------
	InvalidParameter
		If `r <= 0`.
	"""

	if r <= 0:
		raise InvalidParameter(f"Annealed exponents need r > 0, got {r}.")

	values = sample_ct_partition_functions(rate, law, [kappa], t, n_env, seed, epsilon, 1, threads)[:, 0]

	return annealed_from_samples(values, r, t)


def ct_martingale_fractional_moment(
	rate: float, law: EnvSpec, kappa: float, t: float, n_env: int, seed: int, r: float = 0.5,
	epsilon: float = 1e-6, threads: int = 1,
) -> MCEstimate:
	"""Estimates `E[(Z_t e^{-alpha t})^r]`, which is at most one for `r` in `(0, 1]`."""

	if not 0.0 < r <= 1.0:
		raise InvalidParameter(f"Fractional moments need r in (0, 1], got {r}.")

	values = sample_ct_partition_functions(rate, law, [kappa], t, n_env, seed, epsilon, 1, threads)[:, 0]

	return MCEstimate.from_samples((values * exp(-annealed_exponent(rate, law) * t)) ** r)
