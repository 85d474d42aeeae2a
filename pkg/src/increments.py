#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Step laws of walks: lattice and tree increments, convolution, majorization certificates, named families, and the
box-restricted kernel of the continuous-time simple random walk."""

# IMPORTS #############################################################################################################

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product
from typing import Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

from envlat import Box, MASS_TOLERANCE

from model import InvalidParameter, Site

from scipy import sparse  # type: ignore
from scipy.special import comb  # type: ignore
from scipy.stats import poisson  # type: ignore


# CLASSES AND TYPE ALIASES ############################################################################################


@dataclass(frozen=True, eq=False)
class IncrementDist:
	"""A finitely supported step law on `Z^d`.

	Attributes
	----------
	support : np.ndarray
		Distinct steps, of shape `(n, d)`.
	probs : np.ndarray
		Their probabilities, of shape `(n,)`.
	"""

	support: np.ndarray
	probs: np.ndarray

	def __post_init__(self: IncrementDist) -> None:
		support = np.asarray(self.support, dtype=np.int64)
		probs = np.asarray(self.probs, dtype=float)

		if support.ndim == 1:
			support = support.reshape(-1, 1)

		if len(support) == 0 or len(support) != len(probs):
			raise InvalidParameter(f"Got {len(support)} steps for {len(probs)} probabilities.")
		elif len({tuple(step) for step in support.tolist()}) != len(support):
			raise InvalidParameter("Support entries must be distinct.")
		elif np.any(probs < 0.0) or abs(probs.sum() - 1.0) > MASS_TOLERANCE:
			raise InvalidParameter(f"Step probabilities must be non-negative and sum to 1, got total {probs.sum()!r}.")

		object.__setattr__(self, "support", support)
		object.__setattr__(self, "probs", probs)

	@classmethod
	def from_pairs(cls: type[IncrementDist], pairs: Sequence[tuple[Union[int, Sequence[int]], float]]) -> IncrementDist:
		return cls(
			np.array([np.atleast_1d(step) for step, _ in pairs], dtype=np.int64),
			np.array([prob for _, prob in pairs], dtype=float),
		)

	@classmethod
	def dirac(cls: type[IncrementDist], step: Union[int, Site] = 0, d: int = 1) -> IncrementDist:
		step = np.atleast_1d(step) if not np.isscalar(step) else np.full(d, step)

		return cls(np.array([step], dtype=np.int64), np.ones(1))

	@classmethod
	def uniform(cls: type[IncrementDist], steps: Sequence[Union[int, Site]]) -> IncrementDist:
		return cls(np.array([np.atleast_1d(step) for step in steps], dtype=np.int64), np.full(len(steps), 1.0 / len(steps)))

	def __len__(self: IncrementDist) -> int:
		return len(self.probs)

	@property
	def dim(self: IncrementDist) -> int:
		return self.support.shape[1]

	@property
	def reach(self: IncrementDist) -> Box:
		"""The smallest box containing the support."""

		return Box(tuple(self.support.min(axis=0).tolist()), tuple(self.support.max(axis=0).tolist()))

	def as_dict(self: IncrementDist) -> dict[Site, float]:
		return {tuple(step): float(prob) for step, prob in zip(self.support.tolist(), self.probs)}

	def prob(self: IncrementDist, step: Union[int, Site]) -> float:
		return self.as_dict().get(tuple(np.atleast_1d(step).tolist()), 0.0)

	def kernel(self: IncrementDist) -> tuple[np.ndarray, Box]:
		"""The law as a dense array laid out over its reach box."""

		box = self.reach
		dense = np.zeros(box.shape)

		for step, prob in zip(self.support.tolist(), self.probs):
			dense[box.index(step)] += prob

		return dense, box

	def pformat(self: IncrementDist, level: int = 0) -> str:
		i = "\n" + ("\t" * level)

		return f"{i}increments {{" + "".join(f"{i}\t{step} : {prob:.6g};" for step, prob in self.as_dict().items()) + f"{i}}}"


"""A walk: one step law for every step, or a per-step sequence of laws."""
Walk = Union[IncrementDist, Sequence[IncrementDist]]


@dataclass(frozen=True, eq=False)
class TreeIncrementDist:
	"""A step law on the children `1..K` of a node: `probs[a - 1]` is the probability of moving to child `a`."""

	probs: np.ndarray

	def __post_init__(self: TreeIncrementDist) -> None:
		probs = np.asarray(self.probs, dtype=float)

		if probs.ndim != 1 or len(probs) < 2:
			raise InvalidParameter("A tree step law needs an arity of at least 2.")
		elif np.any(probs < 0.0) or abs(probs.sum() - 1.0) > MASS_TOLERANCE:
			raise InvalidParameter(f"Tree step probabilities must be non-negative and sum to 1, got {probs.tolist()}.")

		object.__setattr__(self, "probs", probs)

	@classmethod
	def uniform(cls: type[TreeIncrementDist], arity: int) -> TreeIncrementDist:
		return cls(np.full(arity, 1.0 / arity))

	@classmethod
	def dirac(cls: type[TreeIncrementDist], a: int, arity: int) -> TreeIncrementDist:
		probs = np.zeros(arity)
		probs[a - 1] = 1.0

		return cls(probs)

	@property
	def arity(self: TreeIncrementDist) -> int:
		return len(self.probs)

	def __call__(self: TreeIncrementDist, a: int) -> float:
		return float(self.probs[a - 1])


class MajorizationCertificate(NamedTuple):
	"""The outcome of a majorization test `p <=_M q`.

	Attributes
	----------
	verdict : bool
		Whether `p` is majorized by `q`.
	gaps : np.ndarray
		Partial-sum gaps `sum_{i<=k} q_(i) - sum_{i<=k} p_(i)` of the descending sorts.
	failing_index : Optional[int]
		The first `k` (0-based) with a negative gap beyond tolerance.
	mass_mismatch : bool
		Whether the total masses differ beyond tolerance.
	"""

	verdict: bool
	gaps: np.ndarray
	failing_index: Optional[int]
	mass_mismatch: bool


class CTWalkParams(NamedTuple):
	"""A continuous-time simple random walk on `Z^d` jumping at rate `kappa` to a uniform neighbor."""

	kappa: float
	d: int = 1

	def validate(self: CTWalkParams) -> CTWalkParams:
		if self.kappa < 0:
			raise InvalidParameter(f"The jump rate must be non-negative, got {self.kappa}.")
		elif self.d < 1:
			raise InvalidParameter(f"The dimension must be positive, got {self.d}.")

		return self


# FUNCTIONS ###########################################################################################################


def srw(d: int = 1) -> IncrementDist:
	"""The simple random walk: a uniform step to one of the `2d` neighbors."""

	return lazy_srw(d, 0.0)


def lazy_srw(d: int = 1, hold: float = 0.5) -> IncrementDist:
	"""Stays put with probability `hold`, otherwise steps to a uniform neighbor."""

	if not 0.0 <= hold <= 1.0:
		raise InvalidParameter(f"The holding probability must lie in [0, 1], got {hold}.")

	steps = [s * e for e in np.eye(d, dtype=np.int64) for s in (-1, 1)]
	probs = [(1.0 - hold) / (2 * d)] * (2 * d)

	if hold > 0.0:
		steps.append(np.zeros(d, dtype=np.int64))
		probs.append(hold)

	return IncrementDist(np.array(steps), np.array(probs))


def binomial_increments(a: int, p: float) -> IncrementDist:
	"""The `Bin(a, p)` step law on `{0..a}`."""

	if a < 0 or not 0.0 <= p <= 1.0:
		raise InvalidParameter(f"Invalid binomial parameters a={a}, p={p}.")

	k = np.arange(a + 1)
	probs = comb(a, k) * p**k * (1.0 - p) ** (a - k)

	return IncrementDist(k, probs / probs.sum())


def binomial_witness(a: int, b: int, p: float) -> IncrementDist:
	"""The step law `q` with `Bin(a, p) * q = Bin(b, p)`, for `a <= b`."""

	if a > b:
		raise InvalidParameter(f"Bin({a}, p) is not a convolution factor of Bin({b}, p).")

	return binomial_increments(b - a, p)


def heavy_tail_increments(alpha: float, cutoff: int) -> IncrementDist:
	"""Steps on `{-cutoff..cutoff}` with probabilities proportional to `exp(-|i|**alpha)`."""

	if alpha <= 0 or cutoff < 1:
		raise InvalidParameter(f"Need alpha > 0 and cutoff >= 1, got {alpha}, {cutoff}.")

	steps = np.arange(-cutoff, cutoff + 1)

	with np.errstate(over="ignore"):
		weights = np.exp(-np.abs(steps).astype(float) ** alpha)

	return IncrementDist(steps, weights / weights.sum())


def convolve(p: IncrementDist, q: IncrementDist) -> IncrementDist:
	"""The law `(p * q)(k) = sum_j p(j) q(k - j)` of the sum of independent steps.

	Raises
	------
	InvalidParameter
		If the dimensions differ.
	"""

	if p.dim != q.dim:
		raise InvalidParameter(f"Cannot convolve laws on Z^{p.dim} and Z^{q.dim}.")

	law: dict[Site, float] = {}

	for (i, pi), (j, qj) in product(p.as_dict().items(), q.as_dict().items()):
		k = tuple(a + b for a, b in zip(i, j))
		law[k] = law.get(k, 0.0) + pi * qj

	steps = sorted(k for k, prob in law.items() if prob > 0.0)

	return IncrementDist(np.array(steps), np.array([law[k] for k in steps]))


def walk_steps(walk: Walk, t: int) -> list[IncrementDist]:
	"""The step laws of steps `1..t`."""

	if isinstance(walk, IncrementDist):
		return [walk] * t
	elif len(walk) < t:
		raise InvalidParameter(f"A walk with {len(walk)} step laws cannot run for {t} steps.")

	steps = list(walk[:t])

	if len({step.dim for step in steps}) > 1:
		raise InvalidParameter("All step laws of a walk must share the dimension.")

	return steps


def walk_dim(walk: Walk) -> int:
	return walk.dim if isinstance(walk, IncrementDist) else walk[0].dim


def reach_window(*walks: Walk, t: int, start: int = 1) -> tuple[Box, ...]:
	"""The boxes of sites reachable at times `start..t` by any of the walks, which start at the origin."""

	if not walks:
		raise InvalidParameter("Need at least one walk.")

	boxes: list[Optional[Box]] = [None] * (t + 1)

	for walk in walks:
		box = Box.point((0,) * walk_dim(walk))
		boxes[0] = box if boxes[0] is None else boxes[0].union(box)

		for s, step in enumerate(walk_steps(walk, t), start=1):
			reach = step.reach
			box = Box(
				tuple(l + r for l, r in zip(box.lo, reach.lo)), tuple(h + r for h, r in zip(box.hi, reach.hi)),
			)
			boxes[s] = box if boxes[s] is None else boxes[s].union(box)

	return tuple(boxes[start:])  # type: ignore


def enumerate_paths(walk: Walk, t: int) -> Iterator[tuple[np.ndarray, float]]:
	"""Emits every path of positive probability up to time `t` as an array of shape `(t + 1, d)`, with its
	probability."""

	steps = [step.as_dict() for step in walk_steps(walk, t)]
	origin = (0,) * walk_dim(walk)

	for choice in product(*(law.items() for law in steps)):
		path = np.cumsum(np.array([origin] + [step for step, _ in choice], dtype=np.int64), axis=0)

		yield path, float(np.prod([prob for _, prob in choice]))


def _as_vector(law: Union[IncrementDist, TreeIncrementDist, Sequence[float], np.ndarray]) -> np.ndarray:
	return np.asarray(law.probs if isinstance(law, (IncrementDist, TreeIncrementDist)) else law, dtype=float)


def is_majorized(
	p: Union[IncrementDist, TreeIncrementDist, Sequence[float], np.ndarray],
	q: Union[IncrementDist, TreeIncrementDist, Sequence[float], np.ndarray],
	tol: float = 1e-12,
) -> MajorizationCertificate:
	"""Tests whether `p` is majorized by `q`: every descending partial sum of `p` is dominated by the one of `q`, and
	the total masses agree.

	Parameters
	----------
	p, q : Union[IncrementDist, TreeIncrementDist, Sequence[float], np.ndarray]
		Laws or non-negative vectors; the shorter one is padded with zeros.
	tol : float, optional
		Slack on every comparison (default: 1e-12).

	Returns
	-------
	MajorizationCertificate
		The verdict and its witnesses.
	"""

	u, v = _as_vector(p), _as_vector(q)

	if np.any(u < 0) or np.any(v < 0):
		raise InvalidParameter("Majorization compares non-negative vectors.")

	n = max(len(u), len(v))
	u = np.sort(np.pad(u, (0, n - len(u))))[::-1]
	v = np.sort(np.pad(v, (0, n - len(v))))[::-1]
	gaps = np.cumsum(v) - np.cumsum(u)
	mass_mismatch = bool(abs(gaps[-1]) > tol)
	failing = np.flatnonzero(gaps[:-1] < -tol)
	failing_index = int(failing[0]) if len(failing) else None

	return MajorizationCertificate(not mass_mismatch and failing_index is None, gaps, failing_index, mass_mismatch)


def is_symmetric_unimodal(p: IncrementDist, tol: float = 1e-12) -> bool:
	"""Whether `p(i) = p(-i)` for all `i` and `i -> p(i)` is non-increasing on `i >= 0`.

	Raises
	------
	InvalidParameter
		If `p` is not a law on `Z`.
	"""

	if p.dim != 1:
		raise InvalidParameter("Symmetric unimodality is only defined on Z.")

	law = {step[0]: prob for step, prob in p.as_dict().items()}
	radius = max(abs(i) for i in law)
	values = [law.get(i, 0.0) for i in range(radius + 1)]

	return all(abs(law.get(i, 0.0) - law.get(-i, 0.0)) <= tol for i in range(1, radius + 1)) and all(
		b <= a + tol for a, b in zip(values, values[1:])
	)


def stencil(radius: int, d: int = 1) -> sparse.csr_matrix:
	"""The one-step kernel of the simple random walk on `{-radius..radius}^d`, killed when it leaves the box.

	States are ordered as the sites of `Box.cube(radius, d)`, i.e. row-major over the box array.
	"""

	shape = (2 * radius + 1,) * d
	size = int(np.prod(shape))
	index = np.arange(size).reshape(shape)
	rows, cols = [], []

	for axis in range(d):
		for shift in (-1, 1):
			source = [slice(None)] * d
			target = [slice(None)] * d
			source[axis] = slice(max(0, -shift), shape[axis] - max(0, shift))
			target[axis] = slice(max(0, shift), shape[axis] - max(0, -shift))
			rows.append(index[tuple(source)].reshape(-1))
			cols.append(index[tuple(target)].reshape(-1))

	rows_, cols_ = np.concatenate(rows), np.concatenate(cols)

	return sparse.csr_matrix((np.full(len(rows_), 1.0 / (2 * d)), (rows_, cols_)), shape=(size, size))


def uniformization_cutoff(rate_time: float, epsilon: float) -> int:
	"""The smallest `N` such that a Poisson(`rate_time`) variable exceeds `N` with probability below `epsilon`."""

	if rate_time == 0.0:
		return 0

	cutoff = max(0, int(poisson.isf(epsilon, rate_time)))

	while poisson.sf(cutoff, rate_time) >= epsilon:
		cutoff += 1

	return cutoff


def propagate(u: np.ndarray, step: sparse.csr_matrix, rate_time: float, cutoff: int) -> np.ndarray:
	"""Applies `sum_{n <= cutoff} Poisson(rate_time)(n) S^n` to `u`, where `S` acts as `u -> step @ u`."""

	weights = poisson.pmf(np.arange(cutoff + 1), rate_time)
	term = u
	result = weights[0] * u

	for weight in weights[1:]:
		term = step @ term
		result = result + weight * term

	return result


def ct_srw_kernel(params: CTWalkParams, t: float, radius: int, epsilon: float) -> tuple[np.ndarray, float]:
	"""Transition probabilities over time `t` of the rate-`kappa` simple random walk killed when it leaves
	`{-radius..radius}^d`, by uniformization.

	Parameters
	----------
	params : CTWalkParams
		The jump rate and dimension.
	t : float
		The time.
	radius : int
		The box radius, at least 1.
	epsilon : float
		Twice the largest Poisson series tail allowed.

	Returns
	-------
	tuple[np.ndarray, float]
		The matrix `p_t(i, j)` over the box sites, and a bound on its distance to the unrestricted kernel: the series
		tail plus the probability of at least `radius` jumps.

	Raises
	------
	InvalidParameter
		If `epsilon <= 0`, `radius < 1` or `t < 0`.
	"""

	params.validate()

	if epsilon <= 0:
		raise InvalidParameter(f"The accuracy must be positive, got {epsilon}.")
	elif radius < 1 or t < 0:
		raise InvalidParameter(f"Need radius >= 1 and t >= 0, got {radius}, {t}.")

	rate_time = params.kappa * t
	cutoff = uniformization_cutoff(rate_time, epsilon / 2)
	step = stencil(radius, params.d)
	matrix = propagate(np.eye(step.shape[0]), step, rate_time, cutoff)
	bound = float(poisson.sf(cutoff, rate_time) + poisson.sf(radius - 1, rate_time)) if rate_time > 0 else 0.0

	logging.debug(f"Uniformized kernel: radius {radius}, cutoff {cutoff}, bound {bound:.3g}.")

	return matrix, bound
