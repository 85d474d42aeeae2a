#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# IMPORTS #############################################################################################################

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, NamedTuple, Optional, Sequence

import numpy as np


# EXCEPTIONS ##########################################################################################################


class InvalidParameter(RuntimeError):
	"""A law, a walk, a permutation or a precondition of an operation is malformed."""


class WindowError(InvalidParameter):
	"""A lookup fell outside the finite window an environment was realized on."""


class ConfigError(InvalidParameter):
	"""An experiment configuration does not match the shipped schema."""


class ResourceExceeded(RuntimeError):
	"""An instance is too large for the configured enumeration, permutation or radius cap."""


class DegenerateEstimate(RuntimeError):
	"""Every sample of a logarithmic functional vanished, the estimate is -inf at this horizon."""


# CLASSES AND TYPE ALIASES ############################################################################################


Site = tuple[int, ...]


@dataclass(frozen=True)
class FiniteDist:
	"""The exact law of a finitely supported random variable (or random vector).

	Attributes
	----------
	values : np.ndarray
		Atom values, of shape `(n,)` for scalars or `(n, k)` for vectors.
	probs : np.ndarray
		Atom probabilities, of shape `(n,)`, summing to one.
	"""

	values: np.ndarray
	probs: np.ndarray

	def __post_init__(self: FiniteDist) -> None:
		values = np.asarray(self.values, dtype=float)
		probs = np.asarray(self.probs, dtype=float)

		if values.shape[0] != probs.shape[0]:
			raise InvalidParameter(f"Got {values.shape[0]} atoms but {probs.shape[0]} probabilities.")
		elif np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
			raise InvalidParameter(f"Probabilities must be non-negative and sum to 1, got total {probs.sum()!r}.")
		elif np.any(values < 0):
			raise InvalidParameter("Partition function laws only carry non-negative values.")

		object.__setattr__(self, "values", values)
		object.__setattr__(self, "probs", probs)

	@classmethod
	def from_pairs(cls: type[FiniteDist], pairs: Sequence[tuple[Any, float]]) -> FiniteDist:
		return cls(np.array([value for value, _ in pairs], dtype=float), np.array([prob for _, prob in pairs]))

	def __len__(self: FiniteDist) -> int:
		return len(self.probs)

	@property
	def mean(self: FiniteDist) -> np.ndarray:
		return np.tensordot(self.probs, self.values, axes=1)

	def expect(self: FiniteDist, f: Callable[[np.ndarray], np.ndarray]) -> float:
		"""The expectation of `f` applied atom-wise, `f` being vectorized over the values.

		Parameters
		----------
		self : FiniteDist
			The instance of `FiniteDist`.
		f : Callable[[np.ndarray], np.ndarray]
			A function mapping the array of values to the array of images.

		Returns
		-------
		float
			The expectation of `f`.
		"""

		return float(np.dot(self.probs, f(self.values)))

	def marginal(self: FiniteDist, index: int) -> FiniteDist:
		if self.values.ndim != 2:
			raise InvalidParameter("Marginals are only defined for laws of random vectors.")

		return FiniteDist(self.values[:, index], self.probs).merged()

	def merged(self: FiniteDist, decimals: int = 14) -> FiniteDist:
		"""Merges the atoms whose values agree once rounded to `decimals` digits.

		Returns
		-------
		FiniteDist
			A law with pairwise distinct atoms, sorted by value.
		"""

		keys = np.round(self.values, decimals)
		unique, inverse = np.unique(keys, axis=0, return_inverse=True)
		probs = np.zeros(len(unique))
		np.add.at(probs, inverse.reshape(-1), self.probs)

		return FiniteDist(unique, probs / probs.sum())

	def pformat(self: FiniteDist, level: int = 0) -> str:
		i = "\n" + ("\t" * level)

		return f"{i}law {{" + "".join(
			f"{i}\t{value} : {prob:.6g};" for value, prob in zip(self.values.tolist(), self.probs)
		) + f"{i}}}"


@dataclass(frozen=True)
class MassProfile:
	"""A mass profile over a box of sites, the state of the transfer-matrix recursion.

	Attributes
	----------
	time : float
		The time (slice) the profile belongs to.
	lo : Site
		The site stored at index `(0, ..., 0)` of `masses`.
	masses : np.ndarray
		Non-negative masses, one axis per dimension.
	"""

	time: float
	lo: Site
	masses: np.ndarray

	@property
	def total(self: MassProfile) -> float:
		return float(self.masses.sum())

	def at(self: MassProfile, site: Site) -> float:
		index = tuple(s - o for s, o in zip(site, self.lo))

		if any(k < 0 or k >= n for k, n in zip(index, self.masses.shape)):
			return 0.0

		return float(self.masses[index])

	def as_dict(self: MassProfile) -> dict[Site, float]:
		return {
			tuple(int(k + o) for k, o in zip(index, self.lo)): float(mass)
			for index, mass in np.ndenumerate(self.masses) if mass != 0.0
		}


class PartitionResult(NamedTuple):
	"""A partition function value together with the data it was computed from.

	Attributes
	----------
	value : float
		The partition function.
	horizon : int
		The horizon.
	metadata : dict[str, Any]
		Walk description and window used.
	profile : Optional[MassProfile]
		The final mass profile, when the computation produced one.
	"""

	value: float
	horizon: int
	metadata: dict[str, Any]
	profile: Optional[MassProfile] = None


class MCEstimate(NamedTuple):
	"""A sample mean with its standard error; exact computations carry `se == 0` and `exact == True`.

	Attributes
	----------
	mean : float
		The estimate.
	se : float
		Its standard error.
	n : int
		The number of samples (or of enumerated configurations when exact).
	exact : bool
		Whether the value is an exact expectation.
	"""

	mean: float
	se: float
	n: int
	exact: bool = False

	@classmethod
	def from_samples(cls: type[MCEstimate], samples: np.ndarray) -> MCEstimate:
		samples = np.asarray(samples, dtype=float)
		n = len(samples)

		if n == 0:
			raise InvalidParameter("Cannot estimate a mean from zero samples.")

		se = float(samples.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")

		return cls(float(samples.mean()), se, n)

	def agrees_with(self: MCEstimate, value: float, k: float = 3.0, slack: float = 0.0) -> bool:
		return abs(self.mean - value) <= k * self.se + slack + 1e-12


class IntervalEstimate(NamedTuple):
	"""A certified enclosure `[lo, hi]` of a continuous-time partition function.

	Attributes
	----------
	lo, hi : float
		The bounds, `0 <= lo <= hi`.
	radius : int
		The radius of the box the walk was confined to.
	cutoff : int
		The largest Poisson series cutoff used over all segments.
	epsilon : float
		The declared accuracy, `hi - lo <= epsilon`.
	"""

	lo: float
	hi: float
	radius: int
	cutoff: int
	epsilon: float

	@property
	def midpoint(self: IntervalEstimate) -> float:
		return 0.5 * (self.lo + self.hi)

	@property
	def width(self: IntervalEstimate) -> float:
		return self.hi - self.lo

	def contains(self: IntervalEstimate, value: float, slack: float = 0.0) -> bool:
		return self.lo - slack <= value <= self.hi + slack


class ExperimentConfig(NamedTuple):
	"""A validated experiment configuration.

	Attributes
	----------
	subcommand : str
		The experiment to run.
	params : dict[str, Any]
		Model parameters (laws, walks, horizons, grids).
	resources : dict[str, Any]
		Caps, sample sizes, accuracies and tolerances.
	seed : Optional[int]
		Master seed, mandatory for stochastic experiments.
	threads : int
		Worker threads for replicas.
	source : Optional[Path]
		The file the configuration was read from.
	"""

	subcommand: str
	params: dict[str, Any]
	resources: dict[str, Any]
	seed: Optional[int]
	threads: int = 1
	source: Optional[Path] = None

	def json(self: ExperimentConfig) -> dict[str, Any]:
		return {
			"subcommand": self.subcommand,
			"params": self.params,
			"resources": self.resources,
			"seed": self.seed,
			"source": str(self.source) if self.source is not None else None,
		}

	def pformat(self: ExperimentConfig, level: int = 0) -> str:
		i = "\n" + ("\t" * level)

		return (f"{i}configuration {{"
			f"{i}\tsubcommand : {self.subcommand};"
			f"{i}\tparams : {self.params};"
			f"{i}\tresources : {self.resources};"
			f"{i}\tseed : {self.seed};{i}}}")


@dataclass
class ResultRecord:
	"""The machine-readable outcome of an experiment.

	Attributes
	----------
	config : ExperimentConfig
		The configuration echo.
	outputs : dict[str, Any]
		Scalar outputs (estimates, intervals, reports).
	tables : dict[str, list[dict[str, Any]]]
		Row-oriented tables, also written as CSV.
	verdicts : dict[str, bool]
		Verdict-type checks; the run passes iff all of them hold.
	provenance : dict[str, Any]
		Version, timestamp and wall time.
	labels : list[str]
		Free-form labels such as "exploratory: no acceptance claim".
	"""

	config: ExperimentConfig
	outputs: dict[str, Any] = field(default_factory=dict)
	tables: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
	verdicts: dict[str, bool] = field(default_factory=dict)
	provenance: dict[str, Any] = field(default_factory=dict)
	labels: list[str] = field(default_factory=list)

	@property
	def passed(self: ResultRecord) -> bool:
		return all(self.verdicts.values())

	def json(self: ResultRecord) -> dict[str, Any]:
		return {
			"config": self.config.json(),
			"outputs": self.outputs,
			"tables": self.tables,
			"verdicts": self.verdicts,
			"passed": self.passed,
			"labels": self.labels,
			"provenance": self.provenance,
		}
