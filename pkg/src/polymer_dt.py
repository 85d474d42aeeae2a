#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Discrete-time polymer on `Z^d`: partition functions by transfer-matrix recursion, path weights and their
consistency, exact laws by enumeration, and Monte Carlo functionals over environments."""

# IMPORTS #############################################################################################################

from __future__ import annotations

import logging
from typing import Callable, Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

from envlat import (
	ENUMERATION_CAP, EnvSpec, LatticeField, Window, as_path, enumerate_lattice_fields, sample_lattice_field,
	shift_lattice,
)

from increments import Walk, enumerate_paths, reach_window, walk_dim, walk_steps

from model import DegenerateEstimate, FiniteDist, InvalidParameter, MCEstimate, MassProfile, PartitionResult, WindowError

from replicas import run_replicas

from scipy.signal import convolve  # type: ignore

from timed import timed_callable


# CLASSES #############################################################################################################


class FreeEnergyEstimate(NamedTuple):
	"""A finite-horizon estimate of the quenched free energy `(1/t) log Z_t`.

	Attributes
	----------
	estimate : float
		The mean of `(1/t) log Z_t` over the environments where `Z_t > 0`.
	se : float
		Its standard error.
	survival_fraction : float
		The fraction of environments where `Z_t > 0`.
	n : int
		The number of environments sampled.
	"""

	estimate: float
	se: float
	survival_fraction: float
	n: int


class StaticEnvTable(NamedTuple):
	"""Concave and convex functionals of `Z_t` under a time-constant environment, one row per walk."""

	rows: list[dict[str, float]]
	samples: dict[str, np.ndarray]


# FUNCTIONS ###########################################################################################################


def _check_window(field: LatticeField, window: Window) -> None:
	if field.horizon < len(window):
		raise WindowError(f"A field of horizon {field.horizon} cannot carry a walk over {len(window)} steps.")

	for s, box in enumerate(window, start=1):
		if not field.covers(s, box):
			raise WindowError(f"Slice {s} of the field does not cover the reachable box {box}.")


def partition_function(field: LatticeField, p: Walk, t: Optional[int] = None) -> PartitionResult:
	"""Computes `Z_t = E[prod_{s=1..t} (1 + omega(s, X_s))]` for the walk started at the origin.

	The mass profile follows `u_0 = delta_0` and `u_s(j) = (1 + omega(s, j)) sum_i u_{s-1}(i) p(j - i)`, on dense
	arrays over the reachable boxes; a hard obstacle (`omega = -1`) zeroes the mass of its cell.

	Parameters
	----------
	field : LatticeField
		The environment.
	p : Walk
		One step law, or the sequence of the step laws of steps `1..t`.
	t : Optional[int], optional
		The horizon (default: the horizon of the field).

	Returns
	-------
	PartitionResult
		The partition function and the final mass profile.

	Raises
	------
	WindowError
		If the field does not cover the reachable set of the walk.
	"""

	t = field.horizon if t is None else t
	steps = walk_steps(p, t)
	window = reach_window(p, t=t)
	_check_window(field, window)

	mass = np.ones((1,) * walk_dim(p))
	lo = (0,) * walk_dim(p)

	for s, (step, box) in enumerate(zip(steps, window), start=1):
		kernel, reach = step.kernel()
		mass = convolve(mass, kernel, method="direct") * (1.0 + field.subarray(s, box))
		lo = tuple(a + b for a, b in zip(lo, reach.lo))

	return PartitionResult(
		float(mass.sum()), t, {"window": [(box.lo, box.hi) for box in window], "cells": sum(b.size for b in window)},
		MassProfile(t, lo, mass),
	)


def path_weight(field: LatticeField, path: Union[Sequence[int], np.ndarray], t: Optional[int] = None) -> float:
	"""The single-path weight `prod_{s=1..t} (1 + omega(s, x_s))`."""

	t = field.horizon if t is None else t
	x = as_path(path, field.dim)

	if len(x) < t + 1:
		raise InvalidParameter(f"A path of length {len(x) - 1} is too short for horizon {t}.")

	return float(np.prod([1.0 + field.value(s, tuple(x[s].tolist())) for s in range(1, t + 1)]))


def partition_function_by_paths(field: LatticeField, p: Walk, t: Optional[int] = None) -> float:
	"""`Z_t` as the explicit sum of path weights over every path, for cross-checking the recursion."""

	t = field.horizon if t is None else t

	return sum(prob * path_weight(field, path, t) for path, prob in enumerate_paths(p, t))


def consistency_check(
	field: LatticeField,
	x: Union[Sequence[int], np.ndarray],
	y: Union[Sequence[int], np.ndarray],
	t: Optional[int] = None,
	tol: float = 1e-12,
) -> bool:
	"""Tests `F_t(omega, x + y) = F_t(theta^y omega, x)` for the single-path weight `F_t`.

	Raises
	------
	WindowError
		If either side reads outside the window of the field.
	"""

	t = field.horizon if t is None else t
	x, y = as_path(x, field.dim), as_path(y, field.dim)

	if len(x) < t + 1 or len(y) < t + 1:
		raise InvalidParameter(f"Both paths must reach horizon {t}.")

	lhs = path_weight(field, x[:t + 1] + y[:t + 1], t)
	rhs = path_weight(shift_lattice(field, y), x, t)

	return abs(lhs - rhs) <= tol


def annealed_mean(spec: EnvSpec, t: int) -> float:
	"""`E[Z_t] = R^t`, whatever the walk."""

	return spec.mean_factor**t


def normalized(value: float, spec: EnvSpec, t: int) -> float:
	"""The martingale `W_t = Z_t e^{-alpha t}`, with `alpha = log R`."""

	return value / annealed_mean(spec, t)


def _enumerate(spec: EnvSpec, t: int, walks: Sequence[Walk], cap: int) -> Iterator[tuple[LatticeField, float]]:
	return enumerate_lattice_fields(spec, t, reach_window(*walks, t=t), cap)


@timed_callable("Enumerating the joint law of two partition functions...")
def joint_partition_distribution(
	spec: EnvSpec, p1: Walk, p2: Walk, t: int, cap: int = ENUMERATION_CAP,
) -> FiniteDist:
	"""The exact joint law of `(Z^{p1}_t, Z^{p2}_t)`, both driven by the same environment.

	Raises
	------
	ResourceExceeded
		If the enumeration exceeds the cap.
	"""

	pairs = [
		((partition_function(field, p1, t).value, partition_function(field, p2, t).value), prob)
		for field, prob in _enumerate(spec, t, (p1, p2), cap)
	]

	return FiniteDist.from_pairs(pairs).merged()


def partition_distribution(spec: EnvSpec, p: Walk, t: int, cap: int = ENUMERATION_CAP) -> FiniteDist:
	"""The exact law of `Z^p_t`."""

	return FiniteDist.from_pairs(
		[(partition_function(field, p, t).value, prob) for field, prob in _enumerate(spec, t, (p,), cap)],
	).merged()


def sample_partition_functions(
	spec: EnvSpec, walks: Sequence[Walk], t: int, n: int, seed: int, threads: int = 1,
) -> np.ndarray:
	"""Samples `n` environments and returns the partition functions of every walk in each, of shape `(n, walks)`."""

	window = reach_window(*walks, t=t)

	def replica(rng: np.random.Generator) -> list[float]:
		field = sample_lattice_field(spec, t, window, rng)

		return [partition_function(field, p, t).value for p in walks]

	return np.array(run_replicas(replica, seed, n, threads, desc="environments"), dtype=float).reshape(n, len(walks))


def free_energy_from_samples(values: np.ndarray, t: int) -> FreeEnergyEstimate:
	"""Reduces partition function samples to a free-energy estimate, conditioning on survival.

	Raises
	------
	DegenerateEstimate
		If every sample vanishes.
	"""

	values = np.asarray(values, dtype=float)
	alive = values[values > 0.0]

	if len(alive) == 0:
		raise DegenerateEstimate("Degenerate: free energy -inf at this horizon, every sample of Z_t vanished.")
	elif len(alive) < len(values):
		logging.warning(f"{len(values) - len(alive)} of {len(values)} samples of Z_t vanished; conditioning on survival.")

	logs = np.log(alive) / t
	se = float(logs.std(ddof=1) / np.sqrt(len(logs))) if len(logs) > 1 else float("nan")

	return FreeEnergyEstimate(float(logs.mean()), se, len(alive) / len(values), len(values))


def free_energy_estimate(
	spec: EnvSpec, p: Walk, t: int, n_env: int, seed: int, threads: int = 1,
) -> FreeEnergyEstimate:
	"""Estimates the quenched free energy by `(1/t) log Z_t` averaged over `n_env` environments.

	A finite-horizon estimator, biased at finite `t`; environments with `Z_t = 0` are counted in the survival
	fraction and left out of the average.

	Parameters
	----------
	spec : EnvSpec
		The single-site law.
	p : Walk
		The walk.
	t : int
		The horizon.
	n_env : int
		The number of environments.
	seed : int
		The master seed.
	threads : int, optional
		Worker threads (default: 1).

	Returns
	-------
	FreeEnergyEstimate
		The estimate, its standard error and the survival fraction.
	"""

	return free_energy_from_samples(sample_partition_functions(spec, [p], t, n_env, seed, threads)[:, 0], t)


def martingale_fractional_moment(
	spec: EnvSpec,
	p: Walk,
	t: int,
	r: float = 0.5,
	mode: str = "exact",
	n: int = 10_000,
	seed: Optional[int] = None,
	cap: int = ENUMERATION_CAP,
	threads: int = 1,
) -> MCEstimate:
	"""Computes `E[W_t^r]` for the martingale `W_t = Z_t / R^t`.

	Parameters
	----------
	mode : str, optional
		Either "exact" (enumeration, `se == 0`) or "monte-carlo" (`n` sampled environments).

	Raises
	------
	InvalidParameter
		If `r` lies outside `(0, 1]`, the mode is unknown, or a Monte Carlo run has no seed.
	ResourceExceeded
		If the exact enumeration exceeds the cap.
	"""

	if not 0.0 < r <= 1.0:
		raise InvalidParameter(f"Fractional moments need r in (0, 1], got {r}.")

	scale = annealed_mean(spec, t)

	if mode == "exact":
		law = partition_distribution(spec, p, t, cap)

		return MCEstimate(law.expect(lambda z: (z / scale) ** r), 0.0, len(law), True)
	elif mode == "monte-carlo":
		if seed is None:
			raise InvalidParameter("Monte Carlo fractional moments need a seed.")

		return MCEstimate.from_samples((sample_partition_functions(spec, [p], t, n, seed, threads)[:, 0] / scale) ** r)

	raise InvalidParameter(f"Unknown mode {mode!r}, expected 'exact' or 'monte-carlo'.")


def static_field(xi: EnvSpec, window: Window, rng: np.random.Generator) -> LatticeField:
	"""A field constant in time, `omega(s, i) = xi(i)`, drawn once over the union of the window's boxes."""

	union = window[0]

	for box in window[1:]:
		union = union.union(box)

	values = xi.sample(rng, union.shape)

	return LatticeField(len(window), tuple(window), tuple(values[union.slices(box)].copy() for box in window))


STATIC_FUNCTIONALS: dict[str, tuple[str, Callable[[np.ndarray, float], np.ndarray]]] = {
	"sqrt": ("concave", lambda z, m: np.sqrt(z)),
	"min_mean": ("concave", lambda z, m: np.minimum(z, m)),
	"square": ("convex", lambda z, m: z**2),
	"excess_mean": ("convex", lambda z, m: np.maximum(z - m, 0.0)),
}


def static_env_experiment(
	xi: EnvSpec, walks: dict[str, Walk], t: int, n: int, seed: int, threads: int = 1,
) -> StaticEnvTable:
	"""Estimates concave and convex functionals of `Z_t` for several walks under a static environment.

	Every walk sees the same environments. No ordering is asserted: this is an exploration.

	Parameters
	----------
	xi : EnvSpec
		The law of the time-constant site values.
	walks : dict[str, Walk]
		Walks, by label.
	t : int
		The horizon.
	n : int
		The number of environments.
	seed : int
		The master seed.

	Returns
	-------
	StaticEnvTable
		One row per walk, with the mean and standard error of every functional, and the raw samples.
	"""

	labels = list(walks)
	window = reach_window(*walks.values(), t=t)

	def replica(rng: np.random.Generator) -> list[float]:
		field = static_field(xi, window, rng)

		return [partition_function(field, walks[label], t).value for label in labels]

	values = np.array(run_replicas(replica, seed, n, threads, desc="static environments"), dtype=float).reshape(n, -1)
	scale = annealed_mean(xi, t)
	rows = []

	for k, label in enumerate(labels):
		row: dict[str, float] = {"walk": label}  # type: ignore

		for name, (_, f) in STATIC_FUNCTIONALS.items():
			estimate = MCEstimate.from_samples(f(values[:, k], scale))
			row[name] = estimate.mean
			row[f"{name}_se"] = estimate.se

		rows.append(row)

	return StaticEnvTable(rows, {label: values[:, k] for k, label in enumerate(labels)})
