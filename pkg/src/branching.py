#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Branching random walks in random environments, in discrete time (offspring fields) and in continuous time
(jumps, binary branching and killing marks), with many-to-one checks and survival experiments."""

# IMPORTS #############################################################################################################

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import ceil, exp, sqrt
from typing import NamedTuple, Optional

import numpy as np

from envlat import (
	Box, EnvSpec, Mark, MarkSet, OffspringField, OffspringSpec, sample_mark_set, sample_offspring_field,
)

from increments import IncrementDist, reach_window

from model import InvalidParameter, MCEstimate, Site, WindowError

from pam_ct import ct_partition_exact, lyapunov_quenched_estimate

from polymer_dt import free_energy_estimate, partition_function

from replicas import rng_for, run_replicas

from scipy.linalg import expm  # type: ignore
from scipy.stats import binom  # type: ignore


# DATA ################################################################################################################

"""Default population above which a run is aborted and flagged."""
POPULATION_CAP = 10**6

"""Default truncation of the single-site birth-catastrophe chain."""
ORACLE_POPULATION = 1_000

"""Times, evenly spaced over the horizon, at which continuous-time survival is profiled."""
HORIZON_POINTS = 11

EVIDENCE_LABEL = "finite-horizon evidence, not a proof of the asymptotic statement"


# CLASSES #############################################################################################################


@dataclass
class BRWStateDT:
	"""The population of a discrete-time branching random walk.

	Attributes
	----------
	generation : int
		The last generation simulated.
	counts : dict[Site, int]
		Particles per site.
	capped : bool
		Whether the run was aborted at the population cap.
	totals : list[int]
		The population of every generation simulated, generation 0 included.
	"""

	generation: int
	counts: dict[Site, int]
	capped: bool = False
	totals: list[int] = field(default_factory=list)

	@property
	def total(self: BRWStateDT) -> int:
		return sum(self.counts.values())

	@property
	def extinct(self: BRWStateDT) -> bool:
		return not self.capped and self.total == 0


class CTBranchParams(NamedTuple):
	"""Jump rate `kappa`, binary branching rate `lam` and horizon of a continuous-time branching random walk."""

	kappa: float
	lam: float
	horizon: float

	def validate(self: CTBranchParams) -> CTBranchParams:
		if self.kappa < 0 or self.lam < 0:
			raise InvalidParameter(f"Rates must be non-negative, got kappa={self.kappa}, lambda={self.lam}.")
		elif self.horizon <= 0:
			raise InvalidParameter(f"The horizon must be positive, got {self.horizon}.")

		return self


class Event(NamedTuple):
	"""A lineage event: a jump, a branching (the particle is replaced by `children`) or a kill by a mark."""

	time: float
	kind: str
	particle: int
	site: Site
	children: tuple[int, ...] = ()


class CTBranchRun(NamedTuple):
	"""The outcome of a continuous-time run.

	Attributes
	----------
	counts : dict[Site, int]
		Particles per site at the horizon (or when aborted).
	events : list[Event]
		The event log, empty unless recorded.
	alive : list[int]
		Identities of the particles alive at the end.
	capped : bool
		Whether the run was aborted at the population cap.
	extinction_time : Optional[float]
		When the population died out, if it did.
	"""

	counts: dict[Site, int]
	events: list[Event]
	alive: list[int]
	capped: bool
	extinction_time: Optional[float]

	@property
	def total(self: CTBranchRun) -> int:
		return sum(self.counts.values())


class ManyToOneReport(NamedTuple):
	"""Mean particle count against its polymer counterpart.

	Attributes
	----------
	mc : MCEstimate
		The Monte Carlo mean of the total population.
	exact : float
		The polymer value (times `e^{lambda t}` in continuous time).
	slack : float
		Additional tolerance from the exact side.
	z_score : float
		`|mc.mean - exact| / mc.se`.
	verdict : bool
		Whether the two agree within `3 se + slack`.
	capped : int
		Runs aborted at the population cap, excluded from the mean.
	"""

	mc: MCEstimate
	exact: float
	slack: float
	z_score: float
	verdict: bool
	capped: int


class SurvivalTable(NamedTuple):
	"""Survival frequencies and their free-energy companions; labelled as evidence."""

	rows: list[dict]
	by_horizon: list[dict]
	monotonicity: tuple[dict, ...] = ()
	label: str = EVIDENCE_LABEL


# DISCRETE TIME #######################################################################################################


def offspring_boxes(p: IncrementDist, t: int) -> tuple[Box, ...]:
	"""The boxes of generations `0..t - 1`: where particles can sit when they reproduce."""

	return reach_window(p, t=t - 1, start=0)


def simulate_brw_dt(
	eta: OffspringField, p: IncrementDist, t: Optional[int] = None, seed: Optional[int] = None,
	population_cap: int = POPULATION_CAP, rng: Optional[np.random.Generator] = None,
) -> BRWStateDT:
	"""Simulates `t` generations: every particle of generation `s` at site `i` is replaced by a number of descendants
	drawn from `eta(s, i)`, each of which then moves independently by a step of law `p`.

	Raises
	------
	WindowError
		If a particle reproduces outside the box of the field.
	"""

	t = eta.horizon if t is None else t

	if t > eta.horizon:
		raise InvalidParameter(f"An offspring field of {eta.horizon} generations cannot drive {t} generations.")

	rng = rng if rng is not None else rng_for(seed)
	laws = eta.spec.laws
	steps = [tuple(step) for step in p.support.tolist()]
	counts: dict[Site, int] = {(0,) * p.dim: 1}
	state = BRWStateDT(0, counts, False, [1])

	for s in range(t):
		box = eta.boxes[s]
		children: dict[Site, int] = {}

		for site, count in counts.items():
			if not box.contains(site):
				raise WindowError(f"Generation {s} reproduces at {site}, outside the field box {box}.")

			law = laws[eta.atoms[s][box.index(site)]]
			born = int(np.dot(np.arange(len(law)), rng.multinomial(count, law)))

			for step, moved in zip(steps, rng.multinomial(born, p.probs)):
				if moved:
					target = tuple(a + b for a, b in zip(site, step))
					children[target] = children.get(target, 0) + int(moved)

		counts = children
		state = BRWStateDT(s + 1, counts, False, state.totals + [sum(counts.values())])

		if state.totals[-1] > population_cap:
			logging.warning(f"Population cap {population_cap} reached at generation {s + 1}; run flagged.")

			return BRWStateDT(s + 1, counts, True, state.totals)
		elif not counts:
			break

	return BRWStateDT(t, counts, False, state.totals + [0] * (t - state.generation))


def many_to_one_dt_exact(eta: OffspringField, p: IncrementDist, t: int) -> float:
	"""`E[total at generation t] = m(0, 0) Z^p_{t-1}(omega(eta))`, with `omega(eta)` read on generations `1..t-1`."""

	return eta.root_factor * partition_function(eta.omega_field(), p, t - 1).value


def many_to_one_check_dt(
	spec: OffspringSpec, p: IncrementDist, t: int, n: int, seed: int, population_cap: int = POPULATION_CAP,
	threads: int = 1,
) -> ManyToOneReport:
	"""Samples one offspring field, runs `n` branching walks in it, and compares their mean total population with the
	polymer partition function of the induced environment.

	Parameters
	----------
	spec : OffspringSpec
		The law of the offspring field.
	p : IncrementDist
		The displacement law.
	t : int
		The number of generations.
	n : int
		The number of runs.
	seed : int
		The master seed; the field is drawn from the master stream, run `k` from substream `k`.

	Returns
	-------
	ManyToOneReport
		The comparison.
	"""

	eta = sample_offspring_field(spec, t, offspring_boxes(p, t), rng_for(seed))
	exact = many_to_one_dt_exact(eta, p, t)
	runs = run_replicas(
		lambda rng: simulate_brw_dt(eta, p, t, population_cap=population_cap, rng=rng), seed, n, threads, desc="branching",
	)

	return _many_to_one_report([run.total for run in runs if not run.capped], exact, 0.0, sum(run.capped for run in runs))


def _many_to_one_report(totals: list[int], exact: float, slack: float, capped: int) -> ManyToOneReport:
	if not totals:
		raise InvalidParameter("Every run hit the population cap; nothing to compare.")

	mc = MCEstimate.from_samples(np.array(totals, dtype=float))
	se = mc.se if np.isfinite(mc.se) else 0.0
	z_score = abs(mc.mean - exact) / se if se > 0 else (0.0 if abs(mc.mean - exact) <= 1e-12 else float("inf"))

	if capped:
		logging.warning(f"{capped} runs hit the population cap and were excluded.")

	return ManyToOneReport(mc, exact, slack, z_score, mc.agrees_with(exact, 3.0, slack), capped)


def _survival_profile(totals: list[int], capped: bool, horizon: int) -> np.ndarray:
	"""Whether the population is alive at generations `0..horizon`, or NaN throughout for a run that hit the population
	cap."""

	if capped:
		return np.full(horizon + 1, np.nan)

	alive = np.array([total > 0 for total in totals] + [False] * (horizon + 1 - len(totals)), dtype=float)

	return alive[:horizon + 1]


def _frequency(alive: np.ndarray) -> tuple[float, float, int]:
	"""Survival frequency, its binomial standard error and the number of runs kept; NaN entries (capped runs) are left
	out of numerator and denominator alike."""

	kept = int(np.count_nonzero(~np.isnan(alive)))

	if kept == 0:
		return float("nan"), float("nan"), 0

	frequency = float(np.nanmean(alive))

	return frequency, sqrt(frequency * (1.0 - frequency) / kept), kept


def survival_experiment_dt(
	spec: OffspringSpec,
	walks: dict[str, IncrementDist],
	horizon: int,
	n: int,
	seed: int,
	n_env: int = 1_000,
	population_cap: int = POPULATION_CAP,
	threads: int = 1,
) -> SurvivalTable:
	"""Survival frequencies at generation `horizon` under every walk, paired on the same offspring fields, alongside the
	free-energy estimates of the induced environment. Runs that hit the population cap are left out and counted per walk.

	Parameters
	----------
	spec : OffspringSpec
		The offspring field law.
	walks : dict[str, IncrementDist]
		Displacement laws, by label.
	horizon : int
		The generation survival is read at.
	n : int
		The number of (field, branching) samples.
	seed : int
		The master seed.
	n_env : int, optional
		Environments per free-energy estimate (default: 1000).

	Returns
	-------
	SurvivalTable
		One row per walk, and the survival frequency at every generation.
	"""

	labels = list(walks)
	boxes = offspring_boxes(walks[labels[0]], horizon)

	for label in labels[1:]:
		boxes = tuple(a.union(b) for a, b in zip(boxes, offspring_boxes(walks[label], horizon)))

	def replica(rng: np.random.Generator) -> list[np.ndarray]:
		eta = sample_offspring_field(spec, horizon, boxes, rng)
		seeds = rng.integers(0, 2**63, size=len(labels))

		return [
			_survival_profile(run.totals, run.capped, horizon)
			for run in (
				simulate_brw_dt(eta, walks[label], horizon, population_cap=population_cap, rng=np.random.default_rng(s))
				for label, s in zip(labels, seeds)
			)
		]

	profiles = np.array(run_replicas(replica, seed, n, threads, desc="survival"), dtype=float)
	rows, by_horizon = [], []
	omega = spec.omega_spec()

	for k, label in enumerate(labels):
		frequency, se, kept = _frequency(profiles[:, k, -1])
		estimate = free_energy_estimate(omega, walks[label], horizon, n_env, seed + k + 1, threads)

		if kept < n:
			logging.warning(f"{n - kept} runs of walk {label} hit the population cap and were excluded.")

		rows.append({
			"walk": label,
			"survival_frequency": frequency,
			"survival_se": se,
			"capped": n - kept,
			"free_energy": estimate.estimate,
			"free_energy_se": estimate.se,
			"polymer_survival_fraction": estimate.survival_fraction,
			"sign_agreement": (estimate.estimate > 0) == (frequency > 0),
		})

		for generation in range(horizon + 1):
			by_horizon.append({
				"walk": label, "generation": generation, "survival_frequency": _frequency(profiles[:, k, generation])[0],
			})

	return SurvivalTable(rows, by_horizon)


# CONTINUOUS TIME #####################################################################################################


def _check_killing_marks(marks: MarkSet) -> None:
	if any(mark.r > 0.0 for mark in marks):
		raise InvalidParameter("Branching walks only support killing marks, r in [-1, 0].")


def simulate_brw_ct(
	marks: MarkSet,
	params: CTBranchParams,
	seed: Optional[int] = None,
	population_cap: int = POPULATION_CAP,
	record_events: bool = True,
	rng: Optional[np.random.Generator] = None,
) -> CTBranchRun:
	"""Event-driven simulation: every particle jumps to a uniform neighbor at rate `kappa` and is replaced by two
	children at rate `lam`; at a mark `(s, i, r)`, each particle at `i` dies with probability `-r` (all of them for a
	disaster).

	Raises
	------
	InvalidParameter
		If a mark carries a bonus (`r > 0`).
	"""

	params.validate()
	_check_killing_marks(marks)
	rng = rng if rng is not None else rng_for(seed)
	d = marks.dim
	moves = [tuple(int(c) for c in s * e) for e in np.eye(d, dtype=int) for s in (-1, 1)]
	ids, sites = [0], [(0,) * d]
	next_id, now = 1, 0.0
	events: list[Event] = []
	pending = marks.until(params.horizon)
	extinction: Optional[float] = None
	rate = params.kappa + params.lam

	def kill(mark: Mark) -> None:
		nonlocal ids, sites
		doomed = [k for k, site in enumerate(sites) if site == mark.site and rng.random() < -mark.r]

		if record_events:
			events.extend(Event(mark.time, "kill", ids[k], mark.site) for k in doomed)

		dead = set(doomed)
		ids = [pid for k, pid in enumerate(ids) if k not in dead]
		sites = [site for k, site in enumerate(sites) if k not in dead]

	position = 0

	while ids:
		clock = now + rng.exponential(1.0 / (rate * len(ids))) if rate > 0 else float("inf")
		mark_time = pending[position].time if position < len(pending) else float("inf")

		if min(clock, mark_time) > params.horizon:
			break
		elif mark_time <= clock:
			now = mark_time
			kill(pending[position])
			position += 1

			if not ids:
				extinction = now

			continue

		now = clock
		k = int(rng.integers(len(ids)))

		if rng.random() * rate < params.kappa:
			move = moves[int(rng.integers(len(moves)))]
			sites[k] = tuple(a + b for a, b in zip(sites[k], move))

			if record_events:
				events.append(Event(now, "jump", ids[k], sites[k]))
		else:
			children = (next_id, next_id + 1)
			next_id += 2

			if record_events:
				events.append(Event(now, "branch", ids[k], sites[k], children))

			ids[k] = children[0]
			ids.append(children[1])
			sites.append(sites[k])

			if len(ids) > population_cap:
				logging.warning(f"Population cap {population_cap} reached at time {now:.4f}; run flagged.")

				return CTBranchRun(_tally(sites), events, ids, True, None)

	return CTBranchRun(_tally(sites), events, ids, False, extinction)


def _tally(sites: list[Site]) -> dict[Site, int]:
	counts: dict[Site, int] = {}

	for site in sites:
		counts[site] = counts.get(site, 0) + 1

	return counts


def check_lineage(run: CTBranchRun) -> bool:
	"""Every particle is born once (the ancestor, or as a child of a branching) and dies at most once, by a kill or by
	branching; the survivors are exactly the born particles that did not die."""

	born, dead = {0}, set()

	for event in run.events:
		if event.particle not in born or event.particle in dead:
			return False
		elif event.kind in ("kill", "branch"):
			dead.add(event.particle)

		if event.kind == "branch":
			if len(event.children) != 2 or born.intersection(event.children):
				return False

			born.update(event.children)

	return set(run.alive) == born - dead and len(run.alive) == run.total


def many_to_one_check_ct(
	marks: MarkSet, params: CTBranchParams, n: int, epsilon: float, seed: int,
	population_cap: int = POPULATION_CAP, threads: int = 1,
) -> ManyToOneReport:
	"""Compares the mean total population at the horizon with `e^{lam t} Z^kappa_t`, within `3 se + e^{lam t} epsilon`."""

	params.validate()
	interval = ct_partition_exact(marks, params.kappa, params.horizon, epsilon)
	growth = exp(params.lam * params.horizon)
	runs = run_replicas(
		lambda rng: simulate_brw_ct(marks, params, population_cap=population_cap, record_events=False, rng=rng),
		seed, n, threads, desc="branching",
	)

	return _many_to_one_report(
		[run.total for run in runs if not run.capped], growth * interval.midpoint, growth * epsilon,
		sum(run.capped for run in runs),
	)


def branching_box_radius(kappa: float, horizon: float) -> int:
	"""A box radius the lineages are unlikely to leave by the horizon: mean jumps plus six standard deviations."""

	return int(ceil(kappa * horizon + 6.0 * sqrt(kappa * horizon))) + 2


def _survival_times(run: CTBranchRun, times: np.ndarray) -> np.ndarray:
	"""Whether the population is alive at each of `times`, or NaN throughout for a run that hit the population cap."""

	if run.capped:
		return np.full(len(times), np.nan)
	elif run.extinction_time is None:
		return np.ones(len(times))

	return (times < run.extinction_time).astype(float)


def survival_experiment_ct(
	rate: float,
	kappas: list[float],
	lams: list[float],
	horizon: float,
	n: int,
	seed: int,
	law: Optional[EnvSpec] = None,
	epsilon: float = 1e-6,
	n_env: int = 200,
	population_cap: int = 2_000,
	box_radius: Optional[int] = None,
	threads: int = 1,
) -> SurvivalTable:
	"""Survival frequencies at the horizon over a `(kappa, lam)` grid, every cell seeing the same mark sets, alongside
	quenched Lyapunov estimates `lambda_0(kappa)`; reports whether frequencies increase with `kappa` at fixed `lam`.

	Runs reaching the population cap are left out of the frequencies; each row counts them and brackets the frequency
	over all `n` runs between `survival_lower` (capped runs dead) and `survival_upper` (capped runs alive). Survival is
	also profiled at `HORIZON_POINTS` times in `[0, horizon]`, read off the extinction times of the same runs.
	"""

	law = law if law is not None else EnvSpec.constant(-1.0)
	radius = box_radius if box_radius is not None else branching_box_radius(max(kappas), horizon)
	cells = [(kappa, lam) for lam in lams for kappa in kappas]
	times = np.linspace(0.0, horizon, HORIZON_POINTS)

	def replica(rng: np.random.Generator) -> np.ndarray:
		marks = sample_mark_set(rate, law, horizon, radius, rng)
		seeds = rng.integers(0, 2**63, size=len(cells))

		return np.array([
			_survival_times(run, times)
			for run in (
				simulate_brw_ct(marks, CTBranchParams(kappa, lam, horizon), population_cap=population_cap,
					record_events=False, rng=np.random.default_rng(s))
				for (kappa, lam), s in zip(cells, seeds)
			)
		])

	profiles = np.array(run_replicas(replica, seed, n, threads, desc="survival"), dtype=float)
	lyapunov = {}

	for k, kappa in enumerate(kappas):
		try:
			lyapunov[kappa] = lyapunov_quenched_estimate(rate, law, kappa, horizon, n_env, seed + k + 1, epsilon, threads)
		except RuntimeError as e:
			logging.warning(f"No Lyapunov estimate at kappa={kappa}: {e}")

	rows = []

	for c, (kappa, lam) in enumerate(cells):
		frequency, se, kept = _frequency(profiles[:, c, -1])
		survivors = int(np.nansum(profiles[:, c, -1]))
		estimate = lyapunov.get(kappa)

		if kept < n:
			logging.warning(f"{n - kept} runs at kappa={kappa}, lambda={lam} hit the population cap and were excluded.")

		rows.append({
			"kappa": kappa,
			"lambda": lam,
			"survival_frequency": frequency,
			"survival_se": se,
			"capped": n - kept,
			"survival_lower": survivors / n,
			"survival_upper": (survivors + n - kept) / n,
			"lyapunov": estimate.estimate if estimate else float("nan"),
			"lyapunov_se": estimate.se if estimate else float("nan"),
			"lyapunov_survival_fraction": estimate.survival_fraction if estimate else float("nan"),
		})

	by_horizon = [
		{"kappa": kappa, "lambda": lam, "time": float(time), "survival_frequency": _frequency(profiles[:, c, k])[0]}
		for c, (kappa, lam) in enumerate(cells)
		for k, time in enumerate(times)
	]
	monotone = []

	for lam in lams:
		cell = sorted((row for row in rows if row["lambda"] == lam), key=lambda row: row["kappa"])
		monotone.append({
			"lambda": lam,
			"kappa_monotone": all(
				b["survival_frequency"] >= a["survival_frequency"] - 3.0 * sqrt(a["survival_se"] ** 2 + b["survival_se"] ** 2)
				for a, b in zip(cell, cell[1:])
			),
		})

	return SurvivalTable(rows, by_horizon, tuple(monotone))


def catastrophe_survival(
	rate: float, lam: float, horizon: float, law: Optional[EnvSpec] = None, max_population: int = ORACLE_POPULATION,
) -> tuple[float, float]:
	"""Survival probability at the horizon of the branching process at a single site (no motion), whose particles
	double at rate `lam` while marks of intensity `rate` thin the population, each particle surviving a mark `r` with
	probability `1 + r`.

	The population is a birth-catastrophe chain on `0..max_population`, solved with a matrix exponential twice. The
	lower chain suppresses births at `max_population`, so it is dominated by the true population. In the upper chain,
	`max_population` only leaves to `0`, at the rate of disasters (`r = -1`), which kill any population.

	Returns
	-------
	tuple[float, float]
		Lower and upper bounds on the survival probability; both are exact, `e^{-rate t}`, for disasters alone.
	"""

	law = law if law is not None else EnvSpec.constant(-1.0)

	if any(r > 0.0 for r in law.values):
		raise InvalidParameter("Catastrophes only kill: r must lie in [-1, 0].")
	elif max_population < 1:
		raise InvalidParameter(f"The chain needs at least one particle, got {max_population}.")

	counts = np.arange(max_population + 1)
	thinning = sum(rate * prob * binom.pmf(counts[None, :], counts[:, None], 1.0 + r) for r, prob in law.atoms)
	lower = thinning + np.diag(lam * counts[:-1].astype(float), k=1)
	upper = lower.copy()
	upper[-1, :] = 0.0
	upper[-1, 0] = rate * sum(prob for r, prob in law.atoms if r <= -1.0)
	bounds = []

	for generator in (lower, upper):
		np.fill_diagonal(generator, 0.0)
		generator[0, :] = 0.0
		generator -= np.diag(generator.sum(axis=1))
		bounds.append(float(1.0 - expm(generator * horizon)[1, 0]))

	return bounds[0], bounds[1]
