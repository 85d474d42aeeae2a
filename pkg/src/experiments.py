#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""The experiment catalog: one runner per subcommand, each turning a validated configuration into a result record."""

# IMPORTS #############################################################################################################

import logging
from datetime import datetime, timezone
from math import exp, prod, sqrt
from pathlib import Path
from time import perf_counter
from typing import Any, Callable, NamedTuple, Optional

import builder

import numpy as np

from branching import (
	EVIDENCE_LABEL, ORACLE_POPULATION, CTBranchParams, catastrophe_survival, check_lineage, many_to_one_check_ct,
	many_to_one_check_dt, many_to_one_dt_exact, offspring_boxes, simulate_brw_ct, simulate_brw_dt,
	survival_experiment_ct, survival_experiment_dt,
)

from envlat import MarkSet, sample_lattice_field, sample_offspring_field, sample_tree_env

from increments import IncrementDist, Walk, is_majorized, reach_window, walk_steps

from model import ConfigError, DegenerateEstimate, ExperimentConfig, FiniteDist, MCEstimate, ResultRecord

from pam_ct import (
	RADIUS_CAP, annealed_exponent, annealed_from_samples, annealed_mean_mc, ct_martingale_fractional_moment,
	ct_partition_exact, ct_partition_mc, feynman_kac_crosscheck, sample_ct_partition_functions,
)

from polymer_dt import (
	STATIC_FUNCTIONALS, annealed_mean, consistency_check, free_energy_from_samples, joint_partition_distribution,
	martingale_fractional_moment, partition_function, partition_function_by_paths, sample_partition_functions,
	static_env_experiment,
)

from replicas import rng_for, run_replicas, substream

from stochorder import (
	THREE_SIGMA, concave_order_empirical, concave_order_exact, conjecture_scan, convolve_walks,
	coupling_identity_check, majorization_concave_sum_check,
)

from timed import wall_times

from treepoly import (
	canonical_node_order, interpolation_ladder, necessity_report, reversed_tie_order, tree_interpolation_check,
	tree_theorem_sufficiency_check,
)


# DATA ################################################################################################################

VERSION = "0.1.0"

EXPLORATORY_LABEL = "exploratory: no acceptance claim"

"""Above this many paths, `polymer-dp` skips the path-sum cross-check."""
PATH_SUM_CAP = 100_000


# CLASSES #############################################################################################################


class Experiment(NamedTuple):
	"""A catalog entry.

	Attributes
	----------
	description : str
		What the experiment does.
	runner : Callable[[ExperimentConfig], ResultRecord]
		Runs it.
	stochastic : bool
		Whether it needs a seed.
	exploratory : bool
		Whether it only explores, without any acceptance claim.
	"""

	description: str
	runner: Callable[[ExperimentConfig], ResultRecord]
	stochastic: bool
	exploratory: bool = False


# HELPERS #############################################################################################################


def _seed(config: ExperimentConfig) -> int:
	if config.seed is None:
		raise ConfigError(f"'{config.subcommand}' needs a seed.")

	return config.seed


def _instance_rng(config: ExperimentConfig, index: int) -> Optional[np.random.Generator]:
	return substream(config.seed, index) if config.seed is not None else None


def _child_seed(rng: Optional[np.random.Generator], config: ExperimentConfig) -> int:
	return int(rng.integers(0, 2**63)) if rng is not None else _seed(config)


def _increment(description: dict[str, Any]) -> IncrementDist:
	law = builder.walk(description)

	if not isinstance(law, IncrementDist):
		raise ConfigError("Branching walks take a single step law, not a per-step sequence.")

	return law


def _draw_path(p: Walk, t: int, rng: np.random.Generator) -> np.ndarray:
	"""A path of `t` steps of the walk, origin first."""

	steps = [law.support[rng.choice(len(law), p=law.probs)] for law in walk_steps(p, t)]

	return np.cumsum(np.vstack([np.zeros((1, steps[0].shape[0]), dtype=np.int64)] + [s[None, :] for s in steps]), axis=0)


def _sqrt_moment(law: FiniteDist, scale: float) -> float:
	return law.expect(lambda z: np.sqrt(z / scale)) if scale > 0.0 else 0.0


def _combined_se(*ses: float) -> float:
	return sqrt(sum(se**2 for se in ses))


def _ordered(lower: float, upper: float, se: float, k: float = 3.0) -> bool:
	"""`lower <= upper + k se`."""

	return lower <= upper + k * se + 1e-12


def _horizon_monotone(profile: list[dict], keys: tuple[str, ...]) -> bool:
	"""Whether survival never increases along the profile of every cell, a cell being the values of `keys`."""

	curves: dict[tuple, list[float]] = {}

	for row in profile:
		curves.setdefault(tuple(row[key] for key in keys), []).append(row["survival_frequency"])

	return all(all(b <= a for a, b in zip(curve, curve[1:])) for curve in curves.values())


def _mark_set(config: ExperimentConfig, rng: Optional[np.random.Generator]) -> MarkSet:
	return builder.mark_set(config.params["marks"], rng)


# RUNNERS: DISCRETE-TIME POLYMERS #####################################################################################


def _order_exact(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	spec, p1, q, t = builder.env_spec(params["spec"]), builder.walk(params["p1"]), builder.walk(params["q"]), params["t"]
	tol = resources["tolerance"]

	law = joint_partition_distribution(spec, p1, convolve_walks(p1, q, t), t, resources["enumeration_cap"])
	z1, z2 = law.marginal(0), law.marginal(1)
	order = concave_order_exact(z1, z2, tol)
	scale = annealed_mean(spec, t)
	means = [float(z1.mean), float(z2.mean)]
	moments = [_sqrt_moment(z1, scale), _sqrt_moment(z2, scale)]

	return ResultRecord(
		config,
		outputs={
			"order": order, "annealed_mean": scale, "means": means, "sqrt_moments": moments,
			"atoms": [len(z1), len(z2)], "law_p1": z1, "law_p2": z2,
		},
		tables={"angle_gaps": [
			{"a": a, "gap": gap} for a, gap in zip(order.test_points.tolist(), order.gaps.tolist())
		]},
		verdicts={
			"concave_order": order.verdict,
			"annealed_invariance": max(abs(m - scale) for m in means) <= tol,
			"fractional_moment": moments[0] <= moments[1] + tol,
		},
	)


def _order_empirical(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	spec, p1, q, t = builder.env_spec(params["spec"]), builder.walk(params["p1"]), builder.walk(params["q"]), params["t"]

	samples = sample_partition_functions(spec, [p1, convolve_walks(p1, q, t)], t, resources["n"], _seed(config), config.threads)
	report = concave_order_empirical(
		samples[:, 0], samples[:, 1], params.get("grid"), resources.get("confidence", THREE_SIGMA), paired=True,
		bonferroni=resources.get("bonferroni", False),
	)

	return ResultRecord(
		config,
		outputs={"order": report, "annealed_mean": annealed_mean(spec, t)},
		tables={"angle_gaps": [
			{"a": a, "gap": gap, "se": se, "z": report.z}
			for a, gap, se in zip(report.grid.tolist(), report.gaps.tolist(), report.ses.tolist())
		]},
		verdicts={"concave_order": report.verdict},
	)


def _coupling_check(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	report = coupling_identity_check(
		builder.env_spec(params["spec"]), builder.walk(params["p1"]), builder.walk(params["q"]), params["t"],
		resources["enumeration_cap"], resources["tolerance"],
	)

	return ResultRecord(config, outputs={"coupling": report}, verdicts={"coupling_identity": report.verdict})


def _majorization(config: ExperimentConfig) -> ResultRecord:
	params, tol = config.params, config.resources["tolerance"]
	pairs = params.get("pairs", [{"p": params.get("p"), "q": params.get("q"), "expected": params.get("expected")}])
	rows = []

	for k, pair in enumerate(pairs):
		if pair.get("p") is None or pair.get("q") is None:
			raise ConfigError(f"Pair {k} needs both 'p' and 'q'.")

		size = max(len(pair["p"]), len(pair["q"]))
		p = np.pad(np.asarray(pair["p"], dtype=float), (0, size - len(pair["p"])))
		q = np.pad(np.asarray(pair["q"], dtype=float), (0, size - len(pair["q"])))
		certificate = is_majorized(p, q, tol)
		concave_sums = majorization_concave_sum_check(p, q, tol)
		rows.append({
			"pair": k,
			"p": p.tolist(),
			"q": q.tolist(),
			"majorized": certificate.verdict,
			"gaps": certificate.gaps.tolist(),
			"failing_index": certificate.failing_index,
			"mass_mismatch": certificate.mass_mismatch,
			"concave_sums": concave_sums,
			"expected": pair.get("expected"),
		})

	verdicts = {"characterizations_agree": all(row["majorized"] == row["concave_sums"] for row in rows)}

	if any(row["expected"] is not None for row in rows):
		verdicts["expected"] = all(row["expected"] is None or row["expected"] == row["majorized"] for row in rows)

	return ResultRecord(config, tables={"pairs": rows}, verdicts=verdicts)


def _polymer_dp(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	spec, p, t = builder.env_spec(params["spec"]), builder.walk(params["p"]), params["t"]
	tol = resources["tolerance"]
	rng = rng_for(_seed(config))

	# x + y must stay inside the window for the consistency checks
	field = sample_lattice_field(spec, t, reach_window(convolve_walks(p, p, t), t=t), rng)
	result = partition_function(field, p, t)
	scale = annealed_mean(spec, t)
	outputs: dict[str, Any] = {
		"value": result.value,
		"normalized": result.value / scale if scale > 0 else None,
		"annealed_mean": scale,
		"metadata": result.metadata,
	}
	verdicts: dict[str, bool] = {}
	paths = prod(len(law) for law in walk_steps(p, t))

	if paths <= resources.get("path_sum_cap", PATH_SUM_CAP):
		outputs["path_sum"] = partition_function_by_paths(field, p, t)
		verdicts["path_sum"] = abs(outputs["path_sum"] - result.value) <= tol * max(1.0, result.value)
	else:
		logging.info(f"Skipping the path-sum cross-check over {paths} paths.")

	checks = [
		consistency_check(field, _draw_path(p, t, rng), _draw_path(p, t, rng), t, tol)
		for _ in range(resources.get("consistency_checks", 20))
	]
	verdicts["consistency"] = all(checks)
	outputs["consistency_checks"] = len(checks)

	return ResultRecord(
		config,
		outputs=outputs,
		tables={"profile": [
			{"site": list(site), "mass": mass} for site, mass in sorted(result.profile.as_dict().items())
		]},
		verdicts=verdicts,
	)


def _free_energy(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	spec = builder.env_spec(params["spec"])
	laws = builder.walks(params["walks"])
	labels = list(laws)
	horizons = params["t"] if isinstance(params["t"], list) else [params["t"]]
	rows = []

	for t in horizons:
		samples = sample_partition_functions(spec, list(laws.values()), t, resources["n_env"], _seed(config), config.threads)

		for k, label in enumerate(labels):
			estimate = free_energy_from_samples(samples[:, k], t)
			rows.append({"walk": label, "t": t} | estimate._asdict())

	verdicts = {}

	if params.get("comparisons"):
		# each pair lists the more random walk first
		verdicts["free_energy_order"] = all(
			_ordered(lower["estimate"], upper["estimate"], _combined_se(lower["se"], upper["se"]))
			for diffuse, concentrated in params["comparisons"]
			for upper in rows if upper["walk"] == diffuse
			for lower in rows if lower["walk"] == concentrated and lower["t"] == upper["t"]
		)

	return ResultRecord(
		config,
		outputs={"log_annealed_mean": float(np.log(spec.mean_factor)) if spec.mean_factor > 0 else None},
		tables={"free_energy": rows},
		verdicts=verdicts,
		labels=["finite-horizon estimates of the quenched free energy"],
	)


def _martingale_moment(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	r = params.get("r", 0.5)

	if "rate" in params:
		return _ct_martingale_moment(config, r)

	spec, p, t = builder.env_spec(params["spec"]), builder.walk(params["p"]), params["t"]
	mode = resources.get("mode", "exact")
	kwargs = {"mode": mode, "n": resources.get("n", 10_000), "seed": config.seed, "cap": resources["enumeration_cap"],
		"threads": config.threads}
	walks = {"p": p} | ({"p*q": convolve_walks(p, builder.walk(params["q"]), t)} if "q" in params else {})
	estimates = {label: martingale_fractional_moment(spec, law, t, r, **kwargs) for label, law in walks.items()}
	tol = resources["tolerance"]
	verdicts = {}

	if r == 1.0:
		verdicts["normalization"] = all(
			abs(e.mean - 1.0) <= tol if e.exact else e.agrees_with(1.0) for e in estimates.values()
		)

	if "p*q" in estimates:
		a, b = estimates["p"], estimates["p*q"]
		verdicts["monotone"] = a.mean <= b.mean + tol if a.exact else _ordered(a.mean, b.mean, _combined_se(a.se, b.se))

	return ResultRecord(
		config,
		tables={"moments": [{"walk": label, "r": r} | e._asdict() for label, e in estimates.items()]},
		verdicts=verdicts,
	)


def _ct_martingale_moment(config: ExperimentConfig, r: float) -> ResultRecord:
	params, resources = config.params, config.resources
	law = builder.env_spec(params["law"]) if "law" in params else builder.env_spec({"kind": "constant", "value": -1.0})
	kappas = sorted(params["kappas"])
	estimates = [
		ct_martingale_fractional_moment(
			params["rate"], law, kappa, params["t"], resources["n_env"], _seed(config), r, resources["epsilon"],
			config.threads,
		)
		for kappa in kappas
	]
	verdicts = {}

	if r < 1.0:
		verdicts["monotone"] = all(
			_ordered(a.mean, b.mean, _combined_se(a.se, b.se)) for a, b in zip(estimates, estimates[1:])
		)

	return ResultRecord(
		config,
		tables={"moments": [{"kappa": kappa, "r": r} | e._asdict() for kappa, e in zip(kappas, estimates)]},
		verdicts=verdicts,
	)


def _static_env(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	table = static_env_experiment(
		builder.env_spec(params["xi"]), builder.walks(params["walks"]), params["t"], resources["n"], _seed(config),
		config.threads,
	)

	return ResultRecord(
		config,
		outputs={"functionals": {name: kind for name, (kind, _) in STATIC_FUNCTIONALS.items()}},
		tables={"functionals": table.rows},
	)


# RUNNERS: ORDERS AND TREES ###########################################################################################


def _tree_theorem(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	spec, t, tol = builder.env_spec(params["spec"]), params["t"], resources["tolerance"]
	threshold = resources.get("violation_threshold", 1e-6)
	pairs = params.get("pairs", [{"p": params.get("p"), "q": params.get("q")}])
	rows = []

	for k, pair in enumerate(pairs):
		p, q = builder.tree_law(pair["p"]), builder.tree_law(pair["q"])
		majorized = is_majorized(p, q, tol).verdict
		necessity = necessity_report(p, q, tol)
		row = {
			"pair": k,
			"p": p.probs.tolist(),
			"q": q.probs.tolist(),
			"majorized": majorized,
			"necessity_violation": necessity.worst_violation,
			"sufficiency": None,
			"sufficiency_worst_gap": None,
		}

		if majorized:
			sufficiency = tree_theorem_sufficiency_check(p, q, spec, t, resources["enumeration_cap"], tol)
			row["sufficiency"] = sufficiency.verdict
			row["sufficiency_worst_gap"] = sufficiency.worst_violation
			row["necessity_ok"] = necessity.verdict
		else:
			row["necessity_ok"] = necessity.worst_violation > threshold

		rows.append(row)

	verdicts = {"necessity": all(row["necessity_ok"] for row in rows)}

	if any(row["majorized"] for row in rows):
		verdicts["sufficiency"] = all(row["sufficiency"] for row in rows if row["majorized"])

	return ResultRecord(config, tables={"pairs": rows}, verdicts=verdicts)


def _tree_interpolation(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	p, q, t = builder.tree_law(params["p"]), builder.tree_law(params["q"]), params["t"]
	spec = builder.env_spec(params["spec"])
	tol = resources["tolerance"]

	if "env" in params:
		env = builder.tree_env(params["env"])
	elif config.seed is not None:
		env = sample_tree_env(spec, p.arity, t, rng_for(config.seed))
	else:
		raise ConfigError("tree-interpolation needs either an explicit 'env' or a seed to sample one.")

	order = reversed_tie_order(p.arity, t) if params.get("order") == "reversed_ties" else canonical_node_order(p.arity, t)
	reports = [tree_interpolation_check(p, q, env, t, i, tol, order) for i in range(len(order))]
	tables = {"pivots": [
		{
			"i": i, "pivot": list(report.pivot), "decomposition_ok": report.decomposition_ok, "shift_ok": report.shift_ok,
			"closure_ok": report.closure_ok, "concave_ok": report.concave_ok, "max_defect": report.max_defect,
			"w_i": report.w_i, "w_next": report.w_next, "a": report.a, "b": report.b, "w_hat": report.w_hat.tolist(),
		}
		for i, report in enumerate(reports)
	]}
	verdicts = {"interpolation": all(report.passed for report in reports)}

	if params.get("ladder", True):
		ladder = interpolation_ladder(p, q, spec, t, resources["enumeration_cap"], resources.get("ladder_tolerance", 1e-10), order)
		tables["ladder"] = [
			{"i": i, "mean": float(law.mean), "atoms": len(law)} | (
				{"cv_next": ladder.verdicts[i].verdict, "worst_gap": ladder.verdicts[i].worst_violation}
				if i < len(ladder.verdicts) else {}
			)
			for i, law in enumerate(ladder.laws)
		]
		verdicts["ladder"] = ladder.passed

	return ResultRecord(config, outputs={"order": [list(node) for node in order], "env": env.levels}, tables=tables, verdicts=verdicts)


def _conjecture_scan(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	scan = conjecture_scan(
		params["radius"], params["t"], builder.env_spec(params["spec"]), params["pairs"], _seed(config),
		params.get("alphas", []), params.get("free_energy_horizon", 8), resources.get("n_env", 200),
		resources["enumeration_cap"], resources["tolerance"],
	)

	return ResultRecord(
		config,
		outputs={"counterexamples": scan.counterexamples},
		tables={"pairs": scan.pairs, "family": scan.family},
	)


# RUNNERS: CONTINUOUS TIME ############################################################################################


def _pam_exact(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	kappa, epsilon = params["kappa"], resources["epsilon"]
	rows = []

	for k in range(resources.get("instances", 1)):
		marks = _mark_set(config, _instance_rng(config, k))
		t = params.get("t", marks.horizon)
		interval = ct_partition_exact(marks, kappa, t, epsilon, resources.get("radius_cap", RADIUS_CAP))
		row = {"instance": k, "marks": len(marks)} | interval._asdict() | {"width": interval.width}

		if kappa == 0.0:
			origin = (0,) * marks.dim
			row["closed_form"] = float(np.prod([1.0 + mark.r for mark in marks.until(t) if mark.site == origin]))

		rows.append(row)

	verdicts = {"certified_width": all(row["width"] <= epsilon + 1e-15 for row in rows)}

	if kappa == 0.0:
		verdicts["closed_form"] = all(
			row["lo"] == row["hi"] and abs(row["lo"] - row["closed_form"]) <= 1e-12 * max(1.0, row["closed_form"])
			for row in rows
		)

	return ResultRecord(config, tables={"intervals": rows}, verdicts=verdicts)


def _pam_mc(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources

	if "rate" in params:
		return _pam_annealed(config)

	kappa, epsilon, n = params["kappa"], resources["epsilon"], resources["n"]
	rows = []

	for k in range(resources.get("instances", 1)):
		rng = _instance_rng(config, k)
		marks = _mark_set(config, rng)
		t = params.get("t", marks.horizon)
		estimate = ct_partition_mc(marks, kappa, t, n, _child_seed(rng, config), config.threads)
		interval = ct_partition_exact(marks, kappa, t, epsilon)
		rows.append({
			"instance": k, "mean": estimate.mean, "se": estimate.se, "n": estimate.n, "lo": interval.lo, "hi": interval.hi,
			"enclosed": interval.contains(estimate.mean, 3.0 * estimate.se + 1e-12),
		})

	return ResultRecord(config, tables={"estimates": rows}, verdicts={"enclosure": all(row["enclosed"] for row in rows)})


def _pam_annealed(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	law = builder.env_spec(params.get("law", {"kind": "constant", "value": -1.0}))
	expected = exp(annealed_exponent(params["rate"], law) * params["t"])
	rows = []

	for kappa in params["kappas"]:
		estimate = annealed_mean_mc(
			params["rate"], law, kappa, params["t"], resources["n"], _seed(config), resources["epsilon"],
			params.get("d", 1), config.threads,
		)
		rows.append({"kappa": kappa} | estimate._asdict() | {
			"expected": expected, "agrees": estimate.agrees_with(expected, 3.0, resources["epsilon"]),
		})

	return ResultRecord(
		config, outputs={"expected": expected}, tables={"annealed": rows},
		verdicts={"annealed_mean": all(row["agrees"] for row in rows)},
	)


def _pam_ode_crosscheck(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	rows = []

	for k in range(resources.get("instances", 1)):
		marks = _mark_set(config, _instance_rng(config, k))
		check = feynman_kac_crosscheck(
			marks, params["kappa"], params.get("t"), resources["epsilon"], resources.get("step", 0.05),
			resources.get("crosscheck_tolerance", 1e-6),
		)
		rows.append({
			"instance": k, "ode_value": check.ode_value, "lo": check.interval.lo, "hi": check.interval.hi,
			"defect": check.defect, "verdict": check.verdict,
		})

	return ResultRecord(config, tables={"crosscheck": rows}, verdicts={"feynman_kac": all(row["verdict"] for row in rows)})


def _lyapunov(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	law = builder.env_spec(params.get("law", {"kind": "constant", "value": -1.0}))
	kappas, t = sorted(params["kappas"]), params["t"]
	values = sample_ct_partition_functions(
		params["rate"], law, kappas, t, resources["n_env"], _seed(config), resources["epsilon"], params.get("d", 1),
		config.threads,
	)
	quenched, annealed = [], []

	for k, kappa in enumerate(kappas):
		try:
			quenched.append({"kappa": kappa} | free_energy_from_samples(values[:, k], t)._asdict())
		except DegenerateEstimate as e:
			logging.warning(f"No quenched estimate at kappa={kappa}: {e}")
			quenched.append({"kappa": kappa, "estimate": float("-inf"), "se": 0.0, "survival_fraction": 0.0, "n": len(values)})

		for r in params.get("rs", [0.5, 1.0, 2.0]):
			annealed.append({"kappa": kappa, "r": r} | annealed_from_samples(values[:, k], r, t)._asdict())

	checks = []

	for r in params.get("rs", [0.5, 1.0, 2.0]):
		cells = [row for row in annealed if row["r"] == r]

		for a, b in zip(cells, cells[1:]):
			se = _combined_se(a["se"], b["se"])

			# concave moments increase with the jump rate, convex ones decrease
			if r < 1.0:
				checks.append(_ordered(a["estimate"], b["estimate"], se))
			elif r > 1.0:
				checks.append(_ordered(b["estimate"], a["estimate"], se))
			else:
				checks.append(abs(a["estimate"] - b["estimate"]) <= 3.0 * se + 1e-12)

	# the quenched exponent increases with the jump rate
	quenched_checks = [
		_ordered(a["estimate"], b["estimate"], _combined_se(a["se"], b["se"])) for a, b in zip(quenched, quenched[1:])
	]

	return ResultRecord(
		config,
		outputs={"annealed_exponent": annealed_exponent(params["rate"], law)},
		tables={"quenched": quenched, "annealed": annealed},
		verdicts={"annealed_monotone": all(checks), "quenched_monotone": all(quenched_checks)},
		labels=[EVIDENCE_LABEL],
	)


# RUNNERS: BRANCHING ##################################################################################################


def _brw_dt(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	spec, p, t = builder.offspring_spec(params["offspring"]), _increment(params["p"]), params["t"]
	seed, cap = _seed(config), resources["population_cap"]

	eta = sample_offspring_field(spec, t, offspring_boxes(p, t), rng_for(seed))
	runs = run_replicas(
		lambda rng: simulate_brw_dt(eta, p, t, population_cap=cap, rng=rng), seed, resources["n"], config.threads,
		desc="branching",
	)
	kept = np.array([run.totals for run in runs if not run.capped], dtype=float)

	if len(kept) == 0:
		raise ConfigError("Every run hit the population cap; raise 'population_cap' or shorten the horizon.")

	rows = []

	for s in range(t + 1):
		estimate = MCEstimate.from_samples(kept[:, s])
		exact = 1.0 if s == 0 else many_to_one_dt_exact(eta, p, s)
		rows.append({
			"generation": s, "mean": estimate.mean, "se": estimate.se, "n": estimate.n, "exact": exact,
			"extinct_fraction": float(np.mean(kept[:, s] == 0)), "agrees": estimate.agrees_with(exact),
		})

	return ResultRecord(
		config,
		outputs={"capped": len(runs) - len(kept), "root_factor": eta.root_factor},
		tables={"generations": rows},
		verdicts={"mean_profile": all(row["agrees"] for row in rows)},
	)


def _ct_params(config: ExperimentConfig, marks: MarkSet) -> CTBranchParams:
	params = config.params

	return CTBranchParams(params["kappa"], params["lam"], params.get("horizon", marks.horizon)).validate()


def _brw_ct(config: ExperimentConfig) -> ResultRecord:
	resources = config.resources
	seed, cap = _seed(config), resources["population_cap"]
	marks = _mark_set(config, rng_for(seed))
	branch = _ct_params(config, marks)
	runs = run_replicas(
		lambda rng: simulate_brw_ct(marks, branch, population_cap=cap, record_events=True, rng=rng), seed,
		resources["n"], config.threads, desc="branching",
	)
	totals = [run.total for run in runs if not run.capped]
	rows = [
		{
			"run": k, "total": run.total, "capped": run.capped, "extinction_time": run.extinction_time,
			"events": len(run.events), "lineage_ok": check_lineage(run),
		}
		for k, run in enumerate(runs)
	]
	outputs: dict[str, Any] = {
		"survival_fraction": float(np.mean([total > 0 for total in totals])) if totals else float("nan"),
		"capped": len(runs) - len(totals),
		"marks": len(marks),
	}

	if len(totals) > 1:
		outputs["mean_total"] = MCEstimate.from_samples(np.array(totals, dtype=float))

	return ResultRecord(config, outputs=outputs, tables={"runs": rows}, verdicts={"lineage": all(row["lineage_ok"] for row in rows)})


def _many_to_one(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	cap, n = resources["population_cap"], resources["n"]
	rows = []

	for k in range(resources.get("instances", 1)):
		rng = _instance_rng(config, k)

		if params.get("time", "discrete") == "discrete":
			report = many_to_one_check_dt(
				builder.offspring_spec(params["offspring"]), _increment(params["p"]), params["t"], n,
				_child_seed(rng, config), cap, config.threads,
			)
		else:
			marks = _mark_set(config, rng)
			report = many_to_one_check_ct(
				marks, _ct_params(config, marks), n, resources["epsilon"], _child_seed(rng, config), cap, config.threads,
			)

		rows.append({
			"instance": k, "mean": report.mc.mean, "se": report.mc.se, "n": report.mc.n, "exact": report.exact,
			"slack": report.slack, "z_score": report.z_score, "capped": report.capped, "verdict": report.verdict,
		})

	return ResultRecord(config, tables={"instances": rows}, verdicts={"many_to_one": all(row["verdict"] for row in rows)})


def _survival_phase(config: ExperimentConfig) -> ResultRecord:
	if config.params.get("time", "discrete") == "discrete":
		return _survival_phase_dt(config)

	params, resources = config.params, config.resources
	law = builder.env_spec(params.get("law", {"kind": "constant", "value": -1.0}))
	cap, n = resources["population_cap"], resources["n"]
	table = survival_experiment_ct(
		params["rate"], params["kappas"], params["lams"], params["horizon"], n, _seed(config), law, resources["epsilon"],
		resources.get("n_env", 200), cap, params.get("box_radius"), config.threads,
	)
	verdicts = {
		"kappa_monotone": all(row["kappa_monotone"] for row in table.monotonicity),
		"horizon_monotone": _horizon_monotone(table.by_horizon, ("kappa", "lambda")),
	}
	oracle = []

	for row in table.rows:
		if row["kappa"] == 0.0:
			lower, upper = catastrophe_survival(
				params["rate"], row["lambda"], params["horizon"], law,
				resources.get("oracle_population", ORACLE_POPULATION),
			)
			slack = 3.0 * sqrt(max(upper * (1.0 - upper), 1.0 / n) / n)

			# capped runs widen the sample side to [capped dead, capped alive]
			oracle.append({
				"lambda": row["lambda"], "survival_frequency": row["survival_frequency"], "capped": row["capped"],
				"sample_lower": row["survival_lower"], "sample_upper": row["survival_upper"], "lower": lower,
				"upper": upper,
				"agrees": row["survival_lower"] <= upper + slack and row["survival_upper"] >= lower - slack,
			})

	if oracle:
		verdicts["catastrophe_oracle"] = all(row["agrees"] for row in oracle)

	return ResultRecord(
		config,
		tables={"phase": table.rows, "by_time": table.by_horizon, "monotonicity": list(table.monotonicity), "oracle": oracle},
		verdicts=verdicts,
		labels=[table.label],
	)


def _survival_phase_dt(config: ExperimentConfig) -> ResultRecord:
	params, resources = config.params, config.resources
	laws = {label: _increment(description) for label, description in params["walks"].items()}
	n = resources["n"]
	table = survival_experiment_dt(
		builder.offspring_spec(params["offspring"]), laws, params["horizon"], n, _seed(config),
		resources.get("n_env", 1_000), resources["population_cap"], config.threads,
	)
	frequency = {row["walk"]: row for row in table.rows}
	verdicts = {"horizon_monotone": _horizon_monotone(table.by_horizon, ("walk",))}

	if params.get("comparisons"):
		# each pair lists the more random walk first
		verdicts["survival_order"] = all(
			_ordered(
				frequency[concentrated]["survival_frequency"], frequency[diffuse]["survival_frequency"],
				_combined_se(frequency[concentrated]["survival_se"], frequency[diffuse]["survival_se"]),
			)
			for diffuse, concentrated in params["comparisons"]
		)

	return ResultRecord(
		config,
		tables={"survival": table.rows, "by_generation": table.by_horizon},
		verdicts=verdicts,
		labels=[table.label],
	)


# DATA ################################################################################################################

"""Experiments and descriptions, by subcommand."""
experiments: dict[str, Experiment] = {
	"order-exact": Experiment("exact concave order Z^{p1} <=_cv Z^{p1*q}, annealed invariance, fractional moments", _order_exact, False),
	"order-empirical": Experiment("sampled concave order test of Z^{p1} <=_cv Z^{p1*q}", _order_empirical, True),
	"coupling-check": Experiment("pointwise convolution coupling identity over every environment", _coupling_check, False),
	"majorization": Experiment("majorization certificates and their concave-sum characterization", _majorization, False),
	"tree-theorem": Experiment("tree polymer theorem, sufficiency and necessity", _tree_theorem, False),
	"tree-interpolation": Experiment("interpolation and permutation-averaging checks on the tree", _tree_interpolation, False),
	"polymer-dp": Experiment("transfer-matrix partition function with path-sum and consistency checks", _polymer_dp, True),
	"free-energy": Experiment("finite-horizon quenched free energy estimates", _free_energy, True),
	"martingale-moment": Experiment("fractional moments of the normalized partition function", _martingale_moment, False),
	"pam-exact": Experiment("certified enclosure of the continuous-time partition function", _pam_exact, False),
	"pam-mc": Experiment("Monte Carlo continuous-time partition function against its enclosure", _pam_mc, True),
	"pam-ode-crosscheck": Experiment("parabolic Anderson ODE against the time-reversed partition function", _pam_ode_crosscheck, False),
	"lyapunov": Experiment("quenched and annealed Lyapunov exponents over jump rates", _lyapunov, True),
	"brw-dt": Experiment("discrete-time branching walk mean profile against the polymer", _brw_dt, True),
	"brw-ct": Experiment("continuous-time branching walk runs with lineage checks", _brw_ct, True),
	"many-to-one": Experiment("many-to-one identity, discrete or continuous time", _many_to_one, True),
	"survival-phase": Experiment("survival frequencies and their monotonicity evidence", _survival_phase, True),
	"static-env": Experiment("functionals of Z under a time-constant environment", _static_env, True, True),
	"conjecture-scan": Experiment("symmetric unimodal pairs: majorization against concave order", _conjecture_scan, True, True),
}


# FUNCTIONS ###########################################################################################################


def sample_config(name: str) -> Path:
	return builder.ROOT / "data" / name / "config.json"


def list_experiments() -> list[dict[str, Any]]:
	"""The catalog, one entry per subcommand, with its bundled sample configuration."""

	return [
		{
			"name": name,
			"description": experiment.description,
			"stochastic": experiment.stochastic,
			"label": EXPLORATORY_LABEL if experiment.exploratory else None,
			"sample_config": sample_config(name),
		}
		for name, experiment in experiments.items()
	]


def run(config: ExperimentConfig) -> ResultRecord:
	"""Dispatches a configuration to its runner and stamps the result with its provenance.

	Parameters
	----------
	config : ExperimentConfig
		A validated configuration.

	Returns
	-------
	record : ResultRecord
		The outcome; it passes iff all its verdicts hold.

	Raises
	------
	ConfigError
		If the subcommand is unknown, or a stochastic experiment has no seed.
	"""

	if config.subcommand not in experiments:
		raise ConfigError(f"Unknown subcommand '{config.subcommand}', expected one of: " + ', '.join(experiments))

	experiment = experiments[config.subcommand]

	if experiment.stochastic and config.seed is None:
		raise ConfigError(f"'{config.subcommand}' is stochastic and needs a seed.")

	logging.info(config.pformat())

	start = perf_counter()
	record = experiment.runner(config)
	record.labels = ([EXPLORATORY_LABEL] if experiment.exploratory else []) + record.labels
	record.provenance = {
		"version": VERSION,
		"timestamp": datetime.now(timezone.utc).isoformat(),
		"wall_time": perf_counter() - start,
		"stages": dict(wall_times),
	}

	logging.info(f"'{config.subcommand}' {'passed' if record.passed else 'failed'}: {record.verdicts}")

	return record
