#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""The polymer on the `K`-ary tree: partition functions of node-inhomogeneous walks, both directions of the
majorization criterion, and the interpolation between two step laws node by node."""

# IMPORTS #############################################################################################################

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import permutations
from typing import NamedTuple, Optional, Sequence

import numpy as np

from envlat import ENUMERATION_CAP, EnvSpec, TreeEnv, apply_elementary_shift, enumerate_tree_envs, tree_nodes

from increments import TreeIncrementDist, is_majorized

from model import FiniteDist, InvalidParameter, PartitionResult, ResourceExceeded, Site

from stochorder import ConcaveOrderReport, concave_order_exact, majorization_concave_sum_check

from timed import timed_callable


# DATA ################################################################################################################

"""Largest arity whose permutations are enumerated."""
PERMUTATION_ARITY_CAP = 5


# CLASSES AND TYPE ALIASES ############################################################################################


"""Nodes of depth `0..t - 1`, deepest first."""
NodeOrder = list[Site]


@dataclass(frozen=True)
class InhomogWalk:
	"""A walk on the tree moving from node `v` to child `(v, a)` with probability `law_at(v)(a)`.

	Attributes
	----------
	default : TreeIncrementDist
		The law used at every node without an override.
	overrides : dict[Site, TreeIncrementDist]
		Per-node laws.
	"""

	default: TreeIncrementDist
	overrides: dict[Site, TreeIncrementDist] = field(default_factory=dict)

	def __post_init__(self: InhomogWalk) -> None:
		for node, law in self.overrides.items():
			if law.arity != self.arity:
				raise InvalidParameter(f"The law at {node} has arity {law.arity}, expected {self.arity}.")

	@property
	def arity(self: InhomogWalk) -> int:
		return self.default.arity

	def law_at(self: InhomogWalk, node: Site) -> TreeIncrementDist:
		return self.overrides.get(tuple(node), self.default)

	def transition_rows(self: InhomogWalk, depth: int) -> np.ndarray:
		"""The step laws of the nodes of a given depth, one row per node in lexicographic order."""

		rows = np.tile(self.default.probs, (self.arity**depth, 1))

		for node, law in self.overrides.items():
			if len(node) == depth:
				rows[_index(node, self.arity)] = law.probs

		return rows


class InterpolationReport(NamedTuple):
	"""The checks of one interpolation step at pivot `v_i`.

	Attributes
	----------
	pivot : Site
		The node whose law switches from `q` to `p`.
	decomposition_ok : bool
		`W_i = A + b sum_a q(a) What(a)` and `W_{i+1} = A + b sum_a p(a) What(a)`.
	shift_ok : bool
		`What(a, omega(pi)) = What(pi(a), omega)` for every permutation, with `A` and `b` unchanged.
	closure_ok : bool
		Permuting the entries of column `pi` of `M(a, pi) = What(a, omega(pi))` by `sigma` gives column `pi o sigma`.
	concave_ok : bool
		`sum_pi f(C(pi)) >= sum_pi f(D(pi))` for the angle functions, with `C` built from `p` and `D` from `q`.
	max_defect : float
		The largest defect over the identities.
	w_i, w_next : float
		`W_i` and `W_{i+1}`.
	a, b : float
		The decomposition terms.
	w_hat : np.ndarray
		`What(a)` for `a = 1..K`.
	"""

	pivot: Site
	decomposition_ok: bool
	shift_ok: bool
	closure_ok: bool
	concave_ok: bool
	max_defect: float
	w_i: float
	w_next: float
	a: float
	b: float
	w_hat: np.ndarray

	@property
	def passed(self: InterpolationReport) -> bool:
		return self.decomposition_ok and self.shift_ok and self.closure_ok and self.concave_ok


class LadderReport(NamedTuple):
	"""The exact laws of `W_0 .. W_N` and the verdicts `W_i <=_cv W_{i+1}`."""

	order: NodeOrder
	laws: list[FiniteDist]
	verdicts: list[ConcaveOrderReport]
	endpoints_ok: bool

	@property
	def passed(self: LadderReport) -> bool:
		return self.endpoints_ok and all(report.verdict for report in self.verdicts)


# FUNCTIONS ###########################################################################################################


def _index(node: Site, arity: int) -> int:
	index = 0

	for a in node:
		index = index * arity + (a - 1)

	return index


def homogeneous(p: TreeIncrementDist) -> InhomogWalk:
	return InhomogWalk(p)


def canonical_node_order(arity: int, t: int) -> NodeOrder:
	"""The nodes of depth `0..t - 1`, by decreasing depth, ties broken lexicographically; the root comes last."""

	return [node for depth in range(t - 1, -1, -1) for node in tree_nodes(arity, depth)]


def reversed_tie_order(arity: int, t: int) -> NodeOrder:
	"""The nodes of depth `0..t - 1`, by decreasing depth, ties broken in reverse lexicographic order."""

	return [node for depth in range(t - 1, -1, -1) for node in reversed(list(tree_nodes(arity, depth)))]


def _leaf_masses(env: TreeEnv, walk: InhomogWalk, t: int) -> list[np.ndarray]:
	"""Masses per level: entry `s` holds, for each node of depth `s`, the probability of reaching it times the weights
	collected on the way, its own included."""

	if walk.arity != env.arity:
		raise InvalidParameter(f"A walk of arity {walk.arity} cannot run on a tree of arity {env.arity}.")
	elif env.depth < t:
		raise InvalidParameter(f"An environment of depth {env.depth} cannot carry a walk up to depth {t}.")

	masses = [np.ones(1)]

	for s in range(1, t + 1):
		masses.append((masses[-1][:, None] * walk.transition_rows(s - 1)).reshape(-1) * (1.0 + env.levels[s - 1]))

	return masses


def tree_partition_function(env: TreeEnv, walk: InhomogWalk, t: Optional[int] = None) -> PartitionResult:
	"""Computes `Z_t = E[prod_{s=1..t} (1 + omega(X_s))]` by a single root-to-leaves pass.

	Raises
	------
	InvalidParameter
		If the environment is shallower than `t` or the arities differ.
	"""

	t = env.depth if t is None else t
	leaves = _leaf_masses(env, walk, t)[-1]

	return PartitionResult(float(leaves.sum()), t, {"arity": env.arity, "overrides": len(walk.overrides)})


def interpolating_walk(p: TreeIncrementDist, q: TreeIncrementDist, order: NodeOrder, i: int) -> InhomogWalk:
	"""The walk `r_i`: law `p` at `v_j` for `j < i`, law `q` elsewhere. `r_0` is the `q`-walk and `r_N` the
	`p`-walk."""

	return InhomogWalk(q, {node: p for node in order[:i]})


def necessity_env(r: int, arity: int, depth: int = 1) -> TreeEnv:
	"""Hard obstacles on every child of the root but `r`; deeper levels are empty."""

	first = np.full(arity, -1.0)
	first[r - 1] = 0.0

	return TreeEnv(arity, depth, (first,) + tuple(np.zeros(arity**s) for s in range(2, depth + 1)))


def necessity_report(p: TreeIncrementDist, q: TreeIncrementDist, tol: float = 1e-12) -> ConcaveOrderReport:
	"""Tests `Z^q_1 <=_cv Z^p_1` when the environment is `necessity_env(r)` for a uniform `r`.

	Under that environment `Z^p = p(r)`, so the order reduces to `sum_r f(q(r)) <= sum_r f(p(r))` for concave `f`,
	which holds iff `p <=_M q`.
	"""

	if p.arity != q.arity:
		raise InvalidParameter(f"Arity mismatch: {p.arity} against {q.arity}.")

	pairs = []

	for r in range(1, p.arity + 1):
		env = necessity_env(r, p.arity)
		pairs.append((
			(tree_partition_function(env, homogeneous(q), 1).value, tree_partition_function(env, homogeneous(p), 1).value),
			1.0 / p.arity,
		))

	law = FiniteDist.from_pairs(pairs)

	return concave_order_exact(law.marginal(0), law.marginal(1), tol)


def necessity_check(p: TreeIncrementDist, q: TreeIncrementDist, tol: float = 1e-12) -> bool:
	return necessity_report(p, q, tol).verdict


@timed_callable("Enumerating tree environments...")
def tree_theorem_sufficiency_check(
	p: TreeIncrementDist,
	q: TreeIncrementDist,
	spec: EnvSpec,
	t: int,
	cap: int = ENUMERATION_CAP,
	tol: float = 1e-10,
) -> ConcaveOrderReport:
	"""Tests `Z^q_t <=_cv Z^p_t` on the exact joint law under an i.i.d. environment, for `p <=_M q`.

	Raises
	------
	InvalidParameter
		If `p` is not majorized by `q`.
	ResourceExceeded
		If the enumeration exceeds the cap.
	"""

	if not is_majorized(p, q).verdict:
		raise InvalidParameter(f"{p.probs.tolist()} is not majorized by {q.probs.tolist()}.")

	walk_p, walk_q = homogeneous(p), homogeneous(q)
	law = FiniteDist.from_pairs([
		((tree_partition_function(env, walk_q, t).value, tree_partition_function(env, walk_p, t).value), prob)
		for env, prob in enumerate_tree_envs(spec, p.arity, t, cap)
	]).merged()

	return concave_order_exact(law.marginal(0), law.marginal(1), tol)


def _subtree_values(env: TreeEnv, law: TreeIncrementDist, node: Site, t: int) -> np.ndarray:
	"""`What(a)` for `a = 1..K`: the partition function from child `(node, a)` down to depth `t` under `law`, the weight
	of the child included."""

	arity = env.arity
	start = _index(node, arity) * arity
	mass = 1.0 + env.levels[len(node)][start:start + arity]

	for s in range(len(node) + 2, t + 1):
		block = arity ** (s - len(node))
		level = env.levels[s - 1][start * arity ** (s - len(node) - 1):start * arity ** (s - len(node) - 1) + block]
		mass = (mass[:, None] * law.probs[None, :]).reshape(-1) * (1.0 + level)

	return mass.reshape(arity, -1).sum(axis=1)


def _decompose(env: TreeEnv, walk: InhomogWalk, node: Site, t: int) -> tuple[float, float]:
	"""`A` (the mass of the leaves outside the subtree of `node`) and `b` (the mass at `node`)."""

	masses = _leaf_masses(env, walk, t)
	block = env.arity ** (t - len(node))
	start = _index(node, env.arity) * block

	return float(masses[-1].sum() - masses[-1][start:start + block].sum()), float(masses[len(node)][_index(node, env.arity)])


def tree_interpolation_check(
	p: TreeIncrementDist,
	q: TreeIncrementDist,
	env: TreeEnv,
	t: int,
	i: int,
	tol: float = 1e-12,
	order: Optional[NodeOrder] = None,
) -> InterpolationReport:
	"""Runs the checks of the interpolation step from `r_i` to `r_{i+1}` in one environment.

	Parameters
	----------
	p, q : TreeIncrementDist
		The step laws; the walk `r_i` uses `p` at the first `i` nodes of the order, `q` elsewhere.
	env : TreeEnv
		The environment, of depth at least `t`.
	t : int
		The horizon.
	i : int
		The pivot index, `0 <= i < N`.
	tol : float, optional
		The tolerance of every identity (default: 1e-12).
	order : Optional[NodeOrder], optional
		The node order (default: `canonical_node_order`).

	Returns
	-------
	InterpolationReport
		The four checks and the decomposition terms.

	Raises
	------
	InvalidParameter
		If the pivot index is out of range.
	ResourceExceeded
		If the arity exceeds 5.
	"""

	if env.arity > PERMUTATION_ARITY_CAP:
		raise ResourceExceeded(f"Arity {env.arity} has too many permutations; at most {PERMUTATION_ARITY_CAP} allowed.")

	order = canonical_node_order(env.arity, t) if order is None else order

	if not 0 <= i < len(order):
		raise InvalidParameter(f"Pivot index {i} outside 0..{len(order) - 1}.")

	pivot = order[i]
	walk, walk_next = interpolating_walk(p, q, order, i), interpolating_walk(p, q, order, i + 1)
	w_i = tree_partition_function(env, walk, t).value
	w_next = tree_partition_function(env, walk_next, t).value
	a, b = _decompose(env, walk, pivot, t)
	w_hat = _subtree_values(env, p, pivot, t)
	defects = [abs(w_i - (a + b * np.dot(q.probs, w_hat))), abs(w_next - (a + b * np.dot(p.probs, w_hat)))]
	decomposition_ok = max(defects) <= tol

	perms = list(permutations(range(1, env.arity + 1)))
	columns = {}
	shift_defect = 0.0

	for perm in perms:
		shifted = apply_elementary_shift(env, pivot, perm)
		column = _subtree_values(shifted, p, pivot, t)
		a_shifted, b_shifted = _decompose(shifted, walk, pivot, t)
		shift_defect = max(
			shift_defect, float(np.max(np.abs(column - w_hat[np.array(perm) - 1]))), abs(a_shifted - a),
			abs(b_shifted - b),
		)
		columns[perm] = column

	closure_defect = 0.0

	for perm in perms:
		for sigma in perms:
			composed = tuple(perm[s - 1] for s in sigma)
			closure_defect = max(closure_defect, float(np.max(np.abs(columns[perm][np.array(sigma) - 1] - columns[composed]))))

	c = np.array([np.dot(p.probs, columns[perm]) for perm in perms])
	d = np.array([np.dot(q.probs, columns[perm]) for perm in perms])
	concave_ok = majorization_concave_sum_check(c, d, tol)
	logging.debug(f"Pivot {pivot}: A={a:.6g}, b={b:.6g}, W_i={w_i:.6g}, W_i+1={w_next:.6g}.")

	return InterpolationReport(
		pivot, decomposition_ok, shift_defect <= tol, closure_defect <= tol, concave_ok,
		max(defects + [shift_defect, closure_defect]), w_i, w_next, a, b, w_hat,
	)


@timed_callable("Enumerating the interpolation ladder...")
def interpolation_ladder(
	p: TreeIncrementDist,
	q: TreeIncrementDist,
	spec: EnvSpec,
	t: int,
	cap: int = ENUMERATION_CAP,
	tol: float = 1e-10,
	order: Optional[NodeOrder] = None,
) -> LadderReport:
	"""The exact laws of every interpolant `W_i` under an i.i.d. environment, and the verdicts `W_i <=_cv W_{i+1}`.

	Raises
	------
	ResourceExceeded
		If the enumeration exceeds the cap.
	"""

	order = canonical_node_order(p.arity, t) if order is None else order
	walks = [interpolating_walk(p, q, order, i) for i in range(len(order) + 1)]
	rows, probs = [], []
	endpoints = 0.0

	for env, prob in enumerate_tree_envs(spec, p.arity, t, cap):
		values = [tree_partition_function(env, walk, t).value for walk in walks]
		endpoints = max(
			endpoints, abs(values[0] - tree_partition_function(env, homogeneous(q), t).value),
			abs(values[-1] - tree_partition_function(env, homogeneous(p), t).value),
		)
		rows.append(values)
		probs.append(prob)

	values_, probs_ = np.array(rows), np.array(probs)
	laws = [FiniteDist(values_[:, k], probs_).merged() for k in range(len(walks))]

	return LadderReport(
		order, laws, [concave_order_exact(x, y, tol) for x, y in zip(laws, laws[1:])], endpoints <= tol,
	)


def check_order(order: Sequence[Site], arity: int, t: int) -> bool:
	"""Whether `order` lists every node of depth `0..t - 1` exactly once, depths non-increasing."""

	expected = set(canonical_node_order(arity, t))

	return (
		len(order) == len(expected) and set(map(tuple, order)) == expected
		and all(len(u) >= len(v) for u, v in zip(order, order[1:]))
	)
