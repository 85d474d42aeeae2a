#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Environments: lattice fields, continuous-time mark sets, tree environments and offspring fields, with their
samplers, exhaustive enumerators and shift actions."""

# IMPORTS #############################################################################################################

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from math import prod
from operator import attrgetter
from typing import Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

from model import InvalidParameter, ResourceExceeded, Site, WindowError

from replicas import rng_for

from sortedcontainers import SortedKeyList  # type: ignore


# DATA ################################################################################################################

"""Default cap on the number of configurations an enumeration may emit."""
ENUMERATION_CAP = 10**7

"""Tolerance on the total mass of a finite law."""
MASS_TOLERANCE = 1e-12

Seed = Union[int, np.random.Generator, None]


# CLASSES AND TYPE ALIASES ############################################################################################


class Box(NamedTuple):
	"""An axis-aligned box `{lo_1..hi_1} x ... x {lo_d..hi_d}` of lattice sites, bounds included.

	Attributes
	----------
	lo : Site
		The lower corner.
	hi : Site
		The upper corner.
	"""

	lo: Site
	hi: Site

	@classmethod
	def cube(cls: type[Box], radius: int, d: int = 1) -> Box:
		return cls((-radius,) * d, (radius,) * d)

	@classmethod
	def point(cls: type[Box], site: Site) -> Box:
		return cls(tuple(site), tuple(site))

	@property
	def dim(self: Box) -> int:
		return len(self.lo)

	@property
	def shape(self: Box) -> tuple[int, ...]:
		return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

	@property
	def size(self: Box) -> int:
		return prod(self.shape)

	def contains(self: Box, site: Site) -> bool:
		return all(l <= s <= h for l, s, h in zip(self.lo, site, self.hi))

	def contains_box(self: Box, other: Box) -> bool:
		return self.contains(other.lo) and self.contains(other.hi)

	def union(self: Box, other: Box) -> Box:
		return Box(
			tuple(min(a, b) for a, b in zip(self.lo, other.lo)),
			tuple(max(a, b) for a, b in zip(self.hi, other.hi)),
		)

	def shifted(self: Box, offset: Site) -> Box:
		return Box(tuple(l + o for l, o in zip(self.lo, offset)), tuple(h + o for h, o in zip(self.hi, offset)))

	def index(self: Box, site: Site) -> tuple[int, ...]:
		return tuple(s - l for s, l in zip(site, self.lo))

	def slices(self: Box, inner: Box) -> tuple[slice, ...]:
		"""The array slices selecting `inner` inside an array laid out over `self`."""

		return tuple(slice(il - l, ih - l + 1) for l, il, ih in zip(self.lo, inner.lo, inner.hi))

	def sites(self: Box) -> Iterator[Site]:
		return product(*(range(l, h + 1) for l, h in zip(self.lo, self.hi)))


"""A window: one box per time slice, entry `s - 1` being the box of slice `s`."""
Window = tuple[Box, ...]


@dataclass(frozen=True)
class EnvSpec:
	"""A finite single-site law of the environment, values in `[-1, inf)`.

	The same type carries the mark law `rho` of continuous-time environments.

	Attributes
	----------
	atoms : tuple[tuple[float, float], ...]
		Pairs `(value, prob)`.
	"""

	atoms: tuple[tuple[float, float], ...]

	def __post_init__(self: EnvSpec) -> None:
		atoms = tuple((float(value), float(prob)) for value, prob in self.atoms)

		if not atoms:
			raise InvalidParameter("A law needs at least one atom.")
		elif any(value < -1.0 for value, _ in atoms):
			raise InvalidParameter(f"Environment values must be >= -1, got {atoms}.")
		elif any(prob < 0.0 for _, prob in atoms) or abs(sum(prob for _, prob in atoms) - 1.0) > MASS_TOLERANCE:
			raise InvalidParameter(f"Atom probabilities must be non-negative and sum to 1, got {atoms}.")

		object.__setattr__(self, "atoms", atoms)

	@classmethod
	def constant(cls: type[EnvSpec], value: float) -> EnvSpec:
		return cls(((value, 1.0),))

	@classmethod
	def bernoulli_obstacles(cls: type[EnvSpec], q: float) -> EnvSpec:
		"""Hard obstacles (`-1`) with probability `q`, empty sites (`0`) otherwise."""

		return cls(((-1.0, q), (0.0, 1.0 - q)))

	def __len__(self: EnvSpec) -> int:
		return len(self.atoms)

	@property
	def values(self: EnvSpec) -> np.ndarray:
		return np.array([value for value, _ in self.atoms])

	@property
	def probs(self: EnvSpec) -> np.ndarray:
		return np.array([prob for _, prob in self.atoms])

	@property
	def mean_factor(self: EnvSpec) -> float:
		"""`R = E[1 + omega]`."""

		return float(np.dot(self.probs, 1.0 + self.values))

	@property
	def hard_obstacle_prob(self: EnvSpec) -> float:
		return float(sum(prob for value, prob in self.atoms if value == -1.0))

	def sample(self: EnvSpec, rng: np.random.Generator, shape: Union[int, tuple[int, ...]]) -> np.ndarray:
		return self.values[rng.choice(len(self.atoms), size=shape, p=self.probs)]

	def pformat(self: EnvSpec, level: int = 0) -> str:
		i = "\n" + ("\t" * level)

		return f"{i}spec {{ atoms : {list(self.atoms)}; R : {self.mean_factor}; }}"


@dataclass(frozen=True, eq=False)
class LatticeField:
	"""A realized environment on a finite space-time window.

	Attributes
	----------
	horizon : int
		The last time slice, slices being `1..horizon`.
	boxes : Window
		The box of each slice.
	values : tuple[np.ndarray, ...]
		The values of each slice, laid out over its box.
	default_value : float
		The value assumed outside the window, never used by checked lookups (default: 0).
	"""

	horizon: int
	boxes: Window
	values: tuple[np.ndarray, ...]
	default_value: float = 0.0

	def __post_init__(self: LatticeField) -> None:
		if len(self.boxes) != self.horizon or len(self.values) != self.horizon:
			raise InvalidParameter(f"A field of horizon {self.horizon} needs exactly {self.horizon} slices.")

		for s, (box, values) in enumerate(zip(self.boxes, self.values), start=1):
			if values.shape != box.shape:
				raise InvalidParameter(f"Slice {s} has shape {values.shape}, its box {box} has shape {box.shape}.")
			elif values.size and values.min() < -1.0:
				raise InvalidParameter(f"Slice {s} holds a value below -1.")

	@property
	def dim(self: LatticeField) -> int:
		return self.boxes[0].dim if self.boxes else 0

	@property
	def cells(self: LatticeField) -> int:
		return sum(box.size for box in self.boxes)

	def box(self: LatticeField, s: int) -> Box:
		return self.boxes[s - 1]

	def covers(self: LatticeField, s: int, box: Box) -> bool:
		return 1 <= s <= self.horizon and self.boxes[s - 1].contains_box(box)

	def value(self: LatticeField, s: int, site: Site) -> float:
		"""The value at `(s, site)`.

		Raises
		------
		WindowError
			If `(s, site)` lies outside the window.
		"""

		if not (1 <= s <= self.horizon) or not self.boxes[s - 1].contains(site):
			raise WindowError(f"Cell ({s}, {site}) lies outside the window of the field.")

		return float(self.values[s - 1][self.boxes[s - 1].index(site)])

	def subarray(self: LatticeField, s: int, box: Box) -> np.ndarray:
		"""The values of slice `s` over `box`, which must lie inside the window."""

		if not self.covers(s, box):
			raise WindowError(f"Box {box} of slice {s} is not covered by the window {self.boxes[s - 1]}.")

		return self.values[s - 1][self.boxes[s - 1].slices(box)]

	def pformat(self: LatticeField, level: int = 0) -> str:
		i = "\n" + ("\t" * level)

		return f"{i}field {{" + "".join(
			f"{i}\tslice {s} {box} : {values.tolist()};"
			for s, (box, values) in enumerate(zip(self.boxes, self.values), start=1)
		) + f"{i}}}"


class Mark(NamedTuple):
	"""A space-time mark: at time `time`, the mass at `site` is multiplied by `1 + r`."""

	time: float
	site: Site
	r: float


@dataclass(eq=False)
class MarkSet:
	"""A finite set of continuous-time marks on `[0, horizon] x {-box_radius..box_radius}^d`.

	Attributes
	----------
	horizon : float
		The time horizon.
	box_radius : int
		The radius of the box the marks were sampled in.
	dim : int
		The lattice dimension.
	marks : SortedKeyList[Mark]
		Marks, kept sorted by time.
	rate : float
		Per-site intensity the marks were sampled with.
	law : EnvSpec
		The mark law `rho`.
	"""

	horizon: float
	box_radius: int
	dim: int
	marks: SortedKeyList
	rate: float
	law: EnvSpec

	def __init__(
		self: MarkSet,
		horizon: float,
		box_radius: int,
		marks: Sequence[Mark] = (),
		rate: float = 1.0,
		law: Optional[EnvSpec] = None,
		dim: int = 1,
	) -> None:
		if horizon <= 0:
			raise InvalidParameter(f"Mark sets need a positive horizon, got {horizon}.")

		self.horizon = float(horizon)
		self.box_radius = int(box_radius)
		self.dim = dim
		self.rate = float(rate)
		self.law = law if law is not None else EnvSpec.constant(-1.0)
		self.marks = SortedKeyList(key=attrgetter("time"))

		for mark in marks:
			self.add(Mark(float(mark[0]), tuple(int(c) for c in np.atleast_1d(mark[1])), float(mark[2])))

	def add(self: MarkSet, mark: Mark) -> None:
		"""Inserts a mark, keeping time order.

		Raises
		------
		InvalidParameter
			If the mark lies outside `[0, horizon]`, has `r < -1`, or ties with the time of another mark.
		"""

		if not 0.0 <= mark.time <= self.horizon:
			raise InvalidParameter(f"Mark time {mark.time} lies outside [0, {self.horizon}].")
		elif mark.r < -1.0:
			raise InvalidParameter(f"Mark value {mark.r} is below -1.")
		elif len(mark.site) != self.dim:
			raise InvalidParameter(f"Mark site {mark.site} is not {self.dim}-dimensional.")

		position = self.marks.bisect_key_left(mark.time)

		if position < len(self.marks) and self.marks[position].time == mark.time:
			raise InvalidParameter(f"Two marks share the time {mark.time}; ties are rejected.")

		self.marks.add(mark)

	def __iter__(self: MarkSet) -> Iterator[Mark]:
		return iter(self.marks)

	def __len__(self: MarkSet) -> int:
		return len(self.marks)

	@property
	def mean_factor(self: MarkSet) -> float:
		return self.law.mean_factor

	def until(self: MarkSet, t: float) -> list[Mark]:
		return list(self.marks.irange_key(max_key=t))

	def at_site(self: MarkSet, site: Site) -> list[Mark]:
		return [mark for mark in self.marks if mark.site == tuple(site)]

	def reversed(self: MarkSet, t: Optional[float] = None) -> MarkSet:
		"""The time reversal `s -> t - s` of the marks in `[0, t]` (default: the horizon)."""

		t = self.horizon if t is None else t

		return MarkSet(
			t, self.box_radius, [Mark(t - mark.time, mark.site, mark.r) for mark in self.until(t)],
			self.rate, self.law, self.dim,
		)

	def pformat(self: MarkSet, level: int = 0) -> str:
		i = "\n" + ("\t" * level)

		return f"{i}marks {{ horizon : {self.horizon}; radius : {self.box_radius};" + "".join(
			f"{i}\t({mark.time:.6f}, {mark.site}, {mark.r});" for mark in self.marks
		) + f"{i}}}"


@dataclass(frozen=True, eq=False)
class TreeEnv:
	"""An environment on the nodes of depth `1..depth` of the `arity`-ary tree.

	A node is the tuple of child indices (each in `1..arity`) from the root; level `s` is stored as an array of length
	`arity**s` in lexicographic order of the nodes.

	Attributes
	----------
	arity : int
		The number of children per node.
	depth : int
		The deepest level.
	levels : tuple[np.ndarray, ...]
		Entry `s - 1` holds the values of the nodes of depth `s`.
	"""

	arity: int
	depth: int
	levels: tuple[np.ndarray, ...]

	def __post_init__(self: TreeEnv) -> None:
		if self.arity < 2 or self.depth < 1:
			raise InvalidParameter(f"Tree environments need arity >= 2 and depth >= 1, got {self.arity}, {self.depth}.")
		elif len(self.levels) != self.depth:
			raise InvalidParameter(f"Expected {self.depth} levels, got {len(self.levels)}.")

		for s, level in enumerate(self.levels, start=1):
			if level.shape != (self.arity**s,):
				raise InvalidParameter(f"Level {s} must hold {self.arity**s} values, got shape {level.shape}.")
			elif level.min() < -1.0:
				raise InvalidParameter(f"Level {s} holds a value below -1.")

	@classmethod
	def from_values(cls: type[TreeEnv], arity: int, depth: int, values: dict[Site, float]) -> TreeEnv:
		"""Builds an environment from a node map, which must define exactly the nodes of depth `1..depth`."""

		expected = {node for s in range(1, depth + 1) for node in tree_nodes(arity, s)}

		if set(values) != expected:
			raise InvalidParameter("Tree environment values must cover exactly the nodes of depth 1..depth.")

		return cls(arity, depth, tuple(
			np.array([values[node] for node in tree_nodes(arity, s)], dtype=float) for s in range(1, depth + 1)
		))

	def index(self: TreeEnv, node: Site) -> int:
		index = 0

		for a in node:
			if not 1 <= a <= self.arity:
				raise InvalidParameter(f"Node {node} has a child index outside 1..{self.arity}.")

			index = index * self.arity + (a - 1)

		return index

	def value(self: TreeEnv, node: Site) -> float:
		if not 1 <= len(node) <= self.depth:
			raise InvalidParameter(f"Node {node} has no value in an environment of depth {self.depth}.")

		return float(self.levels[len(node) - 1][self.index(node)])

	def items(self: TreeEnv) -> Iterator[tuple[Site, float]]:
		for s in range(1, self.depth + 1):
			yield from zip(tree_nodes(self.arity, s), self.levels[s - 1].tolist())

	def pformat(self: TreeEnv, level: int = 0) -> str:
		i = "\n" + ("\t" * level)

		return f"{i}tree {{ arity : {self.arity};" + "".join(
			f"{i}\tdepth {s} : {values.tolist()};" for s, values in enumerate(self.levels, start=1)
		) + f"{i}}}"


@dataclass(frozen=True)
class OffspringSpec:
	"""A finite law over offspring distributions.

	Attributes
	----------
	atoms : tuple[tuple[tuple[float, ...], float], ...]
		Pairs `(law, prob)`, where `law[k]` is the probability of `k` descendants.
	"""

	atoms: tuple[tuple[tuple[float, ...], float], ...]

	def __post_init__(self: OffspringSpec) -> None:
		atoms = tuple((tuple(float(x) for x in law), float(prob)) for law, prob in self.atoms)

		if not atoms:
			raise InvalidParameter("An offspring law needs at least one atom.")

		for law, _ in atoms:
			if any(x < 0.0 for x in law) or abs(sum(law) - 1.0) > MASS_TOLERANCE:
				raise InvalidParameter(f"Offspring law {law} is not a probability vector.")

		if any(prob < 0.0 for _, prob in atoms) or abs(sum(prob for _, prob in atoms) - 1.0) > MASS_TOLERANCE:
			raise InvalidParameter("Offspring atom probabilities must be non-negative and sum to 1.")

		object.__setattr__(self, "atoms", atoms)

	@classmethod
	def deterministic(cls: type[OffspringSpec], k: int) -> OffspringSpec:
		"""Every particle has exactly `k` descendants."""

		return cls((((0.0,) * k + (1.0,), 1.0),))

	@property
	def means(self: OffspringSpec) -> np.ndarray:
		"""The expected number of descendants `m = 1 + omega` of each atom."""

		return np.array([float(np.dot(np.arange(len(law)), law)) for law, _ in self.atoms])

	@property
	def probs(self: OffspringSpec) -> np.ndarray:
		return np.array([prob for _, prob in self.atoms])

	@property
	def laws(self: OffspringSpec) -> list[np.ndarray]:
		return [np.array(law) for law, _ in self.atoms]

	@property
	def nondegenerate(self: OffspringSpec) -> bool:
		"""Whether `E[log(1 + omega)] > -inf`, i.e. no atom of positive probability has mean zero."""

		return all(m > 0.0 for m, prob in zip(self.means, self.probs) if prob > 0.0)

	def omega_spec(self: OffspringSpec) -> EnvSpec:
		"""The induced environment law of `omega = m - 1`, atoms with equal means merged."""

		merged: dict[float, float] = {}

		for m, prob in zip(self.means.tolist(), self.probs.tolist()):
			merged[m - 1.0] = merged.get(m - 1.0, 0.0) + prob

		return EnvSpec(tuple(merged.items()))


@dataclass(frozen=True, eq=False)
class OffspringField:
	"""A realized offspring field: generation-`s` particles at a site reproduce by the law drawn for `(s, site)`.

	Attributes
	----------
	spec : OffspringSpec
		The law the field was drawn from.
	horizon : int
		The number of generations, slices being `0..horizon - 1`.
	boxes : tuple[Box, ...]
		Entry `s` holds the box of generation `s`.
	atoms : tuple[np.ndarray, ...]
		Entry `s` holds, over its box, the index of the offspring law of each site.
	"""

	spec: OffspringSpec
	horizon: int
	boxes: tuple[Box, ...]
	atoms: tuple[np.ndarray, ...]

	def means(self: OffspringField, s: int) -> np.ndarray:
		return self.spec.means[self.atoms[s]]

	def omega_field(self: OffspringField) -> LatticeField:
		"""The induced environment `omega(eta)` on generations `1..horizon - 1`, as a field of horizon `horizon - 1`.

		Generation 0 only holds the origin, whose factor is `root_factor`.
		"""

		return LatticeField(
			self.horizon - 1, self.boxes[1:], tuple(self.means(s) - 1.0 for s in range(1, self.horizon)),
		)

	@property
	def root_factor(self: OffspringField) -> float:
		origin = (0,) * self.boxes[0].dim

		if not self.boxes[0].contains(origin):
			raise WindowError("The generation-0 box of an offspring field must contain the origin.")

		return float(self.means(0)[self.boxes[0].index(origin)])


# FUNCTIONS ###########################################################################################################


def tree_nodes(arity: int, depth: int) -> Iterator[Site]:
	"""The nodes of a given depth, in lexicographic order."""

	return product(range(1, arity + 1), repeat=depth)


def as_path(x: Union[Sequence[int], Sequence[Site], np.ndarray], d: Optional[int] = None) -> np.ndarray:
	"""Normalizes a path to an integer array of shape `(t + 1, d)`, whose first row is the origin.

	Raises
	------
	InvalidParameter
		If the path does not start at the origin.
	"""

	path = np.asarray(x, dtype=np.int64)

	if path.ndim == 1:
		path = path.reshape(-1, 1 if d is None else d)

	if len(path) == 0 or np.any(path[0] != 0):
		raise InvalidParameter("Paths start at the origin: their first entry must be 0.")

	return path


def constant_field(value: float, window: Window) -> LatticeField:
	return LatticeField(len(window), tuple(window), tuple(np.full(box.shape, float(value)) for box in window))


def sample_lattice_field(spec: EnvSpec, horizon: int, window: Window, seed: Seed = None) -> LatticeField:
	"""Draws an i.i.d. field from `spec` on every cell of `window`.

	Parameters
	----------
	spec : EnvSpec
		The single-site law.
	horizon : int
		The number of slices.
	window : Window
		One non-empty box per slice.
	seed : Seed
		A seed or a generator; the field is deterministic given the seed.

	Returns
	-------
	LatticeField
		The sampled field.
	"""

	if len(window) != horizon:
		raise InvalidParameter(f"Expected {horizon} boxes, got {len(window)}.")

	rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)

	return LatticeField(horizon, tuple(window), tuple(spec.sample(rng, box.shape) for box in window))


def enumerate_lattice_fields(
	spec: EnvSpec, horizon: int, window: Window, cap: int = ENUMERATION_CAP,
) -> Iterator[tuple[LatticeField, float]]:
	"""Emits every configuration of the window exactly once, together with its probability.

	Parameters
	----------
	spec : EnvSpec
		The single-site law, i.i.d. over cells.
	horizon : int
		The number of slices.
	window : Window
		One box per slice.
	cap : int, optional
		The largest number of configurations allowed (default: 10**7).

	Returns
	-------
	Iterator[tuple[LatticeField, float]]
		Pairs of field and probability; the probabilities sum to one.

	Raises
	------
	ResourceExceeded
		If `len(spec)**cells` exceeds the cap.
	"""

	cells = sum(box.size for box in window)
	count = len(spec) ** cells

	if count > cap:
		raise ResourceExceeded(f"Instance too large: {len(spec)}^{cells} = {count} configurations exceed the cap {cap}.")

	logging.debug(f"Enumerating {count} lattice fields over {cells} cells.")

	return _enumerate_fields(spec, horizon, tuple(window), cells)


def _enumerate_fields(spec: EnvSpec, horizon: int, window: Window, cells: int) -> Iterator[tuple[LatticeField, float]]:
	values, probs = spec.values, spec.probs
	bounds = np.cumsum([0] + [box.size for box in window])

	for indices in product(range(len(spec)), repeat=cells):
		flat = values[list(indices)]
		slices = tuple(flat[bounds[k]:bounds[k + 1]].reshape(box.shape) for k, box in enumerate(window))

		yield LatticeField(horizon, window, slices), float(np.prod(probs[list(indices)]))


def shift_lattice(field: LatticeField, path: Union[Sequence[int], np.ndarray], window: Optional[Window] = None) -> LatticeField:
	"""The shifted field `(theta^x omega)(s, i) = omega(s, i + x_s)`.

	Parameters
	----------
	field : LatticeField
		The field `omega`.
	path : Union[Sequence[int], np.ndarray]
		The path `x`, starting at the origin, of length at least `horizon + 1`.
	window : Optional[Window], optional
		The output window; by default the field's window moved by `-x_s`, so that every lookup is in range.

	Returns
	-------
	LatticeField
		The shifted field on the output window.

	Raises
	------
	WindowError
		If a shifted lookup leaves the field's window.
	"""

	x = as_path(path, field.dim)

	if len(x) < field.horizon + 1:
		raise InvalidParameter(f"A path of length {len(x) - 1} cannot shift a field of horizon {field.horizon}.")

	offsets = [tuple(int(c) for c in x[s]) for s in range(field.horizon + 1)]

	if window is None:
		window = tuple(box.shifted(tuple(-c for c in offsets[s])) for s, box in enumerate(field.boxes, start=1))

	values = tuple(field.subarray(s, box.shifted(offsets[s])).copy() for s, box in enumerate(window, start=1))

	return LatticeField(field.horizon, tuple(window), values, field.default_value)


def _poisson_marks(
	rate: float, law: EnvSpec, horizon: float, sites: list[Site], rng: np.random.Generator,
) -> list[Mark]:
	counts = rng.poisson(rate * horizon, size=len(sites))
	total = int(counts.sum())
	times = rng.uniform(0.0, horizon, size=total)
	owners = np.repeat(np.arange(len(sites)), counts)
	values = law.sample(rng, total)

	if len(np.unique(times)) != total:
		raise InvalidParameter("Two sampled marks share the same time.")

	return [Mark(time, sites[owner], r) for time, owner, r in zip(times, owners, values)]


def sample_mark_set(
	rate: float, law: EnvSpec, horizon: float, box_radius: int, seed: Seed = None, dim: int = 1,
) -> MarkSet:
	"""Samples independent Poisson marks of intensity `rate` on every site of `{-box_radius..box_radius}^dim` over
	`[0, horizon]`, with i.i.d. marks of law `law`.

	Raises
	------
	InvalidParameter
		If `rate <= 0`, or in the (probability zero) event of tied mark times.
	"""

	if rate <= 0:
		raise InvalidParameter(f"Mark intensity must be positive, got {rate}.")

	rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
	marks = _poisson_marks(rate, law, horizon, list(Box.cube(box_radius, dim).sites()), rng)

	return MarkSet(horizon, box_radius, marks, rate, law, dim)


def extend_mark_set(marks: MarkSet, box_radius: int, seed: Seed = None) -> MarkSet:
	"""Grows a sampled mark set to a larger box: the sites outside the old box receive fresh Poisson marks of the same
	intensity and law, the old marks are kept.

	Raises
	------
	InvalidParameter
		If the new box is smaller than the old one, or in the (probability zero) event of tied mark times.
	"""

	if box_radius < marks.box_radius:
		raise InvalidParameter(f"Cannot shrink a mark set from radius {marks.box_radius} to {box_radius}.")

	rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
	old = Box.cube(marks.box_radius, marks.dim)
	sites = [site for site in Box.cube(box_radius, marks.dim).sites() if not old.contains(site)]
	fresh = _poisson_marks(marks.rate, marks.law, marks.horizon, sites, rng)
	logging.debug(f"Mark set grown from radius {marks.box_radius} to {box_radius}: {len(fresh)} new marks.")

	return MarkSet(marks.horizon, box_radius, list(marks) + fresh, marks.rate, marks.law, marks.dim)


def sample_tree_env(spec: EnvSpec, arity: int, depth: int, seed: Seed = None) -> TreeEnv:
	rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)

	return TreeEnv(arity, depth, tuple(spec.sample(rng, arity**s) for s in range(1, depth + 1)))


def enumerate_tree_envs(
	spec: EnvSpec, arity: int, depth: int, cap: int = ENUMERATION_CAP,
) -> Iterator[tuple[TreeEnv, float]]:
	"""Emits every i.i.d. tree environment of depth `depth` exactly once, with its probability.

	Raises
	------
	ResourceExceeded
		If `len(spec)**nodes` exceeds the cap.
	"""

	sizes = [arity**s for s in range(1, depth + 1)]
	count = len(spec) ** sum(sizes)

	if count > cap:
		raise ResourceExceeded(f"Instance too large: {count} tree environments exceed the cap {cap}.")

	return _enumerate_trees(spec, arity, depth, sizes)


def _enumerate_trees(spec: EnvSpec, arity: int, depth: int, sizes: list[int]) -> Iterator[tuple[TreeEnv, float]]:
	values, probs = spec.values, spec.probs
	bounds = np.cumsum([0] + sizes)

	for indices in product(range(len(spec)), repeat=sum(sizes)):
		flat = values[list(indices)]

		yield (
			TreeEnv(arity, depth, tuple(flat[bounds[k]:bounds[k + 1]] for k in range(depth))),
			float(np.prod(probs[list(indices)])),
		)


def check_permutation(perm: Sequence[int], arity: int) -> tuple[int, ...]:
	perm = tuple(int(a) for a in perm)

	if sorted(perm) != list(range(1, arity + 1)):
		raise InvalidParameter(f"{perm} is not a permutation of 1..{arity}.")

	return perm


def apply_elementary_shift(env: TreeEnv, node: Site, perm: Sequence[int]) -> TreeEnv:
	"""The environment `w -> env(theta(w))`, where the elementary shift `theta` maps `(node, a, w')` to
	`(node, perm(a), w')` and fixes every other node.

	Parameters
	----------
	env : TreeEnv
		The environment.
	node : Site
		The node whose subtrees are permuted, of depth smaller than `env.depth`.
	perm : Sequence[int]
		The permutation, `perm[a - 1]` being the image of `a`.

	Returns
	-------
	TreeEnv
		The shifted environment.

	Raises
	------
	InvalidParameter
		If `perm` is not a permutation or `node` is too deep.
	"""

	perm = check_permutation(perm, env.arity)
	node = tuple(node)

	if len(node) >= env.depth:
		raise InvalidParameter(f"Node {node} has no subtrees in an environment of depth {env.depth}.")

	base = env.index(node)
	rows = np.array(perm) - 1
	levels = list(env.levels)

	for s in range(len(node) + 1, env.depth + 1):
		block = env.arity ** (s - len(node) - 1)
		start = base * env.arity * block
		segment = levels[s - 1][start:start + env.arity * block].reshape(env.arity, block)
		level = levels[s - 1].copy()
		level[start:start + env.arity * block] = segment[rows, :].reshape(-1)
		levels[s - 1] = level

	return TreeEnv(env.arity, env.depth, tuple(levels))


def sample_offspring_field(
	spec: OffspringSpec, horizon: int, boxes: Sequence[Box], seed: Seed = None,
) -> OffspringField:
	"""Draws an i.i.d. offspring field on generations `0..horizon - 1`, `boxes[s]` being the box of generation `s`."""

	if len(boxes) != horizon:
		raise InvalidParameter(f"Expected {horizon} generation boxes, got {len(boxes)}.")

	rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)

	return OffspringField(
		spec, horizon, tuple(boxes), tuple(rng.choice(len(spec.atoms), size=box.shape, p=spec.probs) for box in boxes),
	)
