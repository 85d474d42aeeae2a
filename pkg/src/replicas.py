#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Deterministic replica seeding and execution.

A 64-bit master seed expands into one substream per replica through the counter scheme
`SeedSequence(seed, spawn_key=(index,))`, and replicas are reduced in index order, so the thread count never changes
the output.
"""

# IMPORTS #############################################################################################################

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, TypeVar

import numpy as np

from tqdm import tqdm  # type: ignore


# DATA ################################################################################################################

RESULT = TypeVar('RESULT')

"""Master seed mask: seeds are reduced to 64 bits."""
SEED_MASK = (1 << 64) - 1


# FUNCTIONS ###########################################################################################################


def substream(seed: int, index: int) -> np.random.Generator:
	"""Returns the generator of replica `index` under master seed `seed`.

	Parameters
	----------
	seed : int
		The master seed.
	index : int
		The replica index.

	Returns
	-------
	np.random.Generator
		A PCG64 generator seeded from `SeedSequence(seed, spawn_key=(index,))`.
	"""

	return np.random.default_rng(np.random.SeedSequence(seed & SEED_MASK, spawn_key=(index,)))


def rng_for(seed: Optional[int]) -> np.random.Generator:
	return np.random.default_rng(None if seed is None else np.random.SeedSequence(seed & SEED_MASK))


def run_indexed_replicas(
	replica: Callable[[int, np.random.Generator], RESULT],
	seed: int,
	n: int,
	threads: int = 1,
	desc: Optional[str] = None,
) -> list[RESULT]:
	"""Runs `n` independent replicas, replica `k` receiving `k` and `substream(seed, k)`, and returns results in index
	order.

	Parameters
	----------
	replica : Callable[[int, np.random.Generator], RESULT]
		A function of the replica index and generator only.
	seed : int
		The master seed.
	n : int
		The number of replicas.
	threads : int, optional
		Worker threads (default: 1).
	desc : Optional[str], optional
		Progress bar description; no progress bar when `None`.

	Returns
	-------
	results : list[RESULT]
		Replica results, in index order.
	"""

	run = lambda index: replica(index, substream(seed, index))
	progress = lambda it: tqdm(it, total=n, desc=desc, leave=False) if desc is not None else it

	if threads <= 1:
		return [run(index) for index in progress(range(n))]

	with ThreadPoolExecutor(max_workers=threads) as executor:
		return list(progress(executor.map(run, range(n))))


def run_replicas(
	replica: Callable[[np.random.Generator], RESULT],
	seed: int,
	n: int,
	threads: int = 1,
	desc: Optional[str] = None,
) -> list[RESULT]:
	"""Same as `run_indexed_replicas`, for replicas that only need their generator."""

	return run_indexed_replicas(lambda _, rng: replica(rng), seed, n, threads, desc)
