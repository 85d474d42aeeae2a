#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""Builds experiment configurations from JSON documents, and the model objects they describe."""

# IMPORTS #############################################################################################################

import logging
from json import JSONDecodeError, load
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from envlat import EnvSpec, Mark, MarkSet, OffspringSpec, TreeEnv, sample_mark_set

from increments import (
	IncrementDist, TreeIncrementDist, Walk, binomial_increments, heavy_tail_increments, lazy_srw, srw,
)

from jsonschema import Draft202012Validator  # type: ignore

from model import ConfigError, ExperimentConfig, InvalidParameter

from timed import timed_callable


# DATA ################################################################################################################

ROOT = Path(__file__).resolve().parent.parent

SCHEMA_PATH = ROOT / "data" / "schema.json"

ROOT_CONFIG_PATH = ROOT / "config.json"

"""Resource defaults, overridden by the root configuration, then by the experiment file."""
DEFAULT_RESOURCES: dict[str, Any] = {
	"enumeration_cap": 10**7,
	"population_cap": 10**6,
	"tolerance": 1e-9,
	"epsilon": 1e-6,
}


# FUNCTIONS ###########################################################################################################


def _load_json(filepath: Path) -> dict[str, Any]:
	try:
		with open(filepath) as file:
			document = load(file)
	except FileNotFoundError as e:
		raise ConfigError(f"No configuration file at '{filepath}'.") from e
	except JSONDecodeError as e:
		raise ConfigError(f"'{filepath}' is not valid JSON: {e}") from e

	if not isinstance(document, dict):
		raise ConfigError(f"'{filepath}' must hold a JSON object.")

	return document


def validate(document: dict[str, Any], schema: Optional[dict[str, Any]] = None) -> dict[str, Any]:
	"""Validates an experiment document against the bundled schema.

	Parameters
	----------
	document : dict[str, Any]
		The parsed experiment file.
	schema : Optional[dict[str, Any]], optional
		The schema (default: `data/schema.json`).

	Returns
	-------
	document : dict[str, Any]
		The same document.

	Raises
	------
	ConfigError
		Listing every schema violation.
	"""

	schema = _load_json(SCHEMA_PATH) if schema is None else schema
	errors = sorted(Draft202012Validator(schema).iter_errors(document), key=lambda e: list(e.absolute_path))

	if errors:
		raise ConfigError("Schema validation failed:\n\t" + "\n\t".join(
			f"{'/'.join(map(str, error.absolute_path)) or '<root>'}: {error.message}" for error in errors
		))

	return document


def load_root_config(filepath: Path = ROOT_CONFIG_PATH) -> dict[str, Any]:
	"""The root configuration, or an empty one when the file is missing."""

	if not filepath.is_file():
		logging.debug(f"No root configuration at '{filepath}', using the defaults.")

		return {}

	return _load_json(filepath)


@timed_callable("Building the experiment configuration...")
def build(
	filepath: Path, seed: Optional[int] = None, threads: Optional[int] = None, root: Optional[dict[str, Any]] = None,
) -> ExperimentConfig:
	"""Creates an experiment configuration from a file.
	The CLI arguments have priority over the experiment file, which has priority over the root configuration.

	Parameters
	----------
	filepath : Path
		The experiment file.
	seed : Optional[int], optional
		The seed given on the command line.
	threads : Optional[int], optional
		The thread count given on the command line.
	root : Optional[dict[str, Any]], optional
		The root configuration (default: `config.json` at the repository root).

	Returns
	-------
	ExperimentConfig
		The validated configuration.

	Raises
	------
	ConfigError
		If the file is missing, malformed, or violates the schema.
	"""

	document = _load_json(filepath)
	root = load_root_config() if root is None else root

	if seed is not None:
		document["seed"] = seed

	validate(document)

	_or = lambda base, backup: base if base is not None else backup

	resources = {key: root.get(key, value) for key, value in DEFAULT_RESOURCES.items()} | document.get("resources", {})

	return ExperimentConfig(
		document["subcommand"],
		document.get("params", {}),
		resources,
		document.get("seed"),
		_or(threads, document.get("threads", root.get("threads", 1))),
		filepath,
	)


def _step(value: Union[int, list[int]]) -> Union[int, list[int]]:
	return value if isinstance(value, int) else list(value)


def env_spec(description: dict[str, Any]) -> EnvSpec:
	"""Builds a single-site law from `{"kind": "atoms" | "bernoulli_obstacles" | "constant", ...}`.

	Raises
	------
	ConfigError
		If the description is malformed.
	"""

	try:
		match description["kind"]:
			case "atoms":
				return EnvSpec(tuple((value, prob) for value, prob in description["atoms"]))
			case "bernoulli_obstacles":
				return EnvSpec.bernoulli_obstacles(description["q"])
			case "constant":
				return EnvSpec.constant(description["value"])
	except (KeyError, TypeError, InvalidParameter) as e:
		raise ConfigError(f"Malformed environment law {description}: {e}") from e

	raise ConfigError(f"Unknown environment law kind {description.get('kind')!r}.")


def walk(description: dict[str, Any]) -> Walk:
	"""Builds a walk from its description: `srw`, `lazy_srw`, `dirac`, `uniform`, `pairs`, `binomial`, `heavy_tail`, or
	`per_step` (a list of walk descriptions, one per step).

	Raises
	------
	ConfigError
		If the description is malformed.
	"""

	try:
		match description["kind"]:
			case "srw":
				return srw(description.get("d", 1))
			case "lazy_srw":
				return lazy_srw(description.get("d", 1), description.get("hold", 0.5))
			case "dirac":
				return IncrementDist.dirac(_step(description.get("step", 0)), description.get("d", 1))
			case "uniform":
				return IncrementDist.uniform([_step(step) for step in description["steps"]])
			case "pairs":
				return IncrementDist.from_pairs([(_step(step), prob) for step, prob in description["pairs"]])
			case "binomial":
				return binomial_increments(description["a"], description["p"])
			case "heavy_tail":
				return heavy_tail_increments(description["alpha"], description["cutoff"])
			case "per_step":
				steps = [walk(step) for step in description["steps"]]

				if any(not isinstance(step, IncrementDist) for step in steps):
					raise ConfigError("Per-step walks cannot nest.")

				return steps
	except (KeyError, TypeError, InvalidParameter) as e:
		raise ConfigError(f"Malformed walk {description}: {e}") from e

	raise ConfigError(f"Unknown walk kind {description.get('kind')!r}.")


def walks(descriptions: dict[str, dict[str, Any]]) -> dict[str, Walk]:
	return {label: walk(description) for label, description in descriptions.items()}


def tree_law(description: Union[list[float], dict[str, Any]]) -> TreeIncrementDist:
	"""Builds a tree step law from a probability vector, or from `{"kind": "uniform", "arity": K}`."""

	try:
		if isinstance(description, list):
			return TreeIncrementDist(description)
		elif description.get("kind") == "uniform":
			return TreeIncrementDist.uniform(description["arity"])
	except (KeyError, TypeError, InvalidParameter) as e:
		raise ConfigError(f"Malformed tree law {description}: {e}") from e

	raise ConfigError(f"Unknown tree law {description}.")


def tree_env(description: dict[str, Any]) -> TreeEnv:
	"""Builds a tree environment from `{"arity": K, "levels": [[...], ...]}`, level `s` listing its `K^s` values."""

	try:
		return TreeEnv(description["arity"], len(description["levels"]), tuple(
			np.array(level, dtype=float) for level in description["levels"]
		))
	except (KeyError, TypeError, ValueError, InvalidParameter) as e:
		raise ConfigError(f"Malformed tree environment {description}: {e}") from e


def offspring_spec(description: dict[str, Any]) -> OffspringSpec:
	"""Builds an offspring field law from `{"kind": "deterministic", "k": k}` or `{"kind": "atoms", "atoms": [[law,
	prob], ...]}`."""

	try:
		match description["kind"]:
			case "deterministic":
				return OffspringSpec.deterministic(description["k"])
			case "atoms":
				return OffspringSpec(tuple((tuple(law), prob) for law, prob in description["atoms"]))
	except (KeyError, TypeError, InvalidParameter) as e:
		raise ConfigError(f"Malformed offspring law {description}: {e}") from e

	raise ConfigError(f"Unknown offspring law kind {description.get('kind')!r}.")


def mark_set(description: dict[str, Any], rng: Optional[np.random.Generator] = None) -> MarkSet:
	"""Builds a mark set, either listed (`{"kind": "explicit", "marks": [[time, site, r], ...], ...}`) or sampled
	(`{"kind": "sampled", "rate": ..., "law": ..., ...}`) from `rng`.

	Raises
	------
	ConfigError
		If the description is malformed, or a sampled set has no generator.
	"""

	try:
		match description["kind"]:
			case "explicit":
				dim = description.get("dim", 1)

				return MarkSet(
					description["horizon"], description["box_radius"],
					[Mark(time, tuple(site) if isinstance(site, list) else (site,), r) for time, site, r in description["marks"]],
					description.get("rate", 1.0),
					env_spec(description["law"]) if "law" in description else None,
					dim,
				)
			case "sampled":
				if rng is None:
					raise ConfigError("Sampled mark sets need a seed.")

				return sample_mark_set(
					description["rate"],
					env_spec(description["law"]) if "law" in description else EnvSpec.constant(-1.0),
					description["horizon"],
					description["box_radius"],
					rng,
					description.get("dim", 1),
				)
	except (KeyError, TypeError, InvalidParameter) as e:
		if isinstance(e, ConfigError):
			raise

		raise ConfigError(f"Malformed mark set: {e}") from e

	raise ConfigError(f"Unknown mark set kind {description.get('kind')!r}.")
