#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# IMPORTS #############################################################################################################

from json import dump, load
from pathlib import Path

import numpy as np

import pytest

import builder

from experiments import experiments, sample_config

from model import ConfigError


# FUNCTIONS ###########################################################################################################


def _write(directory: Path, document: dict) -> Path:
	path = directory / "config.json"

	with open(path, 'w') as file:
		dump(document, file)

	return path


def _sample(name: str) -> dict:
	with open(sample_config(name)) as file:
		return load(file)


# TESTS ###############################################################################################################


class TestValidation:
	@pytest.mark.parametrize("name", list(experiments))
	def test_bundled_samples(self, name):
		config = builder.build(sample_config(name), root={})

		assert config.subcommand == name

	def test_missing_file(self, tmp_path):
		with pytest.raises(ConfigError):
			builder.build(tmp_path / "nowhere.json", root={})

	def test_malformed_json(self, tmp_path):
		path = tmp_path / "config.json"
		path.write_text("{\"subcommand\": ")

		with pytest.raises(ConfigError):
			builder.build(path, root={})

	def test_unknown_subcommand(self, tmp_path):
		with pytest.raises(ConfigError, match="subcommand"):
			builder.build(_write(tmp_path, {"subcommand": "nope", "params": {}}), root={})

	def test_unknown_key(self, tmp_path):
		document = _sample("majorization") | {"colour": "blue"}

		with pytest.raises(ConfigError):
			builder.build(_write(tmp_path, document), root={})

	def test_stochastic_needs_a_seed(self, tmp_path):
		document = _sample("polymer-dp")
		del document["seed"]
		path = _write(tmp_path, document)

		with pytest.raises(ConfigError, match="seed"):
			builder.build(path, root={})

		assert builder.build(path, seed=3, root={}).seed == 3

	def test_every_violation_is_listed(self, tmp_path):
		document = _sample("coupling-check")
		document["params"]["t"] = 0
		document["threads"] = 0

		with pytest.raises(ConfigError) as e:
			builder.build(_write(tmp_path, document), root={})

		assert "params/t" in str(e.value) and "threads" in str(e.value)


class TestLayering:
	def test_defaults(self, tmp_path):
		config = builder.build(_write(tmp_path, _sample("majorization")), root={})

		assert config.resources["enumeration_cap"] == builder.DEFAULT_RESOURCES["enumeration_cap"]
		assert config.resources["tolerance"] == 1e-12
		assert config.threads == 1

	def test_root_then_file_then_cli(self, tmp_path):
		root = {"threads": 4, "enumeration_cap": 99, "tolerance": 1e-3}
		document = _sample("majorization")
		path = _write(tmp_path, document)

		config = builder.build(path, root=root)

		assert config.threads == 4
		assert config.resources["enumeration_cap"] == 99
		assert config.resources["tolerance"] == 1e-12

		path = _write(tmp_path, document | {"threads": 3})

		assert builder.build(path, root=root).threads == 3
		assert builder.build(path, threads=2, root=root).threads == 2

	def test_cli_seed_wins(self, tmp_path):
		config = builder.build(_write(tmp_path, _sample("polymer-dp")), seed=12, root={})

		assert config.seed == 12

	def test_missing_root_config(self, tmp_path):
		assert builder.load_root_config(tmp_path / "config.json") == {}


class TestModelBuilders:
	def test_walks(self):
		assert builder.walk({"kind": "srw"}).as_dict() == {(-1,): 0.5, (1,): 0.5}
		assert builder.walk({"kind": "dirac", "step": 2}).as_dict() == {(2,): 1.0}
		assert builder.walk({"kind": "pairs", "pairs": [[-2, 0.25], [0, 0.5], [2, 0.25]]}).prob(0) == 0.5
		assert len(builder.walk({"kind": "per_step", "steps": [{"kind": "srw"}, {"kind": "lazy_srw"}]})) == 2

	@pytest.mark.parametrize("description", [
		{"kind": "walkabout"},
		{"kind": "binomial", "a": 2},
		{"kind": "pairs", "pairs": [[0, 0.7], [1, 0.7]]},
		{"kind": "per_step", "steps": [{"kind": "per_step", "steps": [{"kind": "srw"}]}]},
	])
	def test_malformed_walks(self, description):
		with pytest.raises(ConfigError):
			builder.walk(description)

	def test_environment_laws(self):
		assert builder.env_spec({"kind": "bernoulli_obstacles", "q": 0.25}).hard_obstacle_prob == 0.25
		assert builder.env_spec({"kind": "constant", "value": 0.5}).mean_factor == 1.5

		with pytest.raises(ConfigError):
			builder.env_spec({"kind": "atoms", "atoms": [[-2.0, 1.0]]})

	def test_trees(self):
		assert builder.tree_law({"kind": "uniform", "arity": 3}).probs == pytest.approx([1 / 3] * 3)

		env = builder.tree_env({"arity": 2, "levels": [[0.5, -1.0], [1.0, 0.0, -0.5, 0.25]]})

		assert env.depth == 2
		assert env.value((2, 1)) == -0.5

		with pytest.raises(ConfigError):
			builder.tree_env({"arity": 2, "levels": [[0.5, -1.0, 0.0]]})

	def test_offspring(self):
		assert builder.offspring_spec({"kind": "deterministic", "k": 2}).means.tolist() == [2.0]

		with pytest.raises(ConfigError):
			builder.offspring_spec({"kind": "atoms", "atoms": [[[0.5, 0.6], 1.0]]})

	def test_mark_sets(self):
		explicit = builder.mark_set({
			"kind": "explicit", "horizon": 1.0, "box_radius": 2, "marks": [[0.5, 0, -1.0], [0.25, [1], -0.5]],
		})

		assert [mark.time for mark in explicit] == [0.25, 0.5]
		assert explicit.at_site((0,))[0].r == -1.0

		sampled = {"kind": "sampled", "rate": 1.0, "horizon": 1.0, "box_radius": 2}

		with pytest.raises(ConfigError, match="seed"):
			builder.mark_set(sampled)

		a = builder.mark_set(sampled, np.random.default_rng(4))
		b = builder.mark_set(sampled, np.random.default_rng(4))

		assert list(a) == list(b)
		assert all(mark.r == -1.0 for mark in a)
