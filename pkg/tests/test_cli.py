#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# IMPORTS #############################################################################################################

import csv
from json import dump, load
from math import exp
from pathlib import Path
from typing import Optional

import pytest

from experiments import experiments, list_experiments, sample_config

from main import EXIT_CONFIG, EXIT_PASS, EXIT_RESOURCE, EXIT_VERDICT, main


# FUNCTIONS ###########################################################################################################


def _variant(directory: Path, name: str, **changes: dict) -> Path:
	"""Writes a copy of a bundled sample, some of its sections updated."""

	with open(sample_config(name)) as file:
		document = load(file)

	for key, value in changes.items():
		document[key] = document.get(key, {}) | value if isinstance(value, dict) else value

	path = directory / f"{name}.json"

	with open(path, 'w') as file:
		dump(document, file)

	return path


def _run(name: str, out: Path, *args: str, config: Optional[Path] = None) -> int:
	return main([name, "--config", str(config or sample_config(name)), "--out", str(out), *args])


# TESTS ###############################################################################################################


class TestCatalog:
	def test_list(self, capsys):
		assert main(["--list"]) == EXIT_PASS

		printed = capsys.readouterr().out

		assert all(name in printed for name in experiments)
		assert "exploratory" in printed

	def test_entries(self):
		entries = {entry["name"]: entry for entry in list_experiments()}

		assert entries["conjecture-scan"]["label"] is not None
		assert entries["majorization"]["label"] is None
		assert not entries["pam-exact"]["stochastic"]
		assert all(entry["sample_config"].is_file() for entry in entries.values())

	def test_missing_subcommand(self):
		assert main([]) == EXIT_CONFIG

	def test_version(self):
		with pytest.raises(SystemExit) as e:
			main(["--version"])

		assert e.value.code == 0


class TestRuns:
	@pytest.mark.parametrize("name", [
		"order-exact", "coupling-check", "majorization", "tree-theorem", "tree-interpolation", "polymer-dp",
		"martingale-moment", "pam-exact", "pam-ode-crosscheck",
	])
	def test_fast_samples_pass(self, name, tmp_path):
		assert _run(name, tmp_path / "result.json") == EXIT_PASS

	def test_json_record(self, tmp_path, capsys):
		out = tmp_path / "result.json"

		assert _run("majorization", out, "--format", "json") == EXIT_PASS
		assert list(tmp_path.iterdir()) == [out]

		with open(out) as file:
			record = load(file)

		assert record["passed"]
		assert record["config"]["subcommand"] == "majorization"
		assert set(record["provenance"]) >= {"version", "timestamp", "wall_time"}
		assert '"characterizations_agree": true' in capsys.readouterr().out

	def test_csv_tables(self, tmp_path):
		out = tmp_path / "result.json"

		assert _run("majorization", out, "--format", "csv") == EXIT_PASS

		with open(tmp_path / "result.pairs.csv", newline='') as file:
			rows = list(csv.DictReader(file))

		assert len(rows) == 4
		assert rows[0]["majorized"] == "True"
		assert rows[0]["p"] == "[0.5, 0.5]"

	def test_failed_verdict(self, tmp_path):
		config = _variant(tmp_path, "majorization", params={"pairs": [{"p": [1.0, 0.0], "q": [0.5, 0.5], "expected": True}]})

		assert _run("majorization", tmp_path / "result.json", config=config) == EXIT_VERDICT

	def test_enumeration_cap(self, tmp_path):
		config = _variant(tmp_path, "tree-theorem", resources={"enumeration_cap": 10})

		assert _run("tree-theorem", tmp_path / "result.json", config=config) == EXIT_RESOURCE

	def test_degenerate_estimate(self, tmp_path):
		config = _variant(
			tmp_path, "free-energy", params={"spec": {"kind": "constant", "value": -1.0}}, resources={"n_env": 20},
		)

		assert _run("free-energy", tmp_path / "result.json", config=config) == EXIT_RESOURCE

	def test_schema_violation(self, tmp_path):
		config = _variant(tmp_path, "coupling-check", params={"t": 0})

		assert _run("coupling-check", tmp_path / "result.json", config=config) == EXIT_CONFIG

	def test_reversed_majorization(self, tmp_path):
		config = _variant(tmp_path, "tree-interpolation", params={"p": [0.8, 0.2], "q": [0.5, 0.5], "ladder": False})

		assert _run("tree-interpolation", tmp_path / "result.json", config=config) == EXIT_VERDICT

	def test_invalid_parameter(self, tmp_path):
		config = _variant(tmp_path, "pam-exact", params={"kappa": -1.0})

		assert _run("pam-exact", tmp_path / "result.json", config=config) == EXIT_CONFIG

	def test_threads_do_not_change_results(self, tmp_path):
		config = _variant(tmp_path, "free-energy", resources={"n_env": 40}, params={"t": [4]})
		records = []

		for threads in ("1", "3"):
			out = tmp_path / f"threads{threads}.json"

			_run("free-energy", out, "--threads", threads, "--format", "json", config=config)

			with open(out) as file:
				records.append(load(file)["tables"])

		assert records[0] == records[1]

	def test_survival_oracle_with_capped_runs(self, tmp_path):
		config = _variant(
			tmp_path, "survival-phase", params={"kappas": [0.0], "lams": [3.0], "horizon": 5.0},
			resources={"n": 400, "n_env": 20, "population_cap": 20, "oracle_population": 50},
		)
		out = tmp_path / "result.json"

		assert _run("survival-phase", out, "--format", "json", config=config) == EXIT_PASS

		with open(out) as file:
			record = load(file)

		oracle = record["tables"]["oracle"][0]

		assert oracle["capped"] > 0
		assert oracle["lower"] == pytest.approx(exp(-5.0), rel=1e-6)
		assert oracle["upper"] == pytest.approx(exp(-5.0), rel=1e-6)
		assert oracle["survival_frequency"] < 0.05
		assert record["verdicts"]["catastrophe_oracle"]
		assert record["verdicts"]["horizon_monotone"]

	def test_lyapunov_verdicts(self, tmp_path):
		config = _variant(tmp_path, "lyapunov", params={"t": 2.0}, resources={"n_env": 60})
		out = tmp_path / "result.json"

		assert _run("lyapunov", out, "--format", "json", config=config) == EXIT_PASS

		with open(out) as file:
			verdicts = load(file)["verdicts"]

		assert set(verdicts) == {"annealed_monotone", "quenched_monotone"}

	def test_cli_seed(self, tmp_path):
		config = _variant(tmp_path, "polymer-dp", params={"t": 4})
		out = tmp_path / "result.json"

		assert _run("polymer-dp", out, "--seed", "99", "--format", "json", config=config) == EXIT_PASS

		with open(out) as file:
			assert load(file)["config"]["seed"] == 99
