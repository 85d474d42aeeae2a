#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Resources
	https://numpydoc.readthedocs.io/en/latest/format.html

Static analysis
	tests :			https://github.com/pytest-dev/pytest
	type checking :	https://github.com/python/mypy

Sample
	python src/main.py coupling-check --config data/coupling-check/config.json --out output/coupling-check.json
	python src/main.py survival-phase --config data/survival-phase/config.json --out output/survival.json --threads 4
	python src/main.py --list
"""

# IMPORTS #############################################################################################################


import logging
import sys
from argparse import ArgumentParser, Namespace
from json import dumps
from pathlib import Path
from typing import Optional, Sequence

from builder import build, load_root_config

from experiments import VERSION, experiments, list_experiments, run

from format import OutputFormat, ResultEncoder

from log import setup_logging

from model import DegenerateEstimate, InvalidParameter, ResourceExceeded


# DATA ################################################################################################################

"""Exit codes."""
EXIT_PASS = 0
EXIT_VERDICT = 2
EXIT_RESOURCE = 3
EXIT_CONFIG = 4


# FUNCTIONS ###########################################################################################################


def _create_cli_parser() -> ArgumentParser:
	"""Creates a CLI argument parser and returns it.

	Returns
	-------
	parser : ArgumentParser
		An `ArgumentParser` holding the program's CLI.
	"""

	parser = ArgumentParser(
		prog="envpoly",
		description="Partition functions of random walks in space-time random environments, and checks of their \
		stochastic ordering",
		allow_abbrev=True,
	)

	parser.add_argument(
		'subcommand',
		nargs='?',
		type=str,
		choices=experiments.keys(),
		help="Experiment to run, either one of: " + ', '.join(experiments.keys()),
		metavar="SUBCOMMAND",
	)
	parser.add_argument(
		'-c', '--config',
		type=Path,
		help="Experiment configuration file (default: the bundled sample of the subcommand).",
		metavar="FILE",
		dest="config",
	)
	parser.add_argument(
		'-o', '--out',
		type=Path,
		help="Result file; CSV tables are written next to it (default: output/<subcommand>.json).",
		metavar="FILE",
		dest="out",
	)
	parser.add_argument(
		'-f', '--format',
		type=str,
		choices=[member.name for member in OutputFormat],
		help="Output format, either one of: " + ', '.join(member.name for member in OutputFormat),
		metavar="FORMAT",
		dest="format",
	)
	parser.add_argument(
		'-s', '--seed',
		type=int,
		help="Master seed, overriding the configuration file.",
		metavar="SEED",
		dest="seed",
	)
	parser.add_argument(
		'-t', '--threads',
		type=int,
		help="Worker threads for replicas; never changes the results.",
		metavar="THREADS",
		dest="threads",
	)
	parser.add_argument(
		"--list",
		action="store_true",
		help="List the experiments and exit.",
		default=False,
	)
	parser.add_argument(
		"--verbose",
		action="store_true",
		help="Toggle program verbosity.",
		default=None,
	)
	parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")

	return parser


def _print_catalog() -> None:
	for entry in list_experiments():
		label = f" [{entry['label']}]" if entry["label"] else ""
		print(f"{entry['name']:<20}{entry['description']}{label}")


def _execute(args: Namespace, root: dict) -> int:
	"""Builds the configuration, runs the experiment and writes the record.

	Returns
	-------
	int
		`EXIT_PASS` if every verdict holds, `EXIT_VERDICT` otherwise.
	"""

	config_path = args.config if args.config is not None else Path("data") / args.subcommand / "config.json"
	config = build(config_path, args.seed, args.threads, root)

	if config.subcommand != args.subcommand:
		logging.warning(f"'{config_path}' describes '{config.subcommand}', not '{args.subcommand}'; running the former.")

	record = run(config)
	out = args.out if args.out is not None else Path("output") / f"{config.subcommand}.json"
	files = OutputFormat[args.format or root.get("output_format", "csv")](record, out)

	logging.info("Files written:\n\t" + "\n\t".join(map(str, files)))
	print(dumps(record.verdicts, sort_keys=True, cls=ResultEncoder))

	return EXIT_PASS if record.passed else EXIT_VERDICT


# ENTRY POINT #########################################################################################################


def main(argv: Optional[Sequence[str]] = None) -> int:
	"""Program entry point.

	Returns
	-------
	int
		0 if every verdict holds, 2 on a failed verdict, 3 when a resource cap is exceeded or an estimate degenerates,
		4 on a configuration or parameter error.
	"""

	args = _create_cli_parser().parse_args(argv)
	root = load_root_config()
	setup_logging(args.verbose if args.verbose is not None else root.get("verbose", False))

	if args.list:
		_print_catalog()

		return EXIT_PASS
	elif args.subcommand is None:
		logging.error("A subcommand is required, see --list.")

		return EXIT_CONFIG

	try:
		return _execute(args, root)
	except (ResourceExceeded, DegenerateEstimate) as e:
		logging.error(f"{type(e).__name__}: {e}")

		return EXIT_RESOURCE
	except InvalidParameter as e:
		logging.error(f"{type(e).__name__}: {e}")

		return EXIT_CONFIG


if __name__ == "__main__":
	sys.exit(main())
