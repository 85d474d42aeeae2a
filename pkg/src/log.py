#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# IMPORTS #############################################################################################################

import logging
from logging import Handler, LogRecord
from typing import Any

from tqdm import tqdm  # type: ignore


# CLASSES #############################################################################################################


class Singleton(type):
	"""A singleton, meant to be extended.

	Attributes
	----------
	_instances : dict[Any, Singleton]
		Holds subclasses as keys and instances of said subclasses as values.
	"""

	_instances: dict = {}

	def __call__(cls: Any, *args: Any, **kwargs: Any) -> Any:
		if cls not in cls._instances:
			cls._instances[cls] = super(Singleton, cls).__call__(*args, **kwargs)

		return cls._instances[cls]


class ColoredHandler(Handler, metaclass=Singleton):
	"""Colors log records by level and routes them through `tqdm.write`, so that progress bars over replicas and
	enumerations are not torn apart by log lines.

	Attributes
	----------
	_colors : dict[int, str]
		Holds logging levels as keys and ANSI colors as values.
	_reset : str
		Reset color and style formatting (default is '\033[0m').
	_verbose : bool
		Verbose mode: when off, only warnings and errors are printed (default is False).
	_formatters : dict[int, logging.Formatter]
		Holds logging levels as keys and `Formatter` as values.

	Methods
	-------
	set_verbose(verbose)
		Toggles the verbosity of the (single) handler.
	emit(record)
		Formats and prints a `LogRecord`, depending on the verbosity.
	"""

	_colors = {
		logging.CRITICAL: '\033[91m',
		logging.ERROR: '\033[91m',
		logging.WARNING: '\033[93m',
		logging.INFO: '\033[94m',
		logging.DEBUG: '\033[92m',
	}
	_reset = '\033[0m'
	_verbose = False
	_formatters: dict = {}

	def __init__(self: "ColoredHandler", verbose: bool = False) -> None:
		"""Initializes the handler and lowers the root logger level so that the handler decides what is shown.

		Parameters
		----------
		verbose : bool
			Toggle the verbosity (default: False).
		"""

		Handler.__init__(self)
		logging.getLogger().setLevel(logging.DEBUG)
		self._verbose = verbose
		self._formatters = {key: logging.Formatter(
			fmt=value + '[%(asctime)s][%(levelname)s][%(module)s]: %(message)s' + self._reset, datefmt='%H:%M:%S',
		) for key, value in self._colors.items()}

	def set_verbose(self: "ColoredHandler", verbose: bool) -> None:
		self._verbose = verbose

	def emit(self: "ColoredHandler", record: LogRecord) -> None:
		if self._verbose or logging.WARNING <= record.levelno:
			formatter = self._formatters.get(record.levelno, self._formatters[logging.INFO])
			tqdm.write(formatter.format(record))


# FUNCTIONS ###########################################################################################################


def setup_logging(verbose: bool = False) -> ColoredHandler:
	"""Attaches the colored handler to the root logger, once, and sets its verbosity.

	Parameters
	----------
	verbose : bool
		Toggle the verbosity (default: False).

	Returns
	-------
	handler : ColoredHandler
		The single handler instance.
	"""

	handler = ColoredHandler(verbose=verbose)
	handler.set_verbose(verbose)

	if handler not in logging.getLogger().handlers:
		logging.getLogger().addHandler(handler)

	return handler
