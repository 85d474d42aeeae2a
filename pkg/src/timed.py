#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# IMPORTS #############################################################################################################

import logging
from functools import wraps
from time import perf_counter
from typing import Any, Callable, TypeVar


# DATA ################################################################################################################

"""Last wall time (in seconds) of every timed callable, keyed by qualified name."""
wall_times: dict[str, float] = {}

CALLABLE = TypeVar('CALLABLE', bound=Callable[..., Any])


# FUNCTIONS ###########################################################################################################


def timed_callable(message: str) -> Callable[[CALLABLE], CALLABLE]:
	"""Logs the time taken by a `Callable` to run (in seconds), records it in `wall_times`, and returns its return
	value.

	Parameters
	----------
	message : str
		The message to log before running the `Callable`.

	Returns
	-------
	Callable[[CALLABLE], CALLABLE]
		A decorator.

	Raises
	------
	ValueError
		If the message is empty.
	"""

	if not message:
		raise ValueError("Cannot create a timed callable without a message.")

	def callable_decorator(callable: CALLABLE) -> CALLABLE:
		@wraps(callable)
		def timed_wrapper(*args: Any, **kwds: Any) -> Any:
			logging.info(message)

			start = perf_counter()
			result = callable(*args, **kwds)
			elapsed = perf_counter() - start

			wall_times[callable.__qualname__] = elapsed
			logging.info(f"Done in {elapsed:.3f}s.")

			return result

		return timed_wrapper  # type: ignore

	return callable_decorator
