#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# IMPORTS #############################################################################################################

import csv
from dataclasses import asdict, is_dataclass
from enum import Enum, unique
from functools import partial
from json import JSONEncoder, dumps
from math import isfinite
from pathlib import Path
from typing import Any

import numpy as np

from model import ExperimentConfig, FiniteDist, ResultRecord

from timed import timed_callable


# CLASSES #############################################################################################################


class ResultEncoder(JSONEncoder):
	"""An encoder dedicated to parse `ResultRecord` objects, and what they hold, into JSON.

	Non-finite floats are written as strings ("inf", "-inf", "nan") so that the output stays strict JSON.

	Methods
	-------
	default(obj)
		The JSON representation of the object.
	"""

	def default(self: JSONEncoder, obj: Any) -> Any:
		if isinstance(obj, ResultRecord):
			return obj.json()
		elif isinstance(obj, ExperimentConfig):
			return obj.json()
		elif isinstance(obj, FiniteDist):
			return {"values": obj.values, "probs": obj.probs}
		elif isinstance(obj, np.ndarray):
			return obj.tolist()
		elif isinstance(obj, np.bool_):
			return bool(obj)
		elif isinstance(obj, np.integer):
			return int(obj)
		elif isinstance(obj, np.floating):
			return float(obj)
		elif is_dataclass(obj):
			return asdict(obj)
		elif isinstance(obj, Path):
			return str(obj)

		return JSONEncoder.default(self, obj)  # Let the base class default method raise the TypeError

	def encode(self: JSONEncoder, obj: Any) -> str:
		return super().encode(_strict(obj))


# FUNCTIONS ###########################################################################################################


def _strict(obj: Any) -> Any:
	"""Replaces non-finite floats by strings and NamedTuples by mappings, recursively."""

	if isinstance(obj, float) and not isfinite(obj):
		return str(obj)
	elif isinstance(obj, tuple) and hasattr(obj, "_asdict"):
		return {key: _strict(value) for key, value in obj._asdict().items()}
	elif isinstance(obj, dict):
		return {str(key): _strict(value) for key, value in obj.items()}
	elif isinstance(obj, (list, tuple)):
		return [_strict(value) for value in obj]
	elif isinstance(obj, np.ndarray):
		return _strict(obj.tolist())
	elif isinstance(obj, np.floating):
		return _strict(float(obj))
	elif isinstance(obj, ResultRecord):
		return _strict(obj.json())

	return obj


@timed_callable("Formatting the result record to JSON...")
def _json_format(record: ResultRecord, out: Path) -> list[Path]:
	"""Writes a result record as JSON.

	Parameters
	----------
	record : ResultRecord
		A `ResultRecord`.
	out : Path
		The output file.

	Returns
	-------
	list[Path]
		The files written.
	"""

	out.parent.mkdir(parents=True, exist_ok=True)
	out.write_text(dumps(record, sort_keys=True, indent=4, cls=ResultEncoder) + "\n")

	return [out]


def _csv_value(value: Any) -> Any:
	return dumps(_strict(value)) if isinstance(value, (list, tuple, dict, np.ndarray)) else value


@timed_callable("Formatting the result tables to CSV...")
def _csv_format(record: ResultRecord, out: Path) -> list[Path]:
	"""Writes every table of a result record as `<out stem>.<table>.csv`, next to the JSON record.

	Columns are the union of the row keys, in order of first appearance.

	Parameters
	----------
	record : ResultRecord
		A `ResultRecord`.
	out : Path
		The output file of the JSON record.

	Returns
	-------
	files : list[Path]
		The files written, the JSON record included.
	"""

	files = _json_format(record, out)

	for name, rows in record.tables.items():
		columns = list(dict.fromkeys(key for row in rows for key in row))
		path = out.with_name(f"{out.stem}.{name}.csv")

		with open(path, 'w', newline='') as file:
			writer = csv.DictWriter(file, fieldnames=columns)
			writer.writeheader()
			writer.writerows({key: _csv_value(value) for key, value in row.items()} for row in rows)

		files.append(path)

	return files


# CLASSES #############################################################################################################

@unique
class OutputFormat(Enum):
	"""An enumeration those purpose it to map format keywords to writers.

	Attributes
	----------
	json : partial
		Callable object mapped to the JSON writer.
	csv : partial
		Callable object mapped to the CSV writer (tables as CSV, plus the JSON record).

	Methods
	-------
	__call__
		Converts the enumeration member into the corresponding function call.
	"""

	json: partial = partial(_json_format)
	csv: partial = partial(_csv_format)

	def __call__(self: Any, record: ResultRecord, out: Path) -> list[Path]:
		"""Converts the enumeration member into the corresponding function call.

		Parameters
		----------
		record : ResultRecord
			A `ResultRecord`.
		out : Path
			The output file.

		Returns
		-------
		list[Path]
			The files written.
		"""

		return self.value(record, out)
