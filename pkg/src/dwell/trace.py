"""Simulation traces

A trace is a table of uniformly sampled records with a fixed column order.
It is written as CSV with a manifest line carrying the tool version and
the scenario hash.
"""

import json
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .exceptions import DimensionError

CSV_FORMAT = "%.17g"

# running sup columns and the norms they track
SUP_COLUMNS = ("sup_xtilde", "sup_x", "sup_u", "sup_e", "sup_eu")


def vector_columns(prefix: str, size: int) -> List[str]:
    return ["{}_{}".format(prefix, index) for index in range(size)]


def linear_columns(n: int, m: int, lyapunov: bool = False) -> List[str]:
    """Column order of a linear plant trace"""
    columns = ["t"]
    for prefix, size in (("x", n), ("xhat", n), ("x_ref", n), ("x_id", n),
                         ("u", m), ("u_ref", m), ("u_id", m),
                         ("eta1", m), ("eta2", n - m), ("xtilde", n)):
        columns.extend(vector_columns(prefix, size))
    columns.extend(["mode", "switch", "publish"])
    columns.extend(SUP_COLUMNS)
    if lyapunov:
        columns.append("lyapunov")
    return columns


def manifest_line(version: str, config_hash: str) -> str:
    return "# dwell {} config-sha256={}".format(version, config_hash)


class Trace:
    """Append only table of simulation records

    :ivar columns: Column names in output order
    :ivar diagnostics: Free text notes collected during the run
    """

    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns)
        self._index = {name: position for position, name in enumerate(self.columns)}
        if len(self._index) != len(self.columns):
            raise DimensionError("duplicate trace column")
        self._rows: List[np.ndarray] = []
        self._data: Optional[np.ndarray] = None
        self.diagnostics: List[str] = []

    def __len__(self):
        return len(self._rows)

    def append(self, values: Dict[str, object]) -> None:
        """Append one record, every column must be present

        Vector values are spread over the ``<name>_<i>`` columns.
        """
        row = np.full(len(self.columns), np.nan)
        for name, value in values.items():
            array = np.asarray(value, dtype=float)
            if array.ndim == 0:
                row[self._index[name]] = float(array)
            else:
                for position, item in enumerate(array.reshape(-1)):
                    row[self._index["{}_{}".format(name, position)]] = item
        self._rows.append(row)
        self._data = None

    @property
    def data(self) -> np.ndarray:
        if self._data is None:
            if self._rows:
                self._data = np.vstack(self._rows)
            else:
                self._data = np.empty((0, len(self.columns)))
        return self._data

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self._index[name]]

    def block(self, prefix: str) -> np.ndarray:
        """All ``<prefix>_<i>`` columns as a 2d array"""
        names = [name for name in self.columns
                 if name.startswith(prefix + "_") and name[len(prefix) + 1:].isdigit()]
        return self.data[:, [self._index[name] for name in names]]

    def has(self, name: str) -> bool:
        return name in self._index

    @property
    def last(self) -> Dict[str, float]:
        return dict(zip(self.columns, self._rows[-1])) if self._rows else {}

    def sup_norm(self, prefix: str) -> float:
        """Largest Euclidean row norm of a vector block"""
        block = self.block(prefix)
        if block.size == 0:
            return 0.0
        return float(np.max(np.linalg.norm(block, axis=1)))

    def write_csv(self, path, version: str, config_hash: str) -> Path:
        path = Path(path)
        header = manifest_line(version, config_hash) + "\n" + ",".join(self.columns)
        np.savetxt(path, self.data, fmt=CSV_FORMAT, delimiter=",", header=header, comments="")
        return path


def read_csv(path) -> Trace:
    """Read a trace written by :meth:`Trace.write_csv`"""
    path = Path(path)
    with path.open() as handle:
        manifest = handle.readline()
        columns = handle.readline().strip().split(",")
    if not manifest.startswith("# dwell"):
        raise DimensionError("{} has no trace manifest".format(path))
    trace = Trace(columns)
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    for row in data:
        trace._rows.append(row)  # pylint: disable=protected-access
    return trace


def observables(trace: Trace) -> Dict[str, float]:
    """Sup norms of the predictor error, the state, the input and the reference errors"""
    x = trace.block("x")
    u = trace.block("u")
    return {
        "xtilde": trace.sup_norm("xtilde"),
        "x": trace.sup_norm("x"),
        "u": trace.sup_norm("u"),
        "e": float(np.max(np.linalg.norm(trace.block("x_ref") - x, axis=1))) if len(trace) else 0.0,
        "e_u": float(np.max(np.linalg.norm(trace.block("u_ref") - u, axis=1))) if len(trace) else 0.0,
    }


def write_json(path, payload: dict) -> Path:
    """Sorted, indented JSON; non finite floats are written as strings"""
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def _jsonable(value):
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, Path):
        return str(value)
    return value
