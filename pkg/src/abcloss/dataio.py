"""Delimited data files, particle dumps, traces, manifests and summaries.

The data file is comma-separated text with a header row. Univariate data
uses columns ``period`` and ``x`` with an optional claim count column ``n``;
bivariate data uses ``x1``, ``x2`` and optionally ``n``, ``n2``. Periods run
contiguously from 1. Floats are written in shortest round-trip form so a
repeated run produces byte-identical files.
"""

import csv
import math

import numpy as np
import yaml

from .distances import partition, partition_bivariate
from .errors import DataSchemaError
from .smc import weighted_quantile

__all__ = [
    "ObservedData",
    "load_data",
    "write_data",
    "write_particles",
    "write_traces",
    "build_summary",
    "write_yaml",
]

_UNI = ("x",)
_BI = ("x1", "x2")


class ObservedData:
    """Parsed data file: values, optional claim counts, zero partition."""

    def __init__(self, x, frequencies=None):
        self.x = x
        self.frequencies = frequencies
        self.bivariate = x.ndim == 2
        # the zero pattern is fixed by the data, so split it off once
        self.parts = partition_bivariate(x) if self.bivariate else partition(x)

    @property
    def t(self):
        return self.x.shape[0]


def _cell_float(cell, row, col):
    try:
        value = float(cell)
    except ValueError:
        raise DataSchemaError(f"row {row}, column '{col}': not a number: {cell!r}") from None
    if not math.isfinite(value):
        raise DataSchemaError(f"row {row}, column '{col}': not finite: {cell!r}")
    return value


def _cell_count(cell, row, col):
    try:
        value = int(cell)
    except ValueError:
        raise DataSchemaError(f"row {row}, column '{col}': not an integer: {cell!r}") from None
    if value < 0:
        raise DataSchemaError(f"row {row}, column '{col}': negative count {value}")
    return value


def load_data(path):
    """Read a data file into an ObservedData, checking the schema row by row.

    Errors name the offending row (header = row 1) and column.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataSchemaError("empty file: expected a header row") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    if "x" in header:
        value_cols = _UNI
        count_cols = ("n",) if "n" in header else ()
    elif "x1" in header or "x2" in header:
        value_cols = _BI
        count_cols = ("n", "n2") if "n" in header or "n2" in header else ()
    else:
        raise DataSchemaError("missing required column 'x' (or 'x1' and 'x2')")
    expected = ("period",) + value_cols + count_cols
    missing = [c for c in expected if c not in header]
    if missing:
        raise DataSchemaError(f"missing required column '{missing[0]}'")
    unknown = [c for c in header if c not in expected]
    if unknown:
        raise DataSchemaError(f"unknown column '{unknown[0]}'")
    pos = {c: header.index(c) for c in expected}

    if not rows:
        raise DataSchemaError("no data rows after the header")
    x = np.zeros((len(rows), len(value_cols)))
    counts = np.zeros((len(rows), len(count_cols)), dtype=np.int64)
    for i, cells in enumerate(rows):
        row = i + 2  # 1-based file row, counting the header
        if len(cells) != len(header):
            raise DataSchemaError(
                f"row {row}: expected {len(header)} fields, found {len(cells)}"
            )
        period = _cell_count(cells[pos["period"]], row, "period")
        if period != i + 1:
            raise DataSchemaError(
                f"row {row}, column 'period': expected {i + 1} "
                f"(periods must run contiguously from 1), got {period}"
            )
        for j, col in enumerate(value_cols):
            value = _cell_float(cells[pos[col]], row, col)
            if value < 0:
                raise DataSchemaError(f"row {row}, column '{col}': negative value {value}")
            x[i, j] = value
        for j, col in enumerate(count_cols):
            counts[i, j] = _cell_count(cells[pos[col]], row, col)

    if value_cols is _UNI:
        x = x[:, 0]
        frequencies = counts[:, 0] if count_cols else None
    else:
        frequencies = counts if count_cols else None
    return ObservedData(x, frequencies)


def _fmt(value):
    # shortest round-trip text keeps repeated runs byte-identical
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_data(path, x, frequencies=None):
    """Write values (and claim counts, when given) as a data file."""
    x = np.asarray(x)
    bivariate = x.ndim == 2
    header = ["period"] + (list(_BI) if bivariate else list(_UNI))
    if frequencies is not None:
        header += ["n", "n2"] if bivariate else ["n"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for s in range(x.shape[0]):
            row = [s + 1]
            row += [_fmt(v) for v in np.atleast_1d(x[s])]
            if frequencies is not None:
                row += [str(int(c)) for c in np.atleast_1d(frequencies[s])]
            writer.writerow(row)


def _result_groups(result):
    """(model name or None, param names, group) triples of a final population."""
    pop = result.populations[-1]
    if hasattr(result, "model_names"):
        # selection result: param_names holds one name tuple per model
        return [
            (result.model_names[m], result.param_names[m], grp)
            for m, grp in enumerate(pop.groups)
        ]
    return [(None, result.param_names, pop.groups[0])]


def write_particles(path, result):
    """Dump the final population, one row per particle.

    Single-model columns: parameters, weight, distance. With several models
    a leading ``model`` column appears and the parameter columns form the
    union over models, blank where a model lacks the parameter.
    """
    triples = _result_groups(result)
    selection = triples[0][0] is not None
    union = []
    for _, names, _ in triples:
        union += [n for n in names if n not in union]
    header = (["model"] if selection else []) + union + ["weight", "distance"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for name, names, grp in triples:
            col = {p: names.index(p) for p in names}
            for i in range(grp.size):
                row = [name] if selection else []
                row += [
                    _fmt(grp.thetas[i, col[p]]) if p in col else "" for p in union
                ]
                row += [_fmt(grp.weights[i]), _fmt(grp.distances[i])]
                writer.writerow(row)


def write_traces(path, result):
    """Per-generation tolerance, ESS, acceptance rate and wall time."""
    selection = hasattr(result, "model_names")
    header = ["generation", "epsilon", "ess", "acceptance", "seconds"]
    if selection:
        header += [f"prob_{name}" for name in result.model_names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for g in range(len(result.eps_trace)):
            row = [
                g + 1,
                _fmt(result.eps_trace[g]),
                _fmt(result.ess_trace[g]),
                _fmt(result.acceptance_trace[g]),
                _fmt(result.seconds[g]),
            ]
            if selection:
                row += [_fmt(p) for p in result.populations[g].model_probs]
            writer.writerow(row)


def _marginal_summary(thetas, weights, names):
    table = {}
    for i, name in enumerate(names):
        v = thetas[:, i]
        mean = float(weights @ v)
        sd = math.sqrt(max(float(weights @ (v - mean) ** 2), 0.0))
        q05, q50, q95 = weighted_quantile(v, weights, [0.05, 0.5, 0.95])
        table[name] = {
            "mean": mean,
            "sd": sd,
            "q05": float(q05),
            "median": float(q50),
            "q95": float(q95),
        }
    return table


def build_summary(result):
    """Posterior summary mapping, ready for YAML serialization."""
    pop = result.populations[-1]
    doc = {
        "generations": len(result.eps_trace),
        "final_epsilon": float(result.eps_trace[-1]),
        "final_ess": float(result.ess_trace[-1]),
        "particles": pop.size,
    }
    if hasattr(result, "model_names"):
        doc["model_probabilities"] = {
            name: float(p) for name, p in zip(result.model_names, pop.model_probs)
        }
        doc["models"] = {}
        for name, names, grp in _result_groups(result):
            w = grp.weights
            if grp.size and w.sum() > 0:
                doc["models"][name] = _marginal_summary(grp.thetas, w / w.sum(), names)
            else:
                doc["models"][name] = None  # no surviving particles to summarize
    else:
        grp = pop.groups[0]
        doc["parameters"] = _marginal_summary(grp.thetas, grp.weights, result.param_names)
    return doc


def write_yaml(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
