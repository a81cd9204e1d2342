"""Dataset ingestion, imputation, model initialization and persistence."""

import csv
import json
import math
import warnings

import numpy as np

from arhmm.errors import DataError, SchemaError
from arhmm.model import Dataset, Model, StateStructure, naive_model, variance_floor

SCHEMA_VERSION = 1
DEFAULT_MISSING_TOKENS = frozenset({"", "NA", "NaN", "nan"})


def load_csv(path, missing_tokens=DEFAULT_MISSING_TOKENS):
    """Read a rectangular CSV with a header row.

    Missing cells become NaN; see :func:`impute_missing`.

    Raises
    ------
    DataError
        On empty files, ragged rows or non-numeric cells (with line number).
    """
    missing_tokens = set(missing_tokens)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            parsed = []
            for cell in row:
                cell = cell.strip()
                if cell in missing_tokens:
                    parsed.append(math.nan)
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(f"{path}:{line}: non-numeric value {cell!r}") from None
                if not math.isfinite(value):
                    raise DataError(f"{path}:{line}: non-finite value {cell!r}")
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(rows, dtype=float), tuple(h.strip() for h in header))


def write_csv(dataset, path):
    """Write with a header row; floats use shortest round-trip repr."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.names)
        for row in dataset.values:
            writer.writerow(["NA" if math.isnan(v) else repr(float(v)) for v in row])


def impute_missing(dataset, window=5):
    """Fill each missing cell with the mean of up to ``window`` preceding
    values of its column, already-imputed ones included.

    A missing cell with no preceding value takes the mean of the column's
    observed values.

    Raises
    ------
    DataError
        If a column has no observed values at all.
    """
    values = np.array(dataset.values)
    for m in range(values.shape[1]):
        col = values[:, m]
        observed = ~np.isnan(col)
        if not observed.any():
            raise DataError(f"column {dataset.names[m]!r} has no observed values")
        for t in np.flatnonzero(~observed):
            if t == 0:
                col[t] = col[observed].mean()
            else:
                col[t] = col[max(0, t - window) : t].mean()
    return Dataset(values, dataset.names)


def init_model(dataset, n_states, max_lag=0):
    """Deterministic starting point for EM.

    Uniform ``A`` and ``pi``, naive structures without lags, state ``i``
    (1-based) intercept ``i * (max - min) / (N + 1) + min`` and variance
    ``2 * (max - min)`` for every column.
    """
    dataset.require_complete()
    x = dataset.values
    lo, hi = x.min(axis=0), x.max(axis=0)
    spread = hi - lo
    intercepts = np.array([(i + 1) * spread / (n_states + 1) + lo for i in range(n_states)])
    floors = variance_floor(x)
    variances = 2.0 * spread
    if (variances < floors).any():
        warnings.warn("constant column: initial variance set to the floor", RuntimeWarning)
        variances = np.maximum(variances, floors)
    return naive_model(n_states, dataset.n_vars, intercepts, variances, max_lag=max_lag)


def random_init(dataset, n_states, rng, max_lag=0):
    """Like :func:`init_model` with random intercepts, variances and stochastic matrices."""
    dataset.require_complete()
    x = dataset.values
    lo, hi = x.min(axis=0), x.max(axis=0)
    spread = hi - lo
    intercepts = lo + spread * rng.uniform(size=(n_states, dataset.n_vars))
    variances = np.maximum(2.0 * spread * rng.uniform(0.5, 1.5, size=(n_states, dataset.n_vars)), variance_floor(x))
    transition = rng.dirichlet(np.full(n_states, 5.0), size=n_states)
    initial = rng.dirichlet(np.full(n_states, 5.0))
    return naive_model(n_states, dataset.n_vars, intercepts, variances, max_lag, transition, initial)


def model_to_dict(model):
    return {
        "schema_version": SCHEMA_VERSION,
        "n_states": model.n_states,
        "n_vars": model.n_vars,
        "max_lag": model.max_lag,
        "transition": [float(v) for v in model.transition.ravel()],
        "initial": [float(v) for v in model.initial],
        "states": [
            [
                {
                    "parents": list(s.parents[m]),
                    "lags": s.lags[m],
                    "coefficients": [float(v) for v in model.coeffs[i][m]],
                    "variance": float(model.variances[i, m]),
                }
                for m in range(model.n_vars)
            ]
            for i, s in enumerate(model.structures)
        ],
    }


def model_from_dict(doc):
    if not isinstance(doc, dict):
        raise SchemaError("model document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported model schema version {version!r}")
    try:
        n, n_vars = int(doc["n_states"]), int(doc["n_vars"])
        states = doc["states"]
        if len(states) != n or any(len(vs) != n_vars for vs in states):
            raise SchemaError("state/variable block counts do not match n_states/n_vars")
        return Model(
            transition=np.array(doc["transition"], dtype=float).reshape(n, n),
            initial=doc["initial"],
            structures=[
                StateStructure([v["parents"] for v in vs], [v["lags"] for v in vs]) for vs in states
            ],
            coeffs=[[v["coefficients"] for v in vs] for vs in states],
            variances=[[v["variance"] for v in vs] for vs in states],
            max_lag=int(doc["max_lag"]),
        )
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"invalid model document: {exc}") from exc


def save_model(model, path):
    # json writes floats with repr, which round-trips exactly
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_model(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def write_path_csv(path, times, states, extra=None):
    """Two-column ``t,state`` CSV, plus optional named extra columns."""
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "state", *extra])
        for k, (t, q) in enumerate(zip(times, states)):
            writer.writerow([int(t), int(q), *(repr(float(col[k])) for col in extra.values())])


def read_path_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = [(int(r["t"]), int(r["state"])) for r in reader]
    if not rows:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    t, q = zip(*rows)
    return np.array(t), np.array(q)
