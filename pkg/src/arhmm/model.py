"""Model, structure and dataset types plus the emission density.

Each hidden state ``i`` carries a linear Gaussian Bayesian network over the
observed variables. Variable ``m`` in state ``i`` has mean::

    f[t] = b0 + sum_k b_k * x[t, parent_k] + sum_r eta_r * x[t - r, m]

and variance ``variances[i, m]``. Coefficient vectors are laid out as
``[b0, b_1..b_k, eta_1..eta_p]`` with parents in the order stored in the
structure.

Time indices are absolute rows of the dataset. Only rows ``t >= max_lag``
are emitted; the first ``max_lag`` rows are conditioning context.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace

import numpy as np

from arhmm.errors import DataError, WindowError

LOG_2PI = math.log(2.0 * math.pi)
ABSOLUTE_VARIANCE_FLOOR = 1e-9
RELATIVE_VARIANCE_FLOOR = 1e-12
STOCHASTIC_TOL = 1e-12


def _frozen(array, dtype=float):
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class StateStructure:
    """Context-specific DAG and AR orders for one hidden state.

    Parameters
    ----------
    parents : sequence of sequences of int
        ``parents[m]`` lists the parent variable indices of variable ``m``.
    lags : sequence of int
        ``lags[m]`` is the number of own lags of variable ``m``.
    """

    parents: tuple
    lags: tuple

    def __post_init__(self):
        parents = tuple(tuple(int(u) for u in pa) for pa in self.parents)
        lags = tuple(int(p) for p in self.lags)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "lags", lags)
        n = len(parents)
        if len(lags) != n:
            raise ValueError(f"{len(lags)} lag orders for {n} variables")
        for m, pa in enumerate(parents):
            if len(set(pa)) != len(pa):
                raise ValueError(f"duplicate parents for variable {m}: {pa}")
            for u in pa:
                if u == m:
                    raise ValueError(f"variable {m} lists itself as parent")
                if not 0 <= u < n:
                    raise ValueError(f"parent index {u} out of range")
        if any(p < 0 for p in lags):
            raise ValueError(f"negative lag order in {lags}")
        if len(self.topological_order()) != n:
            raise ValueError("parent sets contain a directed cycle")

    @classmethod
    def naive(cls, n_vars):
        return cls(parents=((),) * n_vars, lags=(0,) * n_vars)

    @property
    def n_vars(self):
        return len(self.parents)

    def topological_order(self):
        """Kahn's algorithm, ties broken by lowest variable index.

        Returns fewer than ``n_vars`` indices when the graph has a cycle.
        """
        n = len(self.parents)
        indegree = [len(pa) for pa in self.parents]
        children = [[] for _ in range(n)]
        for m, pa in enumerate(self.parents):
            for u in pa:
                children[u].append(m)
        ready = [m for m in range(n) if indegree[m] == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            u = heapq.heappop(ready)
            order.append(u)
            for c in children[u]:
                indegree[c] -= 1
                if indegree[c] == 0:
                    heapq.heappush(ready, c)
        return order

    def is_ancestor(self, a, b):
        """True if there is a directed path ``a -> ... -> b`` (or ``a == b``)."""
        stack, seen = [b], set()
        while stack:
            v = stack.pop()
            if v == a:
                return True
            if v in seen:
                continue
            seen.add(v)
            stack.extend(self.parents[v])
        return False

    def can_add_arc(self, u, m):
        return u != m and u not in self.parents[m] and not self.is_ancestor(m, u)

    def with_arc(self, u, m):
        parents = list(self.parents)
        parents[m] = parents[m] + (u,)
        return StateStructure(tuple(parents), self.lags)

    def with_lag(self, m, p):
        lags = list(self.lags)
        lags[m] = p
        return StateStructure(self.parents, tuple(lags))

    def n_regressors(self, m):
        """Length of the coefficient vector of variable ``m``."""
        return 1 + len(self.parents[m]) + self.lags[m]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Multivariate series ``x[0..T]``; rows are time, columns variables.

    Missing cells are NaN until :func:`arhmm.io.impute_missing` fills them.
    """

    values: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] == 0:
            raise DataError(f"dataset must be a non-empty 2-D array, got shape {values.shape}")
        if np.isinf(values).any():
            raise DataError("dataset contains infinite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        names = tuple(self.names) or tuple(f"X{m + 1}" for m in range(values.shape[1]))
        if len(names) != values.shape[1]:
            raise DataError(f"{len(names)} names for {values.shape[1]} columns")
        object.__setattr__(self, "names", tuple(str(n) for n in names))

    @property
    def T(self):
        """Index of the last row (the series has ``T + 1`` rows)."""
        return self.values.shape[0] - 1

    @property
    def n_vars(self):
        return self.values.shape[1]

    @property
    def missing(self):
        return np.isnan(self.values)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.names == other.names
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    def require_complete(self):
        if np.isnan(self.values).any():
            raise DataError("dataset has missing values; impute them first")


@dataclass(frozen=True, eq=False)
class Model:
    """Full parameter set of an AR-AsLG-HMM.

    Parameters
    ----------
    transition : array_like, shape (N, N)
        Row-stochastic transition matrix.
    initial : array_like, shape (N,)
        Distribution of the hidden state at ``t = max_lag``.
    structures : sequence of StateStructure
    coeffs : nested sequence
        ``coeffs[i][m]`` is ``[b0, parent weights..., AR weights...]``.
    variances : array_like, shape (N, M)
    max_lag : int
        Largest admissible AR order; fixes the emission window ``[max_lag, T]``.
    """

    transition: np.ndarray
    initial: np.ndarray
    structures: tuple
    coeffs: tuple
    variances: np.ndarray
    max_lag: int = 0

    def __post_init__(self):
        a = _frozen(self.transition)
        pi = _frozen(self.initial)
        structures = tuple(self.structures)
        n = len(structures)
        if n == 0:
            raise ValueError("model needs at least one hidden state")
        if a.shape != (n, n) or pi.shape != (n,):
            raise ValueError(f"transition {a.shape} / initial {pi.shape} do not match {n} states")
        if (a < 0).any() or not np.all(np.abs(a.sum(axis=1) - 1.0) <= STOCHASTIC_TOL):
            raise ValueError("transition rows must be non-negative and sum to 1")
        if (pi < 0).any() or abs(pi.sum() - 1.0) > STOCHASTIC_TOL:
            raise ValueError("initial distribution must be non-negative and sum to 1")
        m_vars = structures[0].n_vars
        if m_vars == 0 or any(s.n_vars != m_vars for s in structures):
            raise ValueError("all states must share the same positive number of variables")
        max_lag = int(self.max_lag)
        if max_lag < 0:
            raise ValueError("max_lag must be non-negative")
        for i, s in enumerate(structures):
            if max(s.lags) > max_lag:
                raise ValueError(f"state {i} uses lag {max(s.lags)} > max_lag {max_lag}")
        if len(self.coeffs) != n:
            raise ValueError("coefficients must be given per state")
        coeffs = []
        for i, s in enumerate(structures):
            row = []
            if len(self.coeffs[i]) != m_vars:
                raise ValueError(f"state {i}: coefficients must be given per variable")
            for m in range(m_vars):
                c = _frozen(self.coeffs[i][m])
                if c.shape != (s.n_regressors(m),):
                    raise ValueError(
                        f"state {i}, variable {m}: expected {s.n_regressors(m)} coefficients, got {c.shape}"
                    )
                if not np.isfinite(c).all():
                    raise ValueError(f"state {i}, variable {m}: non-finite coefficients")
                row.append(c)
            coeffs.append(tuple(row))
        var = _frozen(self.variances)
        if var.shape != (n, m_vars):
            raise ValueError(f"variances shape {var.shape}, expected {(n, m_vars)}")
        if not (np.isfinite(var).all() and (var >= ABSOLUTE_VARIANCE_FLOOR).all()):
            raise ValueError(f"variances must be finite and >= {ABSOLUTE_VARIANCE_FLOOR}")
        object.__setattr__(self, "transition", a)
        object.__setattr__(self, "initial", pi)
        object.__setattr__(self, "structures", structures)
        object.__setattr__(self, "coeffs", tuple(coeffs))
        object.__setattr__(self, "variances", var)
        object.__setattr__(self, "max_lag", max_lag)

    @property
    def n_states(self):
        return len(self.structures)

    @property
    def n_vars(self):
        return self.structures[0].n_vars

    def replace(self, **changes):
        return replace(self, **changes)

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return (
            self.max_lag == other.max_lag
            and self.structures == other.structures
            and np.array_equal(self.transition, other.transition)
            and np.array_equal(self.initial, other.initial)
            and np.array_equal(self.variances, other.variances)
            and all(
                np.array_equal(c1, c2)
                for r1, r2 in zip(self.coeffs, other.coeffs)
                for c1, c2 in zip(r1, r2)
            )
        )


def variance_floor(values):
    """Per-column variance floor ``max(1e-9, 1e-12 * var(column))``."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return np.maximum(ABSOLUTE_VARIANCE_FLOOR, RELATIVE_VARIANCE_FLOOR * np.nanvar(values, axis=0))


def check_window(model_or_lag, dataset):
    max_lag = getattr(model_or_lag, "max_lag", model_or_lag)
    if dataset.T < max_lag:
        raise WindowError(
            f"series has {dataset.T + 1} rows but max_lag={max_lag} needs at least {max_lag + 1}"
        )


def design_matrix(values, var, parents, lag, max_lag):
    """Regressor rows ``[1, parents..., x[t-1, var]..x[t-lag, var]]`` for ``t = max_lag..T``."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0] - max_lag
    cols = [np.ones(n)]
    cols.extend(values[max_lag:, u] for u in parents)
    cols.extend(values[max_lag - r : values.shape[0] - r, var] for r in range(1, lag + 1))
    return np.column_stack(cols)


def gaussian_logpdf(x, mean, variance):
    return -0.5 * (LOG_2PI + np.log(variance) + (x - mean) ** 2 / variance)


def variable_logpdf(model, state, var, values):
    """Log density of column ``var`` under ``state`` for every emitted row."""
    s = model.structures[state]
    x = design_matrix(values, var, s.parents[var], s.lags[var], model.max_lag)
    mean = x @ model.coeffs[state][var]
    return gaussian_logpdf(values[model.max_lag :, var], mean, model.variances[state, var])


def emission_logpdf_matrix(model, dataset):
    """Log emission densities for all emitted rows and states, shape ``(T - max_lag + 1, N)``."""
    check_window(model, dataset)
    dataset.require_complete()
    values = dataset.values
    out = np.zeros((values.shape[0] - model.max_lag, model.n_states))
    for i in range(model.n_states):
        for m in range(model.n_vars):
            out[:, i] += variable_logpdf(model, i, m, values)
    return out


def emission_logpdf(model, state, dataset, t):
    """Log emission density ``ln b_state(x[t])`` given the preceding lags.

    Raises
    ------
    WindowError
        If ``t < max_lag`` or ``t > T``.
    """
    if not 0 <= state < model.n_states:
        raise IndexError(f"state {state} out of range")
    if t < model.max_lag or t > dataset.T:
        raise WindowError(f"t={t} outside the emission window [{model.max_lag}, {dataset.T}]")
    x = dataset.values
    s = model.structures[state]
    total = 0.0
    for m in range(model.n_vars):
        c = model.coeffs[state][m]
        k = len(s.parents[m])
        mean = c[0]
        mean += sum(c[1 + j] * x[t, u] for j, u in enumerate(s.parents[m]))
        mean += sum(c[1 + k + r - 1] * x[t - r, m] for r in range(1, s.lags[m] + 1))
        var = model.variances[state, m]
        total += -0.5 * (LOG_2PI + math.log(var) + (x[t, m] - mean) ** 2 / var)
    return total


def count_parameters(model):
    """Free-parameter count: full ``A`` and ``pi`` plus, per state and
    variable, intercept, parent weights, AR weights and variance."""
    n = model.n_states
    total = n * n + n
    for s in model.structures:
        total += sum(s.n_regressors(m) + 1 for m in range(s.n_vars))
    return total


def safe_log(p):
    with np.errstate(divide="ignore"):
        return np.log(p)


def complete_data_loglik(model, dataset, path):
    """Joint log probability of ``x[max_lag..T]`` and a hidden path over the same window.

    Zero-probability initial or transition entries yield ``-inf``.
    """
    check_window(model, dataset)
    path = np.asarray(path, dtype=int)
    n_eff = dataset.T - model.max_lag + 1
    if path.shape != (n_eff,):
        raise ValueError(f"path must have length {n_eff}, got {path.shape}")
    log_pi = safe_log(model.initial)
    log_a = safe_log(model.transition)
    total = log_pi[path[0]] + log_a[path[:-1], path[1:]].sum()
    emis = emission_logpdf_matrix(model, dataset)
    return float(total + emis[np.arange(n_eff), path].sum())


def naive_model(n_states, n_vars, intercepts, variances, max_lag=0, transition=None, initial=None):
    """Model with naive (parentless, lag-free) structure in every state."""
    transition = np.full((n_states, n_states), 1.0 / n_states) if transition is None else transition
    initial = np.full(n_states, 1.0 / n_states) if initial is None else initial
    intercepts = np.asarray(intercepts, dtype=float).reshape(n_states, n_vars)
    return Model(
        transition=transition,
        initial=initial,
        structures=(StateStructure.naive(n_vars),) * n_states,
        coeffs=tuple(tuple([intercepts[i, m]] for m in range(n_vars)) for i in range(n_states)),
        variances=np.broadcast_to(np.asarray(variances, dtype=float), (n_states, n_vars)),
        max_lag=max_lag,
    )


def with_state_variable(model, state, var, structure, coeffs, variance):
    """Copy of ``model`` with one (state, variable) block replaced."""
    structures = list(model.structures)
    structures[state] = structure
    all_coeffs = [list(row) for row in model.coeffs]
    all_coeffs[state][var] = coeffs
    variances = np.array(model.variances)
    variances[state, var] = variance
    return model.replace(structures=tuple(structures), coeffs=all_coeffs, variances=variances)


def with_uniform_lags(model, lag):
    """Copy of ``model`` with every AR order set to ``lag`` (new AR weights start at 0)."""
    if lag > model.max_lag:
        raise ValueError(f"lag {lag} exceeds max_lag {model.max_lag}")
    structures = []
    coeffs = []
    for s, row in zip(model.structures, model.coeffs):
        structures.append(StateStructure(s.parents, (lag,) * s.n_vars))
        new_row = []
        for m, c in enumerate(row):
            base = c[: 1 + len(s.parents[m])]
            old_ar = list(c[1 + len(s.parents[m]) :])[:lag]
            new_row.append([*base, *old_ar, *([0.0] * (lag - len(old_ar)))])
        coeffs.append(new_row)
    return model.replace(structures=structures, coeffs=coeffs)
