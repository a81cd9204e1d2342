"""Random models, data and brute-force oracles for tests."""

import itertools

import numpy as np

from arhmm.model import Model, StateStructure, complete_data_loglik


def random_structure(rng, n_vars, max_lag, arc_prob=0.4):
    """Random DAG (arcs only from lower to higher positions of a random order) and lags."""
    order = rng.permutation(n_vars)
    parents = [[] for _ in range(n_vars)]
    for a in range(n_vars):
        for b in range(a + 1, n_vars):
            if rng.random() < arc_prob:
                parents[order[b]].append(int(order[a]))
    lags = rng.integers(0, max_lag + 1, size=n_vars)
    return StateStructure(tuple(tuple(p) for p in parents), tuple(int(p) for p in lags))


def random_model(rng, n_states, n_vars, max_lag=0, arc_prob=0.4, naive=False, min_prob=0.0):
    """Model with random structure, stochastic matrices and coefficients."""
    structures = []
    coeffs = []
    for _ in range(n_states):
        s = StateStructure.naive(n_vars) if naive else random_structure(rng, n_vars, max_lag, arc_prob)
        structures.append(s)
        row = []
        for m in range(n_vars):
            c = rng.normal(0.0, 1.0, size=s.n_regressors(m))
            c[1 + len(s.parents[m]) :] *= 0.4 / max(1, s.lags[m])
            row.append(c)
        coeffs.append(row)
    transition = rng.dirichlet(np.ones(n_states), size=n_states) + min_prob
    transition /= transition.sum(axis=1, keepdims=True)
    initial = rng.dirichlet(np.ones(n_states)) + min_prob
    initial /= initial.sum()
    return Model(
        transition=transition,
        initial=initial,
        structures=structures,
        coeffs=coeffs,
        variances=rng.uniform(0.3, 2.0, size=(n_states, n_vars)),
        max_lag=max_lag,
    )


def sample_model(model, n_rows, rng):
    """Draw ``n_rows`` observations and the hidden path from ``model``.

    The first ``max_lag`` rows are standard normal context. Returns
    ``(values, path)`` with ``path`` covering rows ``max_lag..n_rows-1``.
    """
    p = model.max_lag
    x = np.zeros((n_rows, model.n_vars))
    x[:p] = rng.normal(size=(p, model.n_vars))
    path = np.empty(n_rows - p, dtype=int)
    state = rng.choice(model.n_states, p=model.initial)
    for t in range(p, n_rows):
        if t > p:
            state = rng.choice(model.n_states, p=model.transition[state])
        path[t - p] = state
        s = model.structures[state]
        for m in s.topological_order():
            c = model.coeffs[state][m]
            k = len(s.parents[m])
            mean = c[0] + sum(c[1 + j] * x[t, u] for j, u in enumerate(s.parents[m]))
            mean += sum(c[k + r] * x[t - r, m] for r in range(1, s.lags[m] + 1))
            x[t, m] = mean + np.sqrt(model.variances[state, m]) * rng.normal()
    return x, path


def enumerate_paths(model, dataset):
    """All hidden paths over the emission window with their complete-data log-likelihoods.

    Paths come in lexicographic order.
    """
    n_eff = dataset.T - model.max_lag + 1
    paths = np.array(list(itertools.product(range(model.n_states), repeat=n_eff)), dtype=int)
    scores = np.array([complete_data_loglik(model, dataset, q) for q in paths])
    return paths, scores
