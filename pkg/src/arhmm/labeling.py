"""Numeric labels for hidden states from their implied stationary means."""

import warnings

import numpy as np

from arhmm.errors import UnitRootError

UNIT_ROOT_TOL = 1e-9


class NonStationaryStateWarning(RuntimeWarning):
    pass


def state_means(model, i):
    """Implied mean of every variable in state ``i``.

    Variables are visited in topological order of the state's DAG, so each
    parent's mean is known before its children use it::

        nu[m] = (b0 + sum_k b_k * nu[parent_k]) / (1 - sum_r eta_r)

    Raises
    ------
    UnitRootError
        If ``|1 - sum_r eta_r| <= 1e-9`` for some variable.
    """
    s = model.structures[i]
    nu = np.zeros(model.n_vars)
    for m in s.topological_order():
        c = model.coeffs[i][m]
        k = len(s.parents[m])
        ar_sum = float(np.sum(c[1 + k :]))
        denom = 1.0 - ar_sum
        if abs(denom) <= UNIT_ROOT_TOL:
            raise UnitRootError(i, m)
        if ar_sum > 1.0:
            warnings.warn(
                f"state {i}, variable {m}: AR coefficients sum to {ar_sum:.6g} > 1, mean is not stationary",
                NonStationaryStateWarning,
            )
        nu[m] = (c[0] + np.dot(c[1 : 1 + k], nu[list(s.parents[m])])) / denom
    return nu


def mean_table(model):
    """``(N, M)`` array of implied state means."""
    return np.array([state_means(model, i) for i in range(model.n_states)])


def _deviations(model, v, kappa):
    nu = mean_table(model)
    v = np.broadcast_to(np.asarray(v, dtype=float), (model.n_vars,))
    kappa = np.broadcast_to(np.asarray(kappa, dtype=float), (model.n_vars,))
    return v * (nu - kappa)


def label_g1(model, v=1.0, kappa=0.0):
    """Per-state weighted sum of deviations of the implied means from ``kappa``."""
    return _deviations(model, v, kappa).sum(axis=1)


def label_g2(model, v=1.0, kappa=0.0):
    """Per-state weighted maximum deviation; positive when some variable exceeds its limit."""
    return _deviations(model, v, kappa).max(axis=1)
