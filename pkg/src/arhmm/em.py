"""EM parameter estimation for a fixed structure."""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from arhmm.errors import NumericalError, SingularSystemError
from arhmm.inference import posteriors
from arhmm.linalg import solve_with_ridge
from arhmm.model import design_matrix, emission_logpdf_matrix, variance_floor

logger = logging.getLogger(__name__)

DEFAULT_REL_TOL = 1e-6
DEFAULT_MAX_ITER = 200
# total posterior weight below which a state is treated as unused
STARVED_WEIGHT = 1e-8


class RidgeFallbackWarning(RuntimeWarning):
    pass


class StarvedStateWarning(RuntimeWarning):
    pass


@dataclass
class EmReport:
    """Log-likelihood trace of an EM run.

    ``ll_trace[0]`` is the starting model's log-likelihood and
    ``ll_trace[s]`` the one after ``s`` EM steps.
    """

    ll_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    aborted: bool = False


def update_initial(post):
    pi = np.array(post.gamma[0], dtype=float)
    return pi / pi.sum()


def update_transition(post, previous=None):
    """Expected transition counts over expected visits.

    Rows of states with no expected visits before the last step fall back
    to uniform (with a :class:`StarvedStateWarning`).
    """
    if post.xi.shape[0] == 0:
        raise ValueError("need at least two emitted time steps to update transitions")
    numer = post.xi.sum(axis=0)
    denom = post.gamma[:-1].sum(axis=0)
    n = numer.shape[0]
    out = np.empty_like(numer)
    for i in range(n):
        if denom[i] <= STARVED_WEIGHT:
            warnings.warn(f"state {i} is starved; transition row reset to uniform", StarvedStateWarning)
            out[i] = 1.0 / n
        else:
            row = numer[i] / denom[i]
            out[i] = row / row.sum()
    return out


def normal_equations(weights, responses, regressors):
    """Return ``(X' W X, X' W y)``."""
    w = np.asarray(weights, dtype=float)
    x = np.asarray(regressors, dtype=float)
    y = np.asarray(responses, dtype=float)
    return x.T @ (w[:, None] * x), x.T @ (w * y)


def normal_equation_residual(weights, responses, regressors, coeffs):
    """Largest absolute residual of the normal equations and its scale.

    The scale is ``max|X'WX| * max(1, max|coeffs|) + max|X'Wy|``.
    """
    lhs, rhs = normal_equations(weights, responses, regressors)
    coeffs = np.asarray(coeffs, dtype=float)
    resid = np.max(np.abs(lhs @ coeffs - rhs))
    scale = np.max(np.abs(lhs)) * max(1.0, np.max(np.abs(coeffs))) + np.max(np.abs(rhs))
    return resid, scale


def solve_weighted_normal_equations(weights, responses, regressors):
    """Weighted least-squares coefficients from the normal equations.

    Solved by pivoted Gauss-Jordan reduction. A singular system is retried
    with a small diagonal ridge and reported with :class:`RidgeFallbackWarning`.
    """
    lhs, rhs = normal_equations(weights, responses, regressors)
    coeffs, ridged = solve_with_ridge(lhs, rhs)
    if ridged:
        warnings.warn("singular normal equations; ridge fallback applied", RidgeFallbackWarning)
    return coeffs


def update_variance(weights, responses, fitted, floor=1e-9):
    w = np.asarray(weights, dtype=float)
    r = np.asarray(responses, dtype=float) - np.asarray(fitted, dtype=float)
    return max(float(np.sum(w * r * r) / np.sum(w)), floor)


def fit_state_variable(values, weights, var, parents, lag, max_lag, floor):
    """Weighted fit of one (state, variable) regression. Returns ``(coeffs, variance)``."""
    x = design_matrix(values, var, parents, lag, max_lag)
    y = values[max_lag:, var]
    coeffs = solve_weighted_normal_equations(weights, y, x)
    return coeffs, update_variance(weights, y, x @ coeffs, floor)


def m_step(model, dataset, post):
    """Closed-form parameter update from fixed posterior tables."""
    values = dataset.values
    floors = variance_floor(values)
    initial = update_initial(post)
    transition = update_transition(post) if post.xi.shape[0] else model.transition
    coeffs = [list(row) for row in model.coeffs]
    variances = np.array(model.variances)
    for i, s in enumerate(model.structures):
        w = post.gamma[:, i]
        if w.sum() <= STARVED_WEIGHT:
            warnings.warn(f"state {i} is starved; emission parameters kept", StarvedStateWarning)
            continue
        for m in range(model.n_vars):
            try:
                coeffs[i][m], variances[i, m] = fit_state_variable(
                    values, w, m, s.parents[m], s.lags[m], model.max_lag, floors[m]
                )
            except SingularSystemError as exc:
                raise NumericalError(f"M-step failed for state {i}, variable {m}: {exc}") from exc
    return model.replace(initial=initial, transition=transition, coeffs=coeffs, variances=variances)


def em_step(model, dataset):
    """One E-step plus M-step."""
    dataset.require_complete()
    return m_step(model, dataset, posteriors(model, dataset))


def fit_em(model, dataset, rel_tol=DEFAULT_REL_TOL, max_iter=DEFAULT_MAX_ITER):
    """Iterate EM until the relative log-likelihood change drops below ``rel_tol``.

    Returns
    -------
    model : Model
        The last model with a finite log-likelihood.
    report : EmReport

    Raises
    ------
    NumericalError
        If the starting model already has a non-finite log-likelihood.
    """
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    dataset.require_complete()
    post = posteriors(model, dataset)
    report = EmReport(ll_trace=[post.loglik])
    for it in range(1, max_iter + 1):
        try:
            new_model = m_step(model, dataset, post)
            new_post = posteriors(new_model, dataset)
        except NumericalError as exc:
            logger.warning("EM aborted at iteration %d: %s", it, exc)
            report.aborted = True
            break
        old_ll, new_ll = post.loglik, new_post.loglik
        report.ll_trace.append(new_ll)
        report.iterations = it
        model, post = new_model, new_post
        if abs(new_ll - old_ll) < rel_tol * abs(new_ll):
            report.converged = True
            break
    return model, report


def emission_objective(model, dataset, post):
    """Posterior-weighted emission log-density (the emission part of the EM auxiliary function)."""
    return float(np.sum(post.gamma * emission_logpdf_matrix(model, dataset)))
