"""Forward-backward, posteriors and Viterbi decoding in log space.

All tables are indexed by position in the emission window: row ``s``
corresponds to absolute time ``t = max_lag + s``.
"""

from dataclasses import dataclass

import numba
import numpy as np

from arhmm.errors import DecodingError, NumericalError
from arhmm.model import emission_logpdf_matrix, safe_log


@dataclass(frozen=True, eq=False)
class TrellisTables:
    log_alpha: np.ndarray
    log_beta: np.ndarray
    loglik: float


@dataclass(frozen=True, eq=False)
class PosteriorTables:
    """State marginals ``gamma[s, i]`` and pair marginals ``xi[s, i, j]``.

    ``xi[s]`` is the joint of the states at window positions ``s`` and ``s + 1``.
    """

    gamma: np.ndarray
    xi: np.ndarray
    loglik: float = float("nan")


def _logsumexp(v, axis=None):
    top = np.max(v, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(v - top), axis=axis, keepdims=True)) + top
    return np.squeeze(out, axis=axis) if axis is not None else out.item()


@numba.njit(cache=True)
def _log_vecmat(log_v, a, out):
    # out[j] = log(sum_i exp(log_v[i]) * a[i, j])
    n, k = a.shape
    top = -np.inf
    for i in range(n):
        if log_v[i] > top:
            top = log_v[i]
    for j in range(k):
        if top == -np.inf:
            out[j] = -np.inf
            continue
        acc = 0.0
        for i in range(n):
            acc += np.exp(log_v[i] - top) * a[i, j]
        out[j] = top + np.log(acc) if acc > 0.0 else -np.inf


@numba.njit(cache=True)
def _forward_kernel(log_pi, a, log_emis, log_alpha):
    n_eff = log_emis.shape[0]
    log_alpha[0] = log_pi + log_emis[0]
    for s in range(1, n_eff):
        _log_vecmat(log_alpha[s - 1], a, log_alpha[s])
        log_alpha[s] += log_emis[s]


@numba.njit(cache=True)
def _backward_kernel(at, log_emis, log_beta):
    n_eff = log_emis.shape[0]
    log_beta[n_eff - 1] = 0.0
    for s in range(n_eff - 2, -1, -1):
        _log_vecmat(log_beta[s + 1] + log_emis[s + 1], at, log_beta[s])


@numba.njit(cache=True)
def _viterbi_kernel(log_pi, log_a, log_emis, psi):
    # returns (last delta row, window position of an all -inf row or -1)
    n_eff, n = log_emis.shape
    delta = log_pi + log_emis[0]
    if not np.isfinite(delta).any():
        return delta, 0
    nxt = np.empty(n)
    for s in range(1, n_eff):
        for i in range(n):
            best = 0
            best_val = delta[0] + log_a[0, i]
            for j in range(1, n):
                v = delta[j] + log_a[j, i]
                if v > best_val:
                    best_val = v
                    best = j
            psi[s, i] = best
            nxt[i] = best_val + log_emis[s, i]
        delta = nxt.copy()
        if not np.isfinite(delta).any():
            return delta, s
    return delta, -1


def _forward_tables(model, log_emis):
    log_emis = np.ascontiguousarray(log_emis)
    log_alpha = np.empty_like(log_emis)
    _forward_kernel(safe_log(model.initial), np.ascontiguousarray(model.transition), log_emis, log_alpha)
    return log_alpha, _logsumexp(log_alpha[-1])


def _backward_tables(model, log_emis):
    log_emis = np.ascontiguousarray(log_emis)
    log_beta = np.empty_like(log_emis)
    _backward_kernel(np.ascontiguousarray(model.transition.T), log_emis, log_beta)
    return log_beta


def forward(model, dataset, log_emission=None):
    """Forward recursion.

    Returns
    -------
    log_alpha : ndarray, shape (T - max_lag + 1, N)
    loglik : float
        ``ln P(x[max_lag..T] | x[0..max_lag-1])``; ``-inf`` if the data are impossible.
    """
    if log_emission is None:
        log_emission = emission_logpdf_matrix(model, dataset)
    return _forward_tables(model, log_emission)


def backward(model, dataset, log_emission=None):
    if log_emission is None:
        log_emission = emission_logpdf_matrix(model, dataset)
    return _backward_tables(model, log_emission)


def trellis(model, dataset, log_emission=None):
    if log_emission is None:
        log_emission = emission_logpdf_matrix(model, dataset)
    log_alpha, loglik = _forward_tables(model, log_emission)
    return TrellisTables(log_alpha, _backward_tables(model, log_emission), loglik)


def loglikelihood(model, dataset):
    return forward(model, dataset)[1]


def posteriors(model, dataset, log_emission=None):
    """Posterior state and transition marginals over the emission window.

    Raises
    ------
    NumericalError
        If the data have zero likelihood under ``model``.
    """
    if log_emission is None:
        log_emission = emission_logpdf_matrix(model, dataset)
    tables = trellis(model, dataset, log_emission)
    ll = tables.loglik
    if not np.isfinite(ll):
        raise NumericalError(f"log-likelihood is {ll}; posteriors undefined")
    log_gamma = tables.log_alpha + tables.log_beta
    log_gamma -= _logsumexp(log_gamma, axis=1)[:, None]
    gamma = np.exp(log_gamma)
    log_xi = (
        tables.log_alpha[:-1, :, None]
        + safe_log(model.transition)[None, :, :]
        + (log_emission[1:] + tables.log_beta[1:])[:, None, :]
    )
    n_pairs = log_xi.shape[0]
    if n_pairs:
        log_xi -= _logsumexp(log_xi.reshape(n_pairs, -1), axis=1)[:, None, None]
    xi = np.exp(log_xi)
    return PosteriorTables(gamma=gamma, xi=xi, loglik=ll)


def viterbi(model, dataset, log_emission=None):
    """Most probable hidden path over ``[max_lag, T]``.

    Ties go to the lowest state index, both in the recursion and at the end.

    Returns
    -------
    path : ndarray of int, shape (T - max_lag + 1,)
    score : float
        Log joint probability of ``path`` and the emitted data.

    Raises
    ------
    DecodingError
        If every state has zero probability at some time.
    """
    if log_emission is None:
        log_emission = emission_logpdf_matrix(model, dataset)
    n_eff, n = log_emission.shape
    psi = np.zeros((n_eff, n), dtype=np.int64)
    delta, bad = _viterbi_kernel(
        safe_log(model.initial),
        safe_log(model.transition),
        np.ascontiguousarray(log_emission),
        psi,
    )
    if bad >= 0:
        raise DecodingError(model.max_lag + bad)
    path = np.empty(n_eff, dtype=int)
    path[-1] = int(np.argmax(delta))
    score = float(delta[path[-1]])
    for s in range(n_eff - 1, 0, -1):
        path[s - 1] = psi[s, path[s]]
    return path, score
