"""Structural EM: penalized scores and forward greedy search over lags and arcs."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from arhmm.em import DEFAULT_MAX_ITER, DEFAULT_REL_TOL, STARVED_WEIGHT, fit_em, fit_state_variable
from arhmm.inference import loglikelihood, posteriors
from arhmm.io import init_model, random_init
from arhmm.lags import DEFAULT_ALPHA, DEFAULT_KMAX, select_model_max_lag
from arhmm.model import (
    count_parameters,
    variable_logpdf,
    variance_floor,
    with_state_variable,
    with_uniform_lags,
)

logger = logging.getLogger(__name__)

MODES = ("ar-aslg", "aslg", "naive")


def effective_length(model, dataset):
    """Number of emitted rows, ``T - max_lag + 1``."""
    return dataset.T - model.max_lag + 1


def local_score(model, dataset, post, i, m):
    """Posterior-weighted log density of variable ``m`` under state ``i``."""
    return float(np.dot(post.gamma[:, i], variable_logpdf(model, i, m, dataset.values)))


def total_score(model, dataset, post):
    return sum(
        local_score(model, dataset, post, i, m)
        for i in range(model.n_states)
        for m in range(model.n_vars)
    )


def penalized_objective(model, dataset, loglik=None):
    """``LL - 0.5 * #params * ln(T_eff)``."""
    if loglik is None:
        loglik = loglikelihood(model, dataset)
    return loglik - 0.5 * count_parameters(model) * math.log(effective_length(model, dataset))


def report_bic(model, dataset, loglik=None):
    """BIC on the ``-2 LL + #params * ln(T_eff)`` scale (lower is better)."""
    return -2.0 * penalized_objective(model, dataset, loglik)


@dataclass
class SearchState:
    """Outcome of a greedy pass.

    ``scores[i, m]`` caches the local score of each regression and
    ``objective`` is their sum minus ``0.5 * ln(T_eff)`` per emission parameter.
    """

    structures: tuple
    scores: np.ndarray
    objective: float
    accepted: list = field(default_factory=list)


def greedy_search(model, dataset, post, search_lags=True, search_arcs=True):
    """One forward greedy pass over AR orders, then parent arcs.

    Every (state, variable) regression is refitted under the fixed posteriors
    before comparisons, so the incumbent and each candidate are scored at
    their own optimum. A candidate adding one parameter is accepted only if
    its local score beats the incumbent by more than ``0.5 * ln(T_eff)``.

    Lag phase: per (state, variable), increase the AR order one step at a
    time and stop at the first non-improvement. Arc phase: per (state,
    variable), try each acyclicity-preserving arc into the variable in
    ascending source order, accepting each improving one in place.

    Returns
    -------
    model : Model
        Model with the new structures and refitted emission parameters;
        ``initial`` and ``transition`` are unchanged.
    state : SearchState
    """
    values = dataset.values
    floors = variance_floor(values)
    penalty = 0.5 * math.log(effective_length(model, dataset))
    n, n_vars, p_max = model.n_states, model.n_vars, model.max_lag
    scores = np.zeros((n, n_vars))
    accepted = []

    def fit(i, m, structure):
        coeffs, var = fit_state_variable(
            values, post.gamma[:, i], m, structure.parents[m], structure.lags[m], p_max, floors[m]
        )
        cand = with_state_variable(model, i, m, structure, coeffs, var)
        return cand, local_score(cand, dataset, post, i, m)

    active = [post.gamma[:, i].sum() > STARVED_WEIGHT for i in range(n)]
    for i in range(n):
        for m in range(n_vars):
            if active[i]:
                model, scores[i, m] = fit(i, m, model.structures[i])
            else:
                scores[i, m] = local_score(model, dataset, post, i, m)

    if search_lags:
        for i in range(n):
            if not active[i]:
                continue
            for m in range(n_vars):
                while model.structures[i].lags[m] < p_max:
                    s = model.structures[i]
                    cand, score = fit(i, m, s.with_lag(m, s.lags[m] + 1))
                    if score - penalty > scores[i, m]:
                        model, scores[i, m] = cand, score
                        accepted.append(("lag", i, m, s.lags[m] + 1))
                    else:
                        break

    if search_arcs:
        for i in range(n):
            if not active[i]:
                continue
            for m in range(n_vars):
                for u in range(n_vars):
                    s = model.structures[i]
                    if not s.can_add_arc(u, m):
                        continue
                    cand, score = fit(i, m, s.with_arc(u, m))
                    if score - penalty > scores[i, m]:
                        model, scores[i, m] = cand, score
                        accepted.append(("arc", i, u, m))

    n_emission = sum(s.n_regressors(m) + 1 for s in model.structures for m in range(n_vars))
    return model, SearchState(model.structures, scores, float(scores.sum()) - penalty * n_emission, accepted)


@dataclass(frozen=True)
class SemConfig:
    """Settings for :func:`fit_sem`.

    ``max_lag`` is an integer or ``"auto"`` (Yule-Walker selection with
    ``kmax`` and ``alpha``).
    """

    n_states: int
    mode: str = "ar-aslg"
    max_lag: object = "auto"
    kmax: int = DEFAULT_KMAX
    alpha: float = DEFAULT_ALPHA
    rel_tol: float = DEFAULT_REL_TOL
    max_iter: int = DEFAULT_MAX_ITER
    sem_tol: float = 1e-6
    max_sem_iter: int = 50

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_states < 1:
            raise ValueError("n_states must be positive")

    def resolve_max_lag(self, dataset):
        if self.max_lag == "auto":
            return select_model_max_lag(dataset, self.kmax, self.alpha)
        return int(self.max_lag)


@dataclass
class SemReport:
    objective_trace: list = field(default_factory=list)
    em_reports: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def fit_sem(config, dataset, initial_model=None):
    """Alternate EM and greedy structure search until the penalized
    log-likelihood stops improving by more than ``sem_tol`` (relative).

    In ``naive`` mode the structure is fixed and this is plain EM; in
    ``aslg`` mode AR orders stay at zero.
    """
    dataset.require_complete()
    if initial_model is None:
        model = init_model(dataset, config.n_states, max_lag=config.resolve_max_lag(dataset))
    else:
        model = initial_model
    model, em_report = fit_em(model, dataset, config.rel_tol, config.max_iter)
    report = SemReport(em_reports=[em_report])
    objective = penalized_objective(model, dataset, em_report.ll_trace[-1])
    report.objective_trace.append(objective)
    if config.mode == "naive":
        report.converged = True
        return model, report

    for it in range(1, config.max_sem_iter + 1):
        post = posteriors(model, dataset)
        cand, search = greedy_search(model, dataset, post, search_lags=config.mode == "ar-aslg")
        report.iterations = it
        if cand.structures == model.structures:
            report.converged = True
            break
        logger.info("SEM iteration %d accepted %d moves", it, len(search.accepted))
        cand, em_report = fit_em(cand, dataset, config.rel_tol, config.max_iter)
        new_objective = penalized_objective(cand, dataset, em_report.ll_trace[-1])
        if new_objective < objective:
            logger.warning("penalized objective decreased (%r -> %r); keeping previous model", objective, new_objective)
            report.converged = True
            break
        report.em_reports.append(em_report)
        report.objective_trace.append(new_objective)
        gain = new_objective - objective
        model, objective = cand, new_objective
        if gain < config.sem_tol * abs(objective):
            report.converged = True
            break
    return model, report


def start_models(config, dataset, seeds=()):
    """Starting points for :func:`fit_sem_multistart`.

    The deterministic :func:`~arhmm.io.init_model` start comes first, then one
    random start per seed. In ``ar-aslg`` mode with ``max_lag > 0`` each start
    is also offered with every AR order at ``max_lag``.
    """
    max_lag = config.resolve_max_lag(dataset)
    bases = [init_model(dataset, config.n_states, max_lag=max_lag)]
    bases += [random_init(dataset, config.n_states, np.random.default_rng(s), max_lag) for s in seeds]
    starts = []
    for base in bases:
        starts.append(base)
        if config.mode == "ar-aslg" and max_lag > 0:
            starts.append(with_uniform_lags(base, max_lag))
    return starts


def fit_sem_multistart(config, dataset, seeds=(0, 1, 2, 3)):
    """Run :func:`fit_sem` from every start of :func:`start_models` and keep
    the result with the highest penalized log-likelihood (first on ties).

    Returns ``(model, report, objectives)`` where ``objectives`` lists the
    final penalized objective of each start.
    """
    best = None
    objectives = []
    for k, start in enumerate(start_models(config, dataset, seeds)):
        model, report = fit_sem(config, dataset, initial_model=start)
        objective = report.objective_trace[-1]
        objectives.append(objective)
        logger.info("start %d: penalized objective %r", k, objective)
        if best is None or objective > best[1].objective_trace[-1]:
            best = (model, report)
    return best[0], best[1], objectives


def to_dot(model, i, names=None):
    """DOT digraph of state ``i``: parent arcs plus ``Xm_AR_r`` lag nodes."""
    s = model.structures[i]
    labels = [f"X{m + 1}" for m in range(model.n_vars)] if names is None else list(names)
    lines = [f'digraph "state_{i}" {{']
    for m in range(model.n_vars):
        lines.append(f'  "{labels[m]}";')
    for m in range(model.n_vars):
        for u in s.parents[m]:
            lines.append(f'  "{labels[u]}" -> "{labels[m]}";')
        for r in range(1, s.lags[m] + 1):
            lines.append(f'  "{labels[m]}_AR_{r}" -> "{labels[m]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
