import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from arhmm import Dataset, NumericalError, fit_em
from arhmm.em import (
    RidgeFallbackWarning,
    StarvedStateWarning,
    emission_objective,
    m_step,
    normal_equation_residual,
    solve_weighted_normal_equations,
    update_transition,
    update_variance,
)
from arhmm.inference import PosteriorTables, posteriors
from arhmm.model import design_matrix, naive_model
from arhmm.testing import random_model, sample_model


def _data(seed, n_states=2, n_vars=2, max_lag=1, n_rows=400):
    rng = np.random.default_rng(seed)
    truth = random_model(rng, n_states, n_vars, max_lag=max_lag, min_prob=0.05)
    x, _ = sample_model(truth, n_rows, rng)
    start = random_model(rng, n_states, n_vars, max_lag=max_lag, min_prob=0.05)
    start = start.replace(structures=truth.structures, coeffs=truth.coeffs)
    return truth, start, Dataset(x)


def test_weighted_least_squares_matches_lstsq():
    rng = np.random.default_rng(0)
    x = np.column_stack([np.ones(50), rng.normal(size=(50, 2))])
    y = x @ [1.0, -2.0, 0.5] + rng.normal(size=50)
    w = rng.uniform(0.1, 1.0, size=50)
    coeffs = solve_weighted_normal_equations(w, y, x)
    sw = np.sqrt(w)
    ref, *_ = np.linalg.lstsq(sw[:, None] * x, sw * y, rcond=None)
    assert_allclose(coeffs, ref, rtol=1e-10)
    resid, scale = normal_equation_residual(w, y, x, coeffs)
    assert resid < 1e-8 * scale


def test_collinear_regressors_use_ridge():
    x = np.column_stack([np.ones(20), np.arange(20.0), np.arange(20.0)])
    y = np.arange(20.0)
    with pytest.warns(RidgeFallbackWarning):
        coeffs = solve_weighted_normal_equations(np.ones(20), y, x)
    assert_allclose(x @ coeffs, y, atol=1e-4)


def test_variance_update_and_floor():
    w = np.array([1.0, 3.0])
    assert update_variance(w, [1.0, 2.0], [0.0, 0.0]) == pytest.approx((1 + 12) / 4)
    assert update_variance(w, [1.0, 2.0], [1.0, 2.0], floor=1e-6) == 1e-6


def test_starved_transition_row_is_uniform():
    gamma = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    xi = np.zeros((2, 2, 2))
    xi[:, 0, 0] = 1.0
    with pytest.warns(StarvedStateWarning):
        a = update_transition(PosteriorTables(gamma, xi, 0.0))
    assert_allclose(a, [[1.0, 0.0], [0.5, 0.5]])


def test_m_step_maximizes_emission_objective():
    _, start, d = _data(1)
    post = posteriors(start, d)
    best = m_step(start, d, post)
    base = emission_objective(best, d, post)
    rng = np.random.default_rng(0)
    for _ in range(10):
        coeffs = [[c + rng.uniform(-1e-3, 1e-3, size=c.size) for c in row] for row in best.coeffs]
        variances = best.variances * (1 + rng.uniform(-1e-3, 1e-3, size=best.variances.shape))
        assert emission_objective(best.replace(coeffs=coeffs, variances=variances), d, post) <= base


def test_m_step_closed_form_initial_and_transition():
    _, start, d = _data(2)
    post = posteriors(start, d)
    new = m_step(start, d, post)
    assert_allclose(new.initial, post.gamma[0] / post.gamma[0].sum())
    expected = post.xi.sum(axis=0) / post.gamma[:-1].sum(axis=0)[:, None]
    assert_allclose(new.transition, expected / expected.sum(axis=1, keepdims=True))


def test_single_state_em_is_ordinary_regression():
    rng = np.random.default_rng(3)
    model = random_model(rng, 1, 2, max_lag=1)
    x, _ = sample_model(model, 300, rng)
    d = Dataset(x)
    fitted = m_step(model, d, posteriors(model, d))
    for m in range(2):
        s = model.structures[0]
        design = design_matrix(x, m, s.parents[m], s.lags[m], 1)
        ref, *_ = np.linalg.lstsq(design, x[1:, m], rcond=None)
        assert_allclose(fitted.coeffs[0][m], ref, rtol=1e-8, atol=1e-10)
        assert fitted.variances[0, m] == pytest.approx(np.mean((x[1:, m] - design @ ref) ** 2), rel=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_em_is_monotone(seed):
    _, start, d = _data(seed, n_states=3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        _, report = fit_em(start, d, rel_tol=1e-10, max_iter=60)
    trace = np.array(report.ll_trace)
    assert np.all(np.diff(trace) >= -1e-6 * np.abs(trace[1:]))


def test_fit_em_reports_start_and_convergence():
    _, start, d = _data(4)
    _, report = fit_em(start, d)
    assert report.converged
    assert len(report.ll_trace) == report.iterations + 1
    assert report.ll_trace[0] == pytest.approx(posteriors(start, d).loglik)
    with pytest.raises(ValueError):
        fit_em(start, d, rel_tol=0.0)


def test_fit_em_aborts_and_keeps_last_good_model(monkeypatch):
    import arhmm.em as em

    _, start, d = _data(5)
    real = em.m_step
    calls = []

    def failing(model, dataset, post):
        calls.append(1)
        if len(calls) == 3:
            raise NumericalError("forced")
        return real(model, dataset, post)

    monkeypatch.setattr(em, "m_step", failing)
    fitted, report = em.fit_em(start, d, rel_tol=1e-12)
    assert report.aborted and not report.converged
    assert report.iterations == 2
    assert posteriors(fitted, d).loglik == pytest.approx(report.ll_trace[-1])
