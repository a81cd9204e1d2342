import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from arhmm import UnitRootError, label_g1, label_g2, state_means
from arhmm.labeling import NonStationaryStateWarning, mean_table
from arhmm.model import Model, StateStructure
from arhmm.synth import builtin_scenarios, spec_to_model


@pytest.fixture
def scenario1():
    return spec_to_model(builtin_scenarios()[0])


def test_scenario1_state3_means(scenario1):
    nu = state_means(scenario1, 2)
    assert nu[0] == pytest.approx(1.11111, abs=1e-5)
    assert nu[2] == pytest.approx(622.222, abs=1e-3)
    # x2 = 5 x1 + 4 x3 + 0.7 x2[t-1]
    assert nu[1] == pytest.approx((5 * nu[0] + 4 * nu[2]) / 0.3, rel=1e-12)


def test_static_states_means_are_regression_means(scenario1):
    assert_allclose(state_means(scenario1, 0), [1.0, 2.0, 3.0])
    assert_allclose(state_means(scenario1, 1), [2.0, 9.0, 4.0])


def test_g1_picks_high_state(scenario1):
    g = label_g1(scenario1)
    assert int(np.argmax(g)) == 2
    assert_allclose(g, mean_table(scenario1).sum(axis=1))


def test_g_labels_with_weights_and_limits(scenario1):
    v = np.array([1.0, 0.0, 2.0])
    kappa = np.array([1.0, 0.0, 3.0])
    nu = mean_table(scenario1)
    assert_allclose(label_g1(scenario1, v, kappa), (v * (nu - kappa)).sum(axis=1))
    assert_allclose(label_g2(scenario1, v, kappa), (v * (nu - kappa)).max(axis=1))


def _one_var(eta):
    s = StateStructure([()], [len(eta)])
    return Model([[1.0]], [1.0], [s], [[[1.0, *eta]]], [[1.0]], max_lag=len(eta))


def test_unit_root_raises():
    with pytest.raises(UnitRootError):
        state_means(_one_var([0.5, 0.5]), 0)


def test_explosive_state_warns():
    with pytest.warns(NonStationaryStateWarning):
        nu = state_means(_one_var([1.5]), 0)
    assert nu[0] == pytest.approx(-2.0)


def test_stationary_state_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert state_means(_one_var([0.5]), 0)[0] == pytest.approx(2.0)
