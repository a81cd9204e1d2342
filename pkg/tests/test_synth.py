import numpy as np
import pytest
from numpy.testing import assert_array_equal

from arhmm.synth import (
    TEST_BLOCKS,
    TRAIN_BLOCKS,
    Equation,
    ScenarioSpec,
    builtin_scenarios,
    parse_blocks,
    sample,
    spec_to_model,
)


def test_builtin_shapes():
    s1, s2 = builtin_scenarios()
    assert (s1.n_states, s1.n_vars, s1.max_lag) == (3, 3, 1)
    assert (s2.n_states, s2.n_vars, s2.max_lag) == (3, 6, 2)
    assert s1.length == 1800
    assert all(sum(n for _, n in b) == 1800 for b in TEST_BLOCKS)


def test_scenario2_structures_are_acyclic():
    s2 = builtin_scenarios()[1]
    for i in range(3):
        assert len(s2.structure(i).topological_order()) == 6


def test_sample_is_deterministic_and_labelled():
    spec = builtin_scenarios(seed=3)[0]
    d1, p1 = sample(spec)
    d2, p2 = sample(spec)
    assert_array_equal(d1.values, d2.values)
    assert_array_equal(p1, np.repeat([s for s, _ in TRAIN_BLOCKS], 300))
    assert d1.values.shape == (1800, 3)
    assert not np.array_equal(sample(spec.with_seed(4))[0].values, d1.values)


def test_sample_follows_equations():
    # noiseless AR(1) around 10 started at the stationary mean stays there
    spec = ScenarioSpec(((Equation(5.0, ar=(0.5,), sigma=0.0),),), ((0, 20),), burn_in=200)
    d, _ = sample(spec)
    assert np.allclose(d.values, 10.0)


def test_parent_equation():
    eqs = ((Equation(1.0, sigma=0.0), Equation(2.0, ((0, 3.0),), sigma=0.0)),)
    d, _ = sample(ScenarioSpec(eqs, ((0, 5),)))
    assert np.allclose(d.values, [[1.0, 5.0]] * 5)


def test_spec_to_model_variances():
    model = spec_to_model(builtin_scenarios()[0])
    assert model.variances[1, 1] == 25.0
    assert model.coeffs[2][1].tolist() == [0.0, 5.0, 4.0, 0.7]


def test_parse_blocks():
    assert parse_blocks("train") == TRAIN_BLOCKS
    assert parse_blocks("test3") == TEST_BLOCKS[2]
    assert parse_blocks("0:10, 2:5") == ((0, 10), (2, 5))
    with pytest.raises(ValueError):
        parse_blocks("test9")
    with pytest.raises(ValueError):
        parse_blocks("0-10")


def test_invalid_spec():
    with pytest.raises(ValueError):
        ScenarioSpec(((Equation(),),), ((1, 10),))
    with pytest.raises(ValueError):
        ScenarioSpec(((Equation(parents=((0, 1.0),)),),), ((0, 10),))


def test_lag_context_is_observed_at_block_boundaries():
    eqs = (
        (Equation(1.0, ar=(0.5,), sigma=0.0),),
        (Equation(50.0, ar=(0.9,), sigma=0.0),),
    )
    d, path = sample(ScenarioSpec(eqs, ((0, 5), (1, 5), (0, 5)), burn_in=3))
    x = d.values[:, 0]
    for t in range(1, x.size):
        e = eqs[path[t]][0]
        assert x[t] == pytest.approx(e.intercept + e.ar[0] * x[t - 1])
