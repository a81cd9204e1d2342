import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from arhmm import DataError, Dataset, SchemaError
from arhmm.io import (
    impute_missing,
    init_model,
    load_csv,
    load_model,
    model_to_dict,
    read_path_csv,
    save_model,
    write_csv,
    write_path_csv,
)
from arhmm.testing import random_model


def test_impute_trailing_window():
    d = Dataset(np.array([1, 2, 3, 4, 5, np.nan, np.nan], dtype=float)[:, None])
    filled = impute_missing(d).values[:, 0]
    assert filled[5] == pytest.approx(3.0)
    assert filled[6] == pytest.approx(3.4)


def test_impute_first_row_and_empty_column():
    d = Dataset(np.array([[np.nan, 1.0], [2.0, 2.0], [4.0, 3.0]]))
    assert impute_missing(d).values[0, 0] == pytest.approx(3.0)
    with pytest.raises(DataError):
        impute_missing(Dataset(np.array([[np.nan], [np.nan]])))


def test_init_model_oracle():
    d = Dataset(np.array([[0.0], [6.0], [3.0]]))
    model = init_model(d, 3)
    assert_allclose(np.array([c[0][0] for c in model.coeffs]), [1.5, 3.0, 4.5])
    assert_allclose(model.variances[:, 0], 12.0)
    assert_allclose(model.transition, 1 / 3)
    assert_allclose(model.initial, 1 / 3)


def test_csv_round_trip(tmp_path):
    x = np.random.default_rng(0).normal(size=(20, 3)) * 1e3
    x[4, 1] = np.nan
    d = Dataset(x, ("a", "b", "c"))
    write_csv(d, tmp_path / "x.csv")
    back = load_csv(tmp_path / "x.csv")
    assert back.names == ("a", "b", "c")
    assert_array_equal(back.values, x)


@pytest.mark.parametrize(
    "text,match",
    [("a,b\n1,2\n3\n", ":3:"), ("a\n1\nfoo\n", "non-numeric"), ("a\n1\ninf\n", "non-finite"), ("", "empty")],
)
def test_bad_csv(tmp_path, text, match):
    (tmp_path / "bad.csv").write_text(text)
    with pytest.raises(DataError, match=match):
        load_csv(tmp_path / "bad.csv")


def test_custom_missing_tokens(tmp_path):
    (tmp_path / "x.csv").write_text("a\n1\n-999\n")
    assert np.isnan(load_csv(tmp_path / "x.csv", {"-999"}).values[1, 0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_model_round_trip(tmp_path_factory, seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)), max_lag=int(rng.integers(0, 3)))
    path = tmp_path_factory.mktemp("m") / "model.json"
    save_model(model, path)
    assert load_model(path) == model


def test_schema_errors(tmp_path):
    model = random_model(np.random.default_rng(0), 2, 2)
    doc = model_to_dict(model)
    doc["schema_version"] = 99
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(SchemaError, match="version"):
        load_model(tmp_path / "m.json")
    doc = model_to_dict(model)
    del doc["states"][0][0]["variance"]
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        load_model(tmp_path / "m.json")
    (tmp_path / "m.json").write_text("{")
    with pytest.raises(SchemaError):
        load_model(tmp_path / "m.json")


def test_path_csv_round_trip(tmp_path):
    write_path_csv(tmp_path / "p.csv", [1, 2, 3], [0, 2, 1], {"g": np.array([0.5, 1.0, 2.0])})
    t, q = read_path_csv(tmp_path / "p.csv")
    assert_array_equal(t, [1, 2, 3])
    assert_array_equal(q, [0, 2, 1])
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "t,state,g"
