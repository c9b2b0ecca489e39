import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bettest.reporting import (ObservationError, ReportEnvelope, digest_inputs, dumps, envelope,
                               ingest_observations, parse_observations)


def test_single_value_with_header(tmp_path):
    path = tmp_path / "y.csv"
    path.write_text("y\n30\n")
    assert ingest_observations(path) == [30.0]


def test_order_preserved(tmp_path):
    values = [math.sin(i) for i in range(100)]
    path = tmp_path / "m.csv"
    path.write_text("\n".join(repr(v) for v in values) + "\n")
    assert ingest_observations(path) == values


def test_unparseable_cell_reports_row():
    with pytest.raises(ObservationError) as err:
        parse_observations("y\nabc\n")
    assert err.value.row == 2
    assert err.value.column == 1
    assert "row 2" in str(err.value)


def test_blank_lines_and_columns():
    text = "a,b\n1,10\n\n2,20\n  \n3,30\n"
    assert parse_observations(text, "b") == [10.0, 20.0, 30.0]
    assert parse_observations(text, 1) == [10.0, 20.0, 30.0]
    assert parse_observations(text) == [1.0, 2.0, 3.0]


@pytest.mark.parametrize("text, column", [("", None), ("y\n", None), ("\n\n", None), ("a,b\n1\n", "b"),
                                          ("a\n1\n", "z"), ("y\n1\ninf\n", None)])
def test_bad_inputs(text, column):
    with pytest.raises(ObservationError):
        parse_observations(text, column)


def test_seventeen_digits():
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps([1.0, 2]) == "[1, 2]"
    assert dumps({"x": math.inf, "y": -math.inf, "z": math.nan}) == \
        '{"x": "Infinity", "y": "-Infinity", "z": "NaN"}'
    assert dumps({"s": "é", "n": None, "b": True}) == '{"s": "é", "n": null, "b": true}'
    with pytest.raises(TypeError):
        dumps(object())


payloads = st.recursive(
    st.none() | st.booleans() | st.integers(-10**6, 10**6) | st.text(max_size=8)
    | st.floats(allow_nan=False, allow_infinity=False),
    lambda inner: st.lists(inner, max_size=5) | st.dictionaries(st.text(max_size=5), inner, max_size=5),
    max_leaves=20)


@given(payloads)
def test_roundtrip_is_byte_identical(payload):
    env = ReportEnvelope("0.1.0", "test", "00", payload)
    text = env.to_json()
    back = ReportEnvelope.from_json(text)
    assert back.to_json() == text
    assert back.payload == json.loads(json.dumps(payload))


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_floats_survive_exactly(x):
    assert json.loads(dumps(x)) == x


def test_digest_depends_on_config_and_bytes():
    a = digest_inputs({"alpha": 0.05}, {"d.csv": b"1\n"})
    assert a == digest_inputs({"alpha": 0.05}, {"d.csv": b"1\n"})
    assert a != digest_inputs({"alpha": 0.05}, {"d.csv": b"2\n"})
    assert a != digest_inputs({"alpha": 0.01}, {"d.csv": b"1\n"})
    assert len(a) == 64
    assert envelope("x", {"b": 1, "a": 2}, {}).inputs_digest == envelope("x", {"a": 2, "b": 1}, {}).inputs_digest
