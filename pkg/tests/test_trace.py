import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collocated_adaptive.trace import TraceRecord, dumps, header, loads, read_trace, write_trace

floats = st.floats(allow_nan=True, allow_infinity=False, width=64)


def vec(n):
    return st.lists(floats, min_size=n, max_size=n).map(np.array)


def records(n=2, m=1, p=7):
    return st.builds(TraceRecord, t=st.floats(0, 1e3), q=vec(n), qdot=vec(n), e=vec(m), s=vec(n), xi=vec(n),
                     pihat=vec(p), tau_bar=vec(m), det_Mn_hat=floats, eta=floats, V=floats, Vdot=floats,
                     pihat_delta_identity=floats)


@given(st.lists(records(), min_size=1, max_size=5))
def test_round_trip_is_exact(recs):
    back, meta = loads(dumps(recs, {"scenario": "x"}))
    assert back == recs
    assert meta == {"scenario": "x"}


@given(st.lists(records(2, 2), min_size=1, max_size=3))
def test_round_trip_fully_actuated(recs):
    assert loads(dumps(recs))[0] == recs


def test_header_layout():
    cols = header(2, 1, 7)
    assert cols[:5] == ["t", "q_1", "q_2", "qdot_1", "qdot_2"]
    assert "pihat_7" in cols and "tau_bar_1" in cols
    assert cols[-5:] == ["det_Mn_hat", "eta", "V", "Vdot", "pihat_delta_identity"]


def test_error_line(tmp_path):
    z = np.zeros(2)
    rec = TraceRecord(0.0, z, z, np.zeros(1), z, z, np.zeros(7), np.zeros(1), 1.0, 0.0, 0.0, 0.0, 0.0)
    path = tmp_path / "t.csv"
    with open(path, "w") as fh:
        write_trace(fh, [rec], error="SingularMinorError: boom")
    with open(path) as fh:
        recs, meta = read_trace(fh)
    assert meta["error"] == "SingularMinorError: boom"
    assert path.read_text().splitlines()[-1].startswith("# error:")


def test_empty_trace_rejected():
    with pytest.raises(ValueError):
        write_trace(io.StringIO(), [])


def test_error_before_first_record():
    text = dumps([], {"scenario": "x"}, error="boom")
    assert loads(text) == ([], {"scenario": "x", "error": "boom"})


def test_ragged_row_rejected():
    z = np.zeros(2)
    rec = TraceRecord(0.0, z, z, np.zeros(1), z, z, np.zeros(7), np.zeros(1), 1.0, 0.0, 0.0, 0.0, 0.0)
    text = dumps([rec]) + "1,2,3\n"
    with pytest.raises(ValueError):
        loads(text)
