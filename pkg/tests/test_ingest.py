import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from globalbias.ingest import Indicator, IndicatorPanel, PanelError, cross_section, load_panel, write_panel
from globalbias.sampling import SamplingProtocol, Sign

D = dt.date(2007, 1, 4)


def write(tmp_path, text, name="panel.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_three_rows(tmp_path):
    p = write(tmp_path, "date,company,indicator,value\n2007-01-04,A,PE,12.5\n2007-01-04,B,PE,8\n2007-01-05,A,PB,1.1\n")
    panel = load_panel(p)
    assert len(panel) == 3
    assert panel.indicators() == [Indicator.PB, Indicator.PE]
    assert panel.dates(Indicator.PE) == [D]


def test_crlf_accepted(tmp_path):
    p = write(tmp_path, "date,company,indicator,value\r\n2007-01-04,A,PE,12.5\r\n")
    assert len(load_panel(p)) == 1


def test_duplicate_key(tmp_path):
    p = write(tmp_path, "date,company,indicator,value\n2007-01-04,A,PE,1\n2007-01-04,A,PE,2\n")
    with pytest.raises(PanelError, match=r"duplicate key .*2007-01-04.*'A'.*'PE'"):
        load_panel(p)


def test_bad_value_line_number(tmp_path):
    rows = [f"2007-01-04,C{i},PE,{i + 1}" for i in range(5)]
    rows.insert(5, "2007-01-04,X,PE,abc")  # becomes file line 7
    p = write(tmp_path, "date,company,indicator,value\n" + "\n".join(rows) + "\n")
    with pytest.raises(PanelError, match="line 7"):
        load_panel(p)


@pytest.mark.parametrize("row,msg", [
    ("2007-13-01,A,PE,1", "bad date"),
    ("2007-01-04,A,XYZ,1", "unknown indicator"),
    ("2007-01-04,A,PE,", "empty field"),
    ("2007-01-04,A,PE,inf", "non-finite"),
    ('2007-01-04,A,PE,"1,000"', "non-numeric"),
])
def test_schema_violations(tmp_path, row, msg):
    p = write(tmp_path, "date,company,indicator,value\n" + row + "\n")
    with pytest.raises(PanelError, match=msg):
        load_panel(p)


def test_missing_column(tmp_path):
    p = write(tmp_path, "date,company,value\n2007-01-04,A,1\n")
    with pytest.raises(PanelError, match="indicator"):
        load_panel(p)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.csv"):
        load_panel(tmp_path / "nope.csv")


@settings(max_examples=30, deadline=None)
@given(st.lists(
    st.tuples(
        st.dates(dt.date(2000, 1, 1), dt.date(2030, 12, 31)),
        st.sampled_from(["A", "B", "C7", "x y"]),
        st.sampled_from(list(Indicator)),
        st.floats(-1e6, 1e6, allow_nan=False),
    ),
    min_size=1, max_size=40, unique_by=lambda r: (r[0], r[1], r[2]),
))
def test_round_trip(tmp_path_factory, records):
    panel = IndicatorPanel.from_records((d, c, i.value, v) for d, c, i, v in records)
    path = tmp_path_factory.mktemp("rt") / "panel.csv"
    write_panel(panel, path)
    assert load_panel(path) == panel


def small_panel():
    return IndicatorPanel.from_records([
        (D, "a", "PIC", 2.0), (D, "b", "PIC", -3.0), (D, "c", "PIC", 1500.0),
        (D, "a", "PE", 2.0), (D, "b", "PE", -3.0), (D, "c", "PE", 1500.0), (D, "d", "PE", 0.0),
    ])


def test_cross_section_positive():
    s = cross_section(small_panel(), D, "PIC", SamplingProtocol(1000, 300, Sign.POSITIVE))
    assert s.values.tolist() == [2.0]
    assert (s.raw, s.dropped_cap, s.dropped_sign, s.dropped_zero) == (3, 1, 1, 0)


def test_cross_section_negative():
    s = cross_section(small_panel(), D, "PIC", SamplingProtocol(1000, 300, Sign.NEGATIVE))
    assert s.values.tolist() == [3.0]


def test_cross_section_all_non_cash_flow():
    s = cross_section(small_panel(), D, "PE", SamplingProtocol(1000, 300, Sign.ALL))
    assert s.values.tolist() == [2.0]
    assert s.raw == s.retained + s.dropped_cap + s.dropped_sign + s.dropped_zero


def test_cross_section_all_cash_flow_pools_magnitudes():
    s = cross_section(small_panel(), D, "PIC", SamplingProtocol(1000, 300, Sign.ALL))
    assert sorted(s.values.tolist()) == [2.0, 3.0]


def test_cross_section_errors():
    with pytest.raises(ValueError, match="no data"):
        cross_section(small_panel(), dt.date(2001, 1, 1), "PE")
    with pytest.raises(ValueError, match="cash-flow"):
        cross_section(small_panel(), D, "PE", SamplingProtocol(sign=Sign.NEGATIVE))
    only_neg = IndicatorPanel.from_records([(D, "a", "POC", -1.0), (D, "b", "POC", -2.0)])
    with pytest.raises(ValueError, match="no positive values"):
        cross_section(only_neg, D, "POC", SamplingProtocol(sign=Sign.POSITIVE))


@settings(max_examples=100, deadline=None)
@given(
    values=st.lists(st.floats(-3000, 3000, allow_nan=False), min_size=1, max_size=60),
    sign=st.sampled_from(list(Sign)),
    ind=st.sampled_from(["PE", "POC"]),
)
def test_count_accounting(values, sign, ind):
    if sign is Sign.NEGATIVE and ind == "PE":
        return
    panel = IndicatorPanel.from_records((D, f"c{i}", ind, v) for i, v in enumerate(values))
    try:
        s = cross_section(panel, D, ind, SamplingProtocol(1000, 300, sign))
    except ValueError:
        return
    assert s.raw == s.retained + s.dropped_cap + s.dropped_sign + s.dropped_zero
    assert np.all(s.values > 0)
