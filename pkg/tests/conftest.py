import datetime as dt

from globalbias.ingest import IndicatorPanel

START = dt.date(2007, 1, 4)


def make_panel(draw, days=30, indicator="PE", start=START):
    """Panel with one cross-section per day; ``draw(day_index)`` gives the values."""
    records = []
    for d in range(days):
        date = start + dt.timedelta(days=d)
        for i, v in enumerate(draw(d)):
            records.append((date, f"c{i:04d}", indicator, float(v)))
    return IndicatorPanel.from_records(records)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance  # noqa: PLC0415

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
