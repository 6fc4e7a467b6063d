import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from basisrisk import YieldPanel
from basisrisk.panel import FieldMeta

settings.register_profile(
    "repo",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


def random_panel(rng, n, t, level=10.0):
    """Positive panel with a common shock so correlations are not trivial."""
    common = rng.normal(size=t)
    load = rng.uniform(0.2, 1.5, size=n)
    values = level + load[:, None] * common[None, :] + rng.normal(size=(n, t))
    return YieldPanel.from_array(values)


def write_long_csv(path, rows, header="field_id,period,yield"):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for r in rows:
            fh.write(",".join(str(x) for x in r) + "\n")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_panel():
    values = np.array(
        [
            [3.0, 4.0, 2.0, 5.0],
            [2.5, 3.5, 2.5, 4.0],
            [4.0, 4.5, 3.0, 6.0],
        ]
    )
    return YieldPanel.from_array(values, field_ids=["a", "b", "c"], periods=["2016", "2017", "2018", "2019"])


@pytest.fixture
def zoned_panel():
    """Four wards in two sub-counties in one county, with coordinates."""
    rng = np.random.default_rng(7)
    ward_shock = rng.normal(size=(4, 5))
    fields, rows = [], []
    for i in range(24):
        ward = f"w{i % 4}"
        sub = "s0" if ward in ("w0", "w1") else "s1"
        fields.append(FieldMeta(f"f{i:02d}", 36.0 + 0.001 * i, 0.5, "c0", sub, ward))
        rows.append(10 + ward_shock[i % 4] + rng.normal(size=5))
    return YieldPanel(tuple(fields), tuple(f"y{j}" for j in range(5)), np.array(rows))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
