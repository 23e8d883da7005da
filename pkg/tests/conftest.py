import numpy as np
import pytest

from banditfeedback.core import LogDataset
from banditfeedback.simulator import FINITE, FiniteTypes, SimConfig

# two user types over three items, organic sessions of exactly two views
FINITE_TABLE = FiniteTypes(
    prior=(0.4, 0.6),
    organic=((0.7, 0.2, 0.1), (0.1, 0.3, 0.6)),
    click=((0.05, 0.2, 0.1), (0.3, 0.02, 0.15)),
)


def random_dataset(rng, k, n, max_views=4, min_prop=0.05, force_click=True):
    views = rng.integers(0, max_views + 1, size=(n, k))
    actions = rng.integers(0, k, size=n)
    clicks = rng.integers(0, 2, size=n)
    if force_click:
        clicks[rng.integers(n)] = 1
    props = rng.uniform(min_prop, 1.0, size=n)
    return LogDataset(k, np.arange(n), views, actions, clicks, props)


def central_difference(f, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def relative_error(analytic, numeric, floor=1e-6):
    """Per-coordinate |a - n| / max(|a|, |n|, floor); the floor only guards 0/0."""
    return np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def finite_config():
    return SimConfig(num_items=3, mode=FINITE, finite_types=FINITE_TABLE, session_length=2,
                     bandit_events_per_user=5, seed=7)


# -- acceptance reporting -----------------------------------------------------

_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "PASS" if report.outcome == "passed" else "FAIL"
        _CRITERIA.append((marker.args[0], status, marker.args[1]))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, title in sorted(_CRITERIA):
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
