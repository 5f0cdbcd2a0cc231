"""Shared fixtures and the acceptance summary printed after every run."""

from __future__ import annotations

import pytest

from chaincoop.model import MarketParams
from chaincoop.worths import compute_worth_table

_ACCEPTANCE: dict[int, tuple[str, bool]] = {}


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "acceptance(number, title): end-to-end acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item: pytest.Item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    if report.when == "setup" and report.passed:
        return
    ok = report.passed
    prev = _ACCEPTANCE.get(number)
    _ACCEPTANCE[number] = (title, ok if prev is None else prev[1] and ok)


def pytest_terminal_summary(terminalreporter) -> None:
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}")


@pytest.fixture(scope="session")
def symmetric_params() -> MarketParams:
    """Symmetric market with moderate cross-linking and unit costs."""
    return MarketParams(dbar1=10, dbar2=10, eps=0.5, gamma=0.0, cS=1, cM1=1, cM2=1)


@pytest.fixture(scope="session")
def symmetric_table(symmetric_params):
    return compute_worth_table(symmetric_params)


@pytest.fixture(scope="session")
def near_esm():
    """Factory for markets close to the essential and substitutable corner."""

    def make(ratio: float, eps: float = 0.999, gamma: float = 0.9999) -> MarketParams:
        return MarketParams(
            dbar1=10 * ratio, dbar2=10, eps=eps, gamma=gamma, cS=1, cM1=1, cM2=1
        )

    return make
