import numpy as np
import pytest

from evomarket.market import MarketParams


@pytest.fixture
def params():
    return MarketParams(market_potential=1e6, upper_share=0.05, mean_income=3e4,
                        natural_price=1.0, demand_width=0.5, repurchase_rate=0.2, epsilon=0.01)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        ok, line = RESULTS[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d} {line}")
