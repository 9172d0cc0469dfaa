import math

import numpy as np
import pytest

from smtjcouple.analog import PipelineConfig
from smtjcouple.analog import delta_current
from smtjcouple.device import SmtjParams, preset


@pytest.fixture
def smtj1():
    return preset("smtj1")


@pytest.fixture
def toy_device():
    """Round-number device used where exact values are convenient."""
    return SmtjParams.from_balance(
        tau_balance=1e-4, slope_b=4e5, i_balance=1e-3, r_p=1000.0, r_ap=2200.0, i_breakdown=1.1e-3
    )


def gain_for_g(device, g):
    """Circuit gain that gives dwell multiplier ``g`` on the default pipeline."""
    per_gain = delta_current(PipelineConfig.for_target(0.1)) / 0.1
    return math.log(g) / (device.slope_b * per_gain)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record and print one pass/fail line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, title, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
