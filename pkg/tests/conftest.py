import re

import numpy as np
import pytest

from bicausal import Params, bge_symmetric_hyper


@pytest.fixture(scope="session")
def symmetric_hyper():
    return bge_symmetric_hyper(3.0, 0.5)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    rows = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", rep.nodeid)
            if m:
                rows.append((int(m.group(1)), label))
    if not rows:
        return
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        CRITERIA = {}
    terminalreporter.write_sep("-", "acceptance criteria")
    for num, label in sorted(rows):
        desc = CRITERIA.get(num, "")
        terminalreporter.write_line(f"{label} criterion {num:2d}: {desc}")


def random_params(rng: np.random.Generator, allow_zero_w: bool = False) -> Params:
    """Moderately-scaled random parameters for property tests."""
    w = rng.uniform(-2.0, 2.0)
    if not allow_zero_w and abs(w) < 0.05:
        w = 0.3 * np.sign(w or 1.0)
    return Params(float(w), float(rng.uniform(0.25, 4.0)), float(rng.uniform(0.25, 4.0)))
