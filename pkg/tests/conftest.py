import numpy as np
import pytest

from exosuit.emg_pipeline import EmgTrace
from exosuit.fileio import write_emg

# filled by test_acceptance.py, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def emg_subject(tmp_path):
    """Write a synthetic subject whose with-exosuit activity is reduced by ``pct``."""
    def make(name, pct, seed, fs=2000.0, seconds=3.0):
        rng = np.random.default_rng(seed)
        n = int(seconds * fs)
        burst = rng.normal(size=n) * np.hanning(n)
        marks = [(0, n // 2), (n // 2, n)]
        without = tmp_path / f"{name}_without.csv"
        with_ = tmp_path / f"{name}_with.csv"
        write_emg(without, EmgTrace(fs, burst, "without_exosuit", marks))
        write_emg(with_, EmgTrace(fs, (1 - pct / 100) * burst, "with_exosuit", marks))
        return str(without), str(with_)
    return make
