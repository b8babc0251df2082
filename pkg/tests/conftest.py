import numpy as np
import pytest

from vfirec.signal_io import SampledWaveform, carrier

# criterion -> (status, detail), filled by test_acceptance.py
ACCEPTANCE = {}


def record(criterion, passed, detail="", skipped=False):
    status = "SKIP" if skipped else ("PASS" if passed else "FAIL")
    ACCEPTANCE[criterion] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[crit]
        terminalreporter.write_line(f"criterion {crit}: {status}  {detail}")


def stepped_sine(levels, switch_times, duration, rate=4000.0, u_nominal=230.0, carrier_hz=50.0):
    """Sine whose RMS level is ``levels[k]`` between consecutive switch times."""
    t = np.arange(int(round(duration * rate))) / rate
    idx = np.searchsorted(np.asarray(switch_times), t + 1e-12, side="right")
    u = np.asarray(levels)[idx] * carrier(t, carrier_hz)
    return SampledWaveform(u, rate, u_nominal, carrier_hz)


@pytest.fixture
def sine230():
    t = np.arange(40000) / 20000.0
    return SampledWaveform(230.0 * carrier(t, 50.0), 20000.0, 230.0, 50.0)
