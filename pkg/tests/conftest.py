import time

import pytest

from leducmind.cfr import nash_conv, train

CHECKPOINTS = (100, 1_000, 10_000, 100_000)


class TrainedCFR:
    def __init__(self, profile, nash_convs, seconds):
        self.profile = profile
        self.nash_convs = nash_convs
        self.seconds = seconds


@pytest.fixture(scope="session")
def cfr_100k():
    """One 10^5-iteration run shared by every test that needs a strong baseline."""
    convs = {}
    start = time.perf_counter()
    profile = train(CHECKPOINTS[-1], checkpoints=CHECKPOINTS,
                    on_checkpoint=lambda n, p: convs.__setitem__(n, nash_conv(p)))
    return TrainedCFR(profile, convs, time.perf_counter() - start)


# --- acceptance verdicts ----------------------------------------------------------

ACCEPTANCE_CRITERIA = range(1, 11)
_verdicts: dict[int, str] = {}
_details: dict[int, list[str]] = {}
_RANK = {"PASS": 0, "SKIP": 1, "FAIL": 2}


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    if report.when == "call":
        _details[crit] = [line.split("] ", 1)[1] for line in report.capstdout.splitlines()
                          if line.startswith("[criterion")]
    if report.failed:
        verdict = "FAIL"
    elif report.skipped:
        verdict = "SKIP"
    elif report.when == "call":
        verdict = "PASS"
    else:
        return
    # A criterion takes the worst verdict of its tests.
    _verdicts[crit] = max(_verdicts.get(crit, verdict), verdict, key=_RANK.__getitem__)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for crit in ACCEPTANCE_CRITERIA:
        if crit in _verdicts:
            terminalreporter.write_line(f"criterion {crit}: {_verdicts[crit]}")
            for detail in _details.get(crit, []):
                terminalreporter.write_line(f"    {detail}")
