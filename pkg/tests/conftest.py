import time

_SESSION_T0 = time.perf_counter()

SUITE_BUDGET_S = 120.0


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = time.perf_counter() - _SESSION_T0
    verdict = "PASS" if elapsed < SUITE_BUDGET_S else "FAIL"
    terminalreporter.write_line(
        f"ACCEPTANCE {verdict}: whole suite wall time {elapsed:.1f} s "
        f"(budget {SUITE_BUDGET_S:.0f} s)")
