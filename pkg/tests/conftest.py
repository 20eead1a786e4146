import pytest

# test_acceptance.py records one entry per criterion; printed after the run
# so the pass/fail ledger survives pytest's output capture.
ACCEPTANCE_RESULTS: dict = {}


def record_criterion(name: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[name] = (bool(ok), detail)


@pytest.hookimpl
def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in ACCEPTANCE_RESULTS.items():
        mark = "PASS" if ok else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        terminalreporter.write_line(f"{mark}  {name}{suffix}")
