import hypothesis
import pytest

hypothesis.settings.register_profile(
    "toolkit",
    deadline=None,  # numeric tests under CI load blow fixed deadlines
    max_examples=50,
)
hypothesis.settings.load_profile("toolkit")


# Acceptance results land here so the terminal summary can print one
# pass/fail line per criterion regardless of where pytest's own output went.
ACCEPTANCE_RESULTS = {}
ACCEPTANCE_IDS = range(1, 10)


@pytest.fixture
def criterion():
    """Recorder for acceptance checks: record(number, text, ok) asserts ok."""

    def record(number, text, ok):
        ACCEPTANCE_RESULTS[int(number)] = (text, bool(ok))
        assert ok, f"criterion {number}: {text}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in ACCEPTANCE_IDS:
        if number in ACCEPTANCE_RESULTS:
            text, ok = ACCEPTANCE_RESULTS[number]
            status = "PASS" if ok else "FAIL"
            terminalreporter.write_line(f"criterion {number}: {status} - {text}")
        else:
            terminalreporter.write_line(
                f"criterion {number}: NO RESULT (test errored or was deselected)"
            )
