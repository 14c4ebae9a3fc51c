import pytest

from routeiq import synth

# Acceptance tests register one (name, passed, detail) row each; the summary
# hook prints them after the run so the lines survive output capture.
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, passed: bool, detail: str) -> None:
    line = f"[acceptance] {name}: {'PASS' if passed else 'FAIL'} ({detail})"
    print(line)
    ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(
            f"[acceptance] {name}: {'PASS' if passed else 'FAIL'} ({detail})")


@pytest.fixture(scope="session")
def small_world():
    return synth.generate_world(6, 80, 8, seed=3)


@pytest.fixture(scope="session")
def small_matrix(small_world):
    return synth.sample_matrix(small_world)
