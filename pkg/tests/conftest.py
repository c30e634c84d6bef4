import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("dev", deadline=None, max_examples=20)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from secgame import builtin_case_study, generate_states  # noqa: E402
from secgame.casestudy import COMPROMISED  # noqa: E402

# (number, title, passed, detail) for every acceptance criterion that ran
ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


@pytest.fixture(scope="session")
def case_study():
    return builtin_case_study()


@pytest.fixture(scope="session")
def case_graph(case_study):
    return generate_states(case_study, COMPROMISED)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
