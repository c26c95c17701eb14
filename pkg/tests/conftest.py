import pytest
from hypothesis import HealthCheck, settings

from coherent_portfolio import ScenarioSpace, build_market

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

TEST_MEAN = (0.1, 0.2)
TEST_COV = ((0.04, 0.01), (0.01, 0.09))


@pytest.fixture
def market():
    return build_market(TEST_MEAN, TEST_COV)


@pytest.fixture
def worked_space():
    # two equally likely states; each asset pays 0.2 in one of them
    return ScenarioSpace.equiprobable([[0.0, 0.2], [0.2, 0.0]])


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the lines are repeated in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, title, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
