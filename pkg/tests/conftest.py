import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--skip-slow", action="store_true", default=False,
        help="skip the full-size training acceptance runs")


@pytest.fixture(scope="session")
def slow_enabled(request):
    if request.config.getoption("--skip-slow"):
        pytest.skip("full-size training runs disabled with --skip-slow")
    return True


@pytest.fixture(scope="session")
def full_comparison(slow_enabled):
    """The full-size three-arm comparison (seeds 1..5, default config).

    Shared by the acceptance criteria and the solver-health checks; this is
    the dominant cost of the suite.
    """
    import time

    from formulink import harness

    started = time.perf_counter()
    report = harness.run_comparison()
    report.elapsed_seconds = time.perf_counter() - started
    return report


@pytest.fixture(scope="session")
def oracle_bundle(slow_enabled):
    from formulink import ppo

    held = ppo.held_out_instances()
    return {"instances": held, "oracle": ppo.random_search_oracle(held)}
