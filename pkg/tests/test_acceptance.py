"""End-to-end acceptance checks against the published reference values.

Each criterion prints one pass/fail line per check. Monte-Carlo criteria
share a session-scoped RunCache so expensive runs are simulated once.
"""

import pytest

from photonsync import reproduce


@pytest.fixture(scope="session")
def cache():
    return reproduce.RunCache()


@pytest.mark.parametrize("n", sorted({**reproduce.ANALYTIC_CRITERIA,
                                      **reproduce.MC_CRITERIA}))
def test_criterion(n, cache):
    results = reproduce.run_criteria([n], cache)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    assert not failed, "failed checks:\n" + "\n".join(
        r.line() for r in failed)
