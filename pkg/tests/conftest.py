import numpy as np
import pytest
from hypothesis import settings

from pbckit.config import build_scenario, load_config
from pbckit.sim import simulate

settings.register_profile("pbckit", deadline=None, max_examples=60)
settings.load_profile("pbckit")

# criterion -> list of (part, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, part: str, passed: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
    print(f"criterion {criterion} [{part}]: {'PASS' if passed else 'FAIL'} {detail}")


class BenchmarkRuns:
    """Bundled scenarios, simulated at most once per session."""

    def __init__(self):
        self._cache = {}

    def scenario(self, name):
        return build_scenario(load_config(name))

    def __getitem__(self, name):
        if name not in self._cache:
            self._cache[name] = simulate(self.scenario(name))
        return self._cache[name]


@pytest.fixture(scope="session")
def runs():
    return BenchmarkRuns()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[criterion]
        ok = all(p for _, p, _ in parts)
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}")
        for part, passed, detail in parts:
            terminalreporter.write_line(f"    {part}: {'pass' if passed else 'FAIL'}  {detail}")
