import functools

import pytest
from hypothesis import settings

from chddp.pipeline import run_chddp
from chddp.world import BUNDLED, load_bundled

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def bundled_run(name):
    """Full two-stage run on a bundled world, shared across test modules."""
    world = load_bundled(name)
    return world, run_chddp(world)


@pytest.fixture(scope="session", params=BUNDLED)
def world_run(request):
    return bundled_run(request.param)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
