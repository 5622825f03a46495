import pytest

from hocl.config import resolve_scenario
from hocl.scenarios import run_scenario


@pytest.fixture(scope="session")
def fig2_run():
    cfg = resolve_scenario("fig2")
    return cfg, run_scenario(cfg)


@pytest.fixture(scope="session")
def fig3_run():
    cfg = resolve_scenario("fig3")
    return cfg, run_scenario(cfg)


@pytest.fixture(scope="session")
def fig4_run():
    cfg = resolve_scenario("fig4")
    return cfg, run_scenario(cfg)
