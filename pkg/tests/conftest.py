import pytest

from kfunlab.experiments import EXPERIMENTS, RunConfig, run_experiment


@pytest.fixture(scope="session")
def acceptance_results():
    """Every experiment at its default (acceptance-grade) configuration."""
    config = RunConfig()
    return {eid: run_experiment(eid, config) for eid in EXPERIMENTS}


@pytest.fixture(scope="session")
def jn_oracle_result():
    return run_experiment("jn-thm14", RunConfig(oracle=True))
