import os

import numpy as np
import pytest

from crsense import LinkParams, NetworkEnv, SensingModel

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def fig2_env():
    return NetworkEnv.constant(p_md=0.3, p_fa=0.2, p_ppd=0.9, p_ssd=0.8)


def tradeoff_env():
    return NetworkEnv(LinkParams(1000, 1.0, 1000, 10.0), LinkParams(1000, 1.0, 1000, 5.0),
                      SensingModel.roc(0.1, 10000, 0.1))


def random_roc_env(rng):
    T = rng.uniform(0.5, 2.0)
    W = rng.uniform(500, 2000)
    b = rng.uniform(0.2, 2.0) * T * W
    return NetworkEnv(
        LinkParams(b, T, W, rng.uniform(2, 30), rng.uniform(0.5, 2)),
        LinkParams(b, T, W, rng.uniform(2, 30), rng.uniform(0.5, 2)),
        SensingModel.roc(rng.uniform(0.01, 0.5), rng.uniform(100, 20000), rng.uniform(0.02, 1.0)),
    )


def random_constant_env(rng):
    return NetworkEnv.constant(p_md=rng.uniform(0.02, 0.9), p_fa=rng.uniform(0.02, 0.9),
                               p_ppd=rng.uniform(0.3, 1.0), p_ssd=rng.uniform(0.3, 1.0))


@pytest.fixture
def fig2():
    return fig2_env()


@pytest.fixture
def tradeoff():
    return tradeoff_env()


@pytest.fixture
def config_dir():
    return os.path.abspath(CONFIG_DIR)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
