"""
This config file allows pytest to pass arguments into tests and holds the fixtures shared by the numerics tests
"""

import os

import numpy as np
from pytest import fixture

from esrom.numerics.grid import Grid
from esrom.numerics.physics import Burgers, Euler, ShallowWater

DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config",
                                   "test_config.json")


def pytest_addoption(parser):
    parser.addoption(
        "--config_path",
        action="store",
        default=DEFAULT_CONFIG_PATH
    )


@fixture()
def config_path(request):
    return request.config.getoption("--config_path")


@fixture()
def rng():
    return np.random.default_rng(20240611)


@fixture()
def burgers():
    return Burgers()


@fixture()
def shallow_water():
    return ShallowWater(gravity=3.0)


@fixture()
def euler():
    return Euler(gamma=1.4)


def random_sw_states(rng, size):
    h = rng.uniform(0.5, 2.0, size)
    return np.stack([h, h * rng.uniform(-1.0, 1.0, size)])


def random_euler_states(rng, size):
    rho = rng.uniform(0.2, 2.0, size)
    vel = rng.uniform(-1.0, 1.0, size)
    p = rng.uniform(0.2, 2.0, size)
    return np.stack([rho, rho * vel, p / 0.4 + 0.5 * rho * vel * vel])


def periodic_grid(n_cells, n_vars=1, domain=(0.0, 1.0)):
    return Grid(n_cells, domain, n_vars=n_vars)
