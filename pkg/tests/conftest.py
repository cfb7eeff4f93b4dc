import os

import numpy as np
import pytest

from measures.measure_1d import atomic, dirac
from shifts.tc_class import simple_tuple


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def subnormal_tuple():
    """Row 0 = (0.6, 1, 1, ...), column 0 = (0.8, 1, 1, ...), a = 0.7"""
    return simple_tuple(0.6, 0.8, 0.7)


@pytest.fixture
def non_subnormal_tuple():
    return simple_tuple(0.3, 0.99, 0.1)


@pytest.fixture
def two_atom():
    """1/2 delta_{1/4} + 1/2 delta_1"""
    return atomic([(0.25, 0.5), (1.0, 0.5)])


@pytest.fixture
def s_a_measure():
    """Berger measure of shift(0.7, 1, 1, ...)"""
    return atomic([(0.0, 0.51), (1.0, 0.49)])


@pytest.fixture
def point_mass():
    return dirac(1.0)


@pytest.fixture
def data_dir():
    return os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")
