import random

import pytest

from girit.analysis import AnalyzerConfig


@pytest.fixture
def cfg():
    return AnalyzerConfig()


@pytest.fixture
def rng():
    return random.Random(20260808)
