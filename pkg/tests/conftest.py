import random

import pytest

import synth


@pytest.fixture
def employment():
    return synth.employment_sample()


@pytest.fixture
def employment_keyword():
    return synth.employment_keyword_classifier()


@pytest.fixture
def employment_linear():
    return synth.employment_linear_classifier()


@pytest.fixture
def rng():
    return random.Random(20240811)
