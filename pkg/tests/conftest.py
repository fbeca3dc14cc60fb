import numpy as np
import pytest

from src.speccoc.sadic import DirectiveSequence
from src.speccoc.substitution_core import FIBONACCI, THREE_LETTER, THUE_MORSE

GOLDEN = (1 + 5 ** 0.5) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fib():
    return DirectiveSequence.periodic([FIBONACCI])


@pytest.fixture
def thue_morse():
    return DirectiveSequence.periodic([THUE_MORSE])


@pytest.fixture
def three_letter():
    return DirectiveSequence.periodic([THREE_LETTER])
