import random

import pytest

from sede.curve import SECP256K1, TOY


@pytest.fixture
def toy():
    return TOY


@pytest.fixture
def prod():
    return SECP256K1


@pytest.fixture
def rnd():
    """Test-local sampling; seeded so failures reproduce."""
    return random.Random(20260810)
