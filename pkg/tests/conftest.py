import pytest
from fractions import Fraction

CURVED = [Fraction(1), Fraction(-1), Fraction(1, 2), Fraction(-2)]
ALL_K = CURVED + [Fraction(0)]


@pytest.fixture(params=CURVED, ids=lambda k: f"k={k}")
def curved_k(request):
    return request.param
