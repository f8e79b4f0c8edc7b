import pytest

from prodres.geometry import HyperbolicPoint, ProductPoint
from prodres.product import ModelOperator, SyntheticPole


@pytest.fixture
def h3():
    return ModelOperator(2)


@pytest.fixture
def h3_pole():
    return ModelOperator(2, (SyntheticPole(0.5),))


def pp(x1, y1, x2, y2):
    return ProductPoint(HyperbolicPoint(x1, y1), HyperbolicPoint(x2, y2))
