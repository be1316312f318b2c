import numpy as np
import pytest

from phaseiso import NormSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def space_zoo():
    """One representative per supported norm family."""
    return [
        NormSpec.lp(4, 1),
        NormSpec.lp(4, 1.5),
        NormSpec.lp(4, 2),
        NormSpec.lp(4, 3),
        NormSpec.lp(4, float("inf")),
        NormSpec.weighted_lp(3, 1, [1.0, 2.0, 0.5]),
        NormSpec.weighted_lp(3, 2.5, [1.0, 2.0, 0.5]),
        NormSpec.weighted_lp(3, float("inf"), [1.0, 2.0, 0.5]),
        NormSpec.polyhedral(3, [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]]),
    ]


def zoo_ids():
    return ["l1", "l1.5", "l2", "l3", "linf", "w-l1", "w-l2.5", "w-linf", "poly"]
