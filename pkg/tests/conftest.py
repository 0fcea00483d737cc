import hypothesis
import numpy as np
import pytest

import nslmm as n

hypothesis.settings.register_profile(
    "numeric", max_examples=60, deadline=None)
hypothesis.settings.load_profile("numeric")


@pytest.fixture(scope="session")
def logistic2():
    return n.logistic_problem(2.0)


@pytest.fixture(scope="session")
def logistic500():
    return n.logistic_problem(500.0)


@pytest.fixture(scope="session")
def seir0():
    return n.seir_problem(0.0)


@pytest.fixture(scope="session")
def seir_y0():
    return np.array([0.8, 0.0, 0.2, 0.0])


#: matching-order transform for each design order, as used throughout
ORDER_MATCHED_PHI = {
    2: n.PhiKind.PHI5,
    3: n.PhiKind.PHI7,
    4: n.PhiKind.PHI8,
}
