import numpy as np
import pytest

from vbessel.coeff import get_field
from vbessel.parametrix import SeriesControl, assemble_fs


@pytest.fixture(scope="session")
def fast_ctrl():
    """Series control for tests: looser term tolerance, same shape.

    The default control is unchanged in the library; tests trade a few
    digits of series tail for build speed where the property under test
    does not depend on the tail.
    """
    return SeriesControl(max_terms=20, term_tol=1e-4)


@pytest.fixture(scope="session")
def fs_sin(fast_ctrl):
    return assemble_fs(get_field("SIN_TX"), ctrl=fast_ctrl)


@pytest.fixture(scope="session")
def fs_bump(fast_ctrl):
    return assemble_fs(get_field("SPACE_BUMP"), ctrl=fast_ctrl)


@pytest.fixture(scope="session")
def fs_ramp(fast_ctrl):
    return assemble_fs(get_field("TIME_RAMP"), ctrl=fast_ctrl)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260822)
