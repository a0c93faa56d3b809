import numpy as np
import pytest

from ptdiff.families import FixedTimeFamily, LinearFamily
from ptdiff.redesign import RedesignParams


@pytest.fixture
def example1():
    """Worked first-order example: alpha=3, T_c=T_f=1, beta=2*beta_min."""
    fam = FixedTimeFamily(1, 1.0, 1.0)
    p = RedesignParams.build(1, 3.0, 1.0, 1.0, 1.0, terminal_gains=(1.5, 1.1), family=fam)
    return p, fam


@pytest.fixture
def linear1():
    fam = LinearFamily.default(1, r=5.0)
    p = RedesignParams.build(1, 3.0, 1.0, fam.T_f, 1.0, family=fam)
    return p, fam


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
