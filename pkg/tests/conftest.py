import numpy as np
import pytest

from orbituse import SYM2, TaxSchedule


@pytest.fixture
def zero_taxes_sym2():
    return TaxSchedule.zeros(SYM2.n_sectors, SYM2.n_markets)


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
