import random
from fractions import Fraction as F

import pytest

from cascade_relu.assembler import CascadeParams
from cascade_relu.controller import ControllerParams
from cascade_relu.refinement import Window, check_window_preservation, tensor_mask, transition_matrices
from cascade_relu.verify import pyramid_seed


def rand_q(rnd, lo=-4, hi=4, max_den=2 ** 12):
    """Uniform-ish rational in [lo, hi] with a random denominator."""
    q = rnd.randint(1, max_den)
    return F(rnd.randint(lo * q, hi * q), q)


@pytest.fixture
def rnd():
    return random.Random(12345)


@pytest.fixture(scope="session")
def hat_mask():
    return tensor_mask([F(1, 2), 1, F(1, 2)])


@pytest.fixture(scope="session")
def window():
    return Window(2, 2)


@pytest.fixture(scope="session")
def tm(hat_mask, window):
    return transition_matrices(hat_mask, window, check_window_preservation(hat_mask, window).require())


@pytest.fixture(scope="session")
def pyramid():
    return pyramid_seed(2, 2)


@pytest.fixture(scope="session")
def params():
    return CascadeParams(F(1, 4), F(1, 8), F(1, 2))


@pytest.fixture(scope="session")
def ctrl_params():
    return ControllerParams(F(1, 4), F(1, 8))


@pytest.fixture(scope="session")
def decomposition(pyramid):
    from cascade_relu.decomposition import decompose
    return decompose(pyramid, F(1, 4))


@pytest.fixture(scope="session")
def atom(decomposition):
    """A special atom supported in the unit square (shift removed)."""
    term = decomposition.terms[0]
    return term.atom


@pytest.fixture(scope="session")
def seed_net_1(pyramid, hat_mask, window, params, decomposition):
    """Compiled realization of V g for the pyramid seed (n = 1)."""
    from cascade_relu.assembler import build_seed_net
    return build_seed_net(pyramid, hat_mask, window, params, 1, decomposition)
