import numpy as np
import pytest

from qsqlearn import _pykernels, kernels
from qsqlearn.fourier import BooleanFunction

BACKENDS = [pytest.param(_pykernels, id="python")]
if kernels.BACKEND == "cython":
    from qsqlearn import _ckernels

    BACKENDS.append(pytest.param(_ckernels, id="cython"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def maj3():
    x = np.arange(8)
    ones = (x & 1) + ((x >> 1) & 1) + ((x >> 2) & 1)
    # majority of the bits, as +-1 with bit value 1 mapped to -1
    return BooleanFunction(3, np.where(ones >= 2, -1, 1))


def random_function(rng, n):
    return BooleanFunction(n, rng.choice(np.array([-1, 1], dtype=np.int8), size=1 << n))
