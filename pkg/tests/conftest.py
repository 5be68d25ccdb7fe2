import numpy as np
import pytest

from aliasnet.tensor_domain import ComplexGrid, Domain


def random_grid(n, m, seed, domain=Domain.IMAGE):
    rng = np.random.default_rng(seed)
    return ComplexGrid(rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m)), domain)


def rel_err(a, b):
    a = a.data if isinstance(a, ComplexGrid) else np.asarray(a)
    b = b.data if isinstance(b, ComplexGrid) else np.asarray(b)
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


@pytest.fixture
def golden_mask():
    from aliasnet.sampling import gen_gaussian_mask

    return gen_gaussian_mask(64, 4, sigma=64 / 6, acs=4, seed=7)
