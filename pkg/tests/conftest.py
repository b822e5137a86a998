import numpy as np
import pytest

from sscae.rng import Rng


def rel_err(a, b, floor=1e-12):
    """Norm-based relative difference; the comparator for all gradient checks."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    denom = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / denom)


def fd_grad(f, x, step=1e-5):
    """Central finite differences of scalar f at array x (fp64 oracle)."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = f(x)
        flat[i] = orig - step
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * step)
    return grad


@pytest.fixture
def rng():
    return Rng(20240601)
