import math

import numpy as np
import pytest

from dime.kernels import KernelSpec, gram_matrix


def random_gram(rng, n=None, d=None, sigma=None):
    """Gaussian Gram matrix of random data with random size and bandwidth."""
    n = n or int(rng.integers(3, 40))
    d = d or int(rng.integers(1, 6))
    sigma = sigma or float(math.exp(rng.uniform(-1.0, 1.5)))
    data = rng.standard_normal((n, d)) * rng.uniform(0.5, 2.0)
    return gram_matrix(data, KernelSpec.gaussian(sigma))


def jacobi_eigenvalues(A, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigenvalues of a symmetric matrix; a slow, independent oracle."""
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    for _ in range(max_sweeps):
        off = math.sqrt(np.sum(A**2) - np.sum(np.diag(A) ** 2))
        if off < tol * max(1.0, np.linalg.norm(A)):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))[::-1]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
