"""Normalized kernels and Gram matrices.

Every supported kernel satisfies ``k(x, x) = 1`` and takes values in
``[0, 1]``:

================  =============================================
family            k(x, y)
================  =============================================
gaussian          ``exp(-||x - y||_2^2 / (2 sigma^2))``
factorized        ``exp(-||x - y||_1 / (sqrt(2) sigma))``
elliptical        ``exp(-||x - y||_2 / (sqrt(2) sigma))``
================  =============================================

Gram matrices are plain ``float64`` ndarrays.  They are built from the upper
triangle of pairwise distances and mirrored, so they are exactly symmetric,
and their diagonal is set to exactly one.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import RejectedInputError

MIN_BANDWIDTH = 1e-300


class KernelFamily(str, Enum):
    GAUSSIAN = "gaussian"
    FACTORIZED_LAPLACIAN = "factorized-laplacian"
    ELLIPTICAL_LAPLACIAN = "elliptical-laplacian"


def kernel_family(value):
    """``value`` as a :class:`KernelFamily`, rejecting unknown names."""
    try:
        return KernelFamily(value)
    except ValueError:
        names = ", ".join(f.value for f in KernelFamily)
        raise RejectedInputError(f"unknown kernel family {value!r}; expected one of {names}") from None


# scipy metric used for each family's distance
_METRIC = {
    KernelFamily.GAUSSIAN: "sqeuclidean",
    KernelFamily.FACTORIZED_LAPLACIAN: "cityblock",
    KernelFamily.ELLIPTICAL_LAPLACIAN: "euclidean",
}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus bandwidth ``sigma``."""

    family: KernelFamily = KernelFamily.GAUSSIAN
    bandwidth: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", kernel_family(self.family))
        sigma = float(self.bandwidth)
        if not math.isfinite(sigma) or sigma < MIN_BANDWIDTH:
            raise RejectedInputError(f"kernel bandwidth must be positive and finite, got {sigma!r}")
        object.__setattr__(self, "bandwidth", sigma)

    @classmethod
    def gaussian(cls, sigma):
        return cls(KernelFamily.GAUSSIAN, sigma)

    def with_bandwidth(self, sigma):
        return KernelSpec(self.family, sigma)


def as_data_matrix(data, name="data"):
    """Validate and return ``data`` as an ``(n, d)`` float64 array.

    A 1-D input is read as ``n`` one-dimensional samples.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise RejectedInputError(f"{name} must be a 2-D array (samples x features), got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise RejectedInputError(f"{name} must have at least one row and one column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise RejectedInputError(f"{name} contains NaN or infinite entries")
    return arr


def _transform(dist, spec):
    sigma = spec.bandwidth
    if spec.family is KernelFamily.GAUSSIAN:
        return np.exp(-dist / (2.0 * sigma * sigma))
    return np.exp(-dist / (math.sqrt(2.0) * sigma))


def evaluate_kernel(spec, x, y):
    """Kernel value between two vectors."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise RejectedInputError(f"kernel arguments must be vectors of equal length, got {x.shape} and {y.shape}")
    diff = x - y
    if spec.family is KernelFamily.GAUSSIAN:
        dist = float(diff @ diff)
    elif spec.family is KernelFamily.FACTORIZED_LAPLACIAN:
        dist = float(np.sum(np.abs(diff)))
    else:
        dist = math.sqrt(float(diff @ diff))
    return float(_transform(np.float64(dist), spec))


def pairwise_distances(data, family=KernelFamily.GAUSSIAN):
    """Square matrix of the distance each kernel family exponentiates.

    Squared Euclidean for the Gaussian kernel, L1 for the factorized Laplacian
    and Euclidean for the elliptical Laplacian.  Reusing this matrix across
    bandwidths avoids recomputing distances during sweeps and finite
    differences.
    """
    data = as_data_matrix(data)
    family = kernel_family(family)
    if data.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(data, metric=_METRIC[family]))


def gram_from_distances(dist, spec):
    """Gram matrix for ``spec`` from a precomputed distance matrix."""
    K = _transform(dist, spec)
    np.fill_diagonal(K, 1.0)
    return K


def gram_matrix(data, spec):
    """Gram matrix ``K[i, j] = k(x_i, x_j)`` of the rows of ``data``."""
    return gram_from_distances(pairwise_distances(data, spec.family), spec)


def entrywise_power(K, gamma):
    """Entrywise power ``K ** gamma``.

    For a Gaussian Gram matrix this equals the Gram matrix at bandwidth
    ``sigma / sqrt(gamma)``.
    """
    gamma = float(gamma)
    if not math.isfinite(gamma) or gamma <= 0.0:
        raise RejectedInputError(f"entrywise power exponent must be positive and finite, got {gamma!r}")
    K = np.asarray(K, dtype=np.float64)
    if np.any(K < 0.0):
        raise RejectedInputError("entrywise power requires non-negative entries")
    return np.power(K, gamma)


def hadamard(A, B):
    """Entrywise product of two Gram matrices of equal size."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise RejectedInputError(f"Hadamard product needs equal shapes, got {A.shape} and {B.shape}")
    return A * B
