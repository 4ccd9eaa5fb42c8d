"""Matrix-based Renyi entropy of Gram matrices and derived quantities.

For an ``n x n`` Gram matrix ``K`` with unit diagonal, ``K / n`` has unit
trace and its eigenvalues form a probability vector ``lam``.  The entropy of
order ``alpha`` is the Renyi entropy of that vector::

    S_alpha(K) = log(sum(lam ** alpha)) / (1 - alpha)

with the von Neumann (Shannon) limit ``-sum(lam * log(lam))`` at
``alpha = 1``.  All values are in nats and lie in ``[0, log n]``.

Joint entropy uses the Hadamard product of the two Gram matrices (product
kernel); conditional entropy and mutual information follow from it.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import PSDViolationError, RejectedInputError, SolverError
from .kernels import hadamard

DEFAULT_ALPHA = 1.01
LIMIT_WINDOW = 1e-9
PSD_EPS = 1e-10
CONDITIONAL_CLAMP = 1e-9


@dataclass(frozen=True)
class EntropyOrder:
    """Renyi order ``alpha > 0``; ``is_limit`` selects the von Neumann branch."""

    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or alpha <= 0.0:
            raise RejectedInputError(f"entropy order alpha must be positive and finite, got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def is_limit(self):
        return abs(self.alpha - 1.0) < LIMIT_WINDOW

    @classmethod
    def coerce(cls, order):
        if isinstance(order, cls):
            return order
        return cls(order)


def psd_tolerance(n):
    """Largest negative eigenvalue magnitude of ``K / n`` treated as round-off."""
    return PSD_EPS * n


def check_gram(K):
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] < 1:
        raise RejectedInputError(f"Gram matrix must be square and non-empty, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise RejectedInputError("Gram matrix contains NaN or infinite entries")
    if np.max(np.abs(np.diagonal(K) - 1.0)) > 1e-12:
        raise RejectedInputError("Gram matrix must have a unit diagonal")
    if not np.array_equal(K, K.T) and np.max(np.abs(K - K.T)) > 1e-12:
        raise RejectedInputError("Gram matrix must be symmetric")
    return K


def spectrum(K):
    """Eigenvalues of ``K / n`` as a probability vector, sorted descending.

    Uses LAPACK ``dsyev`` (Householder tridiagonalization followed by
    implicit QL/QR).  Negative eigenvalues within :func:`psd_tolerance` are
    clamped to zero, as are eigenvalues below the solver's round-off level
    ``n * eps * max(lam)``; the vector is then renormalized to sum to one.
    """
    return _spectrum(check_gram(K))


def _spectrum(K):
    # K already validated: square, finite, symmetric, unit diagonal
    n = K.shape[0]
    try:
        lam = scipy.linalg.eigh(K / n, eigvals_only=True, driver="ev", check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"symmetric eigensolver did not converge: {exc}") from exc
    tol = psd_tolerance(n)
    low = lam[0]
    if low < -tol:
        raise PSDViolationError(
            f"Gram matrix is not positive semidefinite: eigenvalue {low:.3e} of K/n below -{tol:.1e}"
        )
    # eigenvalues below the solver's backward error are numerically zero; for
    # alpha < 1 their round-off would otherwise be amplified by lam**alpha
    noise = n * np.finfo(np.float64).eps * lam[-1]
    lam[lam <= noise] = 0.0
    lam /= lam.sum()
    return lam[::-1].copy()


def entropy_of_spectrum(lam, order=DEFAULT_ALPHA):
    """Renyi entropy (nats) of a probability vector."""
    order = EntropyOrder.coerce(order)
    lam = np.asarray(lam, dtype=np.float64)
    pos = lam[lam > 0.0]
    if order.is_limit:
        value = -np.sum(pos * np.log(pos))
    else:
        value = np.log(np.sum(pos**order.alpha)) / (1.0 - order.alpha)
    # + 0.0 turns the -0.0 of a rank-one spectrum into 0.0
    return float(value) + 0.0


def matrix_entropy(K, order=DEFAULT_ALPHA):
    """Matrix-based Renyi entropy ``S_alpha(K)`` in nats."""
    return entropy_of_spectrum(spectrum(K), order)


def joint_entropy(K_x, K_y, order=DEFAULT_ALPHA):
    """``S_alpha(K_x o K_y)``, the entropy of the Hadamard product."""
    return matrix_entropy(hadamard(check_gram(K_x), check_gram(K_y)), order)


def trusted_entropy(K, order=DEFAULT_ALPHA):
    """:func:`matrix_entropy` without input validation.

    For hot loops whose Gram matrices are built from already validated ones
    (Hadamard products, permutations).
    """
    return entropy_of_spectrum(_spectrum(K), order)


def conditional_entropy(K_x, K_y, order=DEFAULT_ALPHA):
    """``S_alpha(K_x | K_y) = S_alpha(K_x o K_y) - S_alpha(K_y)``.

    Non-negative in exact arithmetic; round-off below zero (down to ``-1e-9``)
    is clamped to zero.
    """
    value = joint_entropy(K_x, K_y, order) - matrix_entropy(K_y, order)
    if -CONDITIONAL_CLAMP < value < 0.0:
        return 0.0
    return value


def matrix_mutual_information(K_x, K_y, order=DEFAULT_ALPHA):
    """``I_alpha = S_alpha(K_x) + S_alpha(K_y) - S_alpha(K_x o K_y)`` in nats."""
    return matrix_entropy(K_x, order) + matrix_entropy(K_y, order) - joint_entropy(K_x, K_y, order)
