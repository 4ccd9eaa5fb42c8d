"""DiME: difference of matrix-based entropies.

For paired samples ``(X, Y)`` with Gram matrices ``K_x`` and ``K_y``::

    DiME = mean_k S(K_x o P_k K_y P_k^T) - S(K_x o K_y)

where ``P_k`` are random permutations.  Permuting ``K_y`` breaks the pairing
and emulates a sample from the product of marginals, so the statistic
measures how much lower the paired joint entropy is than the joint entropy
of decoupled pairs.  It lower-bounds the matrix-based mutual information and,
unlike it, does not saturate as the kernel bandwidth shrinks, which makes the
bandwidths learnable by maximizing it.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import DEFAULT_ALPHA, EntropyOrder, check_gram, joint_entropy, matrix_entropy, trusted_entropy
from .errors import OptimizerDivergenceError, RejectedInputError
from .kernels import (
    KernelFamily,
    KernelSpec,
    as_data_matrix,
    gram_from_distances,
    gram_matrix,
    kernel_family,
    pairwise_distances,
)
from .seeding import check_seed, derive_rng, derive_seed

DEFAULT_PERMUTATIONS = 5
DEFAULT_LR = 0.01
FD_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class PermutationSet:
    """``count`` permutations of ``range(n)``, reproducible from ``seed``.

    ``permutations`` has shape ``(count, n)``; row ``k`` was drawn from the
    stream derived from ``(seed, k)``.
    """

    n: int
    count: int
    seed: int
    permutations: np.ndarray = field(repr=False)

    def __iter__(self):
        return iter(self.permutations)

    def __len__(self):
        return self.count

    def __eq__(self, other):
        if not isinstance(other, PermutationSet):
            return NotImplemented
        return (self.n, self.count, self.seed) == (other.n, other.count, other.seed) and np.array_equal(
            self.permutations, other.permutations
        )


def sample_permutations(n, p=DEFAULT_PERMUTATIONS, seed=0):
    """Draw ``p`` uniform random permutations of ``range(n)``."""
    if int(n) != n or n < 2:
        raise RejectedInputError(f"permutations need n >= 2 samples, got {n!r}")
    if int(p) != p or p < 1:
        raise RejectedInputError(f"permutation count must be >= 1, got {p!r}")
    seed = check_seed(seed)
    n, p = int(n), int(p)
    perms = np.empty((p, n), dtype=np.intp)
    for k in range(p):
        perms[k] = derive_rng(seed, "permutation", k).permutation(n)
    perms.setflags(write=False)
    return PermutationSet(n=n, count=p, seed=seed, permutations=perms)


def check_permutation(perm, n):
    perm = np.asarray(perm)
    if perm.shape != (n,) or not np.issubdtype(perm.dtype, np.integer):
        raise RejectedInputError(f"permutation must be an integer vector of length {n}")
    if not np.array_equal(np.sort(perm), np.arange(n)):
        raise RejectedInputError("permutation is not a bijection of 0..n-1")
    return perm


def permute_gram(K, perm):
    """``P K P^T`` as an index gather: entry ``(i, j)`` is ``K[perm[i], perm[j]]``."""
    return K[np.ix_(perm, perm)]


def permuted_joint_entropy(K_x, K_y, perm, order=DEFAULT_ALPHA):
    """Joint entropy of ``K_x`` with ``K_y`` reindexed by ``perm``."""
    K_y = np.asarray(K_y, dtype=np.float64)
    perm = check_permutation(perm, K_y.shape[0])
    return joint_entropy(K_x, permute_gram(K_y, perm), order)


@dataclass(frozen=True)
class DimeEstimate:
    value: float
    paired_joint: float
    permuted_joints: tuple
    order: EntropyOrder
    seed: int

    @property
    def count(self):
        return len(self.permuted_joints)


def dime_from_grams(K_x, K_y, order=DEFAULT_ALPHA, perms=None):
    """DiME for precomputed Gram matrices.

    ``perms`` defaults to five permutations drawn with seed 0.
    """
    order = EntropyOrder.coerce(order)
    K_x = np.asarray(K_x, dtype=np.float64)
    K_y = np.asarray(K_y, dtype=np.float64)
    if K_x.shape != K_y.shape:
        raise RejectedInputError(f"Gram matrices differ in size: {K_x.shape} vs {K_y.shape}")
    n = K_x.shape[0]
    if perms is None:
        perms = sample_permutations(n, DEFAULT_PERMUTATIONS, 0)
    if perms.n != n:
        raise RejectedInputError(f"permutation set is for n={perms.n}, data has n={n}")
    check_gram(K_x)
    check_gram(K_y)
    paired = trusted_entropy(K_x * K_y, order)
    permuted = tuple(trusted_entropy(K_x * permute_gram(K_y, perm), order) for perm in perms)
    # average the differences: identical joints then give exactly zero
    value = math.fsum(h - paired for h in permuted) / len(permuted)
    return DimeEstimate(value=value, paired_joint=paired, permuted_joints=permuted, order=order, seed=perms.seed)


def _paired_data(X, Y):
    X = as_data_matrix(X, "X")
    Y = as_data_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise RejectedInputError(f"X and Y must have the same number of rows, got {X.shape[0]} and {Y.shape[0]}")
    if X.shape[0] < 2:
        raise RejectedInputError("DiME needs at least two paired samples")
    return X, Y


def dime(X, Y, specs, order=DEFAULT_ALPHA, perms=None):
    """DiME between paired samples ``X`` and ``Y``.

    Parameters
    ----------
    X, Y : array_like, shape (n, d_x) and (n, d_y)
        Paired samples, one per row.
    specs : tuple of KernelSpec
        Kernels for ``X`` and ``Y``.
    order : float or EntropyOrder
    perms : PermutationSet, optional
        Permutations approximating the expectation; five with seed 0 by
        default.

    Returns
    -------
    DimeEstimate
    """
    X, Y = _paired_data(X, Y)
    spec_x, spec_y = specs
    if perms is None:
        perms = sample_permutations(X.shape[0], DEFAULT_PERMUTATIONS, 0)
    if perms.n != X.shape[0]:
        raise RejectedInputError(f"permutation set is for n={perms.n}, data has n={X.shape[0]}")
    return dime_from_grams(gram_matrix(X, spec_x), gram_matrix(Y, spec_y), order, perms)


@dataclass(frozen=True)
class BandwidthParams:
    """Kernel bandwidths for ``X`` and ``Y``, stored as ``log(sigma)``."""

    log_sigma_x: float
    log_sigma_y: float

    def __post_init__(self):
        for name in ("log_sigma_x", "log_sigma_y"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or math.exp(value) <= 0.0:
                raise RejectedInputError(f"{name} must give a positive finite bandwidth, got {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_sigmas(cls, sigma_x, sigma_y=None):
        if sigma_y is None:
            sigma_y = sigma_x
        for s in (sigma_x, sigma_y):
            if not (s > 0.0 and math.isfinite(s)):
                raise RejectedInputError(f"bandwidth must be positive and finite, got {s!r}")
        return cls(math.log(sigma_x), math.log(sigma_y))

    @property
    def sigma_x(self):
        return math.exp(self.log_sigma_x)

    @property
    def sigma_y(self):
        return math.exp(self.log_sigma_y)


class DistanceCache:
    """Pairwise distances of ``X`` and ``Y``, computed once per dataset."""

    def __init__(self, X, Y, family):
        self.family = kernel_family(family)
        self.dist_x = pairwise_distances(X, self.family)
        self.dist_y = pairwise_distances(Y, self.family)

    def grams(self, log_sigma_x, log_sigma_y):
        K_x = gram_from_distances(self.dist_x, KernelSpec(self.family, math.exp(log_sigma_x)))
        K_y = gram_from_distances(self.dist_y, KernelSpec(self.family, math.exp(log_sigma_y)))
        return K_x, K_y

    def value(self, log_sigma_x, log_sigma_y, order, perms):
        return dime_from_grams(*self.grams(log_sigma_x, log_sigma_y), order, perms).value


def _gradient(cache, params, order, perms, step):
    a, b = params.log_sigma_x, params.log_sigma_y
    # same permutations at every evaluation: differences carry no permutation noise
    gx = (cache.value(a + step, b, order, perms) - cache.value(a - step, b, order, perms)) / (2.0 * step)
    gy = (cache.value(a, b + step, order, perms) - cache.value(a, b - step, order, perms)) / (2.0 * step)
    return gx, gy


def dime_gradient(X, Y, params, order=DEFAULT_ALPHA, perms=None, family=KernelFamily.GAUSSIAN, step=FD_STEP):
    """Central finite-difference gradient of DiME w.r.t. ``(log sigma_x, log sigma_y)``."""
    X, Y = _paired_data(X, Y)
    order = EntropyOrder.coerce(order)
    if not (step > 0.0 and math.isfinite(step)):
        raise RejectedInputError(f"finite-difference step must be positive, got {step!r}")
    if perms is None:
        perms = sample_permutations(X.shape[0], DEFAULT_PERMUTATIONS, 0)
    return _gradient(DistanceCache(X, Y, family), params, order, perms, step)


class Adam:
    """Adam on a small parameter vector, used for gradient *ascent*."""

    def __init__(self, lr=DEFAULT_LR, beta1=0.9, beta2=0.999, eps=1e-8):
        if not (lr >= 0.0 and math.isfinite(lr)):
            raise RejectedInputError(f"learning rate must be non-negative and finite, got {lr!r}")
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = None
        self.v = None
        self.t = 0

    def ascend(self, theta, grad):
        theta = np.asarray(theta, dtype=np.float64)
        grad = np.asarray(grad, dtype=np.float64)
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return theta + self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def optimize_bandwidth(
    X,
    Y,
    init,
    order=DEFAULT_ALPHA,
    perms=None,
    steps=200,
    lr=DEFAULT_LR,
    family=KernelFamily.GAUSSIAN,
    tie=False,
    step=FD_STEP,
    on_step=None,
):
    """Maximize DiME over the two kernel bandwidths with Adam in log space.

    Each optimizer step draws a fresh permutation set (same size as
    ``perms``) from the stream ``(perms.seed, "optimize", step)`` and uses it
    for both the reported value and the finite-difference gradient.  With
    ``tie=True`` a single shared bandwidth is optimized.  ``on_step``, if
    given, is called as ``on_step(k, value, params)`` with the bandwidths the
    value was computed at, before they are updated.

    Returns
    -------
    params : BandwidthParams
        Bandwidths after the last step.
    trace : ndarray, shape (steps,)
        DiME value at the start of every step.
    """
    X, Y = _paired_data(X, Y)
    order = EntropyOrder.coerce(order)
    if int(steps) != steps or steps < 1:
        raise RejectedInputError(f"steps must be an integer >= 1, got {steps!r}")
    if not (lr >= 0.0 and math.isfinite(lr)):
        raise RejectedInputError(f"learning rate must be non-negative and finite, got {lr!r}")
    n = X.shape[0]
    if perms is None:
        perms = sample_permutations(n, DEFAULT_PERMUTATIONS, 0)
    cache = DistanceCache(X, Y, family)
    params = init
    if tie:
        params = BandwidthParams(init.log_sigma_x, init.log_sigma_x)
    adam = Adam(lr)
    trace = np.empty(int(steps))
    for k in range(int(steps)):
        step_perms = sample_permutations(n, perms.count, derive_seed(perms.seed, "optimize", k))
        trace[k] = cache.value(params.log_sigma_x, params.log_sigma_y, order, step_perms)
        if on_step is not None:
            on_step(k, float(trace[k]), params)
        params = bandwidth_step(cache, params, adam, order, step_perms, tie, step, k)
    return params, trace


def bandwidth_step(cache, params, adam, order, perms, tie, step, index):
    """One Adam ascent step on DiME; raises on a non-finite gradient."""
    gx, gy = _gradient(cache, params, order, perms, step)
    if not (math.isfinite(gx) and math.isfinite(gy)):
        raise OptimizerDivergenceError(f"non-finite DiME gradient at step {index}", iteration=index)
    if tie:
        (shared,) = adam.ascend([params.log_sigma_x], [gx + gy])
        new = (shared, shared)
    else:
        new = adam.ascend([params.log_sigma_x, params.log_sigma_y], [gx, gy])
    if not np.all(np.isfinite(new)):
        raise OptimizerDivergenceError(f"non-finite bandwidth after step {index}", iteration=index)
    return BandwidthParams(float(new[0]), float(new[1]))


def independence_test(X, Y, specs, order=DEFAULT_ALPHA, trials=99, seed=0):
    """Permutation test of independence based on joint entropies.

    Dependence lowers the paired joint entropy below that of permuted
    surrogates.  The p-value is the add-one smoothed fraction of surrogates
    whose joint entropy does not exceed the paired one::

        p = (1 + #{k : S(K_x o K_y) >= S(K_x o P_k K_y P_k^T)}) / (trials + 1)
    """
    X, Y = _paired_data(X, Y)
    if X.shape[0] < 3:
        # two samples admit only two orderings; the permutation null is degenerate
        raise RejectedInputError("independence test needs at least three paired samples")
    if int(trials) != trials or trials < 20:
        raise RejectedInputError(f"independence test needs trials >= 20, got {trials!r}")
    order = EntropyOrder.coerce(order)
    spec_x, spec_y = specs
    K_x = gram_matrix(X, spec_x)
    K_y = gram_matrix(Y, spec_y)
    perms = sample_permutations(X.shape[0], int(trials), derive_seed(seed, "independence-test"))
    paired = joint_entropy(K_x, K_y, order)
    hits = sum(1 for perm in perms if paired >= trusted_entropy(K_x * permute_gram(K_y, perm), order))
    return (1 + hits) / (int(trials) + 1)


def matrix_mi_from_grams(K_x, K_y, order=DEFAULT_ALPHA, paired_joint=None):
    """Matrix-based MI, optionally reusing an already computed joint entropy."""
    if paired_joint is None:
        paired_joint = joint_entropy(K_x, K_y, order)
    return matrix_entropy(K_x, order) + matrix_entropy(K_y, order) - paired_joint
