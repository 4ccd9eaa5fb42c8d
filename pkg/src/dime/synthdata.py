"""Correlated Gaussian pairs with known mutual information.

``X`` and ``Y`` are ``d``-dimensional standard normals whose coordinates are
independent across ``j`` and correlated with coefficient ``rho`` within each
pair ``(X_j, Y_j)``.  The Shannon mutual information is then
``-(d / 2) * log(1 - rho^2)`` nats.
"""

import math
from dataclasses import dataclass

from .errors import RejectedInputError
from .seeding import check_seed, derive_rng

@dataclass(frozen=True)
class GaussianPairConfig:
    d: int
    rho: float
    n: int
    seed: int = 0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise RejectedInputError(f"dimensionality d must be a positive integer, got {self.d!r}")
        if int(self.n) != self.n or self.n < 2:
            raise RejectedInputError(f"sample count n must be an integer >= 2, got {self.n!r}")
        rho = float(self.rho)
        if not (0.0 <= rho < 1.0):
            raise RejectedInputError(f"correlation rho must lie in [0, 1), got {self.rho!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "seed", check_seed(self.seed))

def sample_correlated_gaussian(cfg):
    """Draw ``(X, Y)``, each of shape ``(n, d)``, for ``cfg``."""
    rng = derive_rng(cfg.seed, "correlated-gaussian")
    z1 = rng.standard_normal((cfg.n, cfg.d))
    z2 = rng.standard_normal((cfg.n, cfg.d))
    Y = cfg.rho * z1 + math.sqrt(1.0 - cfg.rho * cfg.rho) * z2
    return z1, Y

def true_mi(d, rho):
    """Shannon MI in nats of the correlated Gaussian pair."""
    rho = float(rho)
    if not (0.0 <= rho < 1.0):
        raise RejectedInputError(f"correlation rho must lie in [0, 1), got {rho!r}")
    if d < 1:
        raise RejectedInputError(f"dimensionality d must be positive, got {d!r}")
    # (1 - rho)(1 + rho) keeps 1 - rho^2 accurate near rho = 1
    return -0.5 * d * math.log1p(-rho) - 0.5 * d * math.log1p(rho)

def rho_for_mi(d, target_mi):
    """Per-coordinate correlation giving ``target_mi`` nats at dimension ``d``."""
    target_mi = float(target_mi)
    if not math.isfinite(target_mi) or target_mi < 0.0:
        raise RejectedInputError(f"target MI must be a non-negative finite number, got {target_mi!r}")
    if d < 1:
        raise RejectedInputError(f"dimensionality d must be positive, got {d!r}")
    return math.sqrt(-math.expm1(-2.0 * target_mi / d))
