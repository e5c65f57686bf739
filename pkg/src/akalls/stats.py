"""Closed-form confidence quantities used by the sequential label-inference loop.

Everything here is a pure function of its arguments.  The admissible domain
for every confidence parameter is 0 < delta < 1/e, so that log log(1/delta)
is nonnegative; out-of-range values raise instead of being clamped.
"""

import math
from dataclasses import dataclass, field

__all__ = [
    "DELTA_CAP",
    "GridSpec",
    "StatParams",
    "build_grids",
    "confidence_radius",
    "margin_threshold",
    "phi",
    "sample_bound",
    "sample_bound_real",
]

# Largest admissible confidence parameter: strictly below 1/e.
DELTA_CAP = math.exp(-1.0) - 1e-9


def _check_delta(delta: float) -> None:
    if not (0.0 < delta < math.exp(-1.0)):
        raise ValueError(f"delta must lie in (0, 1/e); got {delta!r}")


@dataclass(frozen=True)
class StatParams:
    """Constants of the per-point sample-size bound.

    ``c_theory`` is the bound's theoretical constant (at least 7e6); the
    multiplier ``c_scale`` shrinks it to a desk-scale effective constant.
    The default gives c_eff ~ 10; set ``c_scale=1.0`` for the theoretical
    regime (formula-correct, but per-point caps in the billions).
    """

    c_theory: float = 7.0e6
    c_scale: float = 1.43e-6
    delta_cap: float = DELTA_CAP

    def __post_init__(self):
        if self.c_theory < 7.0e6:
            raise ValueError(f"c_theory must be >= 7e6; got {self.c_theory!r}")
        if self.c_scale <= 0.0:
            raise ValueError(f"c_scale must be positive; got {self.c_scale!r}")

    @property
    def c_eff(self) -> float:
        """Effective constant actually used by the sample-size bound."""
        return self.c_theory * self.c_scale


def confidence_radius(delta: float, k: int) -> float:
    """Anytime confidence radius for the mean of k requested labels.

    b = sqrt((2/k) * (log(1/delta) + log log(1/delta) + log log(e*k))).

    Valid uniformly over k, so the sequential loop may test it after every
    request.  At k=1 the last term vanishes exactly.
    """
    _check_delta(delta)
    if k < 1:
        raise ValueError(f"k must be a positive integer; got {k!r}")
    u = math.log(1.0 / delta)
    return math.sqrt((2.0 / k) * (u + math.log(u) + math.log(math.log(math.e * k))))


def sample_bound_real(params: StatParams, delta: float, margin: float) -> float:
    """Real-valued sample-size bound before rounding, see ``sample_bound``."""
    _check_delta(delta)
    if not (0.0 < margin <= 1.0):
        raise ValueError(f"margin must lie in (0, 1]; got {margin!r}")
    u = math.log(1.0 / delta)
    inner = math.log(512.0 * math.sqrt(math.e) / margin)
    return (params.c_eff / margin**2) * (u + math.log(u) + math.log(inner))


def sample_bound(params: StatParams, delta: float, margin: float) -> int:
    """Number of neighbor-label requests sufficient to certify a margin.

    k = ceil((c_eff/margin^2) * (log(1/delta) + log log(1/delta)
                                 + log log(512*sqrt(e)/margin))).

    Decreasing in the margin; at the theoretical constant this is ~3.7e9
    for delta=0.1, margin=0.1, which is why experiments run with a scaled
    ``c_eff``.
    """
    return math.ceil(sample_bound_real(params, delta, margin))


def margin_threshold(epsilon: float, beta: float, C: float) -> float:
    """Smallest margin worth certifying for accuracy ``epsilon`` at noise (beta, C).

    max(epsilon/2, (epsilon/(2C))^(1/(beta+1))); lies in (0, 1] for
    epsilon in (0, 1/2), beta > 0, C >= 1.
    """
    if not (0.0 < epsilon < 0.5):
        raise ValueError(f"epsilon must lie in (0, 1/2); got {epsilon!r}")
    if beta <= 0.0:
        raise ValueError(f"beta must be positive; got {beta!r}")
    if C < 1.0:
        raise ValueError(f"C must be >= 1; got {C!r}")
    return max(epsilon / 2.0, (epsilon / (2.0 * C)) ** (1.0 / (beta + 1.0)))


def phi(n: int, delta: float) -> float:
    """Deviation scale sqrt((1/n)(log(1/delta) + log log(1/delta))).

    Housed for completeness; no algorithm in this package consumes it.
    """
    _check_delta(delta)
    if n < 1:
        raise ValueError(f"n must be a positive integer; got {n!r}")
    u = math.log(1.0 / delta)
    return math.sqrt((u + math.log(u)) / n)


@dataclass(frozen=True)
class GridSpec:
    """Smoothness and noise grids derived from the accuracy parameter.

    alphas halve from 1 down over ceil(log2(1/epsilon)) levels; betas rise
    linearly as i/log^2(1/epsilon) for i up to ceil(log^3(1/epsilon)); each
    beta maps to its margin threshold.  Unsubscripted logs are natural.
    """

    epsilon: float
    C: float
    alphas: tuple = field(default=())
    betas: tuple = field(default=())
    margins: tuple = field(default=())

    @property
    def n_levels(self) -> int:
        return len(self.alphas)


def build_grids(epsilon: float, C: float) -> GridSpec:
    """Build the level and noise grids for accuracy ``epsilon`` and constant ``C``."""
    if not (0.0 < epsilon < 0.5):
        raise ValueError(f"epsilon must lie in (0, 1/2); got {epsilon!r}")
    if C < 1.0:
        raise ValueError(f"C must be >= 1; got {C!r}")
    log_inv = math.log(1.0 / epsilon)
    n_levels = math.ceil(math.log2(1.0 / epsilon))
    n_betas = math.ceil(log_inv**3)
    alphas = tuple(2.0 ** (1 - i) for i in range(1, n_levels + 1))
    betas = tuple(i / log_inv**2 for i in range(1, n_betas + 1))
    margins = tuple(margin_threshold(epsilon, b, C) for b in betas)
    return GridSpec(epsilon=epsilon, C=C, alphas=alphas, betas=betas, margins=margins)
