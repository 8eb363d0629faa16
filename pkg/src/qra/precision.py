"""Precision of repeated single scores: the small-sample unbiased coefficient of variation.

    CV* = (1 + 1/(4n)) * s* / |mean|,   s* = s / c4(n)

where s is the Bessel-corrected sample standard deviation and c4 the
normal-theory bias correction. Values must already be shifted so that the
rating scale starts at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy import stats

from .errors import DomainError
from .model import PrecisionStats

ZERO_VARIANCE_CI = "degenerate zero-variance CI"

# Rough bands below which system-level CV* indicates good reproducibility when
# identical outputs are re-assessed under identical experiment properties.
GOOD_BAND_HUMAN = 12.0
GOOD_BAND_METRIC = 1.0


@dataclass(frozen=True)
class CvOptions:
    confidence_level: float = 0.95
    report_as_percent: bool = True

    def __post_init__(self):
        if not 0 < self.confidence_level < 1:
            raise DomainError("confidence level must lie strictly between 0 and 1")


def c4(n: int) -> float:
    if n < 2:
        raise DomainError("sample too small: c4 needs n >= 2")
    # log-gamma keeps large n finite
    return math.sqrt(2.0 / (n - 1)) * math.exp(math.lgamma(n / 2) - math.lgamma((n - 1) / 2))


def unbiased_std(values: Sequence[float]) -> tuple[float, float]:
    """Return ``(s, s_star)`` for a sample of at least two values."""
    n = len(values)
    if n < 2:
        raise DomainError("sample too small: need at least 2 values")
    mean = math.fsum(values) / n
    s = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))
    return s, s / c4(n)


def ci_for_s_star(s_star: float, n: int, confidence_level: float = 0.95) -> tuple[float, float]:
    """Two-sided t interval around s*, lower end clipped at zero.

    The standard error of s* is approximated from that of the sample
    variance, se(s^2) = sqrt(2 sigma^4 / (n-1)), as se(s^2) / (2 sigma) with
    sigma estimated by s*. That simplifies to s* / sqrt(2 (n-1)).
    """
    if n < 2:
        raise DomainError("sample too small: need n >= 2")
    if s_star < 0:
        raise DomainError("standard deviation cannot be negative")
    if s_star == 0:
        return 0.0, 0.0
    se = s_star / math.sqrt(2.0 * (n - 1))
    t = stats.t.ppf((1 + confidence_level) / 2, n - 1)
    return max(0.0, s_star - t * se), s_star + t * se


def cv_star(values: Sequence[float], opts: CvOptions | None = None) -> PrecisionStats:
    opts = opts or CvOptions()
    n = len(values)
    if n < 2:
        raise DomainError("sample too small: need at least 2 values")
    mean = math.fsum(values) / n
    if mean == 0:
        raise DomainError("CV undefined at zero mean")
    s, s_star = unbiased_std(values)
    cv = (1 + 1 / (4 * n)) * s_star / abs(mean)
    if opts.report_as_percent:
        cv *= 100
    low, high = ci_for_s_star(s_star, n, opts.confidence_level)
    caveats = (ZERO_VARIANCE_CI,) if s_star == 0 else ()
    return PrecisionStats(
        n=n, mean=mean, s=s, s_star=s_star, cv_star=cv,
        ci_low=low, ci_high=high, confidence_level=opts.confidence_level,
        caveats=caveats,
    )


def band_caveat(cv: float, human: bool) -> str:
    band = GOOD_BAND_HUMAN if human else GOOD_BAND_METRIC
    kind = "human" if human else "metric-based"
    side = "within" if cv < band else "outside"
    return f"advisory: {side} the good-reproducibility band for {kind} evaluation (CV* < {band:g})"
