"""Score distribution of the selected tail of a standard bivariate normal.

A latent rating x and an observed score y are standard normal with correlation
r. "Winners" are the units with x above a threshold x_c; this module gives the
density of y among winners, the probability that a winner's score clears a
second threshold y_c, and the inverse of that probability as a function of r.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .normal_core import (
    DEFAULT_QUADRATURE,
    DomainError,
    QuadratureSpec,
    integrate,
    log_normal_sf,
    normal_pdf,
    normal_sf,
)

__all__ = [
    "NoSolutionError",
    "TailCondition",
    "bivariate_density",
    "conditional_density",
    "log_conditional_density",
    "tail_exceedance",
    "exceedance_limits",
    "invert_exceedance_for_r",
    "expected_tpr_fpr_gap",
    "R_UPPER",
]

# upper end of the root-search bracket; the conditional density degenerates at r = 1
R_UPPER = 0.999999


class NoSolutionError(ValueError):
    """The target exceedance is outside what any r in the bracket can produce."""

    def __init__(self, message, attainable):
        super().__init__(message)
        self.attainable = attainable


def _check_r(r):
    if not (-1.0 < r < 1.0):
        raise DomainError(f"correlation must satisfy -1 < r < 1, got {r!r}")


@dataclass(frozen=True)
class TailCondition:
    """Correlation ``r`` and selection threshold ``x_c`` (z-units)."""

    r: float
    x_c: float

    def __post_init__(self):
        _check_r(self.r)
        if not math.isfinite(self.x_c):
            raise DomainError(f"x_c must be finite, got {self.x_c!r}")
        if not normal_sf(self.x_c) > 0.0:
            raise DomainError(f"selected tail above x_c={self.x_c} has zero probability")

    @property
    def noise_scale(self) -> float:
        return math.sqrt(1.0 - self.r * self.r)


def bivariate_density(x, y, r):
    """Standard bivariate normal density with correlation ``r``."""
    _check_r(r)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    one_minus = 1.0 - r * r
    quad = (x * x + y * y - 2.0 * r * (x * y)) / (2.0 * one_minus)
    out = np.exp(-quad) / (2.0 * math.pi * math.sqrt(one_minus))
    return float(out) if out.ndim == 0 else out


def conditional_density(y, cond: TailCondition):
    """Density of y given x > x_c.

    phi(y) * S((x_c - r y) / sqrt(1 - r^2)) / S(x_c), with S the normal upper
    tail. Integrates to one over the real line.
    """
    y = np.asarray(y, dtype=float)
    t = (cond.x_c - cond.r * y) / cond.noise_scale
    out = normal_pdf(y) * normal_sf(t) / normal_sf(cond.x_c)
    return float(out) if np.ndim(out) == 0 else out


def log_conditional_density(y, cond: TailCondition):
    """Logarithm of :func:`conditional_density`, stable when the tail factor underflows."""
    y = np.asarray(y, dtype=float)
    t = (cond.x_c - cond.r * y) / cond.noise_scale
    out = (
        -0.5 * y * y
        - 0.5 * math.log(2.0 * math.pi)
        + log_normal_sf(t)
        - log_normal_sf(cond.x_c)
    )
    return float(out) if np.ndim(out) == 0 else out


def tail_exceedance(y_c: float, cond: TailCondition, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """P(y > y_c | x > x_c), by quadrature of the conditional density."""
    if not math.isfinite(y_c):
        raise DomainError(f"y_c must be finite, got {y_c!r}")
    hw = spec.half_width
    # mass of the conditional density sits near r * E[x | x > x_c]; keep the window around it
    upper = max(hw, abs(cond.x_c) + hw)
    if y_c >= upper:
        return 0.0
    lo = max(y_c, -upper)
    p = integrate(lambda y: conditional_density(y, cond), lo, upper, spec)
    return min(max(p, 0.0), 1.0)


def exceedance_limits(y_c: float, x_c: float, spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Exceedance at r = 0 and at the top of the root-search bracket."""
    return (
        tail_exceedance(y_c, TailCondition(0.0, x_c), spec),
        tail_exceedance(y_c, TailCondition(R_UPPER, x_c), spec),
    )


def invert_exceedance_for_r(
    y_c: float,
    x_c: float,
    target: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    tol: float = 1e-6,
) -> float:
    """Solve ``tail_exceedance(y_c, TailCondition(r, x_c)) == target`` for r in [0, R_UPPER].

    The exceedance is increasing in r when both thresholds are positive, so a
    bracketed root search on [0, R_UPPER] is safe. Targets outside the
    attainable range raise :class:`NoSolutionError`.
    """
    if not (math.isfinite(y_c) and math.isfinite(x_c)):
        raise DomainError("thresholds must be finite")
    if not (0.0 <= target <= 1.0):
        raise DomainError(f"target must be a probability, got {target!r}")

    def gap(r):
        return tail_exceedance(y_c, TailCondition(r, x_c), spec) - target

    g_lo = gap(0.0)
    g_hi = gap(R_UPPER)
    attainable = (g_lo + target, g_hi + target)
    if abs(g_lo) < tol:
        return 0.0
    if abs(g_hi) < tol:
        return R_UPPER
    if g_lo > 0.0 or g_hi < 0.0:
        raise NoSolutionError(
            f"target exceedance {target:.6g} outside attainable range "
            f"[{attainable[0]:.6g}, {attainable[1]:.6g}] for y_c={y_c:.4g}, x_c={x_c:.4g}",
            attainable,
        )
    return optimize.brentq(gap, 0.0, R_UPPER, xtol=1e-10, rtol=1e-12)


def expected_tpr_fpr_gap(cond: TailCondition, winner_fraction: float,
                         spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Model prediction of TPR - FPR when the sieve holds as many slots as there are winners.

    With winner fraction f and model true-positive rate p = P(y > x_c | x > x_c),
    the expected non-winners in the sieve are M (1 - p) out of N (1 - f), so
    FPR = f (1 - p) / (1 - f).
    """
    if not (0.0 < winner_fraction < 1.0):
        raise DomainError(f"winner_fraction must lie in (0, 1), got {winner_fraction!r}")
    tpr = tail_exceedance(cond.x_c, cond, spec)
    fpr = winner_fraction * (1.0 - tpr) / (1.0 - winner_fraction)
    return tpr - fpr

