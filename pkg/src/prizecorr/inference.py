"""Estimating r from the citation ranks of prize winners.

Three estimators share one dataset type:

* maximum likelihood over the winners' z-scores, with winners missing from a
  top-cited list entering through the probability of falling below the list
  cutoff,
* a grid posterior under a flat prior on [0, 0.999], and
* a point estimate that matches the observed share of winners above a cutoff
  to the model's tail exceedance.

Winners known to be on the top list but whose exact rank is unavailable
("placeholder" ranks) contribute log P(y > y_c | x > x_c) each.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .normal_core import DEFAULT_QUADRATURE, QuadratureSpec, normal_quantile, rank_to_z
from .tail_model import (
    R_UPPER,
    NoSolutionError,
    TailCondition,
    invert_exceedance_for_r,
    log_conditional_density,
    tail_exceedance,
)

__all__ = [
    "DatasetError",
    "MethodDataError",
    "EstimationError",
    "PrizeDataset",
    "PosteriorGrid",
    "EstimateReport",
    "R_MAX",
    "r_grid",
    "derive_thresholds",
    "log_likelihood",
    "log_likelihood_curve",
    "mle",
    "posterior",
    "infer_by_exceedance",
]

R_MAX = 0.999

FULL_MLE = "full-mle"
CENSORED_MLE = "censored-mle"
EXCEEDANCE = "exceedance-inversion"


class DatasetError(ValueError):
    """A dataset violates one of its invariants. ``key`` names the offending field."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class MethodDataError(ValueError):
    """The requested estimator needs data the dataset does not carry."""


class EstimationError(ArithmeticError):
    """The likelihood is -inf everywhere on the grid."""


@dataclass(frozen=True)
class PrizeDataset:
    """Winners' citation ranks within a pool.

    ``observed_ranks`` holds the ranks of winners present in the data (1 is
    the most cited). ``None`` entries are winners known to be on the top list
    whose rank is not known. ``censored_count`` winners are known only to lie
    below ``list_cutoff_rank``.
    """

    pool_size: int
    winner_count: int
    observed_ranks: tuple = ()
    censored_count: int = 0
    list_cutoff_rank: Optional[int] = None
    label: str = ""
    notes: str = ""

    def __post_init__(self):
        known = sorted(int(k) for k in self.observed_ranks if k is not None)
        n_missing = sum(1 for k in self.observed_ranks if k is None)
        object.__setattr__(self, "observed_ranks", tuple(known) + (None,) * n_missing)
        self._validate()

    def _validate(self):
        def fail(msg, key):
            raise DatasetError(msg, key)

        for key in ("pool_size", "winner_count", "censored_count"):
            v = getattr(self, key)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                fail(f"{key} must be an integer, got {v!r}", key)
        if self.pool_size < 2:
            fail(f"pool_size must be at least 2, got {self.pool_size}", "pool_size")
        if self.censored_count < 0:
            fail(f"censored_count must be nonnegative, got {self.censored_count}", "censored_count")
        if self.n_observed == 0 and self.censored_count == 0:
            fail("empty dataset: no observed ranks and no censored winners", "observed_ranks")
        if self.winner_count < 1:
            fail(f"winner_count must be positive, got {self.winner_count}", "winner_count")
        if self.winner_count >= self.pool_size:
            fail(f"winner_count ({self.winner_count}) must be below pool_size ({self.pool_size})",
                 "winner_count")
        if self.winner_count != self.n_observed + self.censored_count:
            fail(f"winner_count ({self.winner_count}) must equal observed ranks ({self.n_observed}) "
                 f"+ censored_count ({self.censored_count})", "winner_count")

        cutoff = self.list_cutoff_rank
        if cutoff is not None:
            if isinstance(cutoff, bool) or not isinstance(cutoff, (int, np.integer)):
                fail(f"list_cutoff_rank must be an integer, got {cutoff!r}", "list_cutoff_rank")
            if not 1 <= cutoff < self.pool_size:
                fail(f"list_cutoff_rank must satisfy 1 <= cutoff < pool_size, got {cutoff}",
                     "list_cutoff_rank")
            if self.n_observed > cutoff:
                fail(f"{self.n_observed} observed winners cannot fit in a top list of {cutoff}",
                     "observed_ranks")
        elif self.censored_count > 0:
            fail("censored_count > 0 requires list_cutoff_rank", "list_cutoff_rank")
        elif self.n_placeholders > 0:
            fail("placeholder ranks require list_cutoff_rank", "list_cutoff_rank")

        known = self.known_ranks
        if len(set(known)) != len(known):
            dup = sorted({k for k in known if known.count(k) > 1})
            fail(f"duplicate ranks {dup}", "observed_ranks")
        for k in known:
            if not 1 <= k < self.pool_size:
                fail(f"rank {k} outside [1, pool_size)", "observed_ranks")
            if cutoff is not None and k > cutoff:
                fail(f"rank {k} exceeds list_cutoff_rank {cutoff}", "observed_ranks")

    @property
    def known_ranks(self) -> list:
        return [k for k in self.observed_ranks if k is not None]

    @property
    def n_observed(self) -> int:
        return len(self.observed_ranks)

    @property
    def n_placeholders(self) -> int:
        return sum(1 for k in self.observed_ranks if k is None)

    @property
    def has_placeholders(self) -> bool:
        return self.n_placeholders > 0

    @property
    def method_tag(self) -> str:
        if self.censored_count == 0 and not self.has_placeholders:
            return FULL_MLE
        return CENSORED_MLE

    @cached_property
    def observed_z(self) -> np.ndarray:
        """z-scores of the known ranks, converted once."""
        if not self.known_ranks:
            return np.empty(0)
        return np.atleast_1d(rank_to_z(np.array(self.known_ranks), self.pool_size))


def derive_thresholds(ds: PrizeDataset):
    """Selection threshold x_c from the winner share and list threshold y_c from the cutoff."""
    x_c = normal_quantile(1.0 - ds.winner_count / ds.pool_size)
    y_c = None
    if ds.list_cutoff_rank is not None:
        y_c = normal_quantile(1.0 - ds.list_cutoff_rank / ds.pool_size)
    return x_c, y_c


def log_likelihood(ds: PrizeDataset, r: float, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Log-likelihood of the winners' scores at correlation r.

    Returns -inf when a tail probability needed by a count term vanishes.
    """
    x_c, y_c = derive_thresholds(ds)
    cond = TailCondition(r, x_c)
    ll = float(np.sum(log_conditional_density(ds.observed_z, cond))) if ds.known_ranks else 0.0

    n_above = ds.n_placeholders
    n_below = ds.censored_count
    if n_above or n_below:
        if y_c is None:
            raise MethodDataError("censored or unranked winners need list_cutoff_rank")
        p = tail_exceedance(y_c, cond, spec)
        if (n_above and p <= 0.0) or (n_below and p >= 1.0):
            return -math.inf
        if n_above:
            ll += n_above * math.log(p)
        if n_below:
            ll += n_below * math.log1p(-p)
    return ll


def r_grid(step: float) -> np.ndarray:
    """Grid {0, step, 2 step, ...} below R_MAX, with R_MAX appended."""
    if not 0.0 < step <= 0.01:
        raise ValueError(f"grid step must lie in (0, 0.01], got {step!r}")
    n = int(math.floor(R_MAX / step + 1e-9))
    grid = np.round(np.arange(n + 1) * step, 12)
    grid = grid[grid < R_MAX - 1e-12]
    return np.append(grid, R_MAX)


def log_likelihood_curve(ds: PrizeDataset, r_values: Sequence[float],
                         spec: QuadratureSpec = DEFAULT_QUADRATURE) -> np.ndarray:
    return np.array([log_likelihood(ds, float(r), spec) for r in r_values])


@dataclass(frozen=True)
class EstimateReport:
    r_hat: float
    method: str
    x_c: float
    y_c: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    credible_level: Optional[float] = None
    interval: Optional[str] = None
    at_boundary: bool = False
    notes: tuple = ()
    noise_prefactor: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "noise_prefactor", math.sqrt(1.0 - self.r_hat * self.r_hat))
        if (self.ci_low is None) != (self.ci_high is None):
            raise ValueError("ci_low and ci_high must be given together")
        if self.ci_low is not None and not self.ci_low <= self.r_hat <= self.ci_high:
            raise ValueError(f"interval [{self.ci_low}, {self.ci_high}] does not contain {self.r_hat}")

    @property
    def derived_thresholds(self):
        return self.x_c, self.y_c

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "r_hat": self.r_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "credible_level": self.credible_level,
            "interval": self.interval,
            "at_boundary": self.at_boundary,
            "noise_prefactor": self.noise_prefactor,
            "x_c": self.x_c,
            "y_c": self.y_c,
            "notes": list(self.notes),
        }


def mle(ds: PrizeDataset, r_grid_step: float = 0.01,
        spec: QuadratureSpec = DEFAULT_QUADRATURE) -> EstimateReport:
    """Maximise the log-likelihood on a grid over [0, 0.999], then refine inside the best cell."""
    grid = r_grid(r_grid_step)
    ll = log_likelihood_curve(ds, grid, spec)
    if not np.any(np.isfinite(ll)):
        raise EstimationError(f"log-likelihood is -inf at every grid point for {ds.label or 'dataset'}")
    i = int(np.argmax(ll))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    r_hat, best = float(grid[i]), float(ll[i])
    res = optimize.minimize_scalar(
        lambda r: -log_likelihood(ds, r, spec),
        bounds=(lo, hi), method="bounded", options={"xatol": 1e-5},
    )
    if res.success and -res.fun >= best:
        r_hat = float(res.x)

    x_c, y_c = derive_thresholds(ds)
    at_boundary = r_hat >= R_MAX - r_grid_step - 1e-12
    notes = ()
    if at_boundary:
        notes = ("likelihood still rising at the top of the admissible range",)
    return EstimateReport(r_hat=r_hat, method=ds.method_tag, x_c=x_c, y_c=y_c,
                          at_boundary=at_boundary, notes=notes)


@dataclass(frozen=True)
class PosteriorGrid:
    r_values: np.ndarray
    log_likelihoods: np.ndarray
    posterior_masses: np.ndarray
    prior_tag: str = "uniform[0,0.999]"

    def __post_init__(self):
        r = self.r_values
        if not (len(r) == len(self.log_likelihoods) == len(self.posterior_masses)):
            raise ValueError("grid arrays differ in length")
        if np.any(np.diff(r) <= 0) or r[0] <= -1.0 or r[-1] >= 1.0:
            raise ValueError("r grid must be strictly increasing inside (-1, 1)")
        if np.any(self.posterior_masses < 0) or abs(self.posterior_masses.sum() - 1.0) > 1e-12:
            raise ValueError("posterior masses must be nonnegative and sum to 1")

    @property
    def mode(self) -> float:
        return float(self.r_values[int(np.argmax(self.posterior_masses))])

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.posterior_masses)


def _normalise(ll: np.ndarray) -> np.ndarray:
    w = np.exp(ll - np.max(ll))
    w /= math.fsum(w)
    # fold the last rounding residue into the largest cell so the sum is 1 to the ulp
    w[np.argmax(w)] += 1.0 - math.fsum(w)
    return w


def posterior(ds: PrizeDataset, grid_step: float = 0.001, credible_level: float = 0.95,
              spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Grid posterior of r under a flat prior on the grid points of [0, 0.999].

    The interval is equal-tailed, read off the cumulative mass with linear
    interpolation between grid points. The point estimate is the posterior mode.
    """
    if not 0.0 < credible_level < 1.0:
        raise ValueError(f"credible_level must lie in (0, 1), got {credible_level!r}")
    grid = r_grid(grid_step)
    ll = log_likelihood_curve(ds, grid, spec)
    if not np.any(np.isfinite(ll)):
        raise EstimationError(f"log-likelihood is -inf at every grid point for {ds.label or 'dataset'}")
    masses = _normalise(ll)
    pg = PosteriorGrid(grid, ll, masses)

    tail = 0.5 * (1.0 - credible_level)
    cdf = pg.cdf()
    lo = float(np.interp(tail, cdf, grid))
    hi = float(np.interp(1.0 - tail, cdf, grid))
    mode = pg.mode
    notes = []
    if masses.max() >= credible_level:
        notes.append("degenerate posterior: a single grid cell holds the credible mass")
    if not lo <= mode <= hi:
        notes.append("posterior mode lies outside the equal-tailed interval; interval widened to include it")
        lo, hi = min(lo, mode), max(hi, mode)
    at_boundary = mode >= R_MAX - grid_step - 1e-12
    x_c, y_c = derive_thresholds(ds)
    report = EstimateReport(
        r_hat=mode, method=ds.method_tag, x_c=x_c, y_c=y_c,
        ci_low=lo, ci_high=hi, credible_level=credible_level, interval="equal-tailed",
        at_boundary=at_boundary, notes=tuple(notes),
    )
    return pg, report


def infer_by_exceedance(ds: PrizeDataset, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> EstimateReport:
    """Match the observed share of winners above a cutoff to the model exceedance.

    With a list cutoff the share is (winners on the list) / winner_count. With
    full ranks and no cutoff, the sieve is the top winner_count ranks, so
    y_c = x_c.
    """
    x_c, y_c = derive_thresholds(ds)
    if y_c is not None:
        target = ds.n_observed / ds.winner_count
    elif ds.censored_count == 0 and not ds.has_placeholders:
        y_c = x_c
        target = sum(1 for k in ds.known_ranks if k <= ds.winner_count) / ds.winner_count
    else:
        raise MethodDataError("exceedance inversion needs list_cutoff_rank or full ranks")

    notes = [f"target exceedance {target:.6g}"]
    at_boundary = False
    try:
        r_hat = invert_exceedance_for_r(y_c, x_c, target, spec)
    except NoSolutionError as err:
        if target < err.attainable[1]:
            raise
        r_hat = R_UPPER
        at_boundary = True
        notes.append("target at or above the r -> 1 limit; reporting the upper bracket")
    if r_hat >= R_MAX:
        at_boundary = True
    return EstimateReport(r_hat=r_hat, method=EXCEEDANCE, x_c=x_c, y_c=y_c,
                          at_boundary=at_boundary, notes=tuple(notes))
