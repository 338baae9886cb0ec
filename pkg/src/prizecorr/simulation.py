"""Monte Carlo pools of correlated (rating, score) pairs.

Each replication draws from its own Philox stream keyed by (seed, replication
index), so results do not depend on how replications are split across
workers or in which order they run.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .inference import PrizeDataset

__all__ = [
    "SimConfig",
    "OverlapResult",
    "RocCurve",
    "PhiResult",
    "replication_rng",
    "sample_pairs",
    "couple",
    "top_m_mask",
    "overlap_count",
    "overlap_experiment",
    "profile_likelihood_scan",
    "roc_curve",
    "roc_and_phi",
    "synthetic_dataset",
]

GAUSSIAN = "gaussian"
MIXTURE = "mixture"


@dataclass(frozen=True)
class SimConfig:
    pool_size: int
    winner_count: int
    r: float
    coupling: str = GAUSSIAN
    replications: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.pool_size < 1:
            raise ValueError(f"pool_size must be positive, got {self.pool_size}")
        if not 1 <= self.winner_count <= self.pool_size:
            raise ValueError(f"winner_count must be in [1, pool_size], got {self.winner_count}")
        if self.replications < 1:
            raise ValueError(f"replications must be positive, got {self.replications}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.coupling == GAUSSIAN:
            if not -1.0 < self.r < 1.0:
                raise ValueError(f"gaussian coupling needs |r| < 1, got {self.r}")
        elif self.coupling == MIXTURE:
            if not 0.0 <= self.r <= 1.0:
                raise ValueError(f"mixture coupling needs 0 <= r <= 1, got {self.r}")
        else:
            raise ValueError(f"unknown coupling {self.coupling!r}")


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    """Independent counter-based stream for one replication."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replication,))
    return np.random.Generator(np.random.Philox(ss))


def _draw(rng, n, coupling):
    x = rng.standard_normal(n)
    s = rng.standard_normal(n)
    u = rng.random(n) if coupling == MIXTURE else None
    return x, s, u


def couple(x, s, r, coupling=GAUSSIAN, u=None):
    """Score from rating ``x`` and independent noise ``s``.

    Gaussian: y = r x + sqrt(1 - r^2) s. Mixture: y = x where u < r, else s.
    """
    if coupling == GAUSSIAN:
        return r * x + math.sqrt(1.0 - r * r) * s
    return np.where(u < r, x, s)


def sample_pairs(cfg: SimConfig, replication: int = 0):
    """One pool of (x, y) pairs as two arrays, from the stream of ``replication``."""
    rng = replication_rng(cfg.seed, replication)
    x, s, u = _draw(rng, cfg.pool_size, cfg.coupling)
    return x, couple(x, s, cfg.r, cfg.coupling, u)


def top_m_mask(values: np.ndarray, m: int) -> np.ndarray:
    """Boolean mask of the ``m`` largest entries; ties at the cut go to the lower index."""
    n = len(values)
    mask = np.zeros(n, dtype=bool)
    if m <= 0:
        return mask
    if m >= n:
        mask[:] = True
        return mask
    kth = np.partition(values, n - m)[n - m]
    above = values > kth
    mask |= above
    need = m - int(above.sum())
    if need:
        ties = np.flatnonzero(values == kth)[:need]
        mask[ties] = True
    return mask


def overlap_count(x: np.ndarray, y: np.ndarray, m: int) -> int:
    """|top-m by x  intersect  top-m by y|."""
    return int(np.count_nonzero(top_m_mask(x, m) & top_m_mask(y, m)))


@dataclass
class OverlapResult:
    """Histogram of overlap counts k = 0..M over replications."""

    histogram: np.ndarray
    replications: int
    config: Optional[SimConfig] = None
    mean_overlap: float = field(init=False)

    def __post_init__(self):
        if int(self.histogram.sum()) != self.replications:
            raise ValueError("histogram counts must sum to the number of replications")
        k = np.arange(len(self.histogram))
        self.mean_overlap = float(k @ self.histogram) / self.replications

    def fraction(self, k: int) -> float:
        return float(self.histogram[k]) / self.replications

    @property
    def mode(self) -> int:
        return int(np.argmax(self.histogram))


def _overlap_chunk(args):
    seed, start, stop, pool, m, r_values, coupling = args
    counts = np.zeros((len(r_values), m + 1), dtype=np.int64)
    for rep in range(start, stop):
        rng = replication_rng(seed, rep)
        x, s, u = _draw(rng, pool, coupling)
        top_x = top_m_mask(x, m)
        for j, r in enumerate(r_values):
            k = int(np.count_nonzero(top_x & top_m_mask(couple(x, s, r, coupling, u), m)))
            counts[j, k] += 1
    return counts


def _run_overlaps(seed, reps, pool, m, r_values, coupling, workers, chunk=500):
    tasks = [
        (seed, a, min(a + chunk, reps), pool, m, tuple(r_values), coupling)
        for a in range(0, reps, chunk)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_overlap_chunk, tasks))
    else:
        parts = [_overlap_chunk(t) for t in tasks]
    # integer sums are order-independent
    return np.sum(parts, axis=0)


def overlap_experiment(cfg: SimConfig, workers: int = 1) -> OverlapResult:
    """How often the top M by rating and the top M by score share k members, M = winner_count."""
    counts = _run_overlaps(cfg.seed, cfg.replications, cfg.pool_size, cfg.winner_count,
                           [cfg.r], cfg.coupling, workers)
    return OverlapResult(counts[0], cfg.replications, cfg)


def profile_likelihood_scan(pool: int, m: int, observed_overlap: int, r_lo: float, r_hi: float,
                            step: float, reps_per_point: int = 10_000, seed: int = 0,
                            coupling: str = GAUSSIAN, workers: int = 1):
    """Fraction of replications whose overlap equals ``observed_overlap``, for each r on a grid.

    All grid points reuse the same underlying draws (common random numbers),
    which keeps the curve smooth enough to locate its maximum.

    Returns a list of (r, fraction) pairs.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if reps_per_point < 1000:
        raise ValueError(f"reps_per_point must be at least 1000, got {reps_per_point}")
    if not 0 <= observed_overlap <= m:
        raise ValueError(f"observed_overlap must be in [0, {m}], got {observed_overlap}")
    n = int(math.floor((r_hi - r_lo) / step + 1e-9))
    r_values = [round(r_lo + i * step, 10) for i in range(n + 1)]
    for r in r_values:
        SimConfig(pool, m, r, coupling, reps_per_point, seed)
    counts = _run_overlaps(seed, reps_per_point, pool, m, r_values, coupling, workers)
    return [(r, counts[j, observed_overlap] / reps_per_point) for j, r in enumerate(r_values)]


class PhiResult(NamedTuple):
    m: int
    tpr: float
    fpr: float
    phi: float
    tpr_minus_fpr: float
    degenerate: bool


@dataclass(frozen=True)
class RocCurve:
    """(M, TPR, FPR) for every sieve size M = 0..N of one realised sample."""

    m: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.tpr) < 0) or np.any(np.diff(self.fpr) < 0):
            raise ValueError("TPR and FPR must be nondecreasing in M")


def _winner_mask(x, winner_count, size):
    if not 1 <= winner_count < size:
        raise ValueError(f"winner_count must be in [1, {size}), got {winner_count}")
    return top_m_mask(np.asarray(x, dtype=float), winner_count)


def roc_curve(x, y, winner_count: int) -> RocCurve:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    winners = _winner_mask(x, winner_count, n)
    # sieve of size M is the first M entries of the score order, ties by index
    order = np.lexsort((np.arange(n), -y))
    tp = np.concatenate([[0], np.cumsum(winners[order])])
    m = np.arange(n + 1)
    return RocCurve(m, tp / winner_count, (m - tp) / (n - winner_count))


def roc_and_phi(x, y, winner_count: int, m: int) -> PhiResult:
    """TPR, FPR and the phi coefficient for a sieve of the top ``m`` scores.

    phi is the Pearson correlation of the winner and sieve indicator vectors,
    evaluated from the 2x2 counts in integer arithmetic. For m == winner_count
    it reduces to the same integer ratio as TPR - FPR, so the two agree bit
    for bit. A sieve of size 0 or N leaves phi undefined (nan, degenerate=True).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    w = winner_count
    if not 0 <= m <= n:
        raise ValueError(f"sieve size must be in [0, {n}], got {m}")
    winners = _winner_mask(x, w, n)
    sieve = top_m_mask(y, m)
    tp = int(np.count_nonzero(winners & sieve))
    fp = m - tp
    tpr = tp / w
    fpr = fp / (n - w)
    gap = (tp * (n - w) - fp * w) / (w * (n - w))
    if m == 0 or m == n:
        return PhiResult(m, tpr, fpr, math.nan, gap, True)
    num = n * tp - w * m
    prod = w * (n - w) * m * (n - m)
    root = math.isqrt(prod)
    den = root if root * root == prod else math.sqrt(prod)
    return PhiResult(m, tpr, fpr, num / den, gap, False)


def synthetic_dataset(pool: int, winner_count: int, r: float, seed: int,
                      list_cutoff_rank: Optional[int] = None, replication: int = 0,
                      label: str = "synthetic") -> PrizeDataset:
    """Draw a pool at correlation r and report the winners' score ranks as a dataset.

    Winners are the top ``winner_count`` by rating. With a cutoff, winners
    ranked below it are censored.
    """
    cfg = SimConfig(pool, winner_count, r, GAUSSIAN, 1, seed)
    x, y = sample_pairs(cfg, replication)
    winners = np.flatnonzero(top_m_mask(x, winner_count))
    order = np.lexsort((np.arange(pool), -y))
    rank = np.empty(pool, dtype=np.int64)
    rank[order] = np.arange(1, pool + 1)
    ranks = sorted(int(k) for k in rank[winners])
    if ranks[-1] == pool:
        # rank N has no finite z-score; a top-rated unit landing last is vanishingly rare
        raise RuntimeError(f"a winner drew the bottom score rank; use another seed than {seed}")
    censored = 0
    if list_cutoff_rank is not None:
        kept = [k for k in ranks if k <= list_cutoff_rank]
        censored = len(ranks) - len(kept)
        ranks = kept
    return PrizeDataset(pool_size=pool, winner_count=winner_count, observed_ranks=tuple(ranks),
                        censored_count=censored, list_cutoff_rank=list_cutoff_rank,
                        label=f"{label} r={r} seed={seed} rep={replication}")
