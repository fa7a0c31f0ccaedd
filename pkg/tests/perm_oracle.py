"""Exhaustive studentized permutation oracle for the rank test.

Recomputes the statistic from scratch (vectorized over all group splits) so it
shares no code with the implementation under test. Splits with vanishing rank
variance count as infinitely strong evidence.
"""

import itertools

import numpy as np
from scipy import stats as sps


def all_statistics(pool: np.ndarray, n: int) -> np.ndarray:
    """|statistic| for every C(len(pool), n) split; the first row is (0..n-1)."""
    N = len(pool)
    combs = np.array(list(itertools.combinations(range(N), n)))
    comp = np.array([sorted(set(range(N)) - set(c)) for c in combs])
    r = sps.rankdata(pool)
    ra = r[combs]
    rb = r[comp]
    ra_m = ra.mean(axis=1)
    rb_m = rb.mean(axis=1)
    ria = sps.rankdata(pool[combs], axis=1)
    rib = sps.rankdata(pool[comp], axis=1)
    na = n
    nb = N - n
    sa2 = np.sum((ra - ria - ra_m[:, None] + (na + 1) / 2.0) ** 2, axis=1) / (na - 1)
    sb2 = np.sum((rb - rib - rb_m[:, None] + (nb + 1) / 2.0) ** 2, axis=1) / (nb - 1)
    denom = (na + nb) * np.sqrt(na * sa2 + nb * sb2)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = na * nb * (rb_m - ra_m) / denom
    w = np.where(denom == 0.0, np.where(rb_m == ra_m, 0.0, np.inf), np.abs(w))
    return np.abs(w)


def exact_permutation_p(a, b) -> float:
    """Two-sided exhaustive permutation p for the observed (a, b) split."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    pool = np.concatenate([a, b])
    stats = all_statistics(pool, len(a))
    obs = stats[0]
    return float(np.mean(stats >= obs - 1e-12))
