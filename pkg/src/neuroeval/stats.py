"""Statistical procedures for the evaluation reports: Grubbs outlier test,
Wilcoxon signed rank, paired t, repeated-measures ANOVA, Benjamini-Hochberg
FDR and task-load questionnaire scoring.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.stats

#: Largest n for which the Wilcoxon null distribution is enumerated exactly.
WILCOXON_EXACT_N = 12


def grubbs_critical(n, alpha=0.05):
    """Two-sided Grubbs critical value for sample size ``n``."""
    t = scipy.stats.t.ppf(1.0 - alpha / (2.0 * n), n - 2)
    return (n - 1) / np.sqrt(n) * np.sqrt(t * t / (n - 2 + t * t))


def grubbs_step(xs, alpha=0.05):
    """Index of the single most extreme outlier, or None.

    Computes ``G = max |x - mean| / sd`` and flags the argmax when G exceeds
    the two-sided critical value.  Returns None for zero spread.
    """
    xs = np.asarray(xs, dtype=np.float64)
    n = len(xs)
    if n < 3:
        raise ValueError(f"Grubbs test needs at least 3 values, got {n}")
    sd = xs.std(ddof=1)
    if sd == 0:
        return None
    dev = np.abs(xs - xs.mean())
    i = int(np.argmax(dev))
    if dev[i] / sd > grubbs_critical(n, alpha):
        return i
    return None


def grubbs_mask(xs, alpha=0.05):
    """Boolean survivor mask after iterative one-at-a-time Grubbs removal.

    Removal stops when no value is flagged or fewer than 3 remain.  The
    surviving multiset does not depend on the input order.
    """
    xs = np.asarray(xs, dtype=np.float64)
    keep = np.ones(len(xs), dtype=bool)
    while keep.sum() >= 3:
        idx = np.flatnonzero(keep)
        hit = grubbs_step(xs[idx], alpha)
        if hit is None:
            break
        keep[idx[hit]] = False
    return keep


def _signed_rank_stat(diffs):
    d = np.asarray(diffs, dtype=np.float64)
    d = d[d != 0]
    if len(d) == 0:
        raise ValueError("all differences are zero")
    ranks = scipy.stats.rankdata(np.abs(d))
    w_pos = ranks[d > 0].sum()
    return w_pos, ranks


def _exact_tail_probs(ranks, w_obs):
    """P(W >= w) and P(W <= w) by enumerating all sign patterns."""
    n = len(ranks)
    total = 2**n
    ge = le = 0
    for signs in itertools.product((0.0, 1.0), repeat=n):
        w = float(np.dot(signs, ranks))
        if w >= w_obs - 1e-12:
            ge += 1
        if w <= w_obs + 1e-12:
            le += 1
    return ge / total, le / total


def wilcoxon_signed_rank(a, b, tail="one_greater"):
    """Wilcoxon signed-rank test on paired samples.

    Parameters
    ----------
    a, b : arrays of equal length
        Per-subject paired measurements.
    tail : {"one_greater", "one_less", "two"}
        ``one_greater`` tests the alternative that ``b`` exceeds ``a``.

    Returns
    -------
    p : float

    Notes
    -----
    Zero differences are dropped before ranking.  The null distribution is
    enumerated exactly for up to 12 nonzero pairs, above that a normal
    approximation with tie correction and continuity correction is used.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    if tail not in ("one_greater", "one_less", "two"):
        raise ValueError(f"unknown tail {tail!r}")
    w_pos, ranks = _signed_rank_stat(b - a)
    n = len(ranks)
    if n <= WILCOXON_EXACT_N:
        p_ge, p_le = _exact_tail_probs(ranks, w_pos)
    else:
        mean = n * (n + 1) / 4.0
        _, counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(counts**3 - counts) / 48.0
        sd = np.sqrt(var)
        p_ge = scipy.stats.norm.sf((w_pos - 0.5 - mean) / sd)
        p_le = scipy.stats.norm.cdf((w_pos + 0.5 - mean) / sd)
    if tail == "one_greater":
        return float(p_ge)
    if tail == "one_less":
        return float(p_le)
    return float(min(1.0, 2.0 * min(p_ge, p_le)))


def paired_t(a, b):
    """Paired Student t-test (two-sided).

    Returns
    -------
    (t, df, p)

    Identical pairs give ``t = 0, p = 1``; nonzero differences with zero
    variance are degenerate and raise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-D of equal length")
    n = len(a)
    if n < 2:
        raise ValueError("need at least 2 pairs")
    d = a - b
    sd = d.std(ddof=1)
    if sd == 0:
        if np.all(d == 0):
            return 0.0, n - 1, 1.0
        raise ValueError("differences have zero variance")
    t = d.mean() / (sd / np.sqrt(n))
    p = 2.0 * scipy.stats.t.sf(abs(t), n - 1)
    return float(t), n - 1, float(p)


@dataclass(frozen=True)
class AnovaEffect:
    """One tested effect of a repeated-measures ANOVA."""

    name: str
    F: float
    df_effect: int
    df_error: int
    p: float


def _f_test(ss_eff, df_eff, ss_err, df_err, name):
    ms_eff = ss_eff / df_eff
    ms_err = ss_err / df_err
    if ms_err <= 0:
        f = 0.0 if ms_eff <= 1e-24 else np.inf
    else:
        f = ms_eff / ms_err
    p = float(scipy.stats.f.sf(f, df_eff, df_err)) if np.isfinite(f) else 0.0
    return AnovaEffect(name=name, F=float(f), df_effect=df_eff, df_error=df_err, p=p)


def rm_anova(table, factor_names=None):
    """Repeated-measures (within-subject) ANOVA, one or two factors.

    Parameters
    ----------
    table : ndarray
        ``(n_subjects, n_levels)`` for one factor or
        ``(n_subjects, n_a, n_b)`` for two factors; one observation per cell,
        complete and balanced.
    factor_names : sequence of str, optional
        Names for the effects; defaults to ``factor1``/``factor2``.

    Returns
    -------
    dict of name -> AnovaEffect
        Each effect is tested against its own subject-by-effect interaction
        mean square.  Two-factor tables also return the interaction effect.
        No sphericity correction is applied.
    """
    y = np.asarray(table, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("ANOVA table has missing or non-finite cells")
    if y.ndim == 2:
        names = tuple(factor_names) if factor_names else ("factor1",)
        s, na = y.shape
        if s < 2 or na < 2:
            raise ValueError("need at least 2 subjects and 2 levels")
        grand = y.mean()
        ss_a = s * np.sum((y.mean(axis=0) - grand) ** 2)
        ss_s = na * np.sum((y.mean(axis=1) - grand) ** 2)
        ss_err = np.sum((y - grand) ** 2) - ss_a - ss_s
        eff = _f_test(ss_a, na - 1, max(ss_err, 0.0), (na - 1) * (s - 1), names[0])
        return {names[0]: eff}
    if y.ndim != 3:
        raise ValueError(f"table must be 2-D or 3-D, got shape {y.shape}")
    names = tuple(factor_names) if factor_names else ("factor1", "factor2")
    if len(names) != 2:
        raise ValueError("two factor names required for a 3-D table")
    s, na, nb = y.shape
    if s < 2 or na < 2 or nb < 2:
        raise ValueError("need at least 2 subjects and 2 levels per factor")
    grand = y.mean()
    m_s = y.mean(axis=(1, 2))
    m_a = y.mean(axis=(0, 2))
    m_b = y.mean(axis=(0, 1))
    m_sa = y.mean(axis=2)
    m_sb = y.mean(axis=1)
    m_ab = y.mean(axis=0)
    ss_a = s * nb * np.sum((m_a - grand) ** 2)
    ss_b = s * na * np.sum((m_b - grand) ** 2)
    ss_ab = s * np.sum((m_ab - m_a[:, None] - m_b[None, :] + grand) ** 2)
    ss_as = nb * np.sum((m_sa - m_s[:, None] - m_a[None, :] + grand) ** 2)
    ss_bs = na * np.sum((m_sb - m_s[:, None] - m_b[None, :] + grand) ** 2)
    ss_s = na * nb * np.sum((m_s - grand) ** 2)
    ss_total = np.sum((y - grand) ** 2)
    ss_abs = ss_total - ss_s - ss_a - ss_b - ss_ab - ss_as - ss_bs
    return {
        names[0]: _f_test(ss_a, na - 1, max(ss_as, 0.0), (na - 1) * (s - 1), names[0]),
        names[1]: _f_test(ss_b, nb - 1, max(ss_bs, 0.0), (nb - 1) * (s - 1), names[1]),
        "interaction": _f_test(
            ss_ab,
            (na - 1) * (nb - 1),
            max(ss_abs, 0.0),
            (na - 1) * (nb - 1) * (s - 1),
            "interaction",
        ),
    }


def fdr_bh(pvalues, q=0.05):
    """Benjamini-Hochberg step-up FDR control.

    Returns
    -------
    reject : bool array
        Hypotheses rejected at level ``q``.
    p_adj : array
        Adjusted p-values, monotone after sorting, clipped at 1.
    """
    p = np.asarray(pvalues, dtype=np.float64)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    m = len(p)
    if m == 0:
        return np.zeros(0, dtype=bool), np.zeros(0)
    order = np.argsort(p, kind="stable")
    ranked = p[order]
    adj = ranked * m / np.arange(1, m + 1)
    adj = np.minimum.accumulate(adj[::-1])[::-1]
    adj = np.minimum(adj, 1.0)
    p_adj = np.empty(m)
    p_adj[order] = adj
    thresh = np.arange(1, m + 1) * q / m
    below = np.flatnonzero(ranked <= thresh)
    reject = np.zeros(m, dtype=bool)
    if len(below):
        reject[order[: below[-1] + 1]] = True
    return reject, p_adj


@dataclass(frozen=True)
class TlxResponse:
    """Six-item task-load questionnaire answers on a 1..9 Likert scale."""

    mental: int
    physical: int
    temporal: int
    performance: int
    effort: int
    frustration: int

    def __post_init__(self):
        for name in ("mental", "physical", "temporal", "performance", "effort", "frustration"):
            v = getattr(self, name)
            if not 1 <= v <= 9:
                raise ValueError(f"{name} item {v} outside [1, 9]")


def nasa_tlx_score(response):
    """Overall task-load score in [0, 1].

    Five items map ``(v - 1) / 8``; performance is reverse-scaled
    ``(9 - v) / 8`` (1 means good).  Returns the mean of the six.
    """
    direct = [
        response.mental,
        response.physical,
        response.temporal,
        response.effort,
        response.frustration,
    ]
    parts = [(v - 1) / 8.0 for v in direct]
    parts.append((9 - response.performance) / 8.0)
    return float(np.mean(parts))
