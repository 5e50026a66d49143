"""Shrinkage LDA, ranking AUC and stratified cross-validation.

The classifier is a linear discriminant whose pooled covariance is shrunk
toward a scaled identity with the analytic Ledoit-Wolf intensity, which keeps
it well conditioned when features outnumber trials.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class LdaModel:
    """Linear discriminant: score(x) = w @ x + b (hyperplane distance)."""

    w: np.ndarray
    b: float
    shrinkage: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.w)) or not np.isfinite(self.b):
            raise ValueError("non-finite LDA parameters")
        if not 0.0 <= self.shrinkage <= 1.0:
            raise ValueError(f"shrinkage {self.shrinkage} outside [0, 1]")


def ledoit_wolf_cov(X):
    """Ledoit-Wolf shrunk covariance of zero-mean observations.

    Parameters
    ----------
    X : (n_trials, n_features) ndarray
        Observations in rows, treated as zero-mean (center beforehand when
        that is not the case; the LDA trainer passes class-centered rows).

    Returns
    -------
    sigma : (n_features, n_features) ndarray
        ``(1 - lam) * S + lam * mu * I`` with ``S = X' X / n`` the sample
        covariance and ``mu = trace(S) / n_features``.
    lam : float
        Optimal shrinkage intensity, clipped to [0, 1].
    """
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    if n < 2:
        raise ValueError("need at least 2 trials to estimate a covariance")
    S = X.T @ X / n
    mu = np.trace(S) / p
    d2 = np.sum((S - mu * np.eye(p)) ** 2) / p
    if d2 <= 0:
        return S, 0.0
    # dispersion of the per-trial outer products around S; the optimal
    # intensity is their ratio, b2 / d2, capped at 1
    norms4 = np.sum((X**2).sum(axis=1) ** 2)
    b2 = (norms4 / n - np.sum(S**2)) / (n * p)
    b2 = min(max(b2, 0.0), d2)
    lam = b2 / d2
    sigma = (1.0 - lam) * S + lam * mu * np.eye(p)
    return sigma, float(lam)


def lda_train(X, y, prior_bias=True):
    """Train a shrinkage LDA on binary-labeled features.

    Parameters
    ----------
    X : (n_trials, n_features) ndarray
    y : (n_trials,) array of bool
        True marks the positive class.
    prior_bias : bool
        Include the class-prior term ``ln(n_pos / n_neg)`` in the bias, the
        Bayes rule under unequal base rates.  With it off, the decision
        boundary sits at the midpoint between class means.

    Returns
    -------
    LdaModel
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=bool)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise ValueError("X must be (n_trials, n_features) matching y")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    n_pos = int(y.sum())
    n_neg = int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present for training")
    mu_pos = X[y].mean(axis=0)
    mu_neg = X[~y].mean(axis=0)
    within = X.copy()
    within[y] -= mu_pos
    within[~y] -= mu_neg
    sigma, lam = ledoit_wolf_cov(within)
    p = X.shape[1]
    ridge = 1e-12 * max(np.trace(sigma) / p, 1.0)
    w = np.linalg.solve(sigma + ridge * np.eye(p), mu_pos - mu_neg)
    b = -0.5 * w @ (mu_pos + mu_neg)
    if prior_bias:
        b += np.log(n_pos / n_neg)
    return LdaModel(w=w, b=float(b), shrinkage=lam)


def lda_score(model, x):
    """Signed distance(s) to the separating hyperplane: ``w @ x + b``.

    ``x`` may be a single feature vector or a (n_trials, n_features) matrix.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.w.shape[0]:
        raise ValueError(f"expected {model.w.shape[0]} features, got {x.shape[-1]}")
    return x @ model.w + model.b


def auroc(scores, labels):
    """Area under the ROC curve: concordant pairs plus half the ties, over
    ``n_pos * n_neg`` (the rank-sum estimator; 0.5 is chance)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC needs both classes present")
    ranks = rankdata(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _take(trials, mask):
    if isinstance(trials, np.ndarray):
        return trials[mask]
    return [t for t, m in zip(trials, mask) if m]


def stratified_folds(labels, k, seed):
    """Random fold assignment with both classes dealt round-robin per class.

    Every class with at least ``k`` members appears in every fold.
    """
    labels = np.asarray(labels, dtype=bool)
    n = len(labels)
    if k < 2:
        raise ValueError("need at least 2 folds")
    if k > n:
        raise ValueError(f"cannot make {k} folds from {n} trials")
    rng = np.random.default_rng(seed)
    fold = np.empty(n, dtype=np.intp)
    for cls in (False, True):
        idx = np.flatnonzero(labels == cls)
        if len(idx) < k:
            raise ValueError(
                f"class {cls} has {len(idx)} trials, cannot stratify into {k} folds"
            )
        rng.shuffle(idx)
        fold[idx] = np.arange(len(idx)) % k
    return fold


def cross_validate(trials, labels, build, k=4, seed=0):
    """Mean AUROC over stratified k-fold cross-validation.

    Parameters
    ----------
    trials : ndarray or sequence
        Training units (feature rows, epochs, ...); indexed per fold.
    labels : array of bool
    build : callable
        ``build(train_trials, train_labels) -> score_fn`` where
        ``score_fn(test_trials)`` returns one score per trial.  The whole
        pipeline (spatial filters included) is refit inside every fold, so
        nothing is ever estimated from held-out data.
    k : int
        Fold count; every fold keeps both classes by stratified assignment.
    seed : int
        Fold assignment is deterministic given the seed.

    Returns
    -------
    float
        AUROC averaged over the k held-out folds.
    """
    labels = np.asarray(labels, dtype=bool)
    fold = stratified_folds(labels, k, seed)
    aucs = []
    for f in range(k):
        train = fold != f
        test = fold == f
        score_fn = build(_take(trials, train), labels[train])
        scores = np.asarray(score_fn(_take(trials, test)), dtype=np.float64)
        aucs.append(auroc(scores, labels[test]))
    return float(np.mean(aucs))
