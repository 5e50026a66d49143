"""Spatial filtering: covariance estimation, CSP, stationarity-regularized CSP
and regularized Fisher-criterion spatial filters for ERPs.

All filter banks are matrices ``W`` of shape (n_filters, n_channels); virtual
channels are obtained as ``W @ x``.  Eigenvector signs are fixed by making the
largest-magnitude coefficient of each row positive, so results are
deterministic across platforms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

_EIG_ZERO = 1e-10


@dataclass(frozen=True)
class ClassCovariance:
    """Average trace-normalized covariance of one class of epochs."""

    sigma: np.ndarray  # (n_channels, n_channels)
    n_trials: int


@dataclass(frozen=True)
class SpatialFilterBank:
    """Bank of spatial filters, one per row of ``W``.

    ``eigenvalues`` holds the generalized eigenvalue associated with each
    row, in row order.  ``meta`` is free-form (band name, epoch window, ...).
    """

    W: np.ndarray  # (n_filters, n_channels)
    method: str
    eigenvalues: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_filters(self):
        return self.W.shape[0]

    @property
    def n_channels(self):
        return self.W.shape[1]

    def apply(self, x):
        """Project signals onto the virtual channels: ``W @ x``.

        ``x`` may be (n_channels, n) or a stack (..., n_channels, n).
        """
        return self.W @ x


def _fix_signs(W):
    idx = np.argmax(np.abs(W), axis=1)
    signs = np.sign(W[np.arange(W.shape[0]), idx])
    signs[signs == 0] = 1.0
    return W * signs[:, None]


def _epoch_arrays(epochs):
    out = []
    for e in epochs:
        data = e.data if hasattr(e, "data") else np.asarray(e, dtype=np.float64)
        out.append(np.asarray(data, dtype=np.float64))
    return out


def per_trial_covariance(data):
    """Trace-normalized sample covariance of a single epoch.

    The epoch mean is removed per channel, the covariance is scaled so its
    trace equals the channel count (zero-signal epochs stay all-zero).
    """
    data = np.asarray(data, dtype=np.float64)
    n_ch, n = data.shape
    if n < 2:
        raise ValueError("epochs need at least 2 samples for a covariance")
    centered = data - data.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / (n - 1)
    tr = np.trace(cov)
    if tr > 0:
        cov = cov * (n_ch / tr)
    return cov


def class_covariance(epochs):
    """Average of per-trial trace-normalized covariances.

    Parameters
    ----------
    epochs : sequence of Epoch or (n_channels, n_samples) arrays

    Returns
    -------
    ClassCovariance
    """
    arrays = _epoch_arrays(epochs)
    if not arrays:
        raise ValueError("no epochs to estimate a covariance from")
    covs = [per_trial_covariance(a) for a in arrays]
    return ClassCovariance(sigma=np.mean(covs, axis=0), n_trials=len(arrays))


def _as_sigma(c):
    return c.sigma if isinstance(c, ClassCovariance) else np.asarray(c, dtype=np.float64)


def _solve_generalized(sigma_a, composite):
    """Eigenvectors of ``sigma_a w = lambda * composite w``, ascending."""
    jitter = 1e-9 * np.trace(composite) / composite.shape[0]
    try:
        vals, vecs = scipy.linalg.eigh(sigma_a, composite)
    except scipy.linalg.LinAlgError:
        reg = composite + max(jitter, 1e-18) * np.eye(composite.shape[0])
        vals, vecs = scipy.linalg.eigh(sigma_a, reg)
    return vals, vecs


def _select_sides(vals, vecs, n_per_side):
    n = len(vals)
    if 2 * n_per_side > n:
        raise ValueError(f"cannot pick {n_per_side} filters per side from {n} channels")
    top = list(range(n - 1, n - 1 - n_per_side, -1))
    bottom = list(range(n_per_side))
    idx = top + bottom
    W = _fix_signs(vecs[:, idx].T)
    return W, vals[idx]


def csp(cov_a, cov_b, n_per_side=3):
    """Common spatial patterns for two classes.

    Solves the generalized eigenproblem ``Sigma_a w = lambda (Sigma_a +
    Sigma_b) w`` and keeps the ``n_per_side`` eigenvectors from each end of
    the spectrum.  Rows satisfy ``w' (Sigma_a + Sigma_b) w = 1``; eigenvalues
    lie in [0, 1] and 0.5 means no discriminative direction.
    """
    sa, sb = _as_sigma(cov_a), _as_sigma(cov_b)
    if sa.shape != sb.shape or sa.shape[0] != sa.shape[1]:
        raise ValueError(f"covariance shapes differ: {sa.shape} vs {sb.shape}")
    vals, vecs = _solve_generalized(sa, sa + sb)
    W, lams = _select_sides(vals, vecs, n_per_side)
    return SpatialFilterBank(W=W, method="csp", eigenvalues=lams)


def sscsp(cov_a, cov_b, cov_use, nu=0.1, n_per_side=3):
    """Stationarity-regularized CSP.

    On top of plain CSP, penalizes spatial directions whose second-order
    statistics shift between the calibration context and the (unsupervised)
    use context: with ``Delta`` the positive-semidefinite absolute value of
    ``Sigma_use - Sigma_cal`` (eigendecompose the difference, take absolute
    eigenvalues), solves ``Sigma_a w = lambda (Sigma_a + Sigma_b + nu *
    Delta) w``.  ``nu = 0`` reduces exactly to :func:`csp`.
    """
    sa, sb = _as_sigma(cov_a), _as_sigma(cov_b)
    su = _as_sigma(cov_use)
    if not (sa.shape == sb.shape == su.shape):
        raise ValueError("covariance shapes differ")
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    sigma_cal = 0.5 * (sa + sb)
    diff = su - sigma_cal
    dvals, dvecs = np.linalg.eigh(0.5 * (diff + diff.T))
    delta = (dvecs * np.abs(dvals)) @ dvecs.T
    vals, vecs = _solve_generalized(sa, sa + sb + nu * delta)
    W, lams = _select_sides(vals, vecs, n_per_side)
    return SpatialFilterBank(W=W, method="sscsp", eigenvalues=lams, meta={"nu": nu})


def refsf(target_epochs, nontarget_epochs, n_filters=5, gamma=1e-3):
    """Regularized Fisher-criterion spatial filters for ERP classification.

    Channel-space scatter matrices are built from the class-mean evoked
    responses, with time points as observation columns: between-class
    ``Sb = sum_c n_c (mu_c - mu)(mu_c - mu)'`` and within-class
    ``Sw = sum_c sum_i (x_ci - mu_c)(x_ci - mu_c)'``.  Returns the leading
    ``n_filters`` eigenvectors of ``(Sw + gamma * trace(Sw)/n * I)^-1 Sb``,
    rows normalized to unit Euclidean norm.

    Raises
    ------
    ValueError
        If a class has fewer than 2 epochs, or the class means coincide
        (no discriminative direction).
    """
    tgt = _epoch_arrays(target_epochs)
    non = _epoch_arrays(nontarget_epochs)
    if len(tgt) < 2 or len(non) < 2:
        raise ValueError(
            f"need at least 2 epochs per class, got {len(tgt)} and {len(non)}"
        )
    tgt = np.stack(tgt)
    non = np.stack(non)
    if tgt.shape[1:] != non.shape[1:]:
        raise ValueError("target and nontarget epochs have different shapes")
    n_ch = tgt.shape[1]
    n_t, n_n = len(tgt), len(non)
    mu_t = tgt.mean(axis=0)
    mu_n = non.mean(axis=0)
    mu = (n_t * mu_t + n_n * mu_n) / (n_t + n_n)
    dt = mu_t - mu
    dn = mu_n - mu
    sb = n_t * (dt @ dt.T) + n_n * (dn @ dn.T)
    ct = tgt - mu_t
    cn = non - mu_n
    sw = np.einsum("nct,ndt->cd", ct, ct) + np.einsum("nct,ndt->cd", cn, cn)
    reg = gamma * np.trace(sw) / n_ch
    vals, vecs = scipy.linalg.eigh(sb, sw + reg * np.eye(n_ch))
    if vals[-1] <= _EIG_ZERO:
        raise ValueError("no discriminative direction: class mean responses coincide")
    idx = np.argsort(vals)[::-1][:n_filters]
    W = vecs[:, idx].T
    W = W / np.linalg.norm(W, axis=1, keepdims=True)
    return SpatialFilterBank(
        W=_fix_signs(W), method="refsf", eigenvalues=vals[idx], meta={"gamma": gamma}
    )
