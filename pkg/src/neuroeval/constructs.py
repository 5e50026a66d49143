"""End-to-end construct pipelines: train per-participant classifiers on the
calibration sessions and turn game-session EEG into a workload index, an
attention index and interaction-error counts.

Feature extraction is phrased in terms of per-window second-moment matrices,
so cross-validation folds and label-shuffle controls can refit spatial
filters cheaply without touching the raw signal again.  Index normalization
is min-max over all scores passed in together: passing both game sessions of
a participant at once keeps their means comparable.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .classify import LdaModel, cross_validate, lda_score, lda_train
from .session import ModelFile, Recording
from .sigproc import BAND_POWER_FLOOR, BANDS, Band, bandpass, decimate_array, epoch_at_events
from .spatial import SpatialFilterBank, refsf, sscsp
from .stats import grubbs_mask

logger = logging.getLogger(__name__)

#: Sampling rate the canonical feature counts (30 / 80) are stated at.
CANONICAL_FS_HZ = 512.0

ERP_WINDOW = (0.0, 1.0)
ERP_DECIM_FACTOR = 32
WORKLOAD_EPOCH_SEC = 2.0
WORKLOAD_HOP_SEC = 1.0
MIN_CLASS_EPOCHS = 10


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class WorkloadModel:
    """Trained workload pipeline: per-band spatial filters plus LDA over the
    concatenated log band-power features (5 bands x 6 filters = 30)."""

    bands: tuple
    banks: dict  # band name -> SpatialFilterBank
    lda: LdaModel
    fs_hz: float
    epoch_len_sec: float = WORKLOAD_EPOCH_SEC
    hop_sec: float = WORKLOAD_HOP_SEC
    nu: float = 0.1
    prior_bias: bool = True
    log_power: bool = True

    @property
    def n_features(self):
        return sum(self.banks[b.name].n_filters for b in self.bands)


@dataclass(frozen=True)
class ErpModel:
    """Trained ERP pipeline (attention or error): one spatial filter bank,
    anti-aliased decimation, LDA over the flattened virtual-channel
    time courses (5 channels x 16 samples = 80 at 512 Hz)."""

    construct: str
    bank: SpatialFilterBank
    lda: LdaModel
    fs_hz: float
    window: tuple = ERP_WINDOW
    decim_factor: int = ERP_DECIM_FACTOR
    prior_bias: bool = True
    baseline_correct: bool = False

    @property
    def n_features(self):
        n_win = int(round((self.window[1] - self.window[0]) * self.fs_hz))
        return self.bank.n_filters * (n_win // self.decim_factor)


@dataclass(frozen=True)
class IndexSeries:
    """Normalized construct index over time, values in [-1, +1]."""

    t_sec: np.ndarray
    values: np.ndarray
    construct: str
    n_outliers_removed: int = 0

    def __post_init__(self):
        t = np.asarray(self.t_sec, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "t_sec", t)
        object.__setattr__(self, "values", v)
        if t.shape != v.shape:
            raise ValueError("timestamps and values differ in length")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("index timestamps must be strictly increasing")
        if len(v) and (v.min() < -1 - 1e-9 or v.max() > 1 + 1e-9):
            raise ValueError("index values outside [-1, +1]")


@dataclass(frozen=True)
class ErrorCount:
    """Interaction-error tally over one game session."""

    n_error_labeled: int
    n_interactions: int

    @property
    def proportion(self):
        return self.n_error_labeled / self.n_interactions if self.n_interactions else 0.0


# ---------------------------------------------------------------------------
# second-moment feature plumbing


def _window_view(samples, n_len, n_hop):
    """Strided (n_windows, n_channels, n_len) view, hop n_hop samples."""
    sw = np.lib.stride_tricks.sliding_window_view(samples, n_len, axis=1)
    return sw[:, ::n_hop, :].transpose(1, 0, 2)


def _batched_moments(arr, chunk=256):
    """Raw second moments x x' / T for a stack of windows."""
    n, ch, t = arr.shape
    out = np.empty((n, ch, ch))
    for i in range(0, n, chunk):
        block = np.ascontiguousarray(arr[i : i + chunk])
        out[i : i + chunk] = block @ block.transpose(0, 2, 1) / t
    return out


def _batched_trace_normed_cov(arr, chunk=256):
    """Per-trial mean-removed covariances, trace-normalized to n_channels."""
    n, ch, t = arr.shape
    out = np.empty((n, ch, ch))
    for i in range(0, n, chunk):
        block = np.ascontiguousarray(arr[i : i + chunk])
        block = block - block.mean(axis=2, keepdims=True)
        covs = block @ block.transpose(0, 2, 1) / (t - 1)
        tr = np.trace(covs, axis1=1, axis2=2)
        tr = np.where(tr > 0, tr, 1.0)
        out[i : i + chunk] = covs * (ch / tr)[:, None, None]
    return out


def _logpower_features(moments, W, log_power=True):
    """Mean squared amplitude of each virtual channel, from raw moments.

    diag(W M W') equals mean((W x)**2) exactly, so the training and scoring
    paths share one arithmetic.
    """
    proj = np.matmul(np.matmul(W, moments), W.T)
    power = np.diagonal(proj, axis1=1, axis2=2)
    if not log_power:
        return power.copy()
    return np.log(np.maximum(power, BAND_POWER_FLOOR))


def normalize_unit_range(values):
    """Min-max map to [-1, +1]; a degenerate (constant) input maps to 0."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return 2.0 * (values - lo) / (hi - lo) - 1.0


def _index_chain(t_per_session, scores_per_session, construct, alpha=0.05):
    """Shared score -> index chain: pooled Grubbs removal, then one min-max
    normalization over everything, split back per session."""
    pooled = np.concatenate(scores_per_session)
    if len(pooled) < 3:
        raise ValueError(f"need at least 3 scores for outlier removal, got {len(pooled)}")
    keep = grubbs_mask(pooled, alpha)
    normalized = np.full(len(pooled), np.nan)
    normalized[keep] = normalize_unit_range(pooled[keep])
    out = []
    start = 0
    for t, s in zip(t_per_session, scores_per_session):
        stop = start + len(s)
        k = keep[start:stop]
        out.append(
            IndexSeries(
                t_sec=np.asarray(t)[k],
                values=normalized[start:stop][k],
                construct=construct,
                n_outliers_removed=int((~k).sum()),
            )
        )
        start = stop
    return out


# ---------------------------------------------------------------------------
# workload pipeline


class WorkloadTrainer:
    """Cached workload-pipeline fitter over one calibration session.

    Band-passes the calibration once, keeps per-trial covariances (for the
    spatial filters) and raw second moments (for the band-power features), so
    cross-validation folds and label shuffles retrain in milliseconds.  The
    use-context covariance for the stationarity penalty is pooled over
    sliding windows of the supplied game recordings, unsupervised.
    """

    def __init__(
        self,
        calib_recording,
        calib_events,
        use_recordings,
        bands=BANDS,
        nu=0.1,
        n_per_side=3,
        prior_bias=True,
        log_power=True,
        epoch_len_sec=WORKLOAD_EPOCH_SEC,
        min_class_epochs=MIN_CLASS_EPOCHS,
    ):
        if isinstance(use_recordings, Recording):
            use_recordings = [use_recordings]
        self.bands = tuple(bands)
        self.nu = nu
        self.n_per_side = n_per_side
        self.prior_bias = prior_bias
        self.log_power = log_power
        self.epoch_len_sec = epoch_len_sec
        self.min_class_epochs = min_class_epochs
        self.fs_hz = calib_recording.sample_rate_hz
        n_len = int(round(epoch_len_sec * self.fs_hz))
        n_hop = int(round(WORKLOAD_HOP_SEC * self.fs_hz))

        self.trial_covs = {}
        self.trial_moments = {}
        self.sigma_use = {}
        labels = None
        for band in self.bands:
            filt = bandpass(calib_recording, band)
            epochs, n_skipped = epoch_at_events(
                filt, calib_events, "letter", (0.0, epoch_len_sec)
            )
            if not epochs:
                raise ValueError("calibration has no letter epochs")
            if n_skipped:
                logger.warning("%d letter epochs overran the calibration signal", n_skipped)
            if labels is None:
                labels = []
                for ep in epochs:
                    attrs = calib_events.events[ep.source_event_index].attrs
                    if "block" not in attrs:
                        raise ValueError("letter events need a 'block' attr (low/high)")
                    labels.append(attrs["block"] == "high")
                labels = np.asarray(labels, dtype=bool)
            stack = np.stack([e.data for e in epochs])
            self.trial_covs[band.name] = _batched_trace_normed_cov(stack)
            self.trial_moments[band.name] = _batched_moments(stack)
            del stack, filt

            use_covs = []
            for rec in use_recordings:
                bp = bandpass(rec, band)
                view = _window_view(bp.samples, n_len, n_hop)
                use_covs.append(_batched_trace_normed_cov(view))
                del bp
            self.sigma_use[band.name] = np.concatenate(use_covs).mean(axis=0)
            del use_covs
        self.labels = labels
        self.n_trials = len(labels)

    def _fit(self, idx, labels):
        n_pos = int(labels.sum())
        n_neg = len(labels) - n_pos
        if min(n_pos, n_neg) < self.min_class_epochs:
            raise ValueError(
                f"workload training needs >= {self.min_class_epochs} epochs per class, "
                f"got {n_pos} high / {n_neg} low"
            )
        banks = {}
        feats = []
        for band in self.bands:
            covs = self.trial_covs[band.name][idx]
            cov_hi = covs[labels].mean(axis=0)
            cov_lo = covs[~labels].mean(axis=0)
            bank = sscsp(
                cov_hi, cov_lo, self.sigma_use[band.name], nu=self.nu, n_per_side=self.n_per_side
            )
            banks[band.name] = bank
            feats.append(
                _logpower_features(self.trial_moments[band.name][idx], bank.W, self.log_power)
            )
        X = np.hstack(feats)
        lda = lda_train(X, labels, prior_bias=self.prior_bias)
        return WorkloadModel(
            bands=self.bands,
            banks=banks,
            lda=lda,
            fs_hz=self.fs_hz,
            epoch_len_sec=self.epoch_len_sec,
            nu=self.nu,
            prior_bias=self.prior_bias,
            log_power=self.log_power,
        )

    def train(self, labels=None):
        labels = self.labels if labels is None else np.asarray(labels, dtype=bool)
        return self._fit(np.arange(self.n_trials), labels)

    def _score_subset(self, model, idx):
        feats = np.hstack(
            [
                _logpower_features(
                    self.trial_moments[b.name][idx], model.banks[b.name].W, model.log_power
                )
                for b in self.bands
            ]
        )
        return lda_score(model.lda, feats)

    def cv_auroc(self, k=4, seed=0):
        """Stratified k-fold CV accuracy (mean AUROC) of the full pipeline;
        spatial filters are refit inside every fold."""
        idx_all = np.arange(self.n_trials)

        def build(train_idx, train_labels):
            model = self._fit(np.asarray(train_idx), train_labels)
            return lambda test_idx: self._score_subset(model, np.asarray(test_idx))

        return cross_validate(idx_all, self.labels, build, k=k, seed=seed)

    def prepare_scoring(self, recording):
        """Precompute per-band window moments of a game recording, so any
        model from this trainer can score it without refiltering."""
        if recording.sample_rate_hz != self.fs_hz:
            raise ValueError(
                f"recording at {recording.sample_rate_hz} Hz, trainer at {self.fs_hz} Hz"
            )
        n_len = int(round(self.epoch_len_sec * self.fs_hz))
        n_hop = int(round(WORKLOAD_HOP_SEC * self.fs_hz))
        moments = {}
        for band in self.bands:
            bp = bandpass(recording, band)
            view = _window_view(bp.samples, n_len, n_hop)
            moments[band.name] = _batched_moments(view)
            del bp
        n_win = len(moments[self.bands[0].name])
        t = np.arange(n_win) * WORKLOAD_HOP_SEC
        return t, moments

    def score_prepared(self, model, prepared):
        t, moments = prepared
        feats = np.hstack(
            [
                _logpower_features(moments[b.name], model.banks[b.name].W, model.log_power)
                for b in self.bands
            ]
        )
        return t, lda_score(model.lda, feats)


def train_workload(calib_recording, calib_events, use_recordings, **kwargs):
    """Train the workload model from an N-back calibration session.

    ``use_recordings`` (one or more game recordings) supply the unsupervised
    use-context statistics for the stationarity-regularized spatial filters.
    Letter events must carry a ``block`` attr ("low"/"high"); the high-load
    class is the positive one.
    """
    return WorkloadTrainer(calib_recording, calib_events, use_recordings, **kwargs).train()


def workload_scores(model, recording):
    """Raw classifier output (hyperplane distance) per sliding window.

    Returns (window start times, scores).
    """
    if recording.sample_rate_hz != model.fs_hz:
        raise ValueError(
            f"recording at {recording.sample_rate_hz} Hz but model trained at {model.fs_hz} Hz"
        )
    n_len = int(round(model.epoch_len_sec * model.fs_hz))
    n_hop = int(round(model.hop_sec * model.fs_hz))
    if n_len > recording.n_samples:
        raise ValueError("game recording shorter than one scoring window")
    feats = []
    for band in model.bands:
        bp = bandpass(recording, band)
        view = _window_view(bp.samples, n_len, n_hop)
        moments = _batched_moments(view)
        feats.append(_logpower_features(moments, model.banks[band.name].W, model.log_power))
        del bp
    X = np.hstack(feats)
    t = np.arange(X.shape[0]) * model.hop_sec
    return t, lda_score(model.lda, X)


def workload_indices(model, recordings, alpha=0.05):
    """Workload index for several sessions of one participant, normalized
    jointly (outlier removal and the [-1, +1] map run over the pooled
    scores, so session means stay comparable)."""
    pairs = [workload_scores(model, rec) for rec in recordings]
    return _index_chain([t for t, _ in pairs], [s for _, s in pairs], "workload", alpha)


def workload_index(model, recording, alpha=0.05):
    """Workload index over one game session; see :func:`workload_indices`."""
    return workload_indices(model, [recording], alpha)[0]


# ---------------------------------------------------------------------------
# ERP pipelines (attention, error)

_ERP_EVENT_SPEC = {
    "attention": ("sound", None),
    "error": ("movement", "is_error"),
}


def _erp_epoch_stack(recording, log, kind, window, attr_filter=None, baseline_correct=False):
    epochs, n_skipped = epoch_at_events(recording, log, kind, window, attr_filter)
    if n_skipped:
        logger.warning("%d %s epochs overran the signal and were skipped", n_skipped, kind)
    if not epochs:
        return np.zeros((0,)), np.zeros((0, recording.n_channels, 0)), []
    t = np.array([e.onset_t_sec for e in epochs])
    stack = np.stack([e.data for e in epochs])
    if baseline_correct:
        stack = stack - stack.mean(axis=2, keepdims=True)
    return t, stack, [e.source_event_index for e in epochs]


class ErpTrainer:
    """Cached ERP-pipeline fitter (shared by attention and error).

    Keeps the full-rate epochs (for the spatial-filter scatter) and their
    decimated versions (for the features; channel mixing and time decimation
    commute, so filtering once is exact).
    """

    def __init__(
        self,
        recording,
        log,
        construct,
        n_filters=5,
        gamma=1e-3,
        decim_factor=ERP_DECIM_FACTOR,
        prior_bias=True,
        baseline_correct=False,
        min_positive_epochs=MIN_CLASS_EPOCHS,
        window=ERP_WINDOW,
    ):
        if construct not in _ERP_EVENT_SPEC:
            raise ValueError(f"unknown ERP construct {construct!r}")
        kind, label_attr = _ERP_EVENT_SPEC[construct]
        label_attr = label_attr or "is_target"
        self.construct = construct
        self.n_filters = n_filters
        self.gamma = gamma
        self.decim_factor = decim_factor
        self.prior_bias = prior_bias
        self.baseline_correct = baseline_correct
        self.min_positive_epochs = min_positive_epochs
        self.window = window
        self.fs_hz = recording.sample_rate_hz
        _, stack, src = _erp_epoch_stack(
            recording, log, kind, window, baseline_correct=baseline_correct
        )
        if len(stack) == 0:
            raise ValueError(f"no {kind} epochs in the calibration session")
        self.epochs = stack
        self.dec = decimate_array(stack, decim_factor)
        self.labels = np.array(
            [bool(log.events[i].attrs[label_attr]) for i in src], dtype=bool
        )
        self.n_trials = len(self.labels)
        if self.fs_hz != CANONICAL_FS_HZ:
            logger.warning(
                "sample rate %g Hz: ERP feature count is %d per epoch (not the canonical 80)",
                self.fs_hz,
                n_filters * (stack.shape[2] // decim_factor),
            )

    def _fit(self, idx, labels):
        n_pos = int(labels.sum())
        if n_pos < self.min_positive_epochs:
            raise ValueError(
                f"{self.construct} training needs >= {self.min_positive_epochs} "
                f"positive epochs, got {n_pos}"
            )
        sub = self.epochs[idx]
        bank = refsf(sub[labels], sub[~labels], n_filters=self.n_filters, gamma=self.gamma)
        feats = np.matmul(bank.W, self.dec[idx]).reshape(len(idx), -1)
        lda = lda_train(feats, labels, prior_bias=self.prior_bias)
        return ErpModel(
            construct=self.construct,
            bank=bank,
            lda=lda,
            fs_hz=self.fs_hz,
            window=self.window,
            decim_factor=self.decim_factor,
            prior_bias=self.prior_bias,
            baseline_correct=self.baseline_correct,
        )

    def train(self, labels=None):
        labels = self.labels if labels is None else np.asarray(labels, dtype=bool)
        return self._fit(np.arange(self.n_trials), labels)

    def _score_subset(self, model, idx):
        feats = np.matmul(model.bank.W, self.dec[idx]).reshape(len(idx), -1)
        return lda_score(model.lda, feats)

    def cv_auroc(self, k=4, seed=0):
        idx_all = np.arange(self.n_trials)

        def build(train_idx, train_labels):
            model = self._fit(np.asarray(train_idx), train_labels)
            return lambda test_idx: self._score_subset(model, np.asarray(test_idx))

        return cross_validate(idx_all, self.labels, build, k=k, seed=seed)


def train_attention(recording, log, **kwargs):
    """Train the attention model from an oddball calibration (targets vs
    distractor sounds, 1 s epochs from stimulus onset)."""
    return ErpTrainer(recording, log, "attention", **kwargs).train()


def train_error(recording, log, **kwargs):
    """Train the error-recognition model from the rail-robot calibration
    (erroneous vs correct movements, 1 s epochs from movement onset)."""
    return ErpTrainer(recording, log, "error", **kwargs).train()


def erp_scores(model, recording, log, kind, attr_filter=None):
    """Classifier score per 1 s event-locked epoch.  Returns (times, scores)."""
    if recording.sample_rate_hz != model.fs_hz:
        raise ValueError(
            f"recording at {recording.sample_rate_hz} Hz but model trained at {model.fs_hz} Hz"
        )
    t, stack, _ = _erp_epoch_stack(
        recording, log, kind, model.window, attr_filter, model.baseline_correct
    )
    if len(stack) == 0:
        return t, np.zeros(0)
    dec = decimate_array(stack, model.decim_factor)
    feats = np.matmul(model.bank.W, dec).reshape(len(dec), -1)
    return t, lda_score(model.lda, feats)


def attention_indices(model, sessions, alpha=0.05):
    """Attention index over target-sound epochs for several sessions of one
    participant, normalized jointly (same chain as the workload index)."""
    ts, ss = [], []
    for recording, log in sessions:
        t, s = erp_scores(model, recording, log, "sound", lambda a: a.get("is_target"))
        if len(s) == 0:
            raise ValueError("session has no target-sound events to score")
        ts.append(t)
        ss.append(s)
    return _index_chain(ts, ss, "attention", alpha)


def attention_index(model, recording, log, alpha=0.05):
    """Attention index for a single game session."""
    return attention_indices(model, [(recording, log)], alpha)[0]


def count_errors(model, recording, log):
    """Label every 1 s post-selection epoch, count the error-labeled ones.

    An interaction is error-labeled when its score (prior-adjusted hyperplane
    distance) is positive.  Returns an :class:`ErrorCount`.
    """
    t, scores = erp_scores(model, recording, log, "selection")
    if len(scores) == 0:
        raise ValueError("session has no selection events to classify")
    return ErrorCount(
        n_error_labeled=int((scores > 0).sum()), n_interactions=int(len(scores))
    )


# ---------------------------------------------------------------------------
# label-shuffle control


def condition_contrast(construct, model, use_sessions, trainer=None, prepared=None):
    """Second-minus-first condition contrast for one trained model.

    For workload and attention the contrast is the difference of mean
    jointly-normalized indices; for error it is the difference of
    error-labeled proportions.
    """
    (rec_a, log_a), (rec_b, log_b) = use_sessions
    if construct == "workload":
        if trainer is not None and prepared is not None:
            pairs = [trainer.score_prepared(model, p) for p in prepared]
            series = _index_chain(
                [t for t, _ in pairs], [s for _, s in pairs], "workload"
            )
        else:
            series = workload_indices(model, [rec_a, rec_b])
        return float(series[1].values.mean() - series[0].values.mean())
    if construct == "attention":
        series = attention_indices(model, use_sessions)
        return float(series[1].values.mean() - series[0].values.mean())
    if construct == "error":
        ca = count_errors(model, rec_a, log_a)
        cb = count_errors(model, rec_b, log_b)
        return cb.proportion - ca.proportion
    raise ValueError(f"unknown construct {construct!r}")


def shuffle_control(
    calib_recording,
    calib_events,
    use_sessions,
    construct,
    n_shuffles=20,
    seed=0,
    **train_kwargs,
):
    """Null distribution of the condition contrast under shuffled calibration
    labels.

    For each shuffle the calibration labels are randomly permuted, the full
    pipeline is retrained, and the two-condition contrast (second minus
    first, e.g. touch minus keyboard) is recomputed.  Returns the
    ``n_shuffles`` contrasts; deterministic given the seed.
    """
    if construct == "workload":
        trainer = WorkloadTrainer(
            calib_recording, calib_events, [r for r, _ in use_sessions], **train_kwargs
        )
        prepared = [trainer.prepare_scoring(r) for r, _ in use_sessions]
    else:
        trainer = ErpTrainer(calib_recording, calib_events, construct, **train_kwargs)
        prepared = None
    rng = np.random.default_rng(seed)
    contrasts = []
    for _ in range(n_shuffles):
        labels = trainer.labels[rng.permutation(trainer.n_trials)]
        model = trainer.train(labels)
        contrasts.append(
            condition_contrast(construct, model, use_sessions, trainer, prepared)
        )
    return np.asarray(contrasts)


# ---------------------------------------------------------------------------
# model-file packing


def model_to_file(model):
    """Pack a trained construct model into a generic :class:`ModelFile`."""
    if isinstance(model, WorkloadModel):
        scalars = {
            "fs_hz": model.fs_hz,
            "epoch_len_sec": model.epoch_len_sec,
            "hop_sec": model.hop_sec,
            "nu": model.nu,
            "prior_bias": float(model.prior_bias),
            "log_power": float(model.log_power),
            "lda_bias": model.lda.b,
            "lda_shrinkage": model.lda.shrinkage,
        }
        matrices = {"lda_w": model.lda.w[None, :]}
        for band in model.bands:
            scalars[f"band_{band.name}_low"] = band.low_hz
            scalars[f"band_{band.name}_high"] = band.high_hz
            matrices[f"W_{band.name}"] = model.banks[band.name].W
            matrices[f"eig_{band.name}"] = model.banks[band.name].eigenvalues[None, :]
        return ModelFile(construct="workload", matrices=matrices, scalars=scalars)
    if isinstance(model, ErpModel):
        scalars = {
            "fs_hz": model.fs_hz,
            "window_t0": model.window[0],
            "window_t1": model.window[1],
            "decim_factor": float(model.decim_factor),
            "prior_bias": float(model.prior_bias),
            "baseline_correct": float(model.baseline_correct),
            "lda_bias": model.lda.b,
            "lda_shrinkage": model.lda.shrinkage,
        }
        matrices = {
            "lda_w": model.lda.w[None, :],
            "spatial_W": model.bank.W,
            "spatial_eig": model.bank.eigenvalues[None, :],
        }
        return ModelFile(construct=model.construct, matrices=matrices, scalars=scalars)
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_file(mf):
    """Rebuild a scoring-equivalent construct model from a ModelFile.

    Cross-checks the stored dimensions (filter-bank channel counts agree,
    LDA weight length matches the feature count).
    """
    lda = LdaModel(
        w=mf.matrices["lda_w"].ravel(),
        b=mf.scalars["lda_bias"],
        shrinkage=mf.scalars["lda_shrinkage"],
    )
    if mf.construct == "workload":
        bands = []
        banks = {}
        n_feats = 0
        n_channels = None
        for canonical in BANDS:
            name = canonical.name
            if f"W_{name}" not in mf.matrices:
                raise ValueError(f"workload model is missing the {name} filter bank")
            W = mf.matrices[f"W_{name}"]
            if n_channels is None:
                n_channels = W.shape[1]
            elif W.shape[1] != n_channels:
                raise ValueError("filter banks disagree on the channel count")
            bands.append(
                Band(name, mf.scalars[f"band_{name}_low"], mf.scalars[f"band_{name}_high"])
            )
            banks[name] = SpatialFilterBank(
                W=W, method="sscsp", eigenvalues=mf.matrices[f"eig_{name}"].ravel()
            )
            n_feats += W.shape[0]
        if len(lda.w) != n_feats:
            raise ValueError(
                f"LDA expects {len(lda.w)} features but the banks produce {n_feats}"
            )
        return WorkloadModel(
            bands=tuple(bands),
            banks=banks,
            lda=lda,
            fs_hz=mf.scalars["fs_hz"],
            epoch_len_sec=mf.scalars["epoch_len_sec"],
            hop_sec=mf.scalars["hop_sec"],
            nu=mf.scalars["nu"],
            prior_bias=bool(mf.scalars["prior_bias"]),
            log_power=bool(mf.scalars["log_power"]),
        )
    bank = SpatialFilterBank(
        W=mf.matrices["spatial_W"],
        method="refsf",
        eigenvalues=mf.matrices["spatial_eig"].ravel(),
    )
    model = ErpModel(
        construct=mf.construct,
        bank=bank,
        lda=lda,
        fs_hz=mf.scalars["fs_hz"],
        window=(mf.scalars["window_t0"], mf.scalars["window_t1"]),
        decim_factor=int(mf.scalars["decim_factor"]),
        prior_bias=bool(mf.scalars["prior_bias"]),
        baseline_correct=bool(mf.scalars["baseline_correct"]),
    )
    if len(lda.w) != model.n_features:
        raise ValueError(
            f"LDA expects {len(lda.w)} features but the pipeline produces {model.n_features}"
        )
    return model
