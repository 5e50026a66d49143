"""Temporal signal processing: band-pass filtering, epoching, sliding windows,
anti-aliased decimation and band-power features.

All filters are zero-phase (forward-backward IIR), so event-locked latencies
are preserved.  Functions are pure and operate on immutable inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .session import Recording

BAND_POWER_FLOOR = 1e-12


@dataclass(frozen=True)
class Band:
    """A named frequency band [low_hz, high_hz]."""

    name: str
    low_hz: float
    high_hz: float

    def __post_init__(self):
        if not 0 < self.low_hz < self.high_hz:
            raise ValueError(f"invalid band edges [{self.low_hz}, {self.high_hz}]")


#: The five canonical bands used by the workload pipeline.
BANDS = (
    Band("delta", 1.0, 3.0),
    Band("theta", 4.0, 6.0),
    Band("alpha", 7.0, 13.0),
    Band("beta", 14.0, 25.0),
    Band("gamma", 26.0, 40.0),
)

BAND_BY_NAME = {b.name: b for b in BANDS}


@dataclass(frozen=True)
class Epoch:
    """A fixed-length signal slice locked to an event or window onset."""

    data: np.ndarray  # (n_channels, n_samples)
    onset_t_sec: float
    source_event_index: int = -1

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=np.float64))
        if self.data.ndim != 2:
            raise ValueError("epoch data must be 2-D (channels x samples)")

    @property
    def n_channels(self):
        return self.data.shape[0]

    @property
    def n_samples(self):
        return self.data.shape[1]


def bandpass_array(x, low_hz, high_hz, fs, order=4):
    """Zero-phase Butterworth band-pass along the last axis."""
    if high_hz >= fs / 2:
        raise ValueError(f"band edge {high_hz} Hz is at or above Nyquist ({fs / 2} Hz)")
    sos = butter(order, [low_hz, high_hz], btype="bandpass", fs=fs, output="sos")
    return sosfiltfilt(sos, x, axis=-1)


def bandpass(recording, band, order=4):
    """Band-pass a recording with a zero-phase 4th-order Butterworth filter.

    Passband gain is within 1 dB at the band center and attenuation exceeds
    20 dB one octave outside the band edges (forward-backward application
    squares the magnitude response).
    """
    filtered = bandpass_array(
        recording.samples, band.low_hz, band.high_hz, recording.sample_rate_hz, order
    )
    return Recording(
        sample_rate_hz=recording.sample_rate_hz,
        channel_labels=recording.channel_labels,
        samples=filtered,
    )


def epoch_at_events(recording, log, kinds, window, attr_filter=None):
    """Cut one epoch per matching event.

    Parameters
    ----------
    kinds : str or iterable of str
        Event kinds to epoch.
    window : (t0_sec, t1_sec)
        Epoch window relative to the event time.
    attr_filter : callable, optional
        Predicate on the event's attrs; events failing it are not epoched.

    Returns
    -------
    epochs : list of Epoch
        ``source_event_index`` refers to the position in ``log``.
    n_skipped : int
        Matching events whose window would overrun the signal; these are
        skipped, never zero-padded.
    """
    if isinstance(kinds, str):
        kinds = (kinds,)
    kinds = set(kinds)
    fs = recording.sample_rate_hz
    t0, t1 = window
    n_win = int(round((t1 - t0) * fs))
    if n_win <= 0:
        raise ValueError(f"empty epoch window {window}")
    epochs = []
    n_skipped = 0
    for i, e in enumerate(log):
        if e.kind not in kinds:
            continue
        if attr_filter is not None and not attr_filter(e.attrs):
            continue
        start = int(round((e.t_sec + t0) * fs))
        if start < 0 or start + n_win > recording.n_samples:
            n_skipped += 1
            continue
        epochs.append(
            Epoch(
                data=recording.samples[:, start : start + n_win],
                onset_t_sec=e.t_sec + t0,
                source_event_index=i,
            )
        )
    return epochs, n_skipped


def sliding_windows(recording, len_sec=2.0, hop_sec=1.0):
    """Overlapping windows over the whole recording.

    The number of windows is ``floor((duration - len) / hop) + 1``.
    """
    fs = recording.sample_rate_hz
    n_len = int(round(len_sec * fs))
    n_hop = int(round(hop_sec * fs))
    if n_len > recording.n_samples:
        raise ValueError(
            f"window of {len_sec:g}s exceeds the {recording.duration_sec:g}s recording"
        )
    if n_hop <= 0:
        raise ValueError("hop must be positive")
    starts = range(0, recording.n_samples - n_len + 1, n_hop)
    return [
        Epoch(data=recording.samples[:, s : s + n_len], onset_t_sec=s / fs)
        for s in starts
    ]


def decimate_array(x, factor=32, fs=None, order=8):
    """Anti-aliased decimation along the last axis.

    A zero-phase Butterworth low-pass with cutoff at 0.8x the new Nyquist is
    applied before subsampling (Butterworth keeps unit gain at DC).  Input is
    truncated to a multiple of ``factor``; output length is ``n // factor``.
    """
    factor = int(factor)
    if factor < 1:
        raise ValueError(f"decimation factor must be >= 1, got {factor}")
    if factor == 1:
        return np.asarray(x, dtype=np.float64).copy()
    x = np.asarray(x, dtype=np.float64)
    n_keep = (x.shape[-1] // factor) * factor
    if n_keep == 0:
        raise ValueError(f"signal of {x.shape[-1]} samples too short for factor {factor}")
    x = x[..., :n_keep]
    sos = butter(order, 0.8 / factor, btype="low", output="sos")
    low = sosfiltfilt(sos, x, axis=-1)
    return low[..., ::factor]


def decimate(epoch, factor=32):
    """Decimate an epoch; see :func:`decimate_array`."""
    return Epoch(
        data=decimate_array(epoch.data, factor),
        onset_t_sec=epoch.onset_t_sec,
        source_event_index=epoch.source_event_index,
    )


def log_band_power(epoch):
    """Log mean squared amplitude per channel, floored at ln(1e-12).

    The epoch is expected to be band- and spatially filtered already; no
    mean removal is applied.
    """
    data = epoch.data if isinstance(epoch, Epoch) else np.asarray(epoch, dtype=np.float64)
    ms = np.mean(data**2, axis=-1)
    return np.log(np.maximum(ms, BAND_POWER_FLOOR))
