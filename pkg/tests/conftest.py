import numpy as np
import pytest

from neuroeval.session import Event, EventLog, Recording


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_recording(n_channels=2, duration_sec=10.0, fs=512.0, rng=None, labels=None):
    n = int(round(duration_sec * fs))
    if rng is None:
        samples = np.zeros((n_channels, n))
    else:
        samples = rng.normal(0.0, 1.0, size=(n_channels, n))
    if labels is None:
        labels = tuple(f"ch{i}" for i in range(n_channels))
    return Recording(sample_rate_hz=fs, channel_labels=labels, samples=samples)


def make_events(times, kind="sound", **attrs):
    base = {"sound": {"is_target": True}, "letter": {"label": "K"}}.get(kind, {})
    return EventLog([Event(t_sec=t, kind=kind, attrs={**base, **attrs}) for t in times])
