"""Canonical data model for EEG sessions: recordings, event logs and model files.

Recordings are plain-text CSV with a one-line header, event logs are JSON
lines, trained models are a versioned plain-text matrix container.  All
values are immutable after construction and safe to share across threads.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import polars as pl

RECORDING_MAGIC = "#neuroeval-eeg"
MODEL_MAGIC = "#neuroeval-model"
FORMAT_VERSION = 1

#: Storage precision of recording samples (decimal places in the CSV).
SAMPLE_DECIMALS = 6

#: 32-channel montage, frontal to occipital.
CHANNELS_32 = (
    "AF3", "AFz", "AF4", "F7", "F3", "Fz", "F4", "F8",
    "FC3", "FCz", "FC4", "C5", "C3", "C1", "Cz", "C2",
    "C4", "C6", "CP3", "CPz", "CP4", "P7", "P3", "Pz",
    "P4", "P8", "PO7", "POz", "PO8", "O1", "Oz", "O2",
)

DEFAULT_SAMPLE_RATE_HZ = 512.0

EVENT_KINDS = ("letter", "sound", "movement", "selection", "level_start", "level_end")

#: Attributes every event of a given kind must carry.
REQUIRED_ATTRS = {
    "letter": ("label",),
    "sound": ("is_target",),
    "movement": ("is_error",),
    "selection": ("correct",),
    "level_start": ("difficulty", "technique"),
    "level_end": (),
}

CONSTRUCTS = ("workload", "attention", "error")


@dataclass(frozen=True)
class Recording:
    """Multichannel sampled EEG signal in microvolts.

    Attributes
    ----------
    sample_rate_hz : float
        Sampling rate, > 0.
    channel_labels : tuple of str
        Unique channel names, one per row of ``samples``.
    samples : (n_channels, n_samples) ndarray
        Signal matrix, float64 microvolts.
    """

    sample_rate_hz: float
    channel_labels: tuple
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "channel_labels", tuple(self.channel_labels))
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise ValueError(f"samples must be 2-D, got shape {samples.shape}")
        object.__setattr__(self, "samples", samples)
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if samples.shape[0] != len(self.channel_labels):
            raise ValueError(
                f"{samples.shape[0]} signal rows but {len(self.channel_labels)} channel labels"
            )
        if len(set(self.channel_labels)) != len(self.channel_labels):
            raise ValueError("channel labels are not unique")
        if samples.shape[1] == 0:
            raise ValueError("recording has no samples")

    @property
    def n_channels(self):
        return self.samples.shape[0]

    @property
    def n_samples(self):
        return self.samples.shape[1]

    @property
    def duration_sec(self):
        return self.n_samples / self.sample_rate_hz


@dataclass(frozen=True)
class Event:
    """One timestamped protocol event with a flat scalar attribute map."""

    t_sec: float
    kind: str
    attrs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t_sec < 0:
            raise ValueError(f"event time must be >= 0, got {self.t_sec}")
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        missing = [a for a in REQUIRED_ATTRS[self.kind] if a not in self.attrs]
        if missing:
            raise ValueError(f"{self.kind} event at t={self.t_sec} missing attrs {missing}")


@dataclass(frozen=True)
class EventLog:
    """Ordered list of events, sorted by time (non-decreasing)."""

    events: tuple

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        times = [e.t_sec for e in self.events]
        for i in range(1, len(times)):
            if times[i] < times[i - 1]:
                raise ValueError(
                    f"events out of order: t={times[i]} at index {i} after t={times[i - 1]}"
                )

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def of_kind(self, kind):
        """Events of the given kind, in order."""
        return [e for e in self.events if e.kind == kind]

    def merged_with(self, other):
        """New log containing both event sets, re-sorted by time."""
        ev = sorted(list(self.events) + list(other.events), key=lambda e: e.t_sec)
        return EventLog(ev)


@dataclass(frozen=True)
class ModelFile:
    """Generic trained-pipeline container: named matrices plus named scalars.

    Dimension relations between entries are validated by the construct
    code that packs/unpacks it, not here.
    """

    construct: str
    matrices: dict
    scalars: dict
    version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.construct not in CONSTRUCTS:
            raise ValueError(f"unknown construct {self.construct!r}")
        for name, m in self.matrices.items():
            if np.asarray(m).ndim != 2:
                raise ValueError(f"matrix {name!r} is not 2-D")


def save_recording(recording, path):
    """Write a recording to ``path`` in the v1 CSV format.

    First line is ``#neuroeval-eeg v1 fs=<float> channels=<comma-separated>``,
    then one CSV row per sample instant, one column per channel.  Samples are
    stored with 6 decimal places, so a round trip is exact to 5e-7.
    """
    path = Path(path)
    header = "{} v{} fs={!r} channels={}\n".format(
        RECORDING_MAGIC,
        FORMAT_VERSION,
        float(recording.sample_rate_hz),
        ",".join(recording.channel_labels),
    )
    frame = pl.DataFrame(
        recording.samples.T, schema=[f"c{i}" for i in range(recording.n_channels)]
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        frame.write_csv(fh, include_header=False, float_precision=SAMPLE_DECIMALS)


def _parse_recording_header(line):
    parts = line.strip().split(" ")
    if len(parts) != 4 or parts[0] != RECORDING_MAGIC:
        raise ValueError(f"line 1: malformed header {line.strip()!r}")
    if parts[1] != f"v{FORMAT_VERSION}":
        raise ValueError(f"line 1: unsupported format version {parts[1]!r}")
    if not parts[2].startswith("fs=") or not parts[3].startswith("channels="):
        raise ValueError(f"line 1: malformed header {line.strip()!r}")
    try:
        fs = float(parts[2][3:])
    except ValueError:
        raise ValueError(f"line 1: bad sample rate {parts[2][3:]!r}") from None
    channels = tuple(c for c in parts[3][9:].split(",") if c)
    if not channels:
        raise ValueError("line 1: header declares no channels")
    return fs, channels


def _diagnose_rows(path, n_channels):
    """Slow per-line scan used only to produce a precise parse error."""
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        fh.readline()
        for lineno, line in enumerate(fh, start=2):
            fields = line.rstrip("\n").split(",")
            if len(fields) != n_channels:
                raise ValueError(
                    f"line {lineno}: expected {n_channels} values, found {len(fields)}"
                )
            for j, tok in enumerate(fields):
                try:
                    v = float(tok)
                except ValueError:
                    raise ValueError(
                        f"line {lineno}: column {j + 1} is not a number: {tok!r}"
                    ) from None
                if not math.isfinite(v):
                    raise ValueError(f"line {lineno}: non-finite sample {tok!r}")
    raise ValueError("recording file could not be parsed")


def load_recording(path):
    """Read a recording written by :func:`save_recording`.

    Raises
    ------
    ValueError
        On malformed header, ragged rows or non-finite samples; the message
        names the offending line.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        first = fh.readline().decode("ascii", errors="replace")
    fs, channels = _parse_recording_header(first)
    try:
        frame = pl.read_csv(
            path,
            has_header=False,
            skip_rows=1,
            infer_schema_length=100,
            schema_overrides={f"column_{i + 1}": pl.Float64 for i in range(len(channels))},
        )
    except Exception:
        _diagnose_rows(path, len(channels))
        raise
    if frame.width != len(channels) or frame.null_count().sum_horizontal().item() > 0:
        _diagnose_rows(path, len(channels))
    data = frame.to_numpy().astype(np.float64).T
    if data.shape[1] == 0:
        raise ValueError("line 2: recording contains no sample rows")
    if not np.all(np.isfinite(data)):
        bad = np.argwhere(~np.isfinite(data))[0]
        raise ValueError(f"line {bad[1] + 2}: non-finite sample in column {bad[0] + 1}")
    return Recording(sample_rate_hz=fs, channel_labels=channels, samples=data)


def save_events(log, path):
    """Write an event log to JSON lines: keys ``t``, ``kind``, then attrs."""
    with open(path, "w", encoding="ascii") as fh:
        for e in log:
            rec = {"t": e.t_sec, "kind": e.kind}
            rec.update(dict(sorted(e.attrs.items())))
            fh.write(json.dumps(rec) + "\n")


def load_events(path):
    """Read an event log written by :func:`save_events`.

    Every line must carry ``t`` and ``kind``; unknown kinds, missing required
    attributes and unsorted timestamps raise ``ValueError`` with the line
    number.  No event is ever silently dropped.
    """
    events = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                raise ValueError(f"line {lineno}: blank line in event file")
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(rec, dict) or "t" not in rec or "kind" not in rec:
                raise ValueError(f"line {lineno}: event needs keys 't' and 'kind'")
            t = rec.pop("t")
            kind = rec.pop("kind")
            try:
                events.append(Event(t_sec=float(t), kind=kind, attrs=rec))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
    try:
        return EventLog(events)
    except ValueError as exc:
        raise ValueError(f"{exc} (in {path})") from None


def validate_pair(recording, log, epoch_len_sec=1.0):
    """Cross-check an event log against a recording.

    Returns a list of warning strings; never raises.  Flags events past the
    end of the signal and events whose epoch window would overrun it.
    """
    warnings = []
    duration = recording.duration_sec
    if len(log) == 0:
        warnings.append("no events")
        return warnings
    for i, e in enumerate(log):
        if e.t_sec > duration:
            warnings.append(
                f"event {i} ({e.kind}) at t={e.t_sec:g}s is beyond the {duration:g}s recording"
            )
        elif e.t_sec + epoch_len_sec > duration:
            warnings.append(
                f"event {i} ({e.kind}) at t={e.t_sec:g}s: {epoch_len_sec:g}s epoch overruns the recording"
            )
    return warnings


def save_model(model, path):
    """Write a model file: versioned plain text, matrices as ``name rows cols``
    headers followed by row-major decimal floats."""
    lines = [f"{MODEL_MAGIC} v{model.version} construct={model.construct}"]
    for name in sorted(model.scalars):
        lines.append(f"scalar {name} {model.scalars[name]!r}")
    for name in sorted(model.matrices):
        m = np.asarray(model.matrices[name], dtype=np.float64)
        lines.append(f"matrix {name} {m.shape[0]} {m.shape[1]}")
        for row in m:
            lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_model(path):
    """Read a model file written by :func:`save_model`."""
    text = Path(path).read_text(encoding="ascii").splitlines()
    if not text:
        raise ValueError("empty model file")
    head = text[0].split(" ")
    if len(head) != 3 or head[0] != MODEL_MAGIC or not head[2].startswith("construct="):
        raise ValueError(f"line 1: malformed model header {text[0]!r}")
    if head[1] != f"v{FORMAT_VERSION}":
        raise ValueError(f"line 1: unsupported model version {head[1]!r}")
    construct = head[2].split("=", 1)[1]
    scalars = {}
    matrices = {}
    i = 1
    while i < len(text):
        parts = text[i].split(" ")
        if parts[0] == "scalar" and len(parts) == 3:
            scalars[parts[1]] = float(parts[2])
            i += 1
        elif parts[0] == "matrix" and len(parts) == 4:
            rows, cols = int(parts[2]), int(parts[3])
            block = text[i + 1 : i + 1 + rows]
            if len(block) != rows:
                raise ValueError(f"line {i + 1}: matrix {parts[1]!r} is truncated")
            m = np.array([[float(v) for v in line.split(" ")] for line in block])
            if m.shape != (rows, cols):
                raise ValueError(f"line {i + 1}: matrix {parts[1]!r} has ragged rows")
            matrices[parts[1]] = m
            i += 1 + rows
        elif not text[i].strip():
            i += 1
        else:
            raise ValueError(f"line {i + 1}: unrecognized model entry {text[i]!r}")
    return ModelFile(construct=construct, matrices=matrices, scalars=scalars)
