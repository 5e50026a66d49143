"""Synthetic-EEG forward model: pink background noise, band-limited
oscillatory sources tied to a latent workload series, and additive ERP
templates tied to protocol events.

This is the ground truth that makes the whole pipeline verifiable at desk
scale: spatial structure comes from Gaussian falloff over the channel list
around named center channels (no head geometry), discriminability is the
goal rather than physiological fidelity.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .protocols import (
    default_player_skill,
    gen_errp_task,
    gen_maze_session,
    gen_nback,
    gen_oddball,
    make_session_plan,
    simulate_player,
)
from .session import CHANNELS_32, DEFAULT_SAMPLE_RATE_HZ, Recording


@dataclass(frozen=True)
class ForwardModelConfig:
    """Parameters of the synthetic-EEG generator.

    Amplitudes are RMS microvolts for the oscillatory sources and peak
    microvolts for the ERP templates; ``workload_gain`` scales instantaneous
    source power as ``1 + gain * latent``.  Spatial profiles are Gaussians
    over the channel-list index around a named center channel.
    """

    channel_labels: tuple = CHANNELS_32
    fs_hz: float = DEFAULT_SAMPLE_RATE_HZ
    noise_amp_uv: float = 10.0
    pink_exponent: float = 1.0
    theta_center: str = "Fz"
    theta_width_ch: float = 3.0
    theta_amp_uv: float = 4.5
    alpha_center: str = "Pz"
    alpha_width_ch: float = 3.0
    alpha_amp_uv: float = 4.5
    workload_gain: float = 3.0
    p300_center: str = "Pz"
    p300_width_ch: float = 3.0
    p300_amp_uv: float = 7.0
    p300_peak_sec: float = 0.300
    p300_sigma_sec: float = 0.080
    errp_center: str = "FCz"
    errp_width_ch: float = 3.0
    errp_amp_uv: float = 10.0
    errp_neg_peak_sec: float = 0.250
    errp_pos_peak_sec: float = 0.320
    errp_sigma_sec: float = 0.035
    seed: int = 0

    def __post_init__(self):
        for name in ("noise_amp_uv", "theta_amp_uv", "alpha_amp_uv", "p300_amp_uv", "errp_amp_uv"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("theta_center", "alpha_center", "p300_center", "errp_center"):
            if getattr(self, name) not in self.channel_labels:
                raise ValueError(f"{name} {getattr(self, name)!r} not in channel labels")

    @property
    def n_channels(self):
        return len(self.channel_labels)


#: Named presets: "paper-like" is the default SNR (amplitudes frozen once so
#: the three calibration classifiers land near their human-scale accuracy),
#: "null" switches every construct-linked source off, "high-snr" doubles them.
def preset_config(name, seed=0):
    base = ForwardModelConfig(seed=seed)
    if name == "paper-like":
        return base
    if name == "null":
        return replace(base, workload_gain=0.0, p300_amp_uv=0.0, errp_amp_uv=0.0)
    if name == "high-snr":
        return replace(
            base,
            workload_gain=2.0 * base.workload_gain,
            theta_amp_uv=2.0 * base.theta_amp_uv,
            alpha_amp_uv=2.0 * base.alpha_amp_uv,
            p300_amp_uv=2.0 * base.p300_amp_uv,
            errp_amp_uv=2.0 * base.errp_amp_uv,
        )
    raise ValueError(f"unknown preset {name!r}")


PRESETS = ("paper-like", "null", "high-snr")


def channel_profile(labels, center, width_ch):
    """Gaussian spatial mixing profile over the channel-list index."""
    labels = list(labels)
    c = labels.index(center)
    idx = np.arange(len(labels), dtype=np.float64)
    return np.exp(-((idx - c) ** 2) / (2.0 * width_ch**2))


def piecewise_latent(segments, default=0.0):
    """Vectorized piecewise-constant series from ``(t0, t1, value)`` tuples."""
    segs = [(float(a), float(b), float(v)) for a, b, v in segments]

    def series(t):
        t = np.asarray(t, dtype=np.float64)
        out = np.full(t.shape, default, dtype=np.float64)
        for a, b, v in segs:
            out[(t >= a) & (t < b)] = v
        return out

    return series


def _resolve_series(value, n, fs, name="latent"):
    t = np.arange(n) / fs
    if callable(value):
        out = np.asarray(value(t), dtype=np.float64)
        if out.shape == ():
            out = np.full(n, float(out))
    elif np.ndim(value) == 0:
        out = np.full(n, float(value))
    else:
        out = np.asarray(value, dtype=np.float64)
        if out.shape != (n,):
            raise ValueError(f"{name} series has length {out.shape}, expected {n}")
    if out.min() < -1e-9 or out.max() > 1 + 1e-9:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return np.clip(out, 0.0, 1.0)


def _pink_spectrum_shape(n, fs, exponent):
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    shape = np.zeros_like(freqs)
    shape[1:] = freqs[1:] ** (-exponent / 2.0)
    return shape


def gen_noise(config, duration_sec, seed=None):
    """Per-channel pink noise (PSD proportional to 1/f^exponent).

    Each channel is normalized to exactly ``noise_amp_uv`` RMS; channels are
    independent.  Deterministic given the seed (``config.seed`` when None).
    """
    if duration_sec <= 0:
        raise ValueError("duration must be positive")
    n = int(round(duration_sec * config.fs_hz))
    rng = np.random.default_rng(config.seed if seed is None else seed)
    n_ch = config.n_channels
    shape = _pink_spectrum_shape(n, config.fs_hz, config.pink_exponent)
    spec = (
        rng.standard_normal((n_ch, len(shape)))
        + 1j * rng.standard_normal((n_ch, len(shape)))
    ) * shape
    x = np.fft.irfft(spec, n=n, axis=1)
    if config.noise_amp_uv > 0:
        rms = np.sqrt(np.mean(x**2, axis=1, keepdims=True))
        x = x * (config.noise_amp_uv / rms)
    else:
        x = np.zeros((n_ch, n))
    return Recording(
        sample_rate_hz=config.fs_hz, channel_labels=config.channel_labels, samples=x
    )


def _bandlimited_source(rng, n, fs, low_hz, high_hz):
    """Unit-RMS noise strictly band-limited to [low, high] Hz (FFT mask)."""
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    mask = (freqs >= low_hz) & (freqs <= high_hz)
    spec = (rng.standard_normal(len(freqs)) + 1j * rng.standard_normal(len(freqs))) * mask
    x = np.fft.irfft(spec, n=n)
    rms = np.sqrt(np.mean(x**2))
    return x / rms if rms > 0 else x


def gen_workload_eeg(config, workload, duration_sec, seed=None):
    """Pink noise plus workload-modulated oscillatory sources.

    A theta-band (4-6 Hz) source centered frontally scales its power as
    ``1 + gain * w(t)`` and a parietal alpha-band (7-13 Hz) source scales as
    ``1 + gain * (1 - w(t))``.  The noise part is bit-identical to
    :func:`gen_noise` with the same seed, so the source content can be
    isolated by subtraction.

    ``workload`` may be a scalar, a vectorized callable of time, or a
    per-sample array, with values in [0, 1].
    """
    seed = config.seed if seed is None else seed
    noise = gen_noise(config, duration_sec, seed)
    n = noise.n_samples
    w = _resolve_series(workload, n, config.fs_hz, "workload")
    rng = np.random.default_rng([int(seed), 0x5EED])
    samples = noise.samples.copy()
    for center, width, amp, power in (
        (config.theta_center, config.theta_width_ch, config.theta_amp_uv, 1.0 + config.workload_gain * w),
        (config.alpha_center, config.alpha_width_ch, config.alpha_amp_uv, 1.0 + config.workload_gain * (1.0 - w)),
    ):
        band = (4.0, 6.0) if center == config.theta_center else (7.0, 13.0)
        src = _bandlimited_source(rng, n, config.fs_hz, *band)
        src = amp * src * np.sqrt(power)
        samples += channel_profile(config.channel_labels, center, width)[:, None] * src[None, :]
    return Recording(
        sample_rate_hz=config.fs_hz, channel_labels=config.channel_labels, samples=samples
    )


def p300_template(config):
    """Positive parieto-central deflection peaking 300 ms after the event."""
    t = np.arange(int(round(config.fs_hz))) / config.fs_hz
    return config.p300_amp_uv * np.exp(
        -((t - config.p300_peak_sec) ** 2) / (2.0 * config.p300_sigma_sec**2)
    )


def errp_template(config):
    """Biphasic fronto-central deflection: negative then positive peak."""
    t = np.arange(int(round(config.fs_hz))) / config.fs_hz
    s2 = 2.0 * config.errp_sigma_sec**2
    return config.errp_amp_uv * (
        -np.exp(-((t - config.errp_neg_peak_sec) ** 2) / s2)
        + np.exp(-((t - config.errp_pos_peak_sec) ** 2) / s2)
    )


def inject_erps(recording, log, config, attention_scale=1.0):
    """Add event-locked ERP templates on top of a recording.

    A P300 template is added at every target-sound onset, scaled by
    ``attention_scale`` evaluated at the event time; an error-response
    template is added at every movement with ``is_error`` and every selection
    with ``perceived_error``.  Distractor sounds, correct movements and
    unremarkable selections get nothing.  Templates overlapping the end of
    the signal are truncated; overlapping events superpose.
    """
    fs = recording.sample_rate_hz
    samples = recording.samples.copy()
    n = recording.n_samples
    if callable(attention_scale):
        scale_fn = attention_scale
    else:
        const = float(attention_scale)
        scale_fn = lambda t: np.full(np.shape(t), const)

    def add(template, profile, t_event, scale=1.0):
        start = int(round(t_event * fs))
        if start >= n or scale == 0.0:
            return
        seg = template[: n - start]
        samples[:, start : start + len(seg)] += scale * profile[:, None] * seg[None, :]

    p300 = p300_template(config)
    p300_profile = channel_profile(config.channel_labels, config.p300_center, config.p300_width_ch)
    errp = errp_template(config)
    errp_profile = channel_profile(config.channel_labels, config.errp_center, config.errp_width_ch)
    for e in log:
        if e.kind == "sound" and e.attrs.get("is_target"):
            s = float(np.asarray(scale_fn(e.t_sec)))
            if not 0.0 <= s <= 1.0 + 1e-9:
                raise ValueError(f"attention scale {s} outside [0, 1] at t={e.t_sec}")
            add(p300, p300_profile, e.t_sec, s)
        elif e.kind == "movement" and e.attrs.get("is_error"):
            add(errp, errp_profile, e.t_sec)
        elif e.kind == "selection" and e.attrs.get("perceived_error"):
            add(errp, errp_profile, e.t_sec)
    return Recording(
        sample_rate_hz=fs, channel_labels=recording.channel_labels, samples=samples
    )


@dataclass(frozen=True)
class StudyParams:
    """Ground-truth latent construct values wired into a simulated study."""

    workload_by_difficulty: dict = field(
        default_factory=lambda: {"EASY": 0.05, "MEDIUM": 0.35, "HARD": 0.60, "ULTRA": 0.85}
    )
    touch_workload_offset: float = 0.10
    attention_by_difficulty: dict = field(
        default_factory=lambda: {"EASY": 0.90, "MEDIUM": 0.75, "HARD": 0.60, "ULTRA": 0.35}
    )
    perceived_error_rate: dict = field(
        default_factory=lambda: {"keyboard": 0.19, "touch": 0.22}
    )
    nback_blocks_per_level: int = 3
    oddball_n_sounds: int = 350
    robot_interactions: int = 350
    learning_loops: int = 3
    recall_loops: int = 3

    def game_workload(self, difficulty, technique):
        w = self.workload_by_difficulty[difficulty]
        if technique == "touch":
            w = w + self.touch_workload_offset
        return min(w, 1.0)


@dataclass(frozen=True)
class SessionData:
    """One synthesized session: signal, events and its ground truth."""

    name: str
    recording: Recording
    events: object
    truth: dict


SESSION_NAMES = ("nback", "oddball", "robot", "game_keyboard", "game_touch")


def _level_intervals(log):
    starts = [e for e in log if e.kind == "level_start"]
    ends = [e for e in log if e.kind == "level_end"]
    if len(starts) != len(ends):
        raise ValueError("unbalanced level_start/level_end events")
    return [
        (s.t_sec, e.t_sec, s.attrs["difficulty"], s.attrs["technique"])
        for s, e in zip(starts, ends)
    ]


def _nback_segments(log):
    by_block = {}
    for e in log:
        if e.kind == "letter":
            b = e.attrs["block_index"]
            lo, hi = by_block.get(b, (np.inf, -np.inf))
            by_block[b] = (min(lo, e.t_sec), max(hi, e.t_sec))
    segs = []
    for b in sorted(by_block):
        lo, hi = by_block[b]
        block = next(
            e.attrs["block"] for e in log if e.kind == "letter" and e.attrs["block_index"] == b
        )
        segs.append((lo, hi + 2.0, 1.0 if block == "high" else 0.0))
    return segs


def gen_participant_study(config, params, seed):
    """Synthesize one participant: three calibrations plus two game sessions.

    Returns a dict keyed by session name.  Each session carries a ground
    truth dict (latent segments and true rates) meant for validation only,
    never for training.  Bit-identical given (config, params, seed).
    """
    ints = [int(v) for v in np.random.SeedSequence(seed).generate_state(16)]
    sessions = {}

    nback_events = gen_nback(ints[0], blocks_per_level=params.nback_blocks_per_level)
    segs = _nback_segments(nback_events)
    dur = nback_events.events[-1].t_sec + 3.0
    rec = gen_workload_eeg(config, piecewise_latent(segs), dur, seed=ints[1])
    sessions["nback"] = SessionData(
        "nback", rec, nback_events, {"workload_segments": segs}
    )

    odd_events = gen_oddball(n_sounds=params.oddball_n_sounds, seed=ints[2])
    dur = odd_events.events[-1].t_sec + 2.0
    rec = gen_workload_eeg(config, 0.0, dur, seed=ints[3])
    rec = inject_erps(rec, odd_events, config, attention_scale=1.0)
    sessions["oddball"] = SessionData("oddball", rec, odd_events, {"p300_scale": 1.0})

    robot_events = gen_errp_task(ints[4], total_interactions=params.robot_interactions)
    dur = robot_events.events[-1].t_sec + 2.0
    rec = gen_workload_eeg(config, 0.0, dur, seed=ints[5])
    rec = inject_erps(rec, robot_events, config)
    n_err = sum(1 for e in robot_events if e.kind == "movement" and e.attrs["is_error"])
    sessions["robot"] = SessionData(
        "robot", rec, robot_events, {"error_rate": n_err / len(robot_events.events)}
    )

    for k, technique in enumerate(("keyboard", "touch")):
        plan = make_session_plan(
            technique,
            ints[6 + 3 * k],
            learning_loops=params.learning_loops,
            recall_loops=params.recall_loops,
        )
        maze = gen_maze_session(plan, ints[7 + 3 * k])
        skill = default_player_skill(technique, params.perceived_error_rate[technique])
        events = simulate_player(maze, skill, ints[8 + 3 * k])
        levels = _level_intervals(events)
        w_segs = [
            (a, b, params.game_workload(d, technique)) for a, b, d, _ in levels
        ]
        att_segs = [
            (a, b, params.attention_by_difficulty[d]) for a, b, d, _ in levels
        ]
        dur = events.events[-1].t_sec + 2.0
        rec = gen_workload_eeg(config, piecewise_latent(w_segs), dur, seed=ints[12 + k])
        rec = inject_erps(rec, events, config, attention_scale=piecewise_latent(att_segs))
        n_sel = sum(1 for e in events if e.kind == "selection")
        n_perceived = sum(
            1 for e in events if e.kind == "selection" and e.attrs["perceived_error"]
        )
        sessions[f"game_{technique}"] = SessionData(
            f"game_{technique}",
            rec,
            events,
            {
                "workload_segments": w_segs,
                "attention_segments": att_segs,
                "perceived_error_rate": params.perceived_error_rate[technique],
                "empirical_error_rate": n_perceived / n_sel if n_sel else 0.0,
            },
        )
    return sessions
