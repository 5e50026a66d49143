"""Deterministic generators for the calibration tasks and the maze game.

Every generator is a pure function of its seed: protocol-fixed counts (360
letters, 350 sounds, 350 movements) never change, only the randomized content
does.  Generators emit event logs only; EEG is synthesized separately.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .session import Event, EventLog

#: Consonant alphabet for the letter task (vowels removed to prevent
#: phoneme-based chunking).
CONSONANTS = tuple("BCDFGHJKLMNPQRSTVWXYZ")

LETTER_SOA_SEC = 2.0  # 0.5 s display + 1.5 s inter-stimulus interval

TECHNIQUES = ("keyboard", "touch")


@dataclass(frozen=True)
class DifficultyParams:
    """One maze difficulty level.

    depth: tunnels per maze loop (symbols to memorize); n_directions: open
    directions per intersection; response_time_sec: selection deadline after
    symbols appear; orientation_prob: chance the character changes
    orientation in a tunnel.
    """

    name: str
    depth: int
    n_directions: int
    response_time_sec: float
    orientation_prob: float

    def __post_init__(self):
        if not 0.0 <= self.orientation_prob <= 1.0:
            raise ValueError("orientation_prob outside [0, 1]")

    @property
    def tunnel_sec(self):
        """Time the character spends in one tunnel (twice the deadline)."""
        return 2.0 * self.response_time_sec


DIFFICULTIES = {
    "EASY": DifficultyParams("EASY", 2, 2, 3.0, 0.0),
    "MEDIUM": DifficultyParams("MEDIUM", 4, 3, 2.5, 0.30),
    "HARD": DifficultyParams("HARD", 5, 4, 2.0, 0.60),
    "ULTRA": DifficultyParams("ULTRA", 5, 4, 1.0, 1.0),
}

DIFFICULTY_ORDER = ("EASY", "MEDIUM", "HARD", "ULTRA")

DIRECTIONS = ("up", "down", "left", "right")


def gen_nback(seed, blocks_per_level=3, letters_per_block=60, target_rate=0.25):
    """Letter stream of alternating 0-back (low load) and 2-back (high load)
    blocks.

    Letters appear every 2 s from a per-block alphabet of 4 consonants; each
    block contains exactly ``round(target_rate * letters_per_block)`` targets.
    0-back targets match the block's target letter, 2-back targets match the
    letter two steps back (so the first two trials of a 2-back block are
    never targets).  The ``is_target`` attr is always re-derivable from the
    letter stream itself.

    Events: kind ``letter`` with attrs ``label``, ``is_target``, ``block``
    ("low" for 0-back, "high" for 2-back) and ``block_index``.
    """
    rng = np.random.default_rng(seed)
    n_targets = int(round(target_rate * letters_per_block))
    if not 0 < n_targets <= letters_per_block:
        raise ValueError("target rate leaves no targets or only targets")
    lead_in = 2.0
    block_gap = 4.0
    block_span = letters_per_block * LETTER_SOA_SEC
    events = []
    levels = [0, 2] * blocks_per_level
    for b, n in enumerate(levels):
        t0 = lead_in + b * (block_span + block_gap)
        alphabet = rng.choice(CONSONANTS, size=4, replace=False)
        letters = [""] * letters_per_block
        flags = [False] * letters_per_block
        if n == 0:
            target_letter = str(rng.choice(alphabet))
            others = [c for c in alphabet if c != target_letter]
            pos = rng.choice(letters_per_block, size=n_targets, replace=False)
            hit = set(int(i) for i in pos)
            for i in range(letters_per_block):
                if i in hit:
                    letters[i] = target_letter
                    flags[i] = True
                else:
                    letters[i] = str(rng.choice(others))
        else:
            pos = rng.choice(
                np.arange(n, letters_per_block), size=n_targets, replace=False
            )
            hit = set(int(i) for i in pos)
            for i in range(letters_per_block):
                if i in hit:
                    letters[i] = letters[i - n]
                    flags[i] = True
                elif i >= n:
                    choices = [c for c in alphabet if c != letters[i - n]]
                    letters[i] = str(rng.choice(choices))
                else:
                    letters[i] = str(rng.choice(alphabet))
        label = "low" if n == 0 else "high"
        for i in range(letters_per_block):
            events.append(
                Event(
                    t_sec=t0 + i * LETTER_SOA_SEC,
                    kind="letter",
                    attrs={
                        "label": letters[i],
                        "is_target": flags[i],
                        "block": label,
                        "block_index": b,
                    },
                )
            )
    return EventLog(events)


def _pick_target_slots(rng, n, n_targets, max_run=3):
    """Random target positions with no run longer than ``max_run``."""
    while True:
        slots = np.zeros(n, dtype=bool)
        slots[rng.choice(n, size=n_targets, replace=False)] = True
        run = best = 0
        for s in slots:
            run = run + 1 if s else 0
            best = max(best, run)
        if best <= max_run:
            return slots


def gen_oddball(n_sounds=350, p_odd=0.2, isi_sec=1.0, seed=0, t0_sec=0.0):
    """Auditory oddball stream: one sound per second, rare high-pitch targets.

    Exactly ``round(p_odd * n_sounds)`` targets are scheduled (never more
    than 3 in a row); the rest are low-pitch distractors.  Target sounds
    last 0.2 s, distractors 0.07 s.
    """
    rng = np.random.default_rng(seed)
    n_targets = int(round(p_odd * n_sounds))
    slots = _pick_target_slots(rng, n_sounds, n_targets)
    events = [
        Event(
            t_sec=t0_sec + i * isi_sec,
            kind="sound",
            attrs={
                "is_target": bool(slots[i]),
                "duration_sec": 0.2 if slots[i] else 0.07,
            },
        )
        for i in range(n_sounds)
    ]
    return EventLog(events)


def execute_move(position, direction, n_positions=7):
    """Apply one executed step on the rail; out-of-range moves are clamped.

    Returns (new_position, clamped).
    """
    step = 1 if direction == "right" else -1
    raw = position + step
    new = min(max(raw, 0), n_positions - 1)
    return new, new != raw


def gen_errp_task(
    seed,
    total_interactions=350,
    p_error=0.2,
    n_positions=7,
    max_attempts=10,
):
    """Rail-robot error-recognition task.

    A simulated operator always presses toward the target; each command is
    inverted with probability ``p_error`` (an interaction error).  The robot
    moves 1 s after the key press and the next press happens after another
    1 s lockout, so movements come every 2 s.  Trials reset with fresh random
    robot/target positions on reaching the target or after ``max_attempts``
    moves.

    Events: kind ``movement`` with attrs ``commanded``, ``executed``,
    ``is_error``, ``pos_before``, ``pos_after``, ``target``, ``trial``,
    ``attempt`` and ``clamped`` -- enough to replay every position.
    """
    rng = np.random.default_rng(seed)

    def new_trial():
        pos = int(rng.integers(n_positions))
        tgt = int(rng.integers(n_positions))
        while tgt == pos:
            tgt = int(rng.integers(n_positions))
        return pos, tgt

    events = []
    pos, target = new_trial()
    trial = 0
    attempt = 0
    for k in range(total_interactions):
        commanded = "right" if target > pos else "left"
        inverted = bool(rng.random() < p_error)
        executed = (
            {"left": "right", "right": "left"}[commanded] if inverted else commanded
        )
        new_pos, clamped = execute_move(pos, executed, n_positions)
        attempt += 1
        events.append(
            Event(
                t_sec=1.0 + 2.0 * k,
                kind="movement",
                attrs={
                    "commanded": commanded,
                    "executed": executed,
                    "is_error": inverted,
                    "pos_before": pos,
                    "pos_after": new_pos,
                    "target": target,
                    "trial": trial,
                    "attempt": attempt,
                    "clamped": clamped,
                },
            )
        )
        pos = new_pos
        if pos == target or attempt >= max_attempts:
            pos, target = new_trial()
            trial += 1
            attempt = 0
    return EventLog(events)


@dataclass(frozen=True)
class SessionPlan:
    """Level sequence for one game session (a single technique).

    Each of the four difficulties appears exactly twice; every level runs
    ``learning_loops`` cued loops plus ``recall_loops`` uncued loops through
    the maze.
    """

    entries: tuple  # of (difficulty_name, technique)
    learning_loops: int = 3
    recall_loops: int = 3

    @property
    def loops(self):
        return self.learning_loops + self.recall_loops


def make_session_plan(technique, seed, learning_loops=3, recall_loops=3):
    """Random level order with each difficulty twice, for one technique."""
    if technique not in TECHNIQUES:
        raise ValueError(f"unknown technique {technique!r}")
    rng = np.random.default_rng(seed)
    names = list(DIFFICULTY_ORDER) * 2
    order = rng.permutation(len(names))
    return SessionPlan(
        entries=tuple((names[i], technique) for i in order),
        learning_loops=learning_loops,
        recall_loops=recall_loops,
    )


def gen_maze_session(plan, seed, t0_sec=2.0, level_gap_sec=2.0, sound_isi_sec=1.0, p_odd=0.2):
    """Event schedule of one maze game session (no player responses yet).

    Per level: a ``level_start``/``level_end`` pair carrying difficulty and
    technique; per tunnel a ``movement`` event at tunnel entry (with
    ``orientation_changed`` drawn at the level's orientation probability) and
    a ``letter`` event when the symbols appear, carrying the correct
    direction and the selection deadline.  Background sounds run through each
    level on the oddball schedule (1 s spacing, 20% targets).
    """
    rng = np.random.default_rng(seed)
    events = []
    t = t0_sec
    for level_idx, (name, technique) in enumerate(plan.entries):
        diff = DIFFICULTIES[name]
        level_start = t
        events.append(
            Event(
                t_sec=level_start,
                kind="level_start",
                attrs={"difficulty": name, "technique": technique, "level_index": level_idx},
            )
        )
        path = [str(rng.choice(DIRECTIONS[: diff.n_directions])) for _ in range(diff.depth)]
        for loop in range(plan.loops):
            phase = "learning" if loop < plan.learning_loops else "recall"
            for tunnel in range(diff.depth):
                entry = t
                events.append(
                    Event(
                        t_sec=entry,
                        kind="movement",
                        attrs={
                            "is_error": False,
                            "orientation_changed": bool(rng.random() < diff.orientation_prob),
                            "tunnel": tunnel,
                            "loop": loop,
                            "phase": phase,
                            "difficulty": name,
                        },
                    )
                )
                events.append(
                    Event(
                        t_sec=entry + diff.response_time_sec,
                        kind="letter",
                        attrs={
                            "label": path[tunnel],
                            "deadline_sec": diff.response_time_sec,
                            "tunnel": tunnel,
                            "loop": loop,
                            "phase": phase,
                            "difficulty": name,
                            "technique": technique,
                        },
                    )
                )
                t = entry + diff.tunnel_sec
        level_end = t
        events.append(
            Event(
                t_sec=level_end,
                kind="level_end",
                attrs={"difficulty": name, "technique": technique, "level_index": level_idx},
            )
        )
        n_sounds = int(np.floor((level_end - level_start) / sound_isi_sec))
        if n_sounds > 0:
            sounds = gen_oddball(
                n_sounds=n_sounds,
                p_odd=p_odd,
                isi_sec=sound_isi_sec,
                seed=rng.integers(2**31),
                t0_sec=level_start,
            )
            events.extend(sounds.events)
        t = level_end + level_gap_sec
    return EventLog(sorted(events, key=lambda e: e.t_sec))


@dataclass(frozen=True)
class PlayerSkill:
    """Behavioral model of one simulated player.

    ``p_correct`` / ``rt_mean_sec`` / ``rt_sd_sec`` map difficulty names to
    selection accuracy and reaction-time parameters; ``p_perceived_error`` is
    the chance a selection is experienced as an interaction error.
    """

    p_correct: dict
    rt_mean_sec: dict
    rt_sd_sec: dict
    p_perceived_error: float


def default_player_skill(technique="keyboard", p_perceived_error=None):
    """Desk-scale defaults: accuracy drops and pacing tightens with
    difficulty; the touch technique is perceived as more error-prone."""
    if p_perceived_error is None:
        p_perceived_error = {"keyboard": 0.19, "touch": 0.22}[technique]
    return PlayerSkill(
        p_correct={"EASY": 0.98, "MEDIUM": 0.89, "HARD": 0.83, "ULTRA": 0.55},
        rt_mean_sec={"EASY": 0.78, "MEDIUM": 0.97, "HARD": 0.98, "ULTRA": 0.69},
        rt_sd_sec={"EASY": 0.14, "MEDIUM": 0.18, "HARD": 0.15, "ULTRA": 0.06},
        p_perceived_error=p_perceived_error,
    )


def simulate_player(maze_log, skill, seed):
    """Add one ``selection`` event per symbol appearance of a maze session.

    Reaction times are normal draws truncated to (0.05 s, deadline); attrs
    carry ``correct``, ``rt_sec``, ``perceived_error`` and the level context.
    Returns a new merged event log.
    """
    rng = np.random.default_rng(seed)
    selections = []
    for e in maze_log:
        if e.kind != "letter" or "deadline_sec" not in e.attrs:
            continue
        diff = e.attrs["difficulty"]
        if not 0.0 <= skill.p_correct[diff] <= 1.0:
            raise ValueError("p_correct outside [0, 1]")
        deadline = e.attrs["deadline_sec"]
        rt = float(
            np.clip(
                rng.normal(skill.rt_mean_sec[diff], skill.rt_sd_sec[diff]),
                0.05,
                deadline - 0.01,
            )
        )
        selections.append(
            Event(
                t_sec=e.t_sec + rt,
                kind="selection",
                attrs={
                    "correct": bool(rng.random() < skill.p_correct[diff]),
                    "rt_sec": rt,
                    "perceived_error": bool(rng.random() < skill.p_perceived_error),
                    "difficulty": diff,
                    "technique": e.attrs["technique"],
                    "tunnel": e.attrs["tunnel"],
                    "loop": e.attrs["loop"],
                },
            )
        )
    return maze_log.merged_with(EventLog(selections))
