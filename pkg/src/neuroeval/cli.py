"""Command-line entry point: simulate / calibrate / score / evaluate / report
over a study directory.

Study layout::

    <study>/manifest.json
    <study>/p01/{nback,oddball,robot,game_keyboard,game_touch}.eeg.csv
    <study>/p01/<session>.events.jsonl     and <session>.truth.jsonl sidecars
    <study>/models/   pNN.<construct>.model,  cv_<construct>.csv
    <study>/scores/   pNN.<session>.<construct>.csv,  error_counts.csv
    <study>/report/   evaluation.csv and SVG charts

Every command is deterministic given its inputs and flags; the manifest
records the simulation config hash so reruns are byte-comparable.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .constructs import (
    ErpTrainer,
    WorkloadTrainer,
    attention_indices,
    count_errors,
    model_from_file,
    model_to_file,
    workload_indices,
)
from .protocols import DIFFICULTY_ORDER, TECHNIQUES
from .session import (
    CONSTRUCTS,
    load_events,
    load_model,
    load_recording,
    save_events,
    save_model,
    save_recording,
)
from .stats import fdr_bh, paired_t, rm_anova, wilcoxon_signed_rank
from .svg import bar_chart, line_chart, trailing_moving_average
from .synth import PRESETS, SESSION_NAMES, StudyParams, gen_participant_study, preset_config

GAME_SESSIONS = ("game_keyboard", "game_touch")


def _say(msg):
    print(msg, file=sys.stderr)


def _participant_ids(n):
    return [f"p{i + 1:02d}" for i in range(n)]


def _participants_in(study):
    study = Path(study)
    pids = sorted(d.name for d in study.iterdir() if d.is_dir() and d.name.startswith("p"))
    if not pids:
        raise FileNotFoundError(f"no participant directories under {study}")
    return pids


def _session_paths(study, pid, session):
    base = Path(study) / pid
    return base / f"{session}.eeg.csv", base / f"{session}.events.jsonl"


def _check_sessions(study, pids, sessions):
    missing = []
    for pid in pids:
        for s in sessions:
            rec, ev = _session_paths(study, pid, s)
            for p in (rec, ev):
                if not p.exists():
                    missing.append(f"{pid}: {p.name}")
    if missing:
        raise FileNotFoundError("missing session files: " + ", ".join(missing))


def _write_truth(path, truth):
    with open(path, "w", encoding="ascii") as fh:
        for key, value in truth.items():
            if key.endswith("_segments"):
                series = key[: -len("_segments")]
                for t0, t1, v in value:
                    fh.write(
                        json.dumps({"series": series, "t0": t0, "t1": t1, "value": v}) + "\n"
                    )
            else:
                fh.write(json.dumps({"rate": key, "value": value}) + "\n")


def load_truth(path):
    """Read a ground-truth sidecar into (segments-by-series, rates)."""
    segments = {}
    rates = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            rec = json.loads(line)
            if "series" in rec:
                segments.setdefault(rec["series"], []).append(
                    (rec["t0"], rec["t1"], rec["value"])
                )
            else:
                rates[rec["rate"]] = rec["value"]
    return segments, rates


def cmd_simulate(args):
    study = Path(args.out)
    study.mkdir(parents=True, exist_ok=True)
    config = preset_config(args.preset, seed=args.seed)
    params = StudyParams(
        nback_blocks_per_level=args.nback_blocks,
        oddball_n_sounds=args.sounds,
        robot_interactions=args.interactions,
        learning_loops=args.loops,
        recall_loops=args.loops,
    )
    pids = _participant_ids(args.participants)
    seeds = [int(s) for s in np.random.SeedSequence(args.seed).generate_state(len(pids))]
    for pid, seed in zip(pids, seeds):
        pdir = study / pid
        pdir.mkdir(exist_ok=True)
        sessions = gen_participant_study(config, params, seed)
        for name in SESSION_NAMES:
            data = sessions[name]
            save_recording(data.recording, pdir / f"{name}.eeg.csv")
            save_events(data.events, pdir / f"{name}.events.jsonl")
            _write_truth(pdir / f"{name}.truth.jsonl", data.truth)
        _say(f"simulated {pid} (seed {seed})")
    payload = {
        "config": asdict(config),
        "params": asdict(params),
        "seed": args.seed,
        "participants": args.participants,
    }
    digest = hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode("ascii")
    ).hexdigest()
    manifest = {
        "tool": "neuroeval",
        "version": __version__,
        "preset": args.preset,
        "seed": args.seed,
        "participants": args.participants,
        "config_sha256": digest,
    }
    (study / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="ascii"
    )
    print(f"study written to {study} ({args.participants} participants)")
    return 0


_CALIB_SESSION = {"workload": "nback", "attention": "oddball", "error": "robot"}


def cmd_calibrate(args):
    study = Path(args.study)
    constructs = [args.construct] if args.construct else list(CONSTRUCTS)
    pids = _participants_in(study)
    needed = sorted({_CALIB_SESSION[c] for c in constructs})
    if "workload" in constructs:
        needed = sorted(set(needed) | set(GAME_SESSIONS))
    _check_sessions(study, pids, needed)
    models_dir = study / "models"
    models_dir.mkdir(exist_ok=True)
    cv_rows = {c: [] for c in constructs}
    for pid in pids:
        trainers = {}
        if "workload" in constructs:
            rec_path, ev_path = _session_paths(study, pid, "nback")
            games = [
                load_recording(_session_paths(study, pid, s)[0]) for s in GAME_SESSIONS
            ]
            trainers["workload"] = WorkloadTrainer(
                load_recording(rec_path), load_events(ev_path), games
            )
            del games
        for construct in ("attention", "error"):
            if construct in constructs:
                rec_path, ev_path = _session_paths(study, pid, _CALIB_SESSION[construct])
                trainers[construct] = ErpTrainer(
                    load_recording(rec_path), load_events(ev_path), construct
                )
        for construct in constructs:
            trainer = trainers[construct]
            auc = trainer.cv_auroc(k=args.folds, seed=args.seed)
            model = trainer.train()
            save_model(model_to_file(model), models_dir / f"{pid}.{construct}.model")
            cv_rows[construct].append((pid, auc))
            _say(f"{pid} {construct}: CV AUROC {auc:.3f}")
        del trainers
    for construct in constructs:
        with open(models_dir / f"cv_{construct}.csv", "w", encoding="ascii") as fh:
            fh.write("participant,auroc\n")
            for pid, auc in cv_rows[construct]:
                fh.write(f"{pid},{auc:.6f}\n")
    print(f"calibrated {len(pids)} participants: {', '.join(constructs)}")
    return 0


def _write_index_csv(path, series):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("t_sec,value\n")
        for t, v in zip(series.t_sec, series.values):
            fh.write(f"{t:.3f},{v:.6f}\n")


def _load_index_csv(path):
    t, v = [], []
    with open(path, "r", encoding="ascii") as fh:
        next(fh)
        for line in fh:
            a, b = line.strip().split(",")
            t.append(float(a))
            v.append(float(b))
    return np.asarray(t), np.asarray(v)


def cmd_score(args):
    study = Path(args.study)
    constructs = [args.construct] if args.construct else list(CONSTRUCTS)
    pids = _participants_in(study)
    _check_sessions(study, pids, GAME_SESSIONS)
    models_dir = study / "models"
    scores_dir = study / "scores"
    scores_dir.mkdir(exist_ok=True)
    missing = [
        f"{pid}.{c}.model"
        for pid in pids
        for c in constructs
        if not (models_dir / f"{pid}.{c}.model").exists()
    ]
    if missing:
        raise FileNotFoundError("missing model files (run calibrate): " + ", ".join(missing))
    error_rows = []
    for pid in pids:
        games = {}
        for s in GAME_SESSIONS:
            rec_path, ev_path = _session_paths(study, pid, s)
            games[s] = (load_recording(rec_path), load_events(ev_path))
        for construct in constructs:
            model = model_from_file(load_model(models_dir / f"{pid}.{construct}.model"))
            if construct == "workload":
                series = workload_indices(model, [games[s][0] for s in GAME_SESSIONS])
                for s, ser in zip(GAME_SESSIONS, series):
                    _write_index_csv(scores_dir / f"{pid}.{s}.workload.csv", ser)
            elif construct == "attention":
                series = attention_indices(model, [games[s] for s in GAME_SESSIONS])
                for s, ser in zip(GAME_SESSIONS, series):
                    _write_index_csv(scores_dir / f"{pid}.{s}.attention.csv", ser)
            else:
                for s in GAME_SESSIONS:
                    c = count_errors(model, *games[s])
                    error_rows.append(
                        f"{pid},{s},{c.n_error_labeled},{c.n_interactions},{c.proportion:.6f}"
                    )
        del games
        _say(f"scored {pid}")
    if "error" in constructs:
        with open(scores_dir / "error_counts.csv", "w", encoding="ascii") as fh:
            fh.write("participant,session,n_error,n_interactions,proportion\n")
            for row in error_rows:
                fh.write(row + "\n")
    print(f"scored {len(pids)} participants: {', '.join(constructs)}")
    return 0


def _level_intervals(log):
    starts = [e for e in log if e.kind == "level_start"]
    ends = [e for e in log if e.kind == "level_end"]
    return [
        (s.t_sec, e.t_sec, s.attrs["difficulty"], s.attrs["technique"])
        for s, e in zip(starts, ends)
    ]


def _condition_means(study, pid, construct):
    """Mean index per (difficulty, technique) for one participant."""
    means = np.full((len(DIFFICULTY_ORDER), len(TECHNIQUES)), np.nan)
    for j, session in enumerate(GAME_SESSIONS):
        path = Path(study) / "scores" / f"{pid}.{session}.{construct}.csv"
        if not path.exists():
            raise FileNotFoundError(f"missing scores for {pid}: {path.name}")
        t, v = _load_index_csv(path)
        _, ev_path = _session_paths(study, pid, session)
        levels = _level_intervals(load_events(ev_path))
        for i, diff in enumerate(DIFFICULTY_ORDER):
            mask = np.zeros(len(t), dtype=bool)
            for a, b, d, _ in levels:
                if d == diff:
                    mask |= (t >= a) & (t < b)
            if not mask.any():
                raise ValueError(f"{pid} {session}: no {construct} scores inside {diff} levels")
            means[i, j] = v[mask].mean()
    return means


def _error_proportions(study, pids):
    path = Path(study) / "scores" / "error_counts.csv"
    if not path.exists():
        raise FileNotFoundError("missing scores/error_counts.csv (run score)")
    table = {}
    with open(path, "r", encoding="ascii") as fh:
        next(fh)
        for line in fh:
            pid, session, _, _, prop = line.strip().split(",")
            table[(pid, session)] = float(prop)
    props = np.full((len(pids), len(GAME_SESSIONS)), np.nan)
    for i, pid in enumerate(pids):
        for j, s in enumerate(GAME_SESSIONS):
            if (pid, s) not in table:
                raise ValueError(f"error counts missing for {pid} x {s}")
            props[i, j] = table[(pid, s)]
    return props


def cmd_evaluate(args):
    study = Path(args.study)
    pids = _participants_in(study)
    report_dir = study / "report"
    report_dir.mkdir(exist_ok=True)
    rows = []

    def add(construct, analysis, term, statistic, value):
        rows.append(f"{construct},{analysis},{term},{statistic},{value:.6g}")

    for construct in ("workload", "attention"):
        cube = np.stack([_condition_means(study, pid, construct) for pid in pids])
        for i, diff in enumerate(DIFFICULTY_ORDER):
            for j, tech in enumerate(TECHNIQUES):
                add(construct, "cell", f"{diff}:{tech}", "mean", cube[:, i, j].mean())
                add(construct, "cell", f"{diff}:{tech}", "sd", cube[:, i, j].std(ddof=1))
        effects = rm_anova(cube, ("difficulty", "technique"))
        for name, eff in effects.items():
            add(construct, "anova", name, "F", eff.F)
            add(construct, "anova", name, "df_effect", eff.df_effect)
            add(construct, "anova", name, "df_error", eff.df_error)
            add(construct, "anova", name, "p", eff.p)
        by_diff = cube.mean(axis=2)
        pairs = [
            (i, j) for i in range(len(DIFFICULTY_ORDER)) for j in range(i + 1, len(DIFFICULTY_ORDER))
        ]
        raw = [paired_t(by_diff[:, i], by_diff[:, j])[2] for i, j in pairs]
        _, adj = fdr_bh(raw)
        for (i, j), p_raw, p_adj in zip(pairs, raw, adj):
            term = f"{DIFFICULTY_ORDER[i]}_vs_{DIFFICULTY_ORDER[j]}"
            add(construct, "posthoc", term, "p", p_raw)
            add(construct, "posthoc", term, "p_fdr", p_adj)
    props = _error_proportions(study, pids)
    for j, tech in enumerate(TECHNIQUES):
        add("error", "technique", tech, "mean", props[:, j].mean())
        add("error", "technique", tech, "sd", props[:, j].std(ddof=1))
    p = wilcoxon_signed_rank(props[:, 0], props[:, 1], tail="one_greater")
    add("error", "wilcoxon", "touch_greater_than_keyboard", "p", p)
    out = report_dir / "evaluation.csv"
    with open(out, "w", encoding="ascii") as fh:
        fh.write("construct,analysis,term,statistic,value\n")
        fh.write("\n".join(rows) + "\n")
        fh.write("# repeated-measures ANOVA without sphericity correction\n")
    print(f"evaluation written to {out}")
    return 0


def cmd_report(args):
    study = Path(args.study)
    pids = _participants_in(study)
    report_dir = study / "report"
    report_dir.mkdir(exist_ok=True)
    n_charts = 0
    for pid in pids:
        for session in GAME_SESSIONS:
            path = study / "scores" / f"{pid}.{session}.workload.csv"
            if not path.exists():
                raise FileNotFoundError(f"missing scores for {pid}: {path.name} (run score)")
            t, v = _load_index_csv(path)
            _, ev_path = _session_paths(study, pid, session)
            levels = _level_intervals(load_events(ev_path))
            regions = [(a, b, d) for a, b, d, _ in levels]
            smooth = trailing_moving_average(t, v, window_sec=60.0)
            tech = session.split("_", 1)[1]
            line_chart(
                report_dir / f"{pid}.{session}.workload.svg",
                t,
                v,
                smoothed=smooth,
                regions=regions,
                title=f"{pid} workload index, {tech} (60 s smoothing)",
            )
            n_charts += 1
    for construct in ("workload", "attention"):
        cubes = np.stack([_condition_means(study, pid, construct) for pid in pids])
        labels = [
            f"{d}:{t}" for d in DIFFICULTY_ORDER for t in ("kb", "touch")
        ]
        means = [cubes[:, i, j].mean() for i in range(4) for j in range(2)]
        sds = [cubes[:, i, j].std(ddof=1) for i in range(4) for j in range(2)]
        bar_chart(
            report_dir / f"{construct}_by_condition.svg",
            labels,
            means,
            sds,
            title=f"mean {construct} index by difficulty and technique",
            y_label=f"{construct} index",
        )
        n_charts += 1
    props = _error_proportions(study, pids)
    bar_chart(
        report_dir / "errors_by_technique.svg",
        list(TECHNIQUES),
        [props[:, 0].mean(), props[:, 1].mean()],
        [props[:, 0].std(ddof=1), props[:, 1].std(ddof=1)],
        title="proportion of interactions labeled erroneous",
        y_label="proportion",
    )
    n_charts += 1
    print(f"{n_charts} charts written to {report_dir}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="neuroeval",
        description="EEG-based user-experience evaluation over simulated studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a study directory")
    p.add_argument("--out", required=True, help="study directory to create")
    p.add_argument("--participants", type=int, default=12)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--preset", choices=PRESETS, default="paper-like")
    p.add_argument("--nback-blocks", type=int, default=3, help="letter blocks per load level")
    p.add_argument("--sounds", type=int, default=350, help="oddball calibration sounds")
    p.add_argument("--interactions", type=int, default=350, help="robot calibration movements")
    p.add_argument("--loops", type=int, default=3, help="learning (= recall) loops per level")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="train per-participant models with CV report")
    p.add_argument("study", help="study directory")
    p.add_argument("--construct", choices=CONSTRUCTS)
    p.add_argument("--folds", type=int, default=4)
    p.add_argument("--seed", type=int, default=0, help="cross-validation fold seed")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("score", help="compute index series and error counts")
    p.add_argument("study")
    p.add_argument("--construct", choices=CONSTRUCTS)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="condition statistics over the scored study")
    p.add_argument("study")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="SVG charts from the scored study")
    p.add_argument("study")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
