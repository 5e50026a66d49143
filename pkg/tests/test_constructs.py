import logging

import numpy as np
import pytest

from neuroeval.constructs import (
    ErpTrainer,
    ErrorCount,
    IndexSeries,
    WorkloadTrainer,
    _index_chain,
    attention_index,
    attention_indices,
    condition_contrast,
    count_errors,
    erp_scores,
    model_from_file,
    model_to_file,
    normalize_unit_range,
    shuffle_control,
    train_attention,
    train_error,
    train_workload,
    workload_index,
    workload_indices,
    workload_scores,
)
from neuroeval.session import Event, EventLog, Recording, load_model, save_model
from neuroeval.synth import (
    StudyParams,
    gen_participant_study,
    gen_workload_eeg,
    inject_erps,
    preset_config,
)

SMALL_PARAMS = StudyParams(
    nback_blocks_per_level=1,
    oddball_n_sounds=350,
    robot_interactions=350,
    learning_loops=1,
    recall_loops=1,
)


@pytest.fixture(scope="module")
def study():
    cfg = preset_config("paper-like", seed=11)
    return cfg, gen_participant_study(cfg, SMALL_PARAMS, seed=21)


@pytest.fixture(scope="module")
def null_study():
    cfg = preset_config("null", seed=11)
    return cfg, gen_participant_study(cfg, SMALL_PARAMS, seed=21)


@pytest.fixture(scope="module")
def workload_trainer(study):
    _, s = study
    return WorkloadTrainer(
        s["nback"].recording,
        s["nback"].events,
        [s["game_keyboard"].recording, s["game_touch"].recording],
    )


class TestWorkloadTraining:
    def test_feature_count_is_exactly_30(self, workload_trainer):
        model = workload_trainer.train()
        assert model.n_features == 30
        assert model.lda.w.shape == (30,)
        for bank in model.banks.values():
            assert bank.W.shape == (6, 32)

    def test_one_epoch_per_letter_balanced(self, workload_trainer):
        assert workload_trainer.n_trials == 120
        assert int(workload_trainer.labels.sum()) == 60

    def test_cv_auroc_with_signal(self, workload_trainer):
        assert workload_trainer.cv_auroc(k=4, seed=0) >= 0.85

    def test_cv_auroc_without_signal(self, null_study):
        _, s = null_study
        trainer = WorkloadTrainer(
            s["nback"].recording,
            s["nback"].events,
            [s["game_keyboard"].recording, s["game_touch"].recording],
        )
        assert 0.40 <= trainer.cv_auroc(k=4, seed=0) <= 0.60

    def test_monotone_in_modulation_depth(self):
        # more construct-linked source modulation never hurts the classifier
        aucs = []
        for gain in (0.0, 1.5, 3.0):
            cfg = preset_config("paper-like", seed=31)
            cfg = type(cfg)(**{**cfg.__dict__, "workload_gain": gain})
            s = gen_participant_study(cfg, SMALL_PARAMS, seed=41)
            trainer = WorkloadTrainer(
                s["nback"].recording,
                s["nback"].events,
                [s["game_keyboard"].recording, s["game_touch"].recording],
            )
            aucs.append(trainer.cv_auroc(k=4, seed=0))
        assert aucs[0] <= aucs[1] <= aucs[2]

    def test_class_minimum_enforced(self, workload_trainer):
        labels = workload_trainer.labels.copy()
        labels[:] = False
        labels[:5] = True
        with pytest.raises(ValueError, match=">= 10 epochs"):
            workload_trainer.train(labels)

    def test_train_workload_wrapper(self, study):
        _, s = study
        model = train_workload(
            s["nback"].recording, s["nback"].events, s["game_keyboard"].recording
        )
        assert model.n_features == 30


class TestWorkloadIndex:
    def test_values_bounded_and_span(self, workload_trainer, study):
        _, s = study
        model = workload_trainer.train()
        series = workload_index(model, s["game_keyboard"].recording)
        assert series.values.min() == -1.0
        assert series.values.max() == 1.0
        assert np.all(np.diff(series.t_sec) > 0)

    def test_window_count_minus_outliers(self, workload_trainer, study):
        _, s = study
        model = workload_trainer.train()
        rec = s["game_keyboard"].recording
        t, scores = workload_scores(model, rec)
        n_windows = int((rec.duration_sec - 2.0) // 1.0) + 1
        assert len(t) == n_windows
        series = workload_index(model, rec)
        assert len(series.values) == n_windows - series.n_outliers_removed

    def test_fs_mismatch_rejected(self, workload_trainer):
        model = workload_trainer.train()
        rec = Recording(256.0, ("a", "b"), np.zeros((2, 1024)))
        with pytest.raises(ValueError, match="Hz"):
            workload_scores(model, rec)

    def test_joint_normalization_preserves_offsets(self, workload_trainer, study):
        # touch sessions carry a higher latent workload; with joint
        # normalization the mean index must reflect it
        _, s = study
        model = workload_trainer.train()
        kb, touch = workload_indices(
            model, [s["game_keyboard"].recording, s["game_touch"].recording]
        )
        assert touch.values.mean() > kb.values.mean()


class TestIndexChain:
    def test_minmax_three_points(self):
        np.testing.assert_allclose(
            normalize_unit_range(np.array([-2.0, 0.0, 2.0])), [-1.0, 0.0, 1.0]
        )

    def test_constant_maps_to_zero(self):
        np.testing.assert_array_equal(normalize_unit_range(np.full(5, 3.3)), 0.0)

    def test_chain_no_outliers(self):
        (series,) = _index_chain([np.arange(3.0)], [np.array([-2.0, 0.0, 2.0])], "workload")
        np.testing.assert_allclose(series.values, [-1.0, 0.0, 1.0])
        assert series.n_outliers_removed == 0

    def test_chain_removes_outlier(self):
        scores = np.array([1.0, 1.1, 0.9, 1.05, 0.95, 50.0])
        (series,) = _index_chain([np.arange(6.0)], [scores], "workload")
        assert series.n_outliers_removed == 1
        assert len(series.values) == 5
        assert series.values.max() == 1.0 and series.values.min() == -1.0

    def test_too_few_scores(self):
        with pytest.raises(ValueError, match="at least 3"):
            _index_chain([np.arange(2.0)], [np.array([0.0, 1.0])], "workload")

    def test_series_bounds_validated(self):
        with pytest.raises(ValueError, match="outside"):
            IndexSeries(np.arange(2.0), np.array([0.0, 1.5]), "workload")
        with pytest.raises(ValueError, match="strictly increasing"):
            IndexSeries(np.array([1.0, 1.0]), np.array([0.0, 0.0]), "workload")


@pytest.fixture(scope="module")
def erp_models(study):
    _, s = study
    att = ErpTrainer(s["oddball"].recording, s["oddball"].events, "attention")
    err = ErpTrainer(s["robot"].recording, s["robot"].events, "error")
    return att, err


class TestErpTraining:
    def test_feature_count_is_exactly_80(self, erp_models):
        att, err = erp_models
        for trainer in (att, err):
            model = trainer.train()
            assert model.n_features == 80
            assert model.lda.w.shape == (80,)
            assert model.bank.W.shape == (5, 32)

    def test_epoch_and_positive_counts(self, erp_models, study):
        att, err = erp_models
        _, s = study
        assert att.n_trials == 350
        assert int(att.labels.sum()) == 70
        assert err.n_trials == 350

    def test_cv_with_signal(self, erp_models):
        att, err = erp_models
        assert att.cv_auroc(k=4, seed=0) >= 0.80
        assert err.cv_auroc(k=4, seed=0) >= 0.80

    def test_cv_without_signal(self, null_study):
        _, s = null_study
        att = ErpTrainer(s["oddball"].recording, s["oddball"].events, "attention")
        assert 0.40 <= att.cv_auroc(k=4, seed=0) <= 0.60

    def test_positive_minimum_enforced(self, erp_models):
        att, _ = erp_models
        labels = att.labels.copy()
        labels[:] = False
        labels[:3] = True
        with pytest.raises(ValueError, match="positive"):
            att.train(labels)

    def test_wrappers(self, study):
        _, s = study
        att = train_attention(s["oddball"].recording, s["oddball"].events)
        err = train_error(s["robot"].recording, s["robot"].events)
        assert att.construct == "attention" and err.construct == "error"

    def test_noncanonical_fs_reported(self, caplog):
        rng = np.random.default_rng(0)
        rec = Recording(256.0, tuple(f"c{i}" for i in range(4)), rng.normal(size=(4, 256 * 60)))
        events = EventLog(
            [Event(float(t), "sound", {"is_target": t % 5 == 0}) for t in range(55)]
        )
        with caplog.at_level(logging.WARNING, logger="neuroeval.constructs"):
            trainer = ErpTrainer(rec, events, "attention", n_filters=2)
        assert any("feature count" in m for m in caplog.messages)
        assert trainer.train().n_features == 2 * (256 // 32)


class TestAttentionIndex:
    def test_scaled_amplitude_raises_index(self, study, erp_models):
        cfg, s = study
        att, _ = erp_models
        model = att.train()
        # same protocol, one session at full scale and one attenuated
        from neuroeval.protocols import gen_oddball

        log = gen_oddball(n_sounds=120, seed=77)
        dur = log.events[-1].t_sec + 2.0
        base = gen_workload_eeg(cfg, 0.0, dur, seed=500)
        full = inject_erps(base, log, cfg, attention_scale=1.0)
        weak = inject_erps(base, log, cfg, attention_scale=0.2)
        s_full, s_weak = attention_indices(model, [(full, log), (weak, log)])
        assert s_full.values.mean() > s_weak.values.mean()

    def test_identical_epochs_normalize_to_zero(self, erp_models):
        att, _ = erp_models
        model = att.train()
        cfg = preset_config("paper-like", seed=0)
        silent = type(cfg)(
            **{**cfg.__dict__, "noise_amp_uv": 0.0, "theta_amp_uv": 0.0, "alpha_amp_uv": 0.0}
        )
        log = EventLog([Event(float(t), "sound", {"is_target": True}) for t in range(4)])
        rec = gen_workload_eeg(silent, 0.0, 6.0, seed=1)
        rec = inject_erps(rec, log, silent, attention_scale=1.0)
        series = attention_index(model, rec, log)
        np.testing.assert_allclose(series.values, 0.0, atol=1e-12)

    def test_calibration_targets_score_above_distractors(self, study, erp_models):
        _, s = study
        att, _ = erp_models
        model = att.train()
        _, tgt = erp_scores(
            model, s["oddball"].recording, s["oddball"].events, "sound",
            lambda a: a.get("is_target"),
        )
        _, dis = erp_scores(
            model, s["oddball"].recording, s["oddball"].events, "sound",
            lambda a: not a.get("is_target"),
        )
        assert tgt.mean() > dis.mean()

    def test_no_targets_rejected(self, erp_models):
        att, _ = erp_models
        model = att.train()
        rec = Recording(512.0, tuple(f"c{i}" for i in range(32)), np.zeros((32, 5120)))
        log = EventLog([Event(1.0, "sound", {"is_target": False})])
        with pytest.raises(ValueError, match="target"):
            attention_index(model, rec, log)


def _selection_session(cfg, n_sel, p_err, seed, spacing=1.5):
    rng = np.random.default_rng(seed)
    events = [
        Event(
            1.0 + i * spacing,
            "selection",
            {"correct": True, "perceived_error": bool(rng.random() < p_err)},
        )
        for i in range(n_sel)
    ]
    log = EventLog(events)
    rec = gen_workload_eeg(cfg, 0.0, events[-1].t_sec + 2.0, seed=seed + 1)
    return inject_erps(rec, log, cfg), log


class TestCountErrors:
    def test_interaction_count_matches_selections(self, study, erp_models):
        cfg, _ = study
        _, err = erp_models
        model = err.train()
        rec, log = _selection_session(cfg, 388, 0.2, seed=60)
        counts = count_errors(model, rec, log)
        assert counts.n_interactions == 388
        assert 0 <= counts.n_error_labeled <= 388
        assert counts.proportion == counts.n_error_labeled / 388

    def test_error_free_session_stays_low(self, study, erp_models):
        cfg, _ = study
        _, err = erp_models
        model = err.train()
        rec, log = _selection_session(cfg, 300, 0.0, seed=61)
        assert count_errors(model, rec, log).proportion <= 0.05

    def test_no_selections_rejected(self, erp_models):
        _, err = erp_models
        model = err.train()
        rec = Recording(512.0, tuple(f"c{i}" for i in range(32)), np.zeros((32, 5120)))
        with pytest.raises(ValueError, match="selection"):
            count_errors(model, rec, EventLog([]))


class TestShuffleControl:
    def test_count_and_determinism(self, study):
        _, s = study
        sessions = [
            (s["game_keyboard"].recording, s["game_keyboard"].events),
            (s["game_touch"].recording, s["game_touch"].events),
        ]
        a = shuffle_control(
            s["nback"].recording, s["nback"].events, sessions, "workload",
            n_shuffles=5, seed=3,
        )
        b = shuffle_control(
            s["nback"].recording, s["nback"].events, sessions, "workload",
            n_shuffles=5, seed=3,
        )
        assert len(a) == 5
        np.testing.assert_array_equal(a, b)

    def test_true_contrast_outside_null_band(self, study, workload_trainer):
        _, s = study
        sessions = [
            (s["game_keyboard"].recording, s["game_keyboard"].events),
            (s["game_touch"].recording, s["game_touch"].events),
        ]
        true_model = workload_trainer.train()
        true_contrast = condition_contrast("workload", true_model, sessions)
        nulls = shuffle_control(
            s["nback"].recording, s["nback"].events, sessions, "workload",
            n_shuffles=20, seed=5,
        )
        lo, hi = np.percentile(nulls, [2.5, 97.5])
        assert not (lo <= true_contrast <= hi)


class TestModelFiles:
    def test_workload_round_trip_scores_identically(
        self, tmp_path, workload_trainer, study
    ):
        _, s = study
        model = workload_trainer.train()
        save_model(model_to_file(model), tmp_path / "w.model")
        back = model_from_file(load_model(tmp_path / "w.model"))
        rec = s["game_keyboard"].recording
        t1, s1 = workload_scores(model, rec)
        t2, s2 = workload_scores(back, rec)
        np.testing.assert_array_equal(s1, s2)

    def test_erp_round_trip_scores_identically(self, tmp_path, erp_models, study):
        _, s = study
        att, _ = erp_models
        model = att.train()
        save_model(model_to_file(model), tmp_path / "a.model")
        back = model_from_file(load_model(tmp_path / "a.model"))
        _, s1 = erp_scores(
            model, s["oddball"].recording, s["oddball"].events, "sound",
            lambda a: a.get("is_target"),
        )
        _, s2 = erp_scores(
            back, s["oddball"].recording, s["oddball"].events, "sound",
            lambda a: a.get("is_target"),
        )
        np.testing.assert_array_equal(s1, s2)

    def test_dimension_validation_on_load(self, tmp_path, erp_models):
        att, _ = erp_models
        mf = model_to_file(att.train())
        broken = type(mf)(
            construct=mf.construct,
            matrices={**mf.matrices, "lda_w": mf.matrices["lda_w"][:, :70]},
            scalars=mf.scalars,
        )
        with pytest.raises(ValueError, match="features"):
            model_from_file(broken)
