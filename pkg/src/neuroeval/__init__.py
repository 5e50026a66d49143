"""neuroeval: EEG-based user-experience evaluation at desk scale.

Trains per-participant classifiers for mental workload, attention and
interaction-error recognition from calibration-protocol EEG, turns game-play
EEG into continuous indices and error counts, and validates the whole chain
against a built-in synthetic-EEG forward model.
"""

__version__ = "0.1.0"

from . import classify, constructs, protocols, session, sigproc, spatial, stats, synth
from .classify import LdaModel, auroc, cross_validate, lda_score, lda_train, ledoit_wolf_cov
from .constructs import (
    ErpModel,
    ErrorCount,
    IndexSeries,
    WorkloadModel,
    attention_index,
    attention_indices,
    count_errors,
    model_from_file,
    model_to_file,
    shuffle_control,
    train_attention,
    train_error,
    train_workload,
    workload_index,
    workload_indices,
)
from .session import (
    Event,
    EventLog,
    ModelFile,
    Recording,
    load_events,
    load_model,
    load_recording,
    save_events,
    save_model,
    save_recording,
    validate_pair,
)
from .sigproc import BANDS, Band, Epoch, bandpass, decimate, epoch_at_events, log_band_power, sliding_windows
from .spatial import ClassCovariance, SpatialFilterBank, class_covariance, csp, refsf, sscsp
from .synth import ForwardModelConfig, StudyParams, gen_noise, gen_participant_study, gen_workload_eeg, inject_erps
