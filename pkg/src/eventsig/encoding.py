"""Encoding of patient timelines as multichannel paths and signature feature
vectors.

Channel layout: months since the index date first, scaled MMSE second
(carried forward between observations), then - for the medication feature set
- a one-hot block over the configured medication vocabulary. A basepoint with
all non-time channels zeroed is prepended so the starting MMSE level survives
the signature's translation invariance.
"""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .signature import PiecewisePath, batch_log_signatures, log_signature, logsig_dimension
from .tensor_algebra import lyndon_basis
from .timeline import DISCONTINUED, NOMED, EventKind, Experiencer, PatientTimeline

DAYS_PER_MONTH = 30.4375

FEATURE_SET_TIME_MMSE = "time_mmse"
FEATURE_SET_TIME_MMSE_MEDS = "time_mmse_meds"

DEFAULT_MED_VOCABULARY = (
    NOMED,
    "donepezil",
    "rivastigmine",
    "galantamine",
    "memantine",
    DISCONTINUED,
)


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class PathEncodingConfig:
    feature_set: str = FEATURE_SET_TIME_MMSE
    medication_vocabulary: tuple[str, ...] = DEFAULT_MED_VOCABULARY
    level: int = 3
    mmse_scale: float = 30.0

    def __post_init__(self):
        if self.feature_set not in (FEATURE_SET_TIME_MMSE, FEATURE_SET_TIME_MMSE_MEDS):
            raise ValueError(f"unknown feature set {self.feature_set!r}")
        if self.level < 1:
            raise ValueError("truncation level must be >= 1")
        if self.feature_set == FEATURE_SET_TIME_MMSE_MEDS and not self.medication_vocabulary:
            raise ValueError("medication vocabulary must be nonempty for the meds feature set")

    @property
    def dim(self) -> int:
        if self.feature_set == FEATURE_SET_TIME_MMSE:
            return 2
        return 2 + len(self.medication_vocabulary)

    @property
    def schema_id(self) -> str:
        if self.feature_set == FEATURE_SET_TIME_MMSE:
            return f"sig:{self.feature_set}:L{self.level}:d{self.dim}"
        vocab_hash = hashlib.sha256("|".join(self.medication_vocabulary).encode()).hexdigest()[:8]
        return f"sig:{self.feature_set}:L{self.level}:d{self.dim}:{vocab_hash}"


@dataclass(frozen=True)
class FeatureVector:
    patient_id: str
    values: np.ndarray
    schema_id: str


def months_since(start, date) -> float:
    return (date - start).days / DAYS_PER_MONTH


def timeline_channels(tl: PatientTimeline, cfg: PathEncodingConfig):
    """Per-event-date channel values (before basepoint augmentation)."""
    if tl.is_empty:
        raise EncodingError(f"timeline for {tl.patient_id} has no events")
    dates = []
    mmse_by_date: dict = {}
    med_events_by_date: dict = {}
    for ev in tl.events:
        if ev.experiencer == Experiencer.OTHER:
            continue
        if ev.kind == EventKind.MMSE:
            mmse_by_date[ev.date] = int(ev.value)
        elif ev.kind in (EventKind.MEDICATION_START, EventKind.MEDICATION_STOP):
            med_events_by_date.setdefault(ev.date, []).append(ev)
        else:
            continue
        if ev.date not in dates:
            dates.append(ev.date)
    dates.sort()
    if not dates:
        raise EncodingError(
            f"timeline for {tl.patient_id} has no MMSE or medication events"
        )

    index_date = dates[0]
    times = np.array([months_since(index_date, d) for d in dates])

    mmse_values = []
    observed = [mmse_by_date[d] for d in dates if d in mmse_by_date]
    last = observed[0] if observed else 0
    for d in dates:
        if d in mmse_by_date:
            last = mmse_by_date[d]
        mmse_values.append(last / cfg.mmse_scale)
    mmse = np.array(mmse_values)

    states = []
    state = NOMED
    for d in dates:
        for ev in sorted(
            med_events_by_date.get(d, []), key=lambda e: e.kind != EventKind.MEDICATION_STOP
        ):
            state = DISCONTINUED if ev.kind == EventKind.MEDICATION_STOP else str(ev.value)
        states.append(state)
    return times, mmse, states


def encode_path(tl: PatientTimeline, cfg: PathEncodingConfig) -> PiecewisePath:
    """Multichannel path of a timeline: one point per event date plus the
    zeroed basepoint."""
    times, mmse, states = timeline_channels(tl, cfg)
    n = len(times)
    d = cfg.dim
    pts = np.zeros((n + 1, d))
    pts[1:, 0] = times
    pts[1:, 1] = mmse
    if cfg.feature_set == FEATURE_SET_TIME_MMSE_MEDS:
        vocab_index = {name: i for i, name in enumerate(cfg.medication_vocabulary)}
        for row, state in enumerate(states):
            if state not in vocab_index:
                raise EncodingError(
                    f"medication category {state!r} not in vocabulary "
                    f"{list(cfg.medication_vocabulary)}"
                )
            pts[row + 1, 2 + vocab_index[state]] = 1.0
    # basepoint: first point with non-time channels zeroed (time there is 0)
    pts[0, 0] = pts[1, 0]
    return PiecewisePath(pts)


def featurize_signature(tl: PatientTimeline, cfg: PathEncodingConfig) -> FeatureVector:
    """Log-signature coordinates of the encoded timeline path."""
    path = encode_path(tl, cfg)
    logsig = log_signature(path, cfg.level)
    return FeatureVector(tl.patient_id, logsig.coords, cfg.schema_id)


def featurize_signature_batch(
    timelines: list[PatientTimeline], cfg: PathEncodingConfig, threads: int = 1
) -> list[FeatureVector]:
    paths = [encode_path(tl, cfg) for tl in timelines]
    logsigs = batch_log_signatures(paths, cfg.level, threads=threads)
    return [
        FeatureVector(tl.patient_id, ls.coords, cfg.schema_id)
        for tl, ls in zip(timelines, logsigs)
    ]


def signature_feature_names(cfg: PathEncodingConfig) -> list[str]:
    basis = lyndon_basis(cfg.dim, cfg.level)
    return [f"s_{label}" for label in basis.labels()]


def write_feature_matrix(
    path: str,
    features: list[FeatureVector],
    timelines: list[PatientTimeline],
    feature_names: list[str],
    schema_id: str,
) -> None:
    """CSV with patient_id, outcome columns and one column per feature; the
    featurisation schema travels in a leading comment line."""
    with open(path, "w", newline="") as fh:
        fh.write(f"#schema={schema_id}\n")
        writer = csv.writer(fh)
        writer.writerow(["patient_id", "event", "months", *feature_names])
        for fv, tl in zip(features, timelines):
            outcome = tl.outcome
            writer.writerow(
                [
                    fv.patient_id,
                    "" if outcome is None else int(outcome.event),
                    "" if outcome is None else repr(outcome.time),
                    *[repr(float(v)) for v in fv.values],
                ]
            )


def read_feature_matrix(path: str):
    """Returns (patient_ids, outcomes or None, value matrix, feature names,
    schema_id)."""
    from .survival import SurvivalOutcome

    schema_id = ""
    with open(path, newline="") as fh:
        first = fh.readline()
        if first.startswith("#schema="):
            schema_id = first[len("#schema=") :].strip()
        else:
            fh.seek(0)
        rows = list(csv.reader(fh))
    header = rows[0]
    names = header[3:]
    ids, outcomes, values = [], [], []
    has_outcomes = True
    for row in rows[1:]:
        ids.append(row[0])
        if row[1] == "" or row[2] == "":
            has_outcomes = False
        else:
            outcomes.append(SurvivalOutcome(bool(int(row[1])), float(row[2])))
        values.append([float(v) for v in row[3:]])
    return ids, (outcomes if has_outcomes else None), np.array(values), names, schema_id
