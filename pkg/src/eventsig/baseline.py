"""Linear-summary features: per-patient OLS of MMSE over time plus the median
cumulative count of distinct medication categories."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoding import FeatureVector, months_since
from .timeline import EventKind, Experiencer, PatientTimeline

BASELINE_SCHEMA_ID = "baseline"
BASELINE_FEATURE_NAMES = ["b_intercept", "b_slope", "b_medstat"]


@dataclass(frozen=True)
class BaselineFeatures:
    """Exactly three per-patient summary values."""

    intercept: float  # MMSE points
    slope: float  # MMSE points per month
    med_stat: float  # median medication-category count

    def __post_init__(self):
        for name in ("intercept", "slope", "med_stat"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def ols_fit(times: np.ndarray, scores: np.ndarray) -> tuple[float, float]:
    """Ordinary least squares (intercept, slope); a single observation or
    all-equal times degrade to slope 0 and intercept = mean score."""
    times = np.asarray(times, dtype=float)
    scores = np.asarray(scores, dtype=float)
    if times.size == 0:
        raise ValueError("OLS needs at least one observation")
    if not np.all(np.isfinite(times)):
        raise ValueError("times must be finite")
    if times.size == 1 or np.all(times == times[0]):
        return float(scores.mean()), 0.0
    t_mean = times.mean()
    s_mean = scores.mean()
    slope = float(np.sum((times - t_mean) * (scores - s_mean)) / np.sum((times - t_mean) ** 2))
    return float(s_mean - slope * t_mean), slope


def baseline_featurize(tl: PatientTimeline) -> BaselineFeatures:
    """OLS over all dated MMSE observations plus the median, over event dates,
    of the cumulative number of distinct medication categories started by that
    date (no medication counts zero)."""
    mmse_times, mmse_scores = [], []
    dates = []
    started_by_date: dict = {}
    seen: set[str] = set()
    index_date = tl.index_date
    for ev in tl.events:
        if ev.experiencer == Experiencer.OTHER:
            continue
        if ev.kind == EventKind.MMSE:
            mmse_times.append(months_since(index_date, ev.date))
            mmse_scores.append(int(ev.value))
        if ev.kind == EventKind.MEDICATION_START:
            seen.add(str(ev.value))
        if ev.kind in (EventKind.MMSE, EventKind.MEDICATION_START, EventKind.MEDICATION_STOP):
            if ev.date not in dates:
                dates.append(ev.date)
            started_by_date[ev.date] = len(seen)
    if not mmse_times:
        raise ValueError(f"patient {tl.patient_id} has no MMSE events")
    intercept, slope = ols_fit(np.array(mmse_times), np.array(mmse_scores))
    counts = [started_by_date[d] for d in sorted(dates)]
    return BaselineFeatures(intercept, slope, float(np.median(counts)))


def baseline_feature_vector(tl: PatientTimeline, include_meds: bool) -> FeatureVector:
    bf = baseline_featurize(tl)
    values = [bf.intercept, bf.slope] + ([bf.med_stat] if include_meds else [])
    return FeatureVector(tl.patient_id, np.array(values), BASELINE_SCHEMA_ID)
