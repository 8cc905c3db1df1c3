"""Right-censored survival estimators and evaluation metrics.

Kaplan-Meier and Nelson-Aalen step functions, the two-sample log-rank
statistic, Harrell's concordance index and the IPCW cumulative/dynamic AUC.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class SurvivalOutcome:
    """Right-censored outcome: ``event`` is True when death was observed at
    ``time`` (months since index date), False when follow-up ended there."""

    event: bool
    time: float

    def __post_init__(self):
        if not (np.isfinite(self.time) and self.time > 0):
            raise ValueError(f"outcome time must be positive and finite, got {self.time}")


def outcome_arrays(outcomes: list[SurvivalOutcome]) -> tuple[np.ndarray, np.ndarray]:
    times = np.array([o.time for o in outcomes], dtype=float)
    events = np.array([o.event for o in outcomes], dtype=bool)
    return times, events


class NoComparablePairsError(ValueError):
    """Raised when a concordance index has no comparable pairs (this is not
    the same as a 0.5 result)."""


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function: value is ``initial`` before the first
    jump time and ``values[i]`` on [times[i], times[i+1])."""

    times: np.ndarray
    values: np.ndarray
    initial: float

    def __call__(self, t) -> np.ndarray | float:
        idx = np.searchsorted(self.times, t, side="right")
        padded = np.concatenate([[self.initial], self.values])
        out = padded[idx]
        return float(out) if np.isscalar(t) else out

    def left_limit(self, t) -> np.ndarray | float:
        """Value just before t (steps at exactly t excluded)."""
        idx = np.searchsorted(self.times, t, side="left")
        padded = np.concatenate([[self.initial], self.values])
        out = padded[idx]
        return float(out) if np.isscalar(t) else out


def _risk_table(times: np.ndarray, events: np.ndarray):
    """Distinct event times with event counts and at-risk counts."""
    order = np.argsort(times, kind="stable")
    ts, ev = times[order], events[order].astype(float)
    uniq, first = np.unique(ts, return_index=True)
    n_at_risk = len(ts) - first
    ev_cum = np.concatenate([[0.0], np.cumsum(ev)])
    ends = np.concatenate([first[1:], [len(ts)]])
    d = ev_cum[ends] - ev_cum[first]
    keep = d > 0
    return uniq[keep], d[keep], n_at_risk[keep].astype(float)


def kaplan_meier(outcomes: list[SurvivalOutcome]) -> StepFunction:
    """Product-limit survival estimator; S(0) = 1, non-increasing."""
    if not outcomes:
        raise ValueError("kaplan_meier needs at least one outcome")
    times, events = outcome_arrays(outcomes)
    uniq, d, n = _risk_table(times, events)
    surv = np.cumprod(1.0 - d / n)
    return StepFunction(uniq, surv, initial=1.0)


def nelson_aalen(outcomes: list[SurvivalOutcome]) -> StepFunction:
    """Cumulative-hazard estimator H(t) = sum d_i / n_i; H(0) = 0."""
    if not outcomes:
        raise ValueError("nelson_aalen needs at least one outcome")
    times, events = outcome_arrays(outcomes)
    uniq, d, n = _risk_table(times, events)
    return StepFunction(uniq, np.cumsum(d / n), initial=0.0)


def censoring_survival(outcomes: list[SurvivalOutcome]) -> StepFunction:
    """Kaplan-Meier estimate of the censoring distribution (events flipped)."""
    flipped = [SurvivalOutcome(not o.event, o.time) for o in outcomes]
    return kaplan_meier(flipped)


def logrank_split_score(
    left: list[SurvivalOutcome], right: list[SurvivalOutcome]
) -> float:
    """Absolute standardized two-sample log-rank statistic; 0 when there are
    no events or the variance vanishes."""
    if not left or not right:
        raise ValueError("both groups must be nonempty")
    lt, le = outcome_arrays(left)
    rt, re_ = outcome_arrays(right)
    times = np.concatenate([lt, rt])
    events = np.concatenate([le, re_])
    membership = np.concatenate([np.zeros(len(lt)), np.ones(len(rt))])
    order = np.argsort(times, kind="stable")
    scores, _, _ = _kernels.logrank_scan(
        np.ascontiguousarray(times[order]),
        np.ascontiguousarray(events[order].astype(np.uint8)),
        np.ascontiguousarray(membership[order]),
        np.array([0.5]),
    )
    return float(scores[0])


def c_index(risks: np.ndarray, outcomes: list[SurvivalOutcome]) -> float:
    """Harrell's concordance: pairs (i, j) are comparable iff
    time_i < time_j and i had the event; concordant when risk_i > risk_j,
    half credit for tied risks."""
    risks = np.asarray(risks, dtype=float)
    times, events = outcome_arrays(outcomes)
    if risks.shape != times.shape:
        raise ValueError("risks and outcomes must have equal length")
    comparable = (times[:, None] < times[None, :]) & events[:, None]
    n_comparable = comparable.sum()
    if n_comparable == 0:
        raise NoComparablePairsError("no comparable pairs in the data")
    greater = risks[:, None] > risks[None, :]
    tied = risks[:, None] == risks[None, :]
    concordant = (comparable & greater).sum() + 0.5 * (comparable & tied).sum()
    return float(concordant / n_comparable)


def cumulative_dynamic_auc(
    train_outcomes: list[SurvivalOutcome],
    test_outcomes: list[SurvivalOutcome],
    test_risks: np.ndarray,
    eval_times: np.ndarray,
) -> list[tuple[float, float]]:
    """Time-dependent cumulative/dynamic AUC with IPCW case weights.

    At horizon t, cases are subjects with an observed event by t and controls
    are subjects still under observation after t. Case weights are inverse
    probabilities from the Kaplan-Meier censoring survival fitted on the
    training outcomes; tied risks score half. Horizons with no cases, no
    controls, or beyond the observed follow-up are omitted with a warning.
    """
    test_risks = np.asarray(test_risks, dtype=float)
    times, events = outcome_arrays(test_outcomes)
    if test_risks.shape != times.shape:
        raise ValueError("risks and outcomes must have equal length")
    g_hat = censoring_survival(train_outcomes)
    last_time = times.max()
    out: list[tuple[float, float]] = []
    for t in np.asarray(eval_times, dtype=float):
        if t >= last_time:
            warnings.warn(f"horizon {t} beyond observed follow-up; point omitted", stacklevel=2)
            continue
        case = (times <= t) & events
        control = times > t
        if not case.any() or not control.any():
            warnings.warn(f"no cases or no controls at horizon {t}; point omitted", stacklevel=2)
            continue
        g_case = np.asarray(g_hat.left_limit(times[case]), dtype=float)
        weights = np.where(g_case > 0.0, 1.0 / np.where(g_case > 0.0, g_case, 1.0), 0.0)
        if weights.sum() == 0.0:
            warnings.warn(f"all case weights vanish at horizon {t}; point omitted", stacklevel=2)
            continue
        r_case = test_risks[case]
        r_ctrl = test_risks[control]
        wins = (r_case[:, None] > r_ctrl[None, :]).sum(axis=1)
        ties = (r_case[:, None] == r_ctrl[None, :]).sum(axis=1)
        numer = np.sum(weights * (wins + 0.5 * ties))
        denom = weights.sum() * len(r_ctrl)
        out.append((float(t), float(numer / denom)))
    return out
