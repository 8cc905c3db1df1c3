"""Chronologically structured patient timelines shared by the extractor, the
path encoders and the synthetic cohort generator."""
from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .survival import SurvivalOutcome

NOMED = "NoMed"
DISCONTINUED = "Discontinued"


class EventKind(str, Enum):
    MMSE = "MMSE"
    MEDICATION_START = "MedicationStart"
    MEDICATION_STOP = "MedicationStop"
    DIAGNOSIS = "Diagnosis"


class Experiencer(str, Enum):
    PATIENT = "patient"
    OTHER = "other"


@dataclass(frozen=True, order=True)
class ExtractedEvent:
    """One dated clinical fact: an MMSE score (value 0..30), a normalised
    medication start/stop, or a diagnosis label."""

    date: dt.date
    kind: EventKind
    value: int | str
    experiencer: Experiencer = Experiencer.PATIENT
    negated: bool = False

    def __post_init__(self):
        if self.kind == EventKind.MMSE and not (
            isinstance(self.value, int) and 0 <= self.value <= 30
        ):
            raise ValueError(f"MMSE value must be an integer in 0..30, got {self.value}")
        if self.kind == EventKind.MEDICATION_STOP and not self.negated:
            raise ValueError("medication stop events are negated by definition")


@dataclass
class PatientTimeline:
    """Chronologically ordered events of one patient.

    ``index_date`` is the date of the first event; ``outcome`` is attached
    when survival information is available.
    """

    patient_id: str
    events: list[ExtractedEvent]
    outcome: SurvivalOutcome | None = None

    def __post_init__(self):
        self.events = sorted(self.events, key=_event_sort_key)

    @property
    def index_date(self) -> dt.date:
        if not self.events:
            raise ValueError("empty timeline has no index date")
        return self.events[0].date

    @property
    def is_empty(self) -> bool:
        return not self.events

    def medication_state_rows(self) -> list[tuple[dt.date, str, int | None]]:
        """Per-date (date, medication state, MMSE) view.

        The state is NoMed before the first start, the active normalised drug
        while one is prescribed, and Discontinued after a stop with no
        restart. One row per date carrying an MMSE score or medication event;
        stops apply before starts on a shared date.
        """
        rows: list[tuple[dt.date, str, int | None]] = []
        state = NOMED
        for date, day_events in _group_by_date(self.events):
            mmse: int | None = None
            relevant = False
            for ev in sorted(day_events, key=lambda e: (e.kind != EventKind.MEDICATION_STOP,)):
                if ev.experiencer == Experiencer.OTHER:
                    continue
                if ev.kind == EventKind.MEDICATION_STOP:
                    state = DISCONTINUED
                    relevant = True
                elif ev.kind == EventKind.MEDICATION_START:
                    state = str(ev.value)
                    relevant = True
                elif ev.kind == EventKind.MMSE:
                    mmse = int(ev.value)
                    relevant = True
            if relevant:
                rows.append((date, state, mmse))
        return rows


def _event_sort_key(ev: ExtractedEvent):
    return (ev.date, ev.kind.value, str(ev.value), ev.experiencer.value, ev.negated)


def _group_by_date(events: Iterable[ExtractedEvent]):
    by_date: dict[dt.date, list[ExtractedEvent]] = {}
    for ev in events:
        by_date.setdefault(ev.date, []).append(ev)
    return sorted(by_date.items())


def event_to_record(patient_id: str, ev: ExtractedEvent) -> dict:
    return {
        "patient_id": patient_id,
        "date": ev.date.isoformat(),
        "kind": ev.kind.value,
        "value": ev.value,
        "negated": ev.negated,
        "experiencer": ev.experiencer.value,
    }


def event_from_record(rec: dict) -> ExtractedEvent:
    return ExtractedEvent(
        date=dt.date.fromisoformat(rec["date"]),
        kind=EventKind(rec["kind"]),
        value=rec["value"],
        experiencer=Experiencer(rec.get("experiencer", "patient")),
        negated=bool(rec.get("negated", False)),
    )


def write_timelines_jsonl(path: str, timelines: list[PatientTimeline]) -> None:
    """One JSON object per patient: id, events, optional outcome."""
    with open(path, "w") as fh:
        for tl in timelines:
            doc: dict = {
                "patient_id": tl.patient_id,
                "events": [event_to_record(tl.patient_id, e) for e in tl.events],
            }
            if tl.outcome is not None:
                doc["outcome"] = {"event": tl.outcome.event, "months": tl.outcome.time}
            fh.write(json.dumps(doc, sort_keys=True) + "\n")


def read_timelines_jsonl(path: str) -> list[PatientTimeline]:
    """Reads either per-patient objects (with an ``events`` list) or flat
    per-event rows (the extractor's output format)."""
    per_patient: dict[str, PatientTimeline] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if "events" in doc:
                outcome = None
                if doc.get("outcome") is not None:
                    outcome = SurvivalOutcome(
                        bool(doc["outcome"]["event"]), float(doc["outcome"]["months"])
                    )
                per_patient[doc["patient_id"]] = PatientTimeline(
                    patient_id=doc["patient_id"],
                    events=[event_from_record(r) for r in doc["events"]],
                    outcome=outcome,
                )
            else:
                pid = doc["patient_id"]
                tl = per_patient.setdefault(pid, PatientTimeline(pid, []))
                tl.events.append(event_from_record(doc))
    for tl in per_patient.values():
        tl.events.sort(key=_event_sort_key)
    return list(per_patient.values())
