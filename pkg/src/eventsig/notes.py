"""Rule-based extraction of MMSE scores, medication mentions and diagnoses
from dated free-text notes.

Lexicon lookups are case-insensitive with one-edit fuzzy tolerance for longer
surface forms; stop/negation and experiencer attribution use a trigger window
of six tokens in the style of the ConText algorithm. In-text date phrases
("from 1st January") re-date scores; everything else falls back to the note
date.
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import re
import warnings
from dataclasses import dataclass

from .timeline import EventKind, Experiencer, ExtractedEvent, PatientTimeline

TRIGGER_WINDOW = 6
FUZZY_MIN_LEN = 6

_STOP_TRIGGERS = [
    ("didn't", "respond", "to"),
    ("did", "not", "respond", "to"),
    ("no", "response", "to"),
    ("stopped",),
    ("stop",),
    ("stopping",),
    ("discontinued",),
    ("discontinue",),
    ("tapered", "off"),
    ("taper", "off"),
    ("withdrawn",),
    ("withdrew",),
]
_START_TRIGGERS = [
    ("started", "on"),
    ("started",),
    ("start",),
    ("commenced",),
    ("changed", "to"),
    ("switched", "to"),
    ("switch", "to"),
    ("continue", "on"),
    ("continues", "on"),
    ("continued", "on"),
    ("restarted",),
]
_FAMILY_TOKENS = {
    "wife", "husband", "mother", "father", "sister", "brother",
    "daughter", "son", "aunt", "uncle", "grandmother", "grandfather",
    "family", "carer",
}
_SCOPE_BREAKERS = {"but"}

_DIAGNOSIS_LABELS = {
    "alzheimer's": "Alzheimer's disease",
    "alzheimers": "Alzheimer's disease",
    "alzheimer": "Alzheimer's disease",
    "dementia": "dementia",
    "mild cognitive impairment": "mild cognitive impairment",
}

_MONTHS = {
    name: i + 1
    for i, names in enumerate(
        [
            ("jan", "january"), ("feb", "february"), ("mar", "march"),
            ("apr", "april"), ("may",), ("jun", "june"), ("jul", "july"),
            ("aug", "august"), ("sep", "sept", "september"), ("oct", "october"),
            ("nov", "november"), ("dec", "december"),
        ]
    )
    for name in names
}

_MONTH_RE = "|".join(sorted(_MONTHS, key=len, reverse=True))
_DAY_RE = r"\d{1,2}(?:st|nd|rd|th)?"
_DATE_PHRASE_RE = re.compile(
    rf"""(?:\b(?:from|on|since)\s+)?(?:
        (?P<iso>\d{{4}}-\d{{2}}-\d{{2}})
        | (?P<dmy>\d{{1,2}}-(?:{_MONTH_RE})-\d{{4}})
        | (?P<day1>{_DAY_RE})\s+(?:of\s+)?(?P<mon1>{_MONTH_RE})(?:\s+(?P<yr1>\d{{4}}))?
        | (?P<mon2>{_MONTH_RE})\s+(?P<day2>{_DAY_RE})(?:,?\s+(?P<yr2>\d{{4}}))?
    )\b""",
    re.IGNORECASE | re.VERBOSE,
)
_DATE_TRIGGER_RE = re.compile(r"\b(from|on|since|dated)\b", re.IGNORECASE)


@dataclass(frozen=True)
class Note:
    """A dated free-text clinical note."""

    doc_date: dt.date
    text: str


@dataclass(frozen=True)
class Lexicon:
    """Surface-form to normalised-name map for medications."""

    entries: dict[str, str]

    def __post_init__(self):
        normalized = {}
        for surface, name in self.entries.items():
            if not name:
                raise ValueError(f"empty normalised name for surface {surface!r}")
            normalized[surface.lower()] = name
        object.__setattr__(self, "entries", normalized)

    @classmethod
    def from_csv(cls, path: str) -> "Lexicon":
        entries = {}
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].startswith("#"):
                    continue
                if row[0].strip().lower() == "surface":
                    continue
                entries[row[0].strip()] = row[1].strip()
        return cls(entries)

    def match(self, token: str) -> str | None:
        """Normalised name for a token, or None. Exact match for short
        surface forms, one Damerau-Levenshtein edit allowed from length 6."""
        token = token.lower()
        if token in self.entries:
            return self.entries[token]
        for surface, name in self.entries.items():
            if len(surface) >= FUZZY_MIN_LEN and _dl_distance_leq1(token, surface):
                return name
        return None


def _dl_distance_leq1(a: str, b: str) -> bool:
    """True iff the Damerau-Levenshtein distance between a and b is <= 1."""
    if a == b:
        return True
    la, lb = len(a), len(b)
    if abs(la - lb) > 1:
        return False
    if la == lb:
        diffs = [i for i in range(la) if a[i] != b[i]]
        if len(diffs) == 1:
            return True
        if len(diffs) == 2:
            i, j = diffs
            return j == i + 1 and a[i] == b[j] and a[j] == b[i]
        return False
    if la > lb:
        a, b, la, lb = b, a, lb, la
    # one insertion into a
    i = 0
    while i < la and a[i] == b[i]:
        i += 1
    return a[i:] == b[i + 1 :]


_TOKEN_RE = re.compile(r"[A-Za-z0-9']+")


def _tokens(text: str) -> list[tuple[str, int]]:
    return [(m.group(0).lower(), m.start()) for m in _TOKEN_RE.finditer(text)]


def _parse_date_phrase(match: re.Match, doc_date: dt.date) -> dt.date | None:
    try:
        if match.group("iso"):
            return dt.date.fromisoformat(match.group("iso"))
        if match.group("dmy"):
            day, mon, year = match.group("dmy").split("-")
            return dt.date(int(year), _MONTHS[mon.lower()], int(day))
        if match.group("day1"):
            day = int(re.sub(r"[a-z]+", "", match.group("day1"), flags=re.IGNORECASE))
            month = _MONTHS[match.group("mon1").lower()]
            year = int(match.group("yr1")) if match.group("yr1") else doc_date.year
            return dt.date(year, month, day)
        if match.group("mon2"):
            day = int(re.sub(r"[a-z]+", "", match.group("day2"), flags=re.IGNORECASE))
            month = _MONTHS[match.group("mon2").lower()]
            year = int(match.group("yr2")) if match.group("yr2") else doc_date.year
            return dt.date(year, month, day)
    except ValueError:
        return None
    return None


def _attached_date(region: str, doc_date: dt.date) -> dt.date | None:
    """Date phrase at the start of the region following a score mention.

    Only phrases introduced by from/on/since (or an explicit dd-Mon-yyyy/ISO
    form) within the region qualify.
    """
    m = _DATE_PHRASE_RE.search(region)
    if m is None:
        return None
    prefix = region[: m.start()]
    explicit = m.group("iso") or m.group("dmy")
    if not explicit and not _DATE_TRIGGER_RE.search(region[: m.end()]):
        return None
    if len(prefix.split()) > 3 and not explicit:
        return None
    return _parse_date_phrase(m, doc_date)


_SENTENCE_RE = re.compile(r"[^.!?]+[.!?]?")
_SLASHED_SCORE_RE = re.compile(r"\b(\d{1,3})\s*/\s*30\b")
_PLAIN_SCORE_RE = re.compile(
    r"\bMMSE\s*(?:score\s*)?(?:of\s+|:\s*|was\s+|is\s+|at\s+)?(\d{1,3})\b(?!\s*/)",
    re.IGNORECASE,
)


def extract_mmse(note: Note) -> list[ExtractedEvent]:
    """MMSE scores from "MMSE n/30", "MMSE n" and "n/30" next to an MMSE
    mention; out-of-range scores are discarded. Each score is dated by an
    attached in-text date phrase when present, otherwise by the note date."""
    events: list[ExtractedEvent] = []
    for sentence_match in _SENTENCE_RE.finditer(note.text):
        sentence = sentence_match.group(0)
        if "mmse" not in sentence.lower():
            continue
        candidates: list[tuple[int, int, int]] = []  # (start, end, value)
        for m in _SLASHED_SCORE_RE.finditer(sentence):
            candidates.append((m.start(), m.end(), int(m.group(1))))
        for m in _PLAIN_SCORE_RE.finditer(sentence):
            span = (m.start(1), m.end(1), int(m.group(1)))
            if not any(s <= span[0] < e for s, e, _ in candidates):
                candidates.append(span)
        candidates.sort()
        for pos, (_, end, value) in enumerate(candidates):
            if not 0 <= value <= 30:
                continue
            region_end = candidates[pos + 1][0] if pos + 1 < len(candidates) else len(sentence)
            date = _attached_date(sentence[end:region_end], note.doc_date) or note.doc_date
            tokens_before = [t for t, s in _tokens(sentence[:end])][-TRIGGER_WINDOW:]
            experiencer = (
                Experiencer.OTHER
                if set(tokens_before) & _FAMILY_TOKENS
                else Experiencer.PATIENT
            )
            events.append(
                ExtractedEvent(date=date, kind=EventKind.MMSE, value=value, experiencer=experiencer)
            )
    return events


def _match_trigger(tokens: list[str], end_pos: int, triggers) -> bool:
    """True when a trigger sequence ends exactly at tokens[end_pos]."""
    for seq in triggers:
        k = len(seq)
        if end_pos - k + 1 >= 0 and tuple(tokens[end_pos - k + 1 : end_pos + 1]) == seq:
            return True
    return False


def extract_medications(note: Note, lexicon: Lexicon) -> list[ExtractedEvent]:
    """Normalised medication mentions with start/stop status.

    A stop trigger ("stopped", "discontinued", "didn't respond to", ...)
    within six tokens before the mention - with no closer trigger - yields a
    MedicationStop; start contexts and bare mentions yield MedicationStart.
    Mentions governed by a family-member token are tagged experiencer=other.
    """
    if not lexicon.entries:
        raise ValueError("medication lexicon is empty")
    toks = [t for t, _ in _tokens(note.text)]
    events: list[ExtractedEvent] = []
    for i, tok in enumerate(toks):
        name = lexicon.match(tok)
        if name is None:
            continue
        status = EventKind.MEDICATION_START
        for back in range(1, TRIGGER_WINDOW + 1):
            j = i - back
            if j < 0 or toks[j] in _SCOPE_BREAKERS:
                break
            if _match_trigger(toks, j, _STOP_TRIGGERS):
                status = EventKind.MEDICATION_STOP
                break
            if _match_trigger(toks, j, _START_TRIGGERS):
                status = EventKind.MEDICATION_START
                break
        window = set(toks[max(0, i - TRIGGER_WINDOW) : i])
        experiencer = Experiencer.OTHER if window & _FAMILY_TOKENS else Experiencer.PATIENT
        events.append(
            ExtractedEvent(
                date=note.doc_date,
                kind=status,
                value=name,
                experiencer=experiencer,
                negated=status == EventKind.MEDICATION_STOP,
            )
        )
    return events


def extract_diagnoses(note: Note) -> list[ExtractedEvent]:
    """Diagnosis mentions introduced by "diagnosed with" or "diagnosis of"."""
    events = []
    for m in re.finditer(r"\b(?:diagnosed with|diagnosis of)\s+([A-Za-z' ]{3,40})", note.text, re.IGNORECASE):
        tail = m.group(1).lower()
        for surface, label in _DIAGNOSIS_LABELS.items():
            if tail.startswith(surface):
                events.append(
                    ExtractedEvent(date=note.doc_date, kind=EventKind.DIAGNOSIS, value=label)
                )
                break
    return events


def extract_note(note: Note, lexicon: Lexicon) -> list[ExtractedEvent]:
    return extract_mmse(note) + extract_medications(note, lexicon) + extract_diagnoses(note)


def build_timeline(
    patient_id: str, notes: list[Note], lexicon: Lexicon
) -> PatientTimeline:
    """Merge per-note extractions into a chronological timeline.

    Events attributed to someone other than the patient are dropped, exact
    duplicates (same date, kind, value) collapse to one, and the result is
    sorted by date. An empty extraction is valid but flagged with a warning.
    """
    merged: dict[tuple, ExtractedEvent] = {}
    for note in notes:
        for ev in extract_note(note, lexicon):
            if ev.experiencer == Experiencer.OTHER:
                continue
            merged.setdefault((ev.date, ev.kind, ev.value), ev)
    events = list(merged.values())
    if not events:
        warnings.warn(f"no events extracted for patient {patient_id}", stacklevel=2)
    return PatientTimeline(patient_id=patient_id, events=events)


def read_notes_jsonl(path: str, skip_bad: bool = False) -> tuple[dict[str, list[Note]], int]:
    """Notes grouped by patient from JSON lines with fields patient_id, date
    (ISO-8601) and text. Returns (notes by patient, skipped count)."""
    by_patient: dict[str, list[Note]] = {}
    skipped = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                note = Note(doc_date=dt.date.fromisoformat(doc["date"]), text=doc["text"])
                pid = doc["patient_id"]
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                if skip_bad:
                    skipped += 1
                    continue
                raise ValueError(f"{path}:{lineno}: unparseable note: {exc}") from exc
            by_patient.setdefault(pid, []).append(note)
    return by_patient, skipped


def default_lexicon() -> Lexicon:
    """Dementia medications with common brand names, normalised to generics."""
    return Lexicon(
        {
            "donepezil": "donepezil",
            "aricept": "donepezil",
            "rivastigmine": "rivastigmine",
            "exelon": "rivastigmine",
            "galantamine": "galantamine",
            "reminyl": "galantamine",
            "memantine": "memantine",
            "ebixa": "memantine",
        }
    )
