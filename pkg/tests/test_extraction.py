import datetime as dt
import warnings

import pytest

from eventsig.notes import (
    Lexicon,
    Note,
    build_timeline,
    default_lexicon,
    extract_medications,
    extract_mmse,
    read_notes_jsonl,
)
from eventsig.timeline import EventKind, Experiencer

LEX = default_lexicon()

NOTE_1 = Note(
    dt.date(2016, 10, 5),
    "Today I saw a patient diagnosed with Alzheimer's, who deteriorated: "
    "MMSE 23/30 as compared to 25/30 from 1st January. Started on Rivastigmine.",
)
NOTE_2 = Note(
    dt.date(2017, 2, 12),
    "Today MMSE 19, the patient didn't respond to Rivastigmine and was changed to Donepezil.",
)
NOTE_3 = Note(
    dt.date(2018, 2, 3),
    "Great response to new treatment (MMSE 23/30), continue on Donepezil.",
)
NOTE_4 = Note(
    dt.date(2019, 4, 1),
    "The patient stopped responding to Donepezil and severely deteriorated "
    "(MMSE 14/30), stop Donepezil.",
)
ALL_NOTES = [NOTE_1, NOTE_2, NOTE_3, NOTE_4]


def test_mmse_with_intext_date():
    events = extract_mmse(NOTE_1)
    assert [(e.date, e.value) for e in events] == [
        (dt.date(2016, 10, 5), 23),
        (dt.date(2016, 1, 1), 25),
    ]


def test_mmse_plain_form_dated_by_note():
    events = extract_mmse(NOTE_2)
    assert [(e.date, e.value) for e in events] == [(dt.date(2017, 2, 12), 19)]


def test_mmse_out_of_range_discarded():
    note = Note(dt.date(2020, 1, 1), "Assessment today: MMSE 45/30 recorded in error.")
    assert extract_mmse(note) == []


def test_mmse_family_member_tagged_other():
    note = Note(dt.date(2020, 1, 1), "His wife scored MMSE 28/30 at her own assessment.")
    events = extract_mmse(note)
    assert len(events) == 1 and events[0].experiencer == Experiencer.OTHER


def test_medication_start():
    events = extract_medications(NOTE_1, LEX)
    assert [(e.kind, e.value) for e in events] == [
        (EventKind.MEDICATION_START, "rivastigmine")
    ]


def test_medication_stop_and_switch():
    events = extract_medications(NOTE_2, LEX)
    assert [(e.kind, e.value, e.negated) for e in events] == [
        (EventKind.MEDICATION_STOP, "rivastigmine", True),
        (EventKind.MEDICATION_START, "donepezil", False),
    ]


def test_medication_explicit_stop():
    events = extract_medications(NOTE_4, LEX)
    assert all(e.kind == EventKind.MEDICATION_STOP for e in events)
    assert {e.value for e in events} == {"donepezil"}


def test_medication_brand_name_normalised():
    note = Note(dt.date(2020, 1, 1), "Continue on Aricept as before.")
    events = extract_medications(note, LEX)
    assert [(e.kind, e.value) for e in events] == [(EventKind.MEDICATION_START, "donepezil")]


def test_medication_fuzzy_one_edit():
    note = Note(dt.date(2020, 1, 1), "Started on Donepezyl 10mg.")
    events = extract_medications(note, LEX)
    assert [e.value for e in events] == ["donepezil"]
    # short tokens never fuzzy-match
    assert extract_medications(Note(dt.date(2020, 1, 1), "eximon given"), LEX) == []


@pytest.mark.filterwarnings("ignore:no events extracted")
def test_medication_family_excluded_from_timeline():
    note = Note(dt.date(2020, 1, 1), "Her husband takes Donepezil for his own dementia.")
    events = extract_medications(note, LEX)
    assert events[0].experiencer == Experiencer.OTHER
    tl = build_timeline("p1", [note], LEX)
    assert all(e.kind != EventKind.MEDICATION_START for e in tl.events)


def test_golden_timeline_from_four_notes():
    tl = build_timeline("example-001", ALL_NOTES, LEX)
    rows = tl.medication_state_rows()
    assert rows == [
        (dt.date(2016, 1, 1), "NoMed", 25),
        (dt.date(2016, 10, 5), "rivastigmine", 23),
        (dt.date(2017, 2, 12), "donepezil", 19),
        (dt.date(2018, 2, 3), "donepezil", 23),
        (dt.date(2019, 4, 1), "Discontinued", 14),
    ]


def test_timeline_dates_non_decreasing():
    tl = build_timeline("example-001", ALL_NOTES, LEX)
    dates = [e.date for e in tl.events]
    assert dates == sorted(dates)


def test_duplicate_notes_deduplicate():
    tl_once = build_timeline("p", ALL_NOTES, LEX)
    tl_twice = build_timeline("p", ALL_NOTES + ALL_NOTES, LEX)
    assert tl_once.events == tl_twice.events


def test_extraction_deterministic():
    a = build_timeline("p", ALL_NOTES, LEX)
    b = build_timeline("p", ALL_NOTES, LEX)
    assert a.events == b.events


def test_empty_extraction_flagged():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tl = build_timeline("p", [Note(dt.date(2020, 1, 1), "Routine visit.")], LEX)
    assert tl.is_empty
    assert any("no events" in str(w.message) for w in caught)


def test_stopped_drug_not_active_same_date():
    tl = build_timeline("example-001", ALL_NOTES, LEX)
    for date, state, _ in tl.medication_state_rows():
        stops = {
            e.value
            for e in tl.events
            if e.date == date and e.kind == EventKind.MEDICATION_STOP
        }
        restarted = {
            e.value
            for e in tl.events
            if e.date == date and e.kind == EventKind.MEDICATION_START
        }
        assert state not in (stops - restarted)


def test_lexicon_from_csv(tmp_path):
    p = tmp_path / "lex.csv"
    p.write_text("surface,normalised\nDonepezil,donepezil\nAricept,donepezil\n")
    lex = Lexicon.from_csv(str(p))
    assert lex.match("aricept") == "donepezil"
    assert lex.match("ARICEPT") == "donepezil"


def test_lexicon_rejects_empty_normalised():
    with pytest.raises(ValueError, match="empty"):
        Lexicon({"x": ""})


def test_read_notes_jsonl_bad_line(tmp_path):
    p = tmp_path / "notes.jsonl"
    p.write_text(
        '{"patient_id": "a", "date": "2020-01-01", "text": "MMSE 20/30"}\n'
        '{"patient_id": "a", "date": "not-a-date", "text": "x"}\n'
    )
    with pytest.raises(ValueError, match="notes.jsonl:2"):
        read_notes_jsonl(str(p))
    by_patient, skipped = read_notes_jsonl(str(p), skip_bad=True)
    assert skipped == 1 and len(by_patient["a"]) == 1
