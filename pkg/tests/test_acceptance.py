"""Acceptance gate: each test enforces one release criterion at its stated
tolerance and prints a PASS line when it holds.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report. The directional-experiment criterion trains the full-size default
synthetic cohort and dominates the runtime (a few minutes).
"""
import datetime as dt
import time

import numpy as np
import pytest

from eventsig.cohort import CohortSpec, generate_cohort
from eventsig.encoding import FEATURE_SET_TIME_MMSE, FEATURE_SET_TIME_MMSE_MEDS
from eventsig.experiment import (
    NONSIG,
    SIG,
    ExperimentConfig,
    emit_outputs,
    find_report,
    run_experiment,
)
from eventsig.forest import ForestParams, fit_survival_forest, save_model
from eventsig.notes import Note, build_timeline, default_lexicon
from eventsig.signature import (
    PiecewisePath,
    log_signature,
    path_from_letter_sequence,
    path_signature,
)
from eventsig.survival import (
    NoComparablePairsError,
    SurvivalOutcome,
    c_index,
    cumulative_dynamic_auc,
)
from eventsig.tensor_algebra import concat_product

from test_signature import quadrature_signature
from test_survival import c_index_pair_oracle, plain_roc_auc


def report(name: str, detail: str = ""):
    print(f"\nACCEPT {name}: PASS {detail}")


def test_accept_golden_log_signatures():
    t0 = time.perf_counter()
    ls1 = log_signature(path_from_letter_sequence("aabba"), 4)
    ls2 = log_signature(path_from_letter_sequence("baaab"), 4)
    elapsed = time.perf_counter() - t0
    err1 = np.max(np.abs(ls1.coords - np.array([3, 2, 1, -0.5, -1, -1 / 3, -0.5, 0])))
    err2 = np.max(np.abs(ls2.coords - np.array([3, 2, 0, 1.5, 0.5, 0, 0, 0])))
    assert err1 < 1e-9 and err2 < 1e-9
    assert elapsed < 1.0
    report("golden log-signature vectors", f"(16/16 coords, max err {max(err1, err2):.1e}, {elapsed*1e3:.0f} ms)")


def test_accept_chen_identity_500_paths():
    rng = np.random.default_rng(500)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        dim = int(rng.integers(1, 5))
        level = int(rng.integers(1, 6))
        n_pts = int(rng.integers(3, 9))
        pts = rng.normal(size=(n_pts, dim))
        cut = int(rng.integers(1, n_pts - 1))
        whole = path_signature(PiecewisePath(pts), level)
        left = path_signature(PiecewisePath(pts[: cut + 1]), level)
        right = path_signature(PiecewisePath(pts[cut:]), level)
        err = float(np.max(np.abs(whole.coeffs - concat_product(left, right).coeffs)))
        worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    assert worst < 1e-10
    assert elapsed < 30.0
    report("concatenation identity on 500 random splits", f"(max err {worst:.1e}, {elapsed:.1f} s)")


def test_accept_shuffle_and_reparameterisation_500_paths():
    rng = np.random.default_rng(501)
    worst_shuffle = 0.0
    worst_reparam = 0.0
    for _ in range(500):
        dim = int(rng.integers(2, 5))
        n_pts = int(rng.integers(3, 9))
        pts = rng.normal(size=(n_pts, dim))
        g = path_signature(PiecewisePath(pts), 2)
        for i in range(1, dim + 1):
            for j in range(1, dim + 1):
                err = abs(g.coeff((i,)) * g.coeff((j,)) - g.coeff((i, j)) - g.coeff((j, i)))
                worst_shuffle = max(worst_shuffle, err)
        seg = int(rng.integers(0, n_pts - 1))
        frac = float(rng.uniform(0.1, 0.9))
        mid = pts[seg] + frac * (pts[seg + 1] - pts[seg])
        refined = np.insert(pts, seg + 1, mid, axis=0)
        g2 = path_signature(PiecewisePath(refined), 2)
        worst_reparam = max(worst_reparam, float(np.max(np.abs(g.coeffs - g2.coeffs))))
    assert worst_shuffle < 1e-10
    assert worst_reparam < 1e-12
    report(
        "shuffle + reparameterisation invariance on 500 paths",
        f"(shuffle {worst_shuffle:.1e}, reparam {worst_reparam:.1e})",
    )


def test_accept_iterated_integral_quadrature_oracle():
    rng = np.random.default_rng(502)
    worst = 0.0
    for _ in range(50):
        pts = rng.normal(size=(3, 2))  # two segments
        sig = path_signature(PiecewisePath(pts), 3)
        oracle = quadrature_signature(pts, 3)
        worst = max(worst, float(np.max(np.abs(sig.coeffs - oracle.coeffs))))
    assert worst < 1e-6
    report("iterated-integral quadrature oracle (50 paths, level 3)", f"(max err {worst:.1e})")


def test_accept_c_index_matches_pair_enumeration_exactly():
    rng = np.random.default_rng(503)
    checked = 0
    for _ in range(200):
        n = int(rng.integers(2, 31))
        times = rng.uniform(0.5, 20.0, size=n)
        events = rng.random(n) > 0.4
        outcomes = [SurvivalOutcome(bool(e), float(t)) for e, t in zip(events, times)]
        risks = np.round(rng.normal(size=n), 1)
        try:
            expected = c_index_pair_oracle(risks, outcomes)
        except NoComparablePairsError:
            with pytest.raises(NoComparablePairsError):
                c_index(risks, outcomes)
            continue
        assert c_index(risks, outcomes) == expected
        checked += 1
    assert checked > 150
    report("concordance equals exhaustive pair enumeration", f"({checked}/200 datasets, exact)")


def test_accept_auc_reduces_to_plain_roc():
    rng = np.random.default_rng(504)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(30, 120))
        times = rng.uniform(1.0, 30.0, size=n)
        outcomes = [SurvivalOutcome(True, float(t)) for t in times]
        risks = np.round(rng.normal(size=n), 1)
        grid = rng.uniform(2.0, 28.0, size=4)
        grid = grid[grid < times.max()]
        for t, auc in cumulative_dynamic_auc(outcomes, outcomes, risks, np.sort(grid)):
            labels = times <= t
            if labels.any() and (~labels).any():
                worst = max(worst, abs(auc - plain_roc_auc(labels, risks)))
    assert worst < 1e-12
    report("uncensored AUC reduction to plain ROC", f"(max err {worst:.1e})")


def test_accept_extraction_golden_fixture():
    notes = [
        Note(
            dt.date(2016, 10, 5),
            "Today I saw a patient diagnosed with Alzheimer's, who deteriorated: "
            "MMSE 23/30 as compared to 25/30 from 1st January. Started on Rivastigmine.",
        ),
        Note(
            dt.date(2017, 2, 12),
            "Today MMSE 19, the patient didn't respond to Rivastigmine and was changed to Donepezil.",
        ),
        Note(dt.date(2018, 2, 3), "Great response to new treatment (MMSE 23/30), continue on Donepezil."),
        Note(
            dt.date(2019, 4, 1),
            "The patient stopped responding to Donepezil and severely deteriorated "
            "(MMSE 14/30), stop Donepezil.",
        ),
    ]
    tl = build_timeline("example-001", notes, default_lexicon())
    rows = tl.medication_state_rows()
    # the 05-Oct-2016 score follows the note text (23/30)
    assert rows == [
        (dt.date(2016, 1, 1), "NoMed", 25),
        (dt.date(2016, 10, 5), "rivastigmine", 23),
        (dt.date(2017, 2, 12), "donepezil", 19),
        (dt.date(2018, 2, 3), "donepezil", 23),
        (dt.date(2019, 4, 1), "Discontinued", 14),
    ]
    report("extraction golden fixture", "(5-row structured timeline, score 23 on 2016-10-05)")


@pytest.fixture(scope="module")
def default_experiment_run():
    t0 = time.perf_counter()
    spec = CohortSpec()
    cfg = ExperimentConfig()
    timelines = generate_cohort(spec)
    reports = run_experiment(timelines, cfg)
    elapsed = time.perf_counter() - t0
    return timelines, reports, elapsed


def test_accept_default_cohort_calibration(default_experiment_run):
    timelines, _, _ = default_experiment_run
    spec = CohortSpec()
    assert len(timelines) == 3462
    times = np.array([tl.outcome.time for tl in timelines])
    events = np.array([tl.outcome.event for tl in timelines])
    died, cens = times[events], times[~events]
    checks = [
        (died.mean(), spec.died_time_mean),
        (died.std(ddof=1), spec.died_time_std),
        (cens.mean(), spec.censored_time_mean),
        (cens.std(ddof=1), spec.censored_time_std),
    ]
    worst = max(abs(got - want) / want for got, want in checks)
    assert events.sum() == 1962 and (~events).sum() == 1500
    assert worst < 0.05
    report("synthetic cohort calibration", f"(3462 patients, worst moment error {worst*100:.1f}%)")


def test_accept_directional_experiment(default_experiment_run):
    _, reports, elapsed = default_experiment_run
    sig_c = find_report(reports, SIG, FEATURE_SET_TIME_MMSE).c_mean
    nonsig_c = find_report(reports, NONSIG, FEATURE_SET_TIME_MMSE).c_mean
    gap = sig_c - nonsig_c
    assert gap >= 0.03
    sig_meds = dict(find_report(reports, SIG, FEATURE_SET_TIME_MMSE_MEDS).pooled_auc())
    sig_plain = dict(find_report(reports, SIG, FEATURE_SET_TIME_MMSE).pooled_auc())
    late = [t for t in sig_meds if t > 24 and t in sig_plain]
    wins = sum(sig_meds[t] > sig_plain[t] for t in late)
    assert late and wins > len(late) / 2
    assert elapsed < 600.0
    report(
        "directional experiment",
        f"(C {sig_c:.3f} vs {nonsig_c:.3f}, gap {gap:.3f} >= 0.03; "
        f"meds AUC ahead at {wins}/{len(late)} horizons beyond month 24; {elapsed:.0f} s)",
    )


def test_accept_determinism_byte_identical(tmp_path, default_experiment_run):
    _, reports, _ = default_experiment_run
    # experiment CSV outputs
    d1, d2 = tmp_path / "r1", tmp_path / "r2"
    emit_outputs(reports, str(d1))
    emit_outputs(reports, str(d2))
    compared = 0
    for name in sorted(p.name for p in d1.iterdir()):
        if name.endswith(".csv") or name.endswith(".txt"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name
            compared += 1
    # model files
    rng = np.random.default_rng(505)
    X = rng.normal(size=(150, 4))
    outcomes = [
        SurvivalOutcome(bool(e), float(t))
        for e, t in zip(rng.random(150) > 0.3, rng.uniform(1, 40, size=150))
    ]
    params = ForestParams(n_trees=20)
    m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
    save_model(fit_survival_forest(X, outcomes, params=params, seed=77), str(m1))
    save_model(fit_survival_forest(X, outcomes, params=params, seed=77), str(m2))
    assert m1.read_bytes() == m2.read_bytes()
    report("determinism", f"({compared} CSV/text outputs and model files byte-identical on rerun)")
