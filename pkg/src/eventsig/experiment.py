"""End-to-end experiment protocol: a 2x2 grid of featurisers (signature vs
linear summary) by feature sets (with/without medications), evaluated under
stratified k-fold cross validation shared across all cells, reporting the
concordance index per cell and pooled time-dependent AUC curves."""
from __future__ import annotations

import csv
import hashlib
import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .baseline import BASELINE_SCHEMA_ID, baseline_featurize
from .cohort import CohortSpec, generate_cohort
from .encoding import (
    FEATURE_SET_TIME_MMSE,
    FEATURE_SET_TIME_MMSE_MEDS,
    PathEncodingConfig,
    featurize_signature_batch,
    signature_feature_names,
)
from .forest import ForestParams, fit_survival_forest, predict_risk
from .survival import SurvivalOutcome, c_index, cumulative_dynamic_auc, outcome_arrays
from .timeline import PatientTimeline

SIG = "sig"
NONSIG = "nonsig"

DEFAULT_EVAL_GRID = tuple(float(t) for t in range(10, 41, 2))
# truncation defaults: deeper for the 2-channel path, shallower once the
# one-hot medication block widens the alphabet
DEFAULT_LEVEL_TIME_MMSE = 3
DEFAULT_LEVEL_TIME_MMSE_MEDS = 2


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 7041962
    n_folds: int = 5
    feature_sets: tuple[str, ...] = (FEATURE_SET_TIME_MMSE, FEATURE_SET_TIME_MMSE_MEDS)
    featurisers: tuple[str, ...] = (SIG, NONSIG)
    level_time_mmse: int = DEFAULT_LEVEL_TIME_MMSE
    level_time_mmse_meds: int = DEFAULT_LEVEL_TIME_MMSE_MEDS
    forest: ForestParams = field(default_factory=ForestParams)
    eval_times: tuple[float, ...] = DEFAULT_EVAL_GRID
    threads: int = 1

    def __post_init__(self):
        if self.n_folds < 2:
            raise ValueError("need at least 2 folds")

    def encoding(self, feature_set: str) -> PathEncodingConfig:
        level = (
            self.level_time_mmse
            if feature_set == FEATURE_SET_TIME_MMSE
            else self.level_time_mmse_meds
        )
        return PathEncodingConfig(feature_set=feature_set, level=level)


@dataclass
class CellReport:
    featuriser: str
    feature_set: str
    fold_c_indices: list[float]
    auc_per_fold: list[list[tuple[float, float]]]
    fold_hash: str

    @property
    def c_mean(self) -> float:
        return float(np.mean(self.fold_c_indices))

    @property
    def c_std(self) -> float:
        return float(np.std(self.fold_c_indices, ddof=1))

    def pooled_auc(self) -> list[tuple[float, float]]:
        """Mean AUC across folds at every horizon reported by any fold."""
        by_t: dict[float, list[float]] = {}
        for curve in self.auc_per_fold:
            for t, a in curve:
                by_t.setdefault(t, []).append(a)
        return [(t, float(np.mean(vals))) for t, vals in sorted(by_t.items())]

    def formatted_c(self) -> str:
        return f"{self.c_mean:.3f}({self.c_std:.3f})"


def stratified_kfold(outcomes: list[SurvivalOutcome], k: int, seed: int) -> np.ndarray:
    """Fold labels balanced on the event indicator (class counts differ by at
    most one across folds).

    Rows are canonicalised by (time, event) before the seeded shuffle, so the
    assignment does not depend on input order.
    """
    n = len(outcomes)
    if k > n:
        raise ValueError(f"cannot make {k} folds from {n} outcomes")
    times, events = outcome_arrays(outcomes)
    if events.all() or not events.any():
        raise ValueError("both event classes must be present for stratification")
    rng = np.random.default_rng(seed)
    folds = np.empty(n, dtype=np.int64)
    next_fold = 0
    for cls in (True, False):
        members = np.flatnonzero(events == cls)
        canonical = members[np.lexsort((members, times[members]))]
        shuffled = canonical[rng.permutation(len(canonical))]
        for pos, idx in enumerate(shuffled):
            folds[idx] = (next_fold + pos) % k
        next_fold = (next_fold + len(members)) % k
    return folds


def fold_assignment_hash(folds: np.ndarray) -> str:
    return hashlib.sha256(folds.astype(np.int64).tobytes()).hexdigest()[:16]


def _featurize_cell(
    timelines: list[PatientTimeline],
    featuriser: str,
    feature_set: str,
    cfg: ExperimentConfig,
) -> tuple[np.ndarray, str, list[str]]:
    if featuriser == SIG:
        enc = cfg.encoding(feature_set)
        fvs = featurize_signature_batch(timelines, enc, threads=cfg.threads)
        return (
            np.array([fv.values for fv in fvs]),
            enc.schema_id,
            signature_feature_names(enc),
        )
    if featuriser == NONSIG:
        include_meds = feature_set == FEATURE_SET_TIME_MMSE_MEDS
        rows = []
        for tl in timelines:
            bf = baseline_featurize(tl)
            rows.append([bf.intercept, bf.slope] + ([bf.med_stat] if include_meds else []))
        names = ["b_intercept", "b_slope"] + (["b_medstat"] if include_meds else [])
        return np.array(rows), BASELINE_SCHEMA_ID, names
    raise ValueError(f"unknown featuriser {featuriser!r}")


def run_experiment(
    timelines: list[PatientTimeline], cfg: ExperimentConfig
) -> list[CellReport]:
    """Train and evaluate every (featuriser, feature set) cell on identical
    stratified folds; any fold whose training split lacks events aborts that
    cell with a diagnostic."""
    outcomes = [tl.outcome for tl in timelines]
    if any(o is None for o in outcomes):
        raise ValueError("every timeline needs a survival outcome")
    folds = stratified_kfold(outcomes, cfg.n_folds, cfg.seed)
    fhash = fold_assignment_hash(folds)
    times, events = outcome_arrays(outcomes)

    cell_seeds = {}
    root = np.random.SeedSequence(cfg.seed)
    children = root.spawn(len(cfg.featurisers) * len(cfg.feature_sets))
    pos = 0
    for featuriser in cfg.featurisers:
        for feature_set in cfg.feature_sets:
            cell_seeds[(featuriser, feature_set)] = children[pos]
            pos += 1

    reports = []
    for featuriser in cfg.featurisers:
        for feature_set in cfg.feature_sets:
            X, schema_id, _ = _featurize_cell(timelines, featuriser, feature_set, cfg)
            fold_seeds = cell_seeds[(featuriser, feature_set)].spawn(cfg.n_folds)
            fold_cs: list[float] = []
            fold_aucs: list[list[tuple[float, float]]] = []
            for fold in range(cfg.n_folds):
                train = folds != fold
                test = ~train
                if events[train].sum() < 2:
                    raise RuntimeError(
                        f"cell ({featuriser}, {feature_set}) fold {fold}: "
                        "training split has no events"
                    )
                train_outcomes = [outcomes[i] for i in np.flatnonzero(train)]
                test_outcomes = [outcomes[i] for i in np.flatnonzero(test)]
                model = fit_survival_forest(
                    X[train],
                    train_outcomes,
                    params=cfg.forest,
                    seed=int(fold_seeds[fold].generate_state(1)[0]),
                    schema_id=schema_id,
                    threads=cfg.threads,
                )
                risks = predict_risk(model, X[test])
                fold_cs.append(c_index(risks, test_outcomes))
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    fold_aucs.append(
                        cumulative_dynamic_auc(
                            train_outcomes, test_outcomes, risks, np.array(cfg.eval_times)
                        )
                    )
            reports.append(
                CellReport(
                    featuriser=featuriser,
                    feature_set=feature_set,
                    fold_c_indices=fold_cs,
                    auc_per_fold=fold_aucs,
                    fold_hash=fhash,
                )
            )
    return reports


def find_report(reports: list[CellReport], featuriser: str, feature_set: str) -> CellReport:
    for rep in reports:
        if rep.featuriser == featuriser and rep.feature_set == feature_set:
            return rep
    raise KeyError((featuriser, feature_set))


def _feature_set_label(fs: str) -> str:
    return "{time, MMSE}" if fs == FEATURE_SET_TIME_MMSE else "{time, MMSE, meds}"


def format_c_index_table(reports: list[CellReport]) -> str:
    lines = [f"{'Features':<22}{'Sig':>16}{'Non-sig':>16}"]
    feature_sets = []
    for rep in reports:
        if rep.feature_set not in feature_sets:
            feature_sets.append(rep.feature_set)
    for fs in feature_sets:
        sig = find_report(reports, SIG, fs)
        nonsig = find_report(reports, NONSIG, fs)
        lines.append(
            f"{_feature_set_label(fs):<22}{sig.formatted_c():>16}{nonsig.formatted_c():>16}"
        )
    return "\n".join(lines) + "\n"


def emit_outputs(reports: list[CellReport], out_dir: str) -> list[str]:
    """Write the C-index table (text + CSV), pooled AUC curves (CSV + SVG
    chart) and per-fold metric CSVs; returns the written paths."""
    if not reports:
        raise ValueError("no reports to emit")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    table_txt = os.path.join(out_dir, "c_index_table.txt")
    with open(table_txt, "w") as fh:
        fh.write(format_c_index_table(reports))
    written.append(table_txt)

    table_csv = os.path.join(out_dir, "c_index_table.csv")
    with open(table_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["featuriser", "feature_set", "c_index_mean", "c_index_std"])
        for rep in reports:
            writer.writerow([rep.featuriser, rep.feature_set, repr(rep.c_mean), repr(rep.c_std)])
    written.append(table_csv)

    auc_csv = os.path.join(out_dir, "auc_curves.csv")
    with open(auc_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["featuriser", "feature_set", "time_months", "auc"])
        for rep in reports:
            for t, a in rep.pooled_auc():
                writer.writerow([rep.featuriser, rep.feature_set, repr(t), repr(a)])
    written.append(auc_csv)

    for rep in reports:
        fold_csv = os.path.join(out_dir, f"folds_{rep.featuriser}_{rep.feature_set}.csv")
        with open(fold_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fold", "c_index"])
            for fold, c in enumerate(rep.fold_c_indices):
                writer.writerow([fold, repr(c)])
        written.append(fold_csv)

    written.append(_plot_auc(reports, os.path.join(out_dir, "auc_curves.svg")))
    return written


def _plot_auc(reports: list[CellReport], path: str) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "eventsig"
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for rep in reports:
        curve = rep.pooled_auc()
        if not curve:
            warnings.warn(
                f"cell ({rep.featuriser}, {rep.feature_set}) has no AUC points; omitted from chart"
            )
            continue
        ts, aucs = zip(*curve)
        ax.plot(ts, aucs, marker="o", markersize=3,
                label=f"{rep.featuriser} {_feature_set_label(rep.feature_set)}")
    ax.set_xlabel("months since first visit")
    ax.set_ylabel("cumulative/dynamic AUC")
    ax.axhline(0.5, color="grey", lw=0.5, ls="--")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return path


def experiment_manifest(
    cohort_spec: CohortSpec, cfg: ExperimentConfig, written: list[str]
) -> dict:
    def _hash(path):
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()

    return {
        "cohort_seed": cohort_spec.seed,
        "experiment_seed": cfg.seed,
        "n_folds": cfg.n_folds,
        "outputs": {os.path.basename(p): _hash(p) for p in written},
    }


def default_experiment(
    cohort_spec: CohortSpec | None = None, cfg: ExperimentConfig | None = None
):
    spec = cohort_spec or CohortSpec()
    config = cfg or ExperimentConfig()
    timelines = generate_cohort(spec)
    return run_experiment(timelines, config), spec, config
