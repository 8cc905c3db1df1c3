"""Command-line surface for the batch pipeline.

Exit codes: 0 success, 1 validation error, 2 data error, 3 internal invariant
violation.
"""
from __future__ import annotations

import csv
import json
import os
import sys

import click
import numpy as np

from . import __version__
from ._kernels import BACKEND
from .baseline import BASELINE_SCHEMA_ID, baseline_feature_vector
from .cohort import CohortSpec, generate_cohort
from .encoding import (
    FEATURE_SET_TIME_MMSE,
    FEATURE_SET_TIME_MMSE_MEDS,
    EncodingError,
    PathEncodingConfig,
    featurize_signature_batch,
    read_feature_matrix,
    signature_feature_names,
    write_feature_matrix,
)
from .experiment import (
    NONSIG,
    SIG,
    ExperimentConfig,
    emit_outputs,
    find_report,
    format_c_index_table,
    run_experiment,
    stratified_kfold,
)
from .forest import (
    ForestParams,
    SchemaMismatchError,
    fit_survival_forest,
    load_model,
    predict_risk,
    save_model,
)
from .manifest import write_manifest
from .notes import Lexicon, build_timeline, default_lexicon, read_notes_jsonl
from .signature import (
    PiecewisePath,
    log_signature,
    path_signature,
    sig_dimension,
)
from .survival import SurvivalOutcome, c_index
from .tensor_algebra import lyndon_basis
from .timeline import PatientTimeline, read_timelines_jsonl, write_timelines_jsonl
from .words import all_words

EXIT_VALIDATION = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class DataError(Exception):
    pass


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    """Map exception classes onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (click.ClickException, SystemExit):
            raise
        except BrokenPipeError:
            sys.exit(0)
        except (SchemaMismatchError, EncodingError, ValueError) as exc:
            _fail(EXIT_VALIDATION, str(exc))
        except (DataError, OSError, json.JSONDecodeError) as exc:
            _fail(EXIT_DATA, str(exc))
        except Exception as exc:  # invariant violations
            _fail(EXIT_INTERNAL, f"internal error: {exc!r}")

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.version_option(__version__, message=f"%(prog)s %(version)s (kernels: {BACKEND})")
@click.option("--threads", default=None, type=int, help="worker threads for library modules")
@click.pass_context
def main(ctx, threads):
    """Signature features for clinical event streams, end to end."""
    ctx.ensure_object(dict)
    env_threads = os.environ.get("EVENTSIG_THREADS")
    ctx.obj["threads"] = threads or (int(env_threads) if env_threads else 1)


def _read_path_csv(path: str) -> PiecewisePath:
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if lineno == 1:  # header
                    continue
                raise DataError(f"{path}:{lineno}: malformed numeric row") from None
    if not rows:
        raise DataError(f"{path}: no points")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {i + 1} has {len(row)} columns, expected {width}")
    return PiecewisePath(np.array(rows))


def _signature_payload(path: PiecewisePath, level: int, log_mode: bool) -> dict:
    if log_mode:
        ls = log_signature(path, level)
        labels = [f"s_{w}" for w in ls.labels()]
        values = ls.coords
    else:
        tensor = path_signature(path, level)
        labels = [
            "s_" + "".join(str(a) for a in w)
            for k in range(1, level + 1)
            for w in all_words(path.dim, k)
        ]
        values = tensor.coeffs[1:]
    return {
        "dim": path.dim,
        "level": level,
        "kind": "log" if log_mode else "full",
        "labels": labels,
        "values": [float(v) for v in values],
    }


@main.command("sig")
@click.argument("path_csv", type=click.Path(exists=True), required=False)
@click.option("--level", default=2, show_default=True, help="truncation level")
@click.option("--log/--full", "log_mode", default=True, help="log-signature or full signature")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@click.option("--batch", "batch_jsonl", type=click.Path(exists=True), default=None,
              help="JSONL of {points, level, log?} cases; one JSON result per line")
@click.option("--out", type=click.Path(), default=None, help="also write coordinates as CSV")
@click.option("--run-dir", type=click.Path(), default=None)
@_guard
def sig_cmd(path_csv, level, log_mode, fmt, batch_jsonl, out, run_dir):
    """Signature of a CSV path (one row per point, d numeric columns)."""
    if batch_jsonl:
        with open(batch_jsonl) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    case = json.loads(line)
                    pts = np.array(case["points"], dtype=float)
                    case_level = int(case.get("level", level))
                    case_log = bool(case.get("log", log_mode))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise DataError(f"{batch_jsonl}:{lineno}: bad case: {exc}") from exc
                payload = _signature_payload(PiecewisePath(pts), case_level, case_log)
                click.echo(json.dumps(payload))
        return
    if not path_csv:
        raise click.UsageError("provide a path CSV or --batch")
    path = _read_path_csv(path_csv)
    payload = _signature_payload(path, level, log_mode)
    labels, values = payload["labels"], payload["values"]
    if fmt == "json":
        click.echo(json.dumps(payload))
    else:
        for label, value in zip(labels, values):
            click.echo(f"{label}\t{float(value)!r}")
    outputs = []
    if out:
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label", "value"])
            for label, value in zip(labels, values):
                writer.writerow([label, repr(float(value))])
        outputs.append(out)
    if outputs or run_dir:
        write_manifest(
            run_dir or os.path.dirname(os.path.abspath(outputs[0] if outputs else path_csv)),
            "sig",
            {"level": level, "log": log_mode},
            [path_csv],
            outputs,
        )


@main.command("basis")
@click.option("--dim", required=True, type=int, help="alphabet size")
@click.option("--level", required=True, type=int, help="truncation level")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@_guard
def basis_cmd(dim, level, fmt):
    """Lyndon basis words and feature dimensions for (dim, level)."""
    basis = lyndon_basis(dim, level)
    doc = {
        "dim": dim,
        "level": level,
        "words": basis.labels(),
        "sig_dimension": sig_dimension(dim, level),
        "logsig_dimension": len(basis),
    }
    if fmt == "json":
        click.echo(json.dumps(doc))
    else:
        click.echo(f"sig_dimension: {doc['sig_dimension']}")
        click.echo(f"logsig_dimension: {doc['logsig_dimension']}")
        click.echo("lyndon words: " + " ".join(doc["words"]))


@main.command("extract")
@click.argument("notes_jsonl", type=click.Path(exists=True))
@click.argument("lexicon_csv", type=click.Path(exists=True), required=False)
@click.option("--out", type=click.Path(), required=True, help="timeline JSONL output")
@click.option("--skip-bad", is_flag=True, help="skip unparseable notes instead of failing")
@click.option("--run-dir", type=click.Path(), default=None)
@_guard
def extract_cmd(notes_jsonl, lexicon_csv, out, skip_bad, run_dir):
    """Extract structured timelines from dated notes."""
    lexicon = Lexicon.from_csv(lexicon_csv) if lexicon_csv else default_lexicon()
    try:
        by_patient, skipped = read_notes_jsonl(notes_jsonl, skip_bad=skip_bad)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    timelines = [
        build_timeline(pid, notes, lexicon) for pid, notes in sorted(by_patient.items())
    ]
    with open(out, "w") as fh:
        for tl in timelines:
            for ev in tl.events:
                from .timeline import event_to_record

                fh.write(json.dumps(event_to_record(tl.patient_id, ev), sort_keys=True) + "\n")
    click.echo(
        f"extracted {sum(len(t.events) for t in timelines)} events for "
        f"{len(timelines)} patients ({skipped} notes skipped)"
    )
    write_manifest(
        run_dir or os.path.dirname(os.path.abspath(out)),
        "extract",
        {"skip_bad": skip_bad},
        [notes_jsonl] + ([lexicon_csv] if lexicon_csv else []),
        [out],
    )


@main.command("synth")
@click.option("--out", type=click.Path(), required=True, help="cohort JSONL output")
@click.option("--seed", default=None, type=int)
@click.option("--n-died", default=None, type=int)
@click.option("--n-censored", default=None, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON file with cohort spec fields")
@click.option("--run-dir", type=click.Path(), default=None)
@_guard
def synth_cmd(out, seed, n_died, n_censored, config_path, run_dir):
    """Generate a synthetic cohort of patient timelines."""
    fields = {}
    if config_path:
        with open(config_path) as fh:
            fields = json.load(fh)
    for key, value in (("seed", seed), ("n_died", n_died), ("n_censored", n_censored)):
        if value is not None:
            fields[key] = value
    try:
        spec = CohortSpec(**fields)
    except TypeError as exc:
        raise ValueError(f"invalid cohort config field: {exc}") from exc
    timelines = generate_cohort(spec)
    write_timelines_jsonl(out, timelines)
    click.echo(f"wrote {len(timelines)} patient timelines to {out}")
    write_manifest(
        run_dir or os.path.dirname(os.path.abspath(out)),
        "synth",
        fields,
        [config_path] if config_path else [],
        [out],
        seeds={"cohort": spec.seed},
    )


def _load_timelines_with_outcomes(timelines_path, outcomes_csv) -> list[PatientTimeline]:
    timelines = read_timelines_jsonl(timelines_path)
    if outcomes_csv:
        table = {}
        with open(outcomes_csv, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            for row in reader:
                table[row[0]] = SurvivalOutcome(bool(int(row[1])), float(row[2]))
        for tl in timelines:
            tl.outcome = table.get(tl.patient_id, tl.outcome)
    return timelines


@main.command("featurize")
@click.argument("timelines_jsonl", type=click.Path(exists=True))
@click.option("--featuriser", type=click.Choice([SIG, NONSIG]), default=SIG, show_default=True)
@click.option("--feature-set", type=click.Choice([FEATURE_SET_TIME_MMSE, FEATURE_SET_TIME_MMSE_MEDS]),
              default=FEATURE_SET_TIME_MMSE, show_default=True)
@click.option("--level", default=None, type=int, help="signature truncation level")
@click.option("--outcomes", "outcomes_csv", type=click.Path(exists=True), default=None,
              help="CSV patient_id,event,months to attach outcomes")
@click.option("--out", type=click.Path(), required=True, help="feature matrix CSV")
@click.option("--run-dir", type=click.Path(), default=None)
@click.pass_context
@_guard
def featurize_cmd(ctx, timelines_jsonl, featuriser, feature_set, level, outcomes_csv, out, run_dir):
    """Turn timelines into a feature matrix CSV."""
    timelines = _load_timelines_with_outcomes(timelines_jsonl, outcomes_csv)
    if not timelines:
        raise DataError(f"{timelines_jsonl}: no timelines")
    if featuriser == SIG:
        if level is None:
            level = 3 if feature_set == FEATURE_SET_TIME_MMSE else 2
        cfg = PathEncodingConfig(feature_set=feature_set, level=level)
        features = featurize_signature_batch(timelines, cfg, threads=ctx.obj["threads"])
        names = signature_feature_names(cfg)
        schema = cfg.schema_id
    else:
        include_meds = feature_set == FEATURE_SET_TIME_MMSE_MEDS
        features = [baseline_feature_vector(tl, include_meds) for tl in timelines]
        names = ["b_intercept", "b_slope"] + (["b_medstat"] if include_meds else [])
        schema = BASELINE_SCHEMA_ID
    write_feature_matrix(out, features, timelines, names, schema)
    click.echo(f"wrote {len(features)} x {len(names)} feature matrix ({schema}) to {out}")
    write_manifest(
        run_dir or os.path.dirname(os.path.abspath(out)),
        "featurize",
        {"featuriser": featuriser, "feature_set": feature_set, "level": level},
        [timelines_jsonl] + ([outcomes_csv] if outcomes_csv else []),
        [out],
    )


@main.command("train")
@click.argument("features_csv", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), required=True, help="model file")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--trees", default=200, show_default=True, type=int)
@click.option("--min-leaf", default=15, show_default=True, type=int)
@click.option("--min-events", default=3, show_default=True, type=int)
@click.option("--run-dir", type=click.Path(), default=None)
@click.pass_context
@_guard
def train_cmd(ctx, features_csv, out, seed, trees, min_leaf, min_events, run_dir):
    """Fit a survival forest on a feature matrix."""
    ids, outcomes, X, names, schema = read_feature_matrix(features_csv)
    if outcomes is None:
        raise ValueError(f"{features_csv} has no outcome columns; cannot train")
    params = ForestParams(n_trees=trees, min_leaf_samples=min_leaf, min_leaf_events=min_events)
    model = fit_survival_forest(
        X, outcomes, params=params, seed=seed, schema_id=schema, threads=ctx.obj["threads"]
    )
    save_model(model, out)
    click.echo(f"trained {trees}-tree forest on {X.shape[0]} patients; saved to {out}")
    write_manifest(
        run_dir or os.path.dirname(os.path.abspath(out)),
        "train",
        {"seed": seed, "trees": trees, "min_leaf": min_leaf, "min_events": min_events},
        [features_csv],
        [out],
        seeds={"forest": seed},
    )


@main.command("evaluate")
@click.argument("features_csv", type=click.Path(exists=True))
@click.option("--model", "model_path", type=click.Path(exists=True), default=None,
              help="evaluate an existing model instead of cross-validating")
@click.option("--folds", default=5, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--trees", default=200, show_default=True, type=int)
@click.option("--out-dir", type=click.Path(), default=None)
@click.pass_context
@_guard
def evaluate_cmd(ctx, features_csv, model_path, folds, seed, trees, out_dir):
    """Concordance of a model (or of fresh stratified k-fold forests)."""
    ids, outcomes, X, names, schema = read_feature_matrix(features_csv)
    if outcomes is None:
        raise ValueError(f"{features_csv} has no outcome columns; cannot evaluate")
    outputs = []
    if model_path:
        model = load_model(model_path)
        if model.schema_id and schema and model.schema_id != schema:
            raise SchemaMismatchError(
                f"model schema {model.schema_id!r} does not match features {schema!r}"
            )
        risks = predict_risk(model, X, schema_id=schema or None)
        value = c_index(risks, outcomes)
        click.echo(f"C-index: {value:.3f}")
    else:
        fold_ids = stratified_kfold(outcomes, folds, seed)
        seeds = np.random.SeedSequence(seed).spawn(folds)
        cs = []
        for fold in range(folds):
            train = fold_ids != fold
            model = fit_survival_forest(
                X[train],
                [outcomes[i] for i in np.flatnonzero(train)],
                params=ForestParams(n_trees=trees),
                seed=int(seeds[fold].generate_state(1)[0]),
                schema_id=schema,
                threads=ctx.obj["threads"],
            )
            risks = predict_risk(model, X[~train])
            cs.append(c_index(risks, [outcomes[i] for i in np.flatnonzero(~train)]))
        click.echo(f"C-index: {np.mean(cs):.3f}({np.std(cs, ddof=1):.3f})")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        report_path = os.path.join(out_dir, "evaluation.csv")
        with open(report_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if model_path:
                writer.writerow(["c_index"])
                writer.writerow([repr(value)])
            else:
                writer.writerow(["fold", "c_index"])
                for i, c in enumerate(cs):
                    writer.writerow([i, repr(c)])
        outputs.append(report_path)
        write_manifest(
            out_dir,
            "evaluate",
            {"folds": folds, "seed": seed, "trees": trees, "model": model_path},
            [features_csv] + ([model_path] if model_path else []),
            outputs,
            seeds={"cv": seed},
        )


@main.command("experiment")
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--cohort-seed", default=None, type=int)
@click.option("--seed", default=None, type=int, help="experiment seed (folds, forests)")
@click.option("--n-died", default=None, type=int)
@click.option("--n-censored", default=None, type=int)
@click.option("--trees", default=None, type=int)
@click.pass_context
@_guard
def experiment_cmd(ctx, out_dir, cohort_seed, seed, n_died, n_censored, trees):
    """Run the full 2x2 featuriser-by-feature-set protocol on a synthetic
    cohort and emit the C-index table and AUC curves."""
    spec_fields = {}
    if cohort_seed is not None:
        spec_fields["seed"] = cohort_seed
    if n_died is not None:
        spec_fields["n_died"] = n_died
    if n_censored is not None:
        spec_fields["n_censored"] = n_censored
    spec = CohortSpec(**spec_fields)
    cfg_fields = {"threads": ctx.obj["threads"]}
    if seed is not None:
        cfg_fields["seed"] = seed
    if trees is not None:
        cfg_fields["forest"] = ForestParams(n_trees=trees)
    cfg = ExperimentConfig(**cfg_fields)
    timelines = generate_cohort(spec)
    reports = run_experiment(timelines, cfg)
    written = emit_outputs(reports, out_dir)
    click.echo(format_c_index_table(reports))
    write_manifest(
        out_dir,
        "experiment",
        {"cohort": spec_fields, "experiment_seed": cfg.seed, "trees": cfg.forest.n_trees},
        [],
        written,
        seeds={"cohort": spec.seed, "experiment": cfg.seed},
    )


GOLDEN_SEQUENCES = {
    "aabba": (3.0, 2.0, 1.0, -0.5, -1.0, -1.0 / 3.0, -0.5, 0.0),
    "baaab": (3.0, 2.0, 0.0, 1.5, 0.5, 0.0, 0.0, 0.0),
}


@main.command("repro")
@click.option("--out-dir", type=click.Path(), default=None)
@click.option("--fast", is_flag=True, help="skip the full-size synthetic experiment")
@click.pass_context
@_guard
def repro_cmd(ctx, out_dir, fast):
    """Golden checks plus the default synthetic 2x2 experiment."""
    from .signature import path_from_letter_sequence

    failures = 0
    tol = 1e-9
    for seq, expected in GOLDEN_SEQUENCES.items():
        ls = log_signature(path_from_letter_sequence(seq), 4)
        err = float(np.max(np.abs(ls.coords - np.array(expected))))
        ok = err < tol
        failures += not ok
        click.echo(
            f"golden log-signature [{seq}]: {'PASS' if ok else 'FAIL'} "
            f"({len(expected)}/{len(expected)} coordinates, tol {tol:g}, max err {err:.2e})"
        )
    if not fast:
        spec = CohortSpec()
        cfg = ExperimentConfig(threads=ctx.obj["threads"])
        reports = run_experiment(generate_cohort(spec), cfg)
        click.echo(format_c_index_table(reports))
        gap = (
            find_report(reports, SIG, FEATURE_SET_TIME_MMSE).c_mean
            - find_report(reports, NONSIG, FEATURE_SET_TIME_MMSE).c_mean
        )
        ok = gap >= 0.03
        failures += not ok
        click.echo(f"signature advantage ({FEATURE_SET_TIME_MMSE}): {'PASS' if ok else 'FAIL'} (gap {gap:.4f}, need >= 0.03)")
        sig_meds = dict(find_report(reports, SIG, FEATURE_SET_TIME_MMSE_MEDS).pooled_auc())
        sig_plain = dict(find_report(reports, SIG, FEATURE_SET_TIME_MMSE).pooled_auc())
        late = [t for t in sig_meds if t > 24 and t in sig_plain]
        wins = sum(sig_meds[t] > sig_plain[t] for t in late)
        ok = late and wins > len(late) / 2
        failures += not ok
        click.echo(f"medication-order AUC gain beyond month 24: {'PASS' if ok else 'FAIL'} ({wins}/{len(late)} horizons)")
        if out_dir:
            written = emit_outputs(reports, out_dir)
            write_manifest(out_dir, "repro", {}, [], written,
                           seeds={"cohort": spec.seed, "experiment": cfg.seed})
    if failures:
        _fail(EXIT_INTERNAL, f"{failures} reproduction check(s) failed")
    click.echo("all reproduction checks passed")


if __name__ == "__main__":
    main()
