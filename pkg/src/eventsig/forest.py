"""Survival random forest with log-rank splitting and Nelson-Aalen leaves.

Trees are grown on bootstrap samples; each node draws floor(sqrt(p)) candidate
features and a handful of random threshold candidates per feature, keeps the
admissible split with the best absolute log-rank statistic, and stops at the
minimum leaf size. Leaves hold the Nelson-Aalen cumulative hazard of their
bootstrap samples; the ensemble risk score of a subject is the mean over trees
of the leaf hazard summed across the training event-time grid.
"""
from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .survival import SurvivalOutcome, outcome_arrays

MODEL_FORMAT = "eventsig-survival-forest"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 200
    max_features: str | int = "sqrt"
    min_leaf_samples: int = 15
    min_leaf_events: int = 3
    n_thresholds: int = 10

    def resolve_mtry(self, p: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(p)))
        return max(1, min(int(self.max_features), p))


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    # leaf payload: hazard step times/values and the precomputed risk mass
    chf_times: np.ndarray | None = None
    chf_values: np.ndarray | None = None
    risk: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class SurvivalForestModel:
    params: ForestParams
    seed: int
    n_features: int
    schema_id: str
    event_grid: np.ndarray
    trees: list[TreeNode] = field(default_factory=list)
    single_leaf_only: bool = False


def _nelson_aalen_steps(times: np.ndarray, events: np.ndarray):
    order = np.argsort(times, kind="stable")
    ts, ev = times[order], events[order].astype(float)
    uniq, first = np.unique(ts, return_index=True)
    n_at_risk = len(ts) - first
    ev_cum = np.concatenate([[0.0], np.cumsum(ev)])
    ends = np.concatenate([first[1:], [len(ts)]])
    d = ev_cum[ends] - ev_cum[first]
    keep = d > 0
    return uniq[keep], np.cumsum(d[keep] / n_at_risk[keep])


def _leaf(times: np.ndarray, events: np.ndarray, event_grid: np.ndarray) -> TreeNode:
    chf_t, chf_v = _nelson_aalen_steps(times, events)
    idx = np.searchsorted(chf_t, event_grid, side="right")
    padded = np.concatenate([[0.0], chf_v])
    risk = float(padded[idx].sum())
    return TreeNode(chf_times=chf_t, chf_values=chf_v, risk=risk)


def _grow(
    X: np.ndarray,
    times: np.ndarray,
    events: np.ndarray,
    params: ForestParams,
    rng: np.random.Generator,
    event_grid: np.ndarray,
) -> TreeNode:
    n, p = X.shape
    mtry = params.resolve_mtry(p)
    total_events = int(events.sum())
    if n < 2 * params.min_leaf_samples or total_events < 2 * params.min_leaf_events:
        return _leaf(times, events, event_grid)

    order = np.argsort(times, kind="stable")
    t_sorted = np.ascontiguousarray(times[order])
    e_sorted = np.ascontiguousarray(events[order].astype(np.uint8))

    features = rng.choice(p, size=mtry, replace=False)
    best_score, best_feature, best_threshold = 0.0, -1, 0.0
    for f in features:
        col = X[:, f]
        candidates = np.unique(col)[:-1]  # split is "<= threshold"
        if candidates.size == 0:
            continue
        if candidates.size > params.n_thresholds:
            pick = rng.choice(candidates.size, size=params.n_thresholds, replace=False)
            candidates = candidates[np.sort(pick)]
        scores, n_left, e_left = _kernels.logrank_scan(
            t_sorted, e_sorted, np.ascontiguousarray(col[order]), candidates
        )
        ok = (
            (n_left >= params.min_leaf_samples)
            & (n - n_left >= params.min_leaf_samples)
            & (e_left >= params.min_leaf_events)
            & (total_events - e_left >= params.min_leaf_events)
        )
        for k in np.flatnonzero(ok):
            if scores[k] > best_score:
                best_score = float(scores[k])
                best_feature = int(f)
                best_threshold = float(candidates[k])

    if best_feature < 0:
        return _leaf(times, events, event_grid)
    mask = X[:, best_feature] <= best_threshold
    node = TreeNode(feature=best_feature, threshold=best_threshold)
    node.left = _grow(X[mask], times[mask], events[mask], params, rng, event_grid)
    node.right = _grow(X[~mask], times[~mask], events[~mask], params, rng, event_grid)
    return node


def _fit_tree(X, times, events, params, seed_seq, event_grid) -> TreeNode:
    rng = np.random.default_rng(seed_seq)
    n = X.shape[0]
    idx = rng.integers(0, n, size=n)
    return _grow(X[idx], times[idx], events[idx], params, rng, event_grid)


def fit_survival_forest(
    X: np.ndarray,
    outcomes: list[SurvivalOutcome],
    params: ForestParams | None = None,
    seed: int = 0,
    schema_id: str = "",
    threads: int = 1,
) -> SurvivalForestModel:
    """Fit the forest; deterministic given (data, params, seed), whether grown
    serially or in parallel (per-tree seeds are spawned from the master seed).
    """
    params = params or ForestParams()
    X = np.ascontiguousarray(np.asarray(X, dtype=float))
    times, events = outcome_arrays(outcomes)
    if X.shape[0] != len(outcomes):
        raise ValueError("feature rows must match outcomes")
    if int(events.sum()) < 2:
        raise ValueError("need at least 2 events to fit a survival forest")
    event_grid = np.unique(times[events])
    seed_seqs = np.random.SeedSequence(seed).spawn(params.n_trees)
    if threads <= 1:
        trees = [_fit_tree(X, times, events, params, s, event_grid) for s in seed_seqs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(
                pool.map(lambda s: _fit_tree(X, times, events, params, s, event_grid), seed_seqs)
            )
    model = SurvivalForestModel(
        params=params,
        seed=seed,
        n_features=X.shape[1],
        schema_id=schema_id,
        event_grid=event_grid,
        trees=trees,
    )
    if all(t.is_leaf for t in trees):
        model.single_leaf_only = True
        warnings.warn("no admissible split anywhere; forest degenerated to single leaves")
    return model


class SchemaMismatchError(ValueError):
    """Feature vectors do not match the schema the model was trained on."""


def _find_leaf(node: TreeNode, x: np.ndarray) -> TreeNode:
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node


def predict_risk(model: SurvivalForestModel, X: np.ndarray, schema_id: str | None = None) -> np.ndarray:
    """Ensemble risk scores (mean leaf cumulative-hazard mass); higher means
    higher predicted mortality risk."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise SchemaMismatchError(
            f"model expects {model.n_features} features, got {X.shape[1]}"
        )
    if schema_id is not None and model.schema_id and schema_id != model.schema_id:
        raise SchemaMismatchError(
            f"model schema {model.schema_id!r} does not match features {schema_id!r}"
        )
    risks = np.zeros(X.shape[0])
    for tree in model.trees:
        for i in range(X.shape[0]):
            risks[i] += _find_leaf(tree, X[i]).risk
    risks /= len(model.trees)
    return risks[0] if single else risks


def predict_cumulative_hazard(model: SurvivalForestModel, x: np.ndarray, eval_times: np.ndarray) -> np.ndarray:
    """Ensemble cumulative hazard curve for one subject at the given times."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(len(eval_times))
    for tree in model.trees:
        leaf = _find_leaf(tree, x)
        idx = np.searchsorted(leaf.chf_times, eval_times, side="right")
        padded = np.concatenate([[0.0], leaf.chf_values])
        out += padded[idx]
    return out / len(model.trees)


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {
            "chf_times": node.chf_times.tolist(),
            "chf_values": node.chf_values.tolist(),
            "risk": node.risk,
        }
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(d: dict) -> TreeNode:
    if "feature" not in d:
        return TreeNode(
            chf_times=np.array(d["chf_times"], dtype=float),
            chf_values=np.array(d["chf_values"], dtype=float),
            risk=float(d["risk"]),
        )
    node = TreeNode(feature=int(d["feature"]), threshold=float(d["threshold"]))
    node.left = _node_from_dict(d["left"])
    node.right = _node_from_dict(d["right"])
    return node


def save_model(model: SurvivalForestModel, path: str) -> None:
    """Serialise to versioned JSON; floats round-trip exactly, and identical
    models produce byte-identical files."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "seed": model.seed,
        "schema_id": model.schema_id,
        "n_features": model.n_features,
        "params": {
            "n_trees": model.params.n_trees,
            "max_features": model.params.max_features,
            "min_leaf_samples": model.params.min_leaf_samples,
            "min_leaf_events": model.params.min_leaf_events,
            "n_thresholds": model.params.n_thresholds,
        },
        "event_grid": model.event_grid.tolist(),
        "single_leaf_only": model.single_leaf_only,
        "trees": [_node_to_dict(t) for t in model.trees],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))


def load_model(path: str) -> SurvivalForestModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a survival forest file: {path}")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    params = ForestParams(**doc["params"])
    model = SurvivalForestModel(
        params=params,
        seed=int(doc["seed"]),
        n_features=int(doc["n_features"]),
        schema_id=doc["schema_id"],
        event_grid=np.array(doc["event_grid"], dtype=float),
        trees=[_node_from_dict(t) for t in doc["trees"]],
        single_leaf_only=bool(doc["single_leaf_only"]),
    )
    return model
