"""NumPy fallback implementations of the hot kernels.

Semantics (and floating-point accumulation order) match the compiled
extension in ``_native.pyx``: every output slot of the tensor kernels receives
its contributions in the same order in both backends, so results agree bit for
bit. The log-rank scan is vectorised differently and agrees to rounding.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def concat_product(a: np.ndarray, b: np.ndarray, dim: int, level: int) -> np.ndarray:
    """Truncated concatenation product of two flat coefficient arrays.

    out[w] = sum over splits w = u·v of a[u] * b[v]; words longer than
    ``level`` are dropped.
    """
    sizes = [dim**k for k in range(level + 1)]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    out = np.zeros(offs[-1])
    for k in range(level + 1):
        tgt = out[offs[k] : offs[k + 1]]
        for i in range(k + 1):
            av = a[offs[i] : offs[i + 1]]
            bv = b[offs[k - i] : offs[k - i + 1]]
            tgt += np.outer(av, bv).ravel()
    return out


def segment_exp(increment: np.ndarray, level: int) -> np.ndarray:
    """Tensor exponential of a single linear increment (a level-1 element).

    Level k of the result is the k-fold outer power divided by k!.
    """
    dim = increment.shape[0]
    sizes = [dim**k for k in range(level + 1)]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    out = np.empty(offs[-1])
    out[0] = 1.0
    prev = np.ones(1)
    for k in range(1, level + 1):
        prev = np.outer(prev, increment).ravel() / k
        out[offs[k] : offs[k + 1]] = prev
    return out


def chen_signature(increments: np.ndarray, level: int) -> np.ndarray:
    """Signature of a piecewise-linear path given its segment increments.

    Folds segment exponentials left to right with the concatenation product;
    all-zero increments contribute the identity and are skipped.
    """
    n, dim = increments.shape
    sizes = [dim**k for k in range(level + 1)]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    sig = np.zeros(offs[-1])
    sig[0] = 1.0
    for s in range(n):
        delta = increments[s]
        if not np.any(delta):
            continue
        sig = concat_product(sig, segment_exp(delta, level), dim, level)
    return sig


def logrank_scan(
    times: np.ndarray,
    events: np.ndarray,
    values: np.ndarray,
    thresholds: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Two-sample log-rank statistics for candidate splits of one feature.

    ``times`` must be ascending; ``events`` is 0/1; ``values`` holds the
    feature column aligned with ``times``. For each threshold t the left group
    is ``values <= t``. Returns (scores, left sizes, left event counts) where
    score is the absolute standardized log-rank statistic (0 when the variance
    vanishes).
    """
    m = times.shape[0]
    events = events.astype(np.float64)
    # group boundaries of tied times
    starts = np.flatnonzero(np.concatenate([[True], times[1:] != times[:-1]]))
    ends = np.concatenate([starts[1:], [m]])
    n_at_risk = (m - starts).astype(np.float64)
    ev_cum = np.concatenate([[0.0], np.cumsum(events)])
    d_total = ev_cum[ends] - ev_cum[starts]

    n_thr = thresholds.shape[0]
    scores = np.zeros(n_thr)
    n_left = np.zeros(n_thr, dtype=np.int64)
    e_left = np.zeros(n_thr, dtype=np.int64)
    for t in range(n_thr):
        left = values <= thresholds[t]
        n_left[t] = int(left.sum())
        left_f = left.astype(np.float64)
        left_cum = np.concatenate([[0.0], np.cumsum(left_f)])
        lev_cum = np.concatenate([[0.0], np.cumsum(left_f * events)])
        e_left[t] = int(lev_cum[-1])
        n1 = n_left[t] - left_cum[starts]  # left at risk per time group
        d1 = lev_cum[ends] - lev_cum[starts]
        observed = d1.sum()
        expected = np.sum(d_total * n1 / n_at_risk)
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = n1 / n_at_risk
            var_terms = np.where(
                n_at_risk > 1.0,
                d_total * frac * (1.0 - frac) * (n_at_risk - d_total) / (n_at_risk - 1.0),
                0.0,
            )
        variance = var_terms.sum()
        if variance > 0.0:
            scores[t] = abs(observed - expected) / np.sqrt(variance)
    return scores, n_left, e_left
