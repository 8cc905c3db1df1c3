"""Signatures of piecewise-linear paths.

Signatures are computed exactly by folding segment exponentials with the
concatenation product (Chen's identity); numerical quadrature of the iterated
integrals exists only in the test suite as an independent oracle.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels, words
from .tensor_algebra import (
    LogSignature,
    LyndonBasis,
    TruncatedTensor,
    lyndon_basis,
    tensor_log,
    to_lyndon_coordinates,
)


@dataclass(frozen=True)
class PiecewisePath:
    """Piecewise-linear path given by its vertex list.

    ``points`` has shape (n_points, dim); optional ``times`` are strictly
    increasing parameter values (they never affect the signature, which is
    reparameterisation invariant, but carry metadata for encoders).
    """

    points: np.ndarray
    times: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("path needs a 2-D (n_points, dim) array with >= 1 point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("path coordinates must be finite")
        object.__setattr__(self, "points", pts)
        if self.times is not None:
            ts = np.asarray(self.times, dtype=float)
            if ts.shape != (pts.shape[0],):
                raise ValueError("times must align with points")
            if np.any(np.diff(ts) <= 0):
                raise ValueError("parameter values must be strictly increasing")
            object.__setattr__(self, "times", ts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class SignatureResult:
    """Signature tensor (group-like) together with its log-signature."""

    tensor: TruncatedTensor
    logsig: LogSignature


def path_from_letter_sequence(
    seq: str, mapping: dict[str, int] | None = None, dim: int | None = None
) -> PiecewisePath:
    """Axis-walk path of a letter sequence: start at the origin, move one unit
    along the axis of each letter.

    Default mapping sends 'a' to axis 1 and 'b' to axis 2.
    """
    if mapping is None:
        mapping = {"a": 1, "b": 2}
    if dim is None:
        dim = max(mapping.values(), default=2)
    for ch in seq:
        if ch not in mapping:
            raise ValueError(f"unmapped character {ch!r} in letter sequence")
        if not 1 <= mapping[ch] <= dim:
            raise ValueError(f"axis {mapping[ch]} for {ch!r} outside 1..{dim}")
    pts = np.zeros((len(seq) + 1, dim))
    for i, ch in enumerate(seq):
        pts[i + 1] = pts[i]
        pts[i + 1, mapping[ch] - 1] += 1.0
    return PiecewisePath(pts)


def path_signature(path: PiecewisePath, level: int) -> TruncatedTensor:
    """Truncated signature of a piecewise-linear path.

    A single-point or fully degenerate path yields the unit tensor.
    """
    if level < 1:
        raise ValueError(f"truncation level must be >= 1, got {level}")
    increments = np.ascontiguousarray(np.diff(path.points, axis=0))
    coeffs = _kernels.chen_signature(increments, level)
    return TruncatedTensor(path.dim, level, coeffs)


def log_signature(
    path: PiecewisePath, level: int, basis: LyndonBasis | None = None
) -> LogSignature:
    """Lyndon coordinates of the log of the path signature."""
    if basis is None:
        basis = lyndon_basis(path.dim, level)
    return to_lyndon_coordinates(tensor_log(path_signature(path, level)), basis)


def signature_result(path: PiecewisePath, level: int) -> SignatureResult:
    tensor = path_signature(path, level)
    return SignatureResult(tensor, to_lyndon_coordinates(tensor_log(tensor)))


def sig_dimension(dim: int, level: int) -> int:
    """dim + dim**2 + ... + dim**level (constant slot excluded)."""
    return words.storage_size(dim, level) - 1


def logsig_dimension(dim: int, level: int) -> int:
    """Total Lyndon-word count up to ``level`` (sum of Witt counts)."""
    words._check_dim_level(dim, level)
    return sum(words.witt_count(dim, k) for k in range(1, level + 1))


def batch_signatures(
    paths: list[PiecewisePath], level: int, threads: int = 1
) -> list[TruncatedTensor]:
    """Signatures of a batch of paths, optionally thread-parallel.

    Output order always matches input order.
    """
    if threads <= 1:
        return [path_signature(p, level) for p in paths]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda p: path_signature(p, level), paths))


def batch_log_signatures(
    paths: list[PiecewisePath], level: int, threads: int = 1
) -> list[LogSignature]:
    if not paths:
        return []
    basis = lyndon_basis(paths[0].dim, level)
    if threads <= 1:
        return [log_signature(p, level, basis) for p in paths]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda p: log_signature(p, level, basis), paths))
