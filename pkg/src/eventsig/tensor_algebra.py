"""Truncated free tensor algebra over an alphabet of 1..dim letters.

Coefficients live in dense graded float64 storage (one slot per word of
length 0..level). Provides the concatenation product, the mutually inverse
tensor exponential/logarithm on their usual domains, and coordinates of Lie
elements in a Lyndon-word bracket basis.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels, words
from .words import Word

# Bracket orientation: basis vectors are the standard-factorization brackets
# [w] = [[u],[v]] except for the words below, whose orientation is reversed
# (equivalent to using [[v],[u]]). This pins the coordinate convention of the
# bundled golden vectors, which follow the Hall-set orientation of the
# established signature tooling for two-letter alphabets.
_REVERSED_ORIENTATION: frozenset[Word] = frozenset({(1, 2, 2), (1, 1, 2, 2)})


class ShapeMismatchError(ValueError):
    """Operands disagree on alphabet size or truncation level."""


@dataclass(frozen=True)
class TruncatedTensor:
    """Element of the tensor algebra truncated at ``level``.

    ``coeffs`` is flat graded storage of size 1 + dim + ... + dim**level,
    indexed by :func:`eventsig.words.word_index`.
    """

    dim: int
    level: int
    coeffs: np.ndarray

    def __post_init__(self):
        expected = words.storage_size(self.dim, self.level)
        if self.coeffs.shape != (expected,):
            raise ShapeMismatchError(
                f"storage for dim={self.dim} level={self.level} must have "
                f"{expected} coefficients, got {self.coeffs.shape}"
            )

    @classmethod
    def zero(cls, dim: int, level: int) -> TruncatedTensor:
        return cls(dim, level, np.zeros(words.storage_size(dim, level)))

    @classmethod
    def unit(cls, dim: int, level: int) -> TruncatedTensor:
        coeffs = np.zeros(words.storage_size(dim, level))
        coeffs[0] = 1.0
        return cls(dim, level, coeffs)

    @classmethod
    def from_word_coeffs(
        cls, dim: int, level: int, entries: dict[Word, float]
    ) -> TruncatedTensor:
        coeffs = np.zeros(words.storage_size(dim, level))
        for word, value in entries.items():
            if len(word) > level:
                raise ValueError(f"word {word} longer than level {level}")
            coeffs[words.word_index(word, dim)] = value
        return cls(dim, level, coeffs)

    def coeff(self, word: Word) -> float:
        if len(word) > self.level:
            raise ValueError(f"word {word} longer than level {self.level}")
        return float(self.coeffs[words.word_index(word, self.dim)])

    def level_slice(self, k: int) -> np.ndarray:
        offs = words.level_offsets(self.dim, self.level)
        return self.coeffs[offs[k] : offs[k + 1]]

    def __add__(self, other: TruncatedTensor) -> TruncatedTensor:
        _check_same_shape(self, other)
        return TruncatedTensor(self.dim, self.level, self.coeffs + other.coeffs)

    def __sub__(self, other: TruncatedTensor) -> TruncatedTensor:
        _check_same_shape(self, other)
        return TruncatedTensor(self.dim, self.level, self.coeffs - other.coeffs)

    def scaled(self, factor: float) -> TruncatedTensor:
        return TruncatedTensor(self.dim, self.level, self.coeffs * factor)


def _check_same_shape(a: TruncatedTensor, b: TruncatedTensor) -> None:
    if (a.dim, a.level) != (b.dim, b.level):
        raise ShapeMismatchError(
            f"operands disagree: (dim={a.dim}, level={a.level}) vs "
            f"(dim={b.dim}, level={b.level})"
        )


def concat_product(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Concatenation product; terms beyond the truncation level are dropped."""
    _check_same_shape(a, b)
    coeffs = _kernels.concat_product(
        np.ascontiguousarray(a.coeffs), np.ascontiguousarray(b.coeffs), a.dim, a.level
    )
    return TruncatedTensor(a.dim, a.level, coeffs)


def tensor_exp(x: TruncatedTensor) -> TruncatedTensor:
    """exp(x) = sum x**k / k! for a tensor with zero constant term."""
    if x.coeffs[0] != 0.0:
        raise ValueError(f"tensor exponential needs zero constant term, got {x.coeffs[0]}")
    acc = TruncatedTensor.unit(x.dim, x.level)
    term = TruncatedTensor.unit(x.dim, x.level)
    for k in range(1, x.level + 1):
        term = concat_product(term, x).scaled(1.0 / k)
        acc = acc + term
    return acc


def tensor_log(g: TruncatedTensor) -> TruncatedTensor:
    """log(g) = sum (-1)^(k+1) (g - 1)**k / k for a tensor with constant term 1."""
    if g.coeffs[0] != 1.0:
        raise ValueError(f"tensor logarithm needs constant term 1, got {g.coeffs[0]}")
    u = g - TruncatedTensor.unit(g.dim, g.level)
    acc = TruncatedTensor.zero(g.dim, g.level)
    power = TruncatedTensor.unit(g.dim, g.level)
    for k in range(1, g.level + 1):
        power = concat_product(power, u)
        acc = acc + power.scaled((-1.0) ** (k + 1) / k)
    return acc


def _bracket_expansion(word: Word) -> dict[Word, float]:
    """Word-coefficient expansion of the standard-factorization bracket of a
    Lyndon word (orientation not yet applied)."""
    if len(word) == 1:
        return {word: 1.0}
    u, v = words.standard_factorization(word)
    eu = _bracket_expansion(u)
    ev = _bracket_expansion(v)
    out: dict[Word, float] = {}
    for wu, cu in eu.items():
        for wv, cv in ev.items():
            out[wu + wv] = out.get(wu + wv, 0.0) + cu * cv
            out[wv + wu] = out.get(wv + wu, 0.0) - cv * cu
    return {w: c for w, c in out.items() if c != 0.0}


def orientation(word: Word) -> float:
    return -1.0 if word in _REVERSED_ORIENTATION else 1.0


@dataclass(frozen=True)
class LyndonBasis:
    """Lyndon-word bracket basis of the free Lie algebra up to ``level``.

    ``words`` are ordered by (length, lex); ``expansions[i]`` maps each word
    to its coefficient in the bracket expansion of ``words[i]`` (orientation
    applied). The change of basis to word coefficients is unitriangular up to
    sign under this ordering.
    """

    dim: int
    level: int
    words: tuple[Word, ...] = field(init=False)
    expansions: tuple[dict[Word, float], ...] = field(init=False)

    def __post_init__(self):
        lw = tuple(words.lyndon_words(self.dim, self.level))
        exps = tuple(
            {w: orientation(word) * c for w, c in _bracket_expansion(word).items()}
            for word in lw
        )
        object.__setattr__(self, "words", lw)
        object.__setattr__(self, "expansions", exps)

    def __len__(self) -> int:
        return len(self.words)

    def labels(self) -> list[str]:
        return ["".join(str(a) for a in w) for w in self.words]


@lru_cache(maxsize=32)
def lyndon_basis(dim: int, level: int) -> LyndonBasis:
    return LyndonBasis(dim, level)


@dataclass(frozen=True)
class LogSignature:
    """Coordinates of a Lie element in the Lyndon bracket basis."""

    dim: int
    level: int
    coords: np.ndarray

    def __post_init__(self):
        expected = sum(words.witt_count(self.dim, k) for k in range(1, self.level + 1))
        if self.coords.shape != (expected,):
            raise ValueError(
                f"log-signature for dim={self.dim} level={self.level} needs "
                f"{expected} coordinates, got {self.coords.shape}"
            )

    def labels(self) -> list[str]:
        return lyndon_basis(self.dim, self.level).labels()


RESIDUAL_TOL = 1e-9


def to_lyndon_coordinates(
    lie: TruncatedTensor, basis: LyndonBasis | None = None
) -> LogSignature:
    """Coordinates of a Lie element in the Lyndon bracket basis.

    Solves the unitriangular system level by level. If the input is not a Lie
    element (nonzero residual after projection) a warning reporting the
    residual norm is emitted; the projection coordinates are still returned.
    """
    if basis is None:
        basis = lyndon_basis(lie.dim, lie.level)
    if (basis.dim, basis.level) != (lie.dim, lie.level):
        raise ShapeMismatchError(
            f"basis (dim={basis.dim}, level={basis.level}) does not match tensor "
            f"(dim={lie.dim}, level={lie.level})"
        )
    if lie.coeffs[0] != 0.0:
        raise ValueError("Lie element must have zero constant term")

    dim = lie.dim
    coords = np.zeros(len(basis))
    solved: list[tuple[int, float]] = []  # (basis position, coordinate)
    for pos, word in enumerate(basis.words):
        value = lie.coeff(word)
        for prev_pos, prev_coord in solved:
            if len(basis.words[prev_pos]) == len(word):
                value -= prev_coord * basis.expansions[prev_pos].get(word, 0.0)
        diag = basis.expansions[pos][word]  # +-1 by unitriangularity
        coord = value / diag
        coords[pos] = coord
        solved.append((pos, coord))

    residual = lie.coeffs.copy()
    residual[0] = 0.0
    for pos, coord in enumerate(coords):
        for word, c in basis.expansions[pos].items():
            residual[words.word_index(word, dim)] -= coord * c
    res_norm = float(np.max(np.abs(residual))) if residual.size else 0.0
    if res_norm > RESIDUAL_TOL:
        warnings.warn(
            f"input is not a Lie element: projection residual {res_norm:.3e}",
            stacklevel=2,
        )
    return LogSignature(dim, lie.level, coords)


def from_lyndon_coordinates(logsig: LogSignature) -> TruncatedTensor:
    """Word-coefficient expansion of Lyndon coordinates (inverse of
    :func:`to_lyndon_coordinates` on the Lie subspace)."""
    basis = lyndon_basis(logsig.dim, logsig.level)
    out = TruncatedTensor.zero(logsig.dim, logsig.level)
    for pos, coord in enumerate(logsig.coords):
        for word, c in basis.expansions[pos].items():
            out.coeffs[words.word_index(word, logsig.dim)] += coord * c
    return out
