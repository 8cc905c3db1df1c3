"""Word combinatorics for the truncated tensor algebra.

Words are tuples of letters drawn from ``1..dim``. Coefficient storage is a
single flat float64 array holding every word of length 0..level, grouped by
length ("level") with lexicographic order inside each level, so the word
``(1, 2)`` for a two-letter alphabet sits at offset 1 + 2 + 1 = 4.
"""
from __future__ import annotations

from functools import lru_cache

Word = tuple[int, ...]


def level_sizes(dim: int, level: int) -> list[int]:
    """Number of words per length 0..level: ``dim**k``."""
    _check_dim_level(dim, level)
    return [dim**k for k in range(level + 1)]


def level_offsets(dim: int, level: int) -> list[int]:
    """Start index of each level block in flat storage (length level + 2).

    The trailing entry is the total storage size
    ``1 + dim + dim**2 + ... + dim**level``.
    """
    sizes = level_sizes(dim, level)
    offsets = [0]
    for s in sizes:
        offsets.append(offsets[-1] + s)
    return offsets


def storage_size(dim: int, level: int) -> int:
    return level_offsets(dim, level)[-1]


def word_index(word: Word, dim: int) -> int:
    """Flat storage index of ``word``; bijective and level-contiguous."""
    idx = 0
    for letter in word:
        if not 1 <= letter <= dim:
            raise ValueError(f"letter {letter} outside alphabet 1..{dim}")
        idx = idx * dim + (letter - 1)
    # idx is now the within-level rank; shift by the level offset
    offset = (dim ** len(word) - 1) // (dim - 1) if dim > 1 else len(word)
    return offset + idx


def index_word(index: int, dim: int, level: int) -> Word:
    """Inverse of :func:`word_index` for indices below the storage size."""
    offsets = level_offsets(dim, level)
    if not 0 <= index < offsets[-1]:
        raise ValueError(f"index {index} outside storage of size {offsets[-1]}")
    k = next(k for k in range(level + 1) if offsets[k] <= index < offsets[k + 1])
    rank = index - offsets[k]
    letters = []
    for _ in range(k):
        letters.append(rank % dim + 1)
        rank //= dim
    return tuple(reversed(letters))


def all_words(dim: int, length: int) -> list[Word]:
    """All words of exactly ``length`` letters, in lexicographic order."""
    words: list[Word] = [()]
    for _ in range(length):
        words = [w + (a,) for w in words for a in range(1, dim + 1)]
    return words


def is_lyndon(word: Word) -> bool:
    """True when the word is strictly smaller than all its proper rotations."""
    n = len(word)
    if n == 0:
        return False
    return all(word < word[i:] + word[:i] for i in range(1, n))


def lyndon_words(dim: int, level: int) -> list[Word]:
    """All Lyndon words of length 1..level ordered by (length, lex).

    Generation is Duval's algorithm; the per-level counts satisfy the Witt
    necklace formula (see :func:`witt_count`).
    """
    _check_dim_level(dim, level)
    out: list[Word] = []
    w = [0]
    while w:
        w[-1] += 1
        out.append(tuple(w))
        m = len(w)
        while len(w) < level:
            w.append(w[-m])
        while w and w[-1] == dim:
            w.pop()
    out.sort(key=lambda word: (len(word), word))
    return out


@lru_cache(maxsize=None)
def _mobius(n: int) -> int:
    if n == 1:
        return 1
    mu, p, m = 1, 2, n
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            mu = -mu
        p += 1
    if m > 1:
        mu = -mu
    return mu


def witt_count(dim: int, length: int) -> int:
    """Number of Lyndon words of exactly ``length`` letters (necklace count)."""
    if length < 1:
        raise ValueError("length must be >= 1")
    total = 0
    for e in range(1, length + 1):
        if length % e == 0:
            total += _mobius(e) * dim ** (length // e)
    return total // length


def standard_factorization(word: Word) -> tuple[Word, Word]:
    """Split a Lyndon word w = u·v with v its longest proper Lyndon suffix.

    Equivalently v is the lexicographically least proper suffix; both u and v
    are again Lyndon.
    """
    if len(word) < 2:
        raise ValueError("factorization needs a word of length >= 2")
    v = min(word[i:] for i in range(1, len(word)))
    return word[: len(word) - len(v)], v


def _check_dim_level(dim: int, level: int) -> None:
    if dim < 1:
        raise ValueError(f"alphabet size must be >= 1, got {dim}")
    if level < 1:
        raise ValueError(f"truncation level must be >= 1, got {level}")
