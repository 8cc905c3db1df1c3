import itertools

import numpy as np
import pytest

from eventsig import words
from eventsig.signature import path_from_letter_sequence, path_signature
from eventsig.tensor_algebra import (
    LogSignature,
    ShapeMismatchError,
    TruncatedTensor,
    concat_product,
    from_lyndon_coordinates,
    lyndon_basis,
    tensor_exp,
    tensor_log,
    to_lyndon_coordinates,
)

from conftest import random_tensor


def brute_force_concat(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Oracle: enumerate every split w = u.v explicitly."""
    out = TruncatedTensor.zero(a.dim, a.level)
    for k in range(a.level + 1):
        for w in words.all_words(a.dim, k):
            total = 0.0
            for cut in range(k + 1):
                total += a.coeff(w[:cut]) * b.coeff(w[cut:])
            out.coeffs[words.word_index(w, a.dim)] = total
    return out


def test_concat_unit_is_identity(rng):
    for dim, level in [(2, 3), (3, 2)]:
        t = random_tensor(rng, dim, level)
        unit = TruncatedTensor.unit(dim, level)
        assert np.allclose(concat_product(unit, t).coeffs, t.coeffs, atol=1e-12)
        assert np.allclose(concat_product(t, unit).coeffs, t.coeffs, atol=1e-12)


def test_concat_binomial_square():
    # (1 + e1)^2 = 1 + 2 e1 + e11
    t = TruncatedTensor.from_word_coeffs(2, 2, {(): 1.0, (1,): 1.0})
    sq = concat_product(t, t)
    assert sq.coeff(()) == 1.0
    assert sq.coeff((1,)) == 2.0
    assert sq.coeff((1, 1)) == 1.0
    assert sq.coeff((1, 2)) == 0.0


def test_concat_matches_brute_force_split_enumeration(rng):
    for _ in range(20):
        a = random_tensor(rng, 2, 3)
        b = random_tensor(rng, 2, 3)
        expected = brute_force_concat(a, b)
        assert np.allclose(concat_product(a, b).coeffs, expected.coeffs, atol=1e-12)


def test_concat_associative_unit_two_sided(rng):
    for _ in range(10):
        a, b, c = (random_tensor(rng, 2, 4) for _ in range(3))
        left = concat_product(concat_product(a, b), c)
        right = concat_product(a, concat_product(b, c))
        assert np.allclose(left.coeffs, right.coeffs, atol=1e-12)


def test_concat_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        concat_product(TruncatedTensor.unit(2, 2), TruncatedTensor.unit(2, 3))
    with pytest.raises(ShapeMismatchError):
        concat_product(TruncatedTensor.unit(2, 2), TruncatedTensor.unit(3, 2))


def test_exp_of_zero_is_unit():
    z = TruncatedTensor.zero(2, 3)
    assert np.allclose(tensor_exp(z).coeffs, TruncatedTensor.unit(2, 3).coeffs)


def test_exp_of_level_one_elements():
    x = TruncatedTensor.from_word_coeffs(2, 2, {(1,): 2.0, (2,): 2.0})
    e = tensor_exp(x)
    assert e.coeff(()) == 1.0
    assert [e.coeff((i,)) for i in (1, 2)] == [2.0, 2.0]
    assert [e.coeff(w) for w in [(1, 1), (1, 2), (2, 1), (2, 2)]] == [2.0, 2.0, 2.0, 2.0]

    y = TruncatedTensor.from_word_coeffs(2, 2, {(1,): 3.0, (2,): 2.0})
    e2 = tensor_exp(y)
    assert [e2.coeff(w) for w in [(1, 1), (1, 2), (2, 1), (2, 2)]] == [4.5, 3.0, 3.0, 2.0]


def test_exp_requires_zero_constant():
    with pytest.raises(ValueError, match="constant"):
        tensor_exp(TruncatedTensor.unit(2, 2))


def test_log_of_unit_is_zero():
    assert np.allclose(tensor_log(TruncatedTensor.unit(2, 3)).coeffs, 0.0)


def test_log_inverts_exp_exactly_on_linear_displacement():
    x = TruncatedTensor.from_word_coeffs(2, 4, {(1,): 3.0, (2,): 2.0})
    back = tensor_log(tensor_exp(x))
    assert np.allclose(back.coeffs, x.coeffs, atol=1e-12)


def test_log_requires_unit_constant():
    with pytest.raises(ValueError, match="constant"):
        tensor_log(TruncatedTensor.zero(2, 2))


def test_exp_log_mutually_inverse(rng):
    for dim, level in [(2, 4), (3, 3)]:
        x = random_tensor(rng, dim, level)
        x.coeffs[0] = 0.0
        assert np.allclose(tensor_log(tensor_exp(x)).coeffs, x.coeffs, atol=1e-12)
        g = random_tensor(rng, dim, level)
        g.coeffs[0] = 1.0
        assert np.allclose(tensor_exp(tensor_log(g)).coeffs, g.coeffs, atol=1e-12)


def test_log_of_letter_path_signature_level2_antisymmetry():
    lie = tensor_log(path_signature(path_from_letter_sequence("aabba"), 4))
    assert lie.coeff((1, 2)) == pytest.approx(1.0, abs=1e-12)
    assert lie.coeff((2, 1)) == pytest.approx(-1.0, abs=1e-12)


def test_log_vanishes_on_repeated_letter_words(rng):
    # group-like input: an actual path signature
    from conftest import random_path

    for _ in range(5):
        path = random_path(rng, 3)
        lie = tensor_log(path_signature(path, 4))
        for letter in (1, 2, 3):
            for k in (2, 3, 4):
                assert lie.coeff((letter,) * k) == pytest.approx(0.0, abs=1e-10)


def test_lyndon_coordinates_of_level_one():
    lie = TruncatedTensor.from_word_coeffs(2, 4, {(1,): 3.0, (2,): 2.0})
    coords = to_lyndon_coordinates(lie)
    assert np.allclose(coords.coords, [3, 2, 0, 0, 0, 0, 0, 0], atol=1e-12)


GOLDEN = {
    "aabba": [3.0, 2.0, 1.0, -0.5, -1.0, -1.0 / 3.0, -0.5, 0.0],
    "baaab": [3.0, 2.0, 0.0, 1.5, 0.5, 0.0, 0.0, 0.0],
}


@pytest.mark.parametrize("seq", sorted(GOLDEN))
def test_lyndon_coordinates_golden_letter_paths(seq):
    lie = tensor_log(path_signature(path_from_letter_sequence(seq), 4))
    coords = to_lyndon_coordinates(lie)
    assert np.allclose(coords.coords, GOLDEN[seq], atol=1e-12)


def test_lyndon_roundtrip_on_lie_elements(rng):
    # random Lie elements via log of signatures
    from conftest import random_path

    for dim, level in [(2, 4), (3, 3)]:
        basis = lyndon_basis(dim, level)
        for _ in range(5):
            lie = tensor_log(path_signature(random_path(rng, dim), level))
            coords = to_lyndon_coordinates(lie, basis)
            back = from_lyndon_coordinates(coords)
            assert np.allclose(back.coeffs, lie.coeffs, atol=1e-10)


def test_non_lie_input_warns_with_residual():
    junk = TruncatedTensor.from_word_coeffs(2, 2, {(1, 1): 1.0})
    with pytest.warns(UserWarning, match="residual"):
        to_lyndon_coordinates(junk)


def test_basis_expansion_unitriangular():
    for dim, level in [(2, 4), (3, 3)]:
        basis = lyndon_basis(dim, level)
        for pos, w in enumerate(basis.words):
            expansion = basis.expansions[pos]
            assert abs(expansion[w]) == 1.0
            for other, coeff in expansion.items():
                assert len(other) == len(w)
                if coeff != 0.0 and words.is_lyndon(other):
                    assert other >= w


def test_shuffle_identity_on_group_like(rng):
    from conftest import random_path

    for _ in range(10):
        dim = int(rng.integers(2, 4))
        g = path_signature(random_path(rng, dim), 3)
        for i, j in itertools.product(range(1, dim + 1), repeat=2):
            lhs = g.coeff((i,)) * g.coeff((j,))
            rhs = g.coeff((i, j)) + g.coeff((j, i))
            assert lhs == pytest.approx(rhs, abs=1e-10)


def test_logsig_length_validation():
    with pytest.raises(ValueError, match="coordinates"):
        LogSignature(2, 4, np.zeros(7))
