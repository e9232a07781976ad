import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpdilation.algebra import (
    channel_apply,
    channel_from_dict,
    channel_from_kraus,
    channel_is_unital,
    channel_power_apply,
    channel_to_dict,
    decode_matrix,
    format_matrix,
    gaussian_matrix,
    load_channel,
    opnorm,
    psd_check,
    random_channel,
    random_element,
    save_channel,
)
from cpdilation.errors import AsymmetryTooLarge, NotContractive, ParseError, ShapeMismatch


def test_identity_channel(ident2):
    a = np.array([[1, 2j], [3, 4]])
    assert np.array_equal(channel_apply(ident2, a), a)
    assert channel_is_unital(ident2)


def test_not_contractive():
    with pytest.raises(NotContractive):
        channel_from_kraus(2, [math.sqrt(2) * np.eye(2)])


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        channel_from_kraus(2, [np.eye(3)])
    with pytest.raises(ShapeMismatch):
        channel_apply(channel_from_kraus(2, [np.eye(2)]), np.eye(3))


def test_scalar_channel(half):
    assert channel_apply(half, 4.0)[0, 0] == pytest.approx(2.0, abs=1e-15)
    assert channel_power_apply(half, 3, 8.0)[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert not channel_is_unital(half)


def test_power_apply_consistency(unital2):
    a = random_element(np.random.default_rng(1), 2)
    assert np.array_equal(channel_power_apply(unital2, 0, a), a)
    assert np.allclose(channel_power_apply(unital2, 2, a), unital2(unital2(a)), atol=1e-15)


def test_random_channel_deterministic():
    a = random_channel(3, 2, seed=5, unital=True)
    b = random_channel(3, 2, seed=5, unital=True)
    for u, v in zip(a.kraus, b.kraus):
        assert np.array_equal(u, v)
    c = random_channel(3, 2, seed=6, unital=True)
    assert not np.array_equal(a.kraus[0], c.kraus[0])


@pytest.mark.parametrize("seed", range(10))
def test_random_unital_channel(seed):
    phi = random_channel(2, 3, seed, unital=True)
    assert opnorm(phi.unit_image - np.eye(2)) < 1e-12
    assert channel_is_unital(phi, 1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_random_scaled_channel(seed):
    phi = random_channel(2, 3, seed, unital=False, lam=0.5)
    assert opnorm(phi.unit_image - 0.5 * np.eye(2)) < 1e-12


def test_random_channel_rejects_big_lambda():
    with pytest.raises(NotContractive):
        random_channel(2, 2, 0, unital=False, lam=1.5)


def test_gaussian_fill_is_column_major():
    rng_a = np.random.default_rng(3)
    rng_b = np.random.default_rng(3)
    m = gaussian_matrix(rng_a, 2, 3)
    u = rng_b.random(12)
    first = math.sqrt(-2 * math.log1p(-u[0])) * complex(math.cos(2 * math.pi * u[1]), math.sin(2 * math.pi * u[1]))
    second = math.sqrt(-2 * math.log1p(-u[2])) * complex(math.cos(2 * math.pi * u[3]), math.sin(2 * math.pi * u[3]))
    assert m[0, 0] == pytest.approx(first, abs=1e-15)
    assert m[1, 0] == pytest.approx(second, abs=1e-15)


def test_psd_check_examples():
    assert psd_check(np.eye(2)) == (True, pytest.approx(1.0))
    ok, low = psd_check(np.diag([1.0, -1.0]))
    assert not ok and low == pytest.approx(-1.0)
    ok, low = psd_check(np.array([[1, 0.5], [0.5, 0.5]]))
    # eigenvalues of [[a, b], [b, c]]: (a+c)/2 -+ sqrt(((a-c)/2)^2 + b^2)
    assert ok and low == pytest.approx(0.75 - math.sqrt(0.0625 + 0.25), abs=1e-15)
    assert low == pytest.approx((3 - math.sqrt(5)) / 4, abs=1e-15)


def test_psd_check_asymmetry():
    with pytest.raises(AsymmetryTooLarge):
        psd_check(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_positivity_preserved():
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        phi = random_channel(3, 2, seed, unital=bool(seed % 2), lam=0.7)
        x = random_element(rng, 3)
        worst = min(worst, float(np.linalg.eigvalsh(phi(x @ x.conj().T))[0]))
    assert worst >= -1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_block_complete_positivity(n, halved2):
    d = halved2.d
    for seed in range(20):
        x = random_element(np.random.default_rng(seed), n * d)
        m = x @ x.conj().T
        out = np.block(
            [[halved2(m[i * d : (i + 1) * d, j * d : (j + 1) * d]) for j in range(n)] for i in range(n)]
        )
        ok, _ = psd_check(out)
        assert ok


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_adjoint_preserved(seed):
    rng = np.random.default_rng(seed)
    phi = random_channel(2, 2, seed, unital=False, lam=0.9)
    a = random_element(rng, 2)
    assert opnorm(phi(a.conj().T) - phi(a).conj().T) <= 1e-12 * opnorm(a)
    assert opnorm(phi.unit_image) <= 1 + phi.tol_cp


def test_channel_file_roundtrip(tmp_path, unital2):
    path = tmp_path / "ch.json"
    save_channel(unital2, path)
    back = load_channel(path)
    for u, v in zip(unital2.kraus, back.kraus):
        assert np.array_equal(u, v)


def test_channel_file_example():
    phi = channel_from_dict(json.loads('{"d":1,"kraus":[[[[0.7071067811865476,0.0]]]]}'))
    assert phi(1.0)[0, 0].real == pytest.approx(0.5, abs=1e-15)
    assert channel_to_dict(phi)["kraus"][0] == [[[0.7071067811865476, 0.0]]]


def test_matrix_encoding_errors():
    with pytest.raises(ParseError):
        decode_matrix([[1, 2]])
    with pytest.raises(ParseError):
        decode_matrix([[[1, 2, 3]]])
    with pytest.raises(ParseError):
        channel_from_dict({"kraus": []})


def test_format_matrix_roundtrip():
    a = random_element(np.random.default_rng(0), 2)
    back = decode_matrix(json.loads(format_matrix(a)))
    assert np.array_equal(back, a)
    assert format_matrix(np.array([[0.25]])) == "[[[0.25, 0]]]"
