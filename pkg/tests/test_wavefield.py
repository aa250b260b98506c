import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simcr.wavefield import (DesignPoint, end_to_end, evaluate_cascades, receive_cascade, theta_product,
                             transmit_cascade, upsilon_product)

from conftest import crandn


def unit(rng, n):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, n))


def stack(rng, n_in, n, layers, transmit=True):
    first = crandn(rng, n, n_in) if transmit else crandn(rng, n_in, n)
    return [first] + [crandn(rng, n, n) for _ in range(layers - 1)]


def dense_B(phi, W):
    B = np.eye(W[0].shape[1])
    for p, w in zip(phi, W):
        B = np.diag(p) @ w @ B
    return B


def dense_Z(psi, U):
    Z = np.eye(U[0].shape[0])
    for p, u in zip(psi, U):
        Z = Z @ u @ np.diag(p)
    return Z


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_identity_phases(rng):
    W = stack(rng, 2, 5, 1)
    np.testing.assert_array_equal(transmit_cascade([np.ones(5)], W), W[0])
    U = stack(rng, 2, 5, 1, transmit=False)
    np.testing.assert_array_equal(receive_cascade([np.ones(5)], U), U[0])


def test_two_layer_structure(rng):
    W = stack(rng, 2, 5, 2)
    p1 = unit(rng, 5)
    np.testing.assert_allclose(transmit_cascade([p1, np.ones(5)], W), W[1] @ np.diag(p1) @ W[0], rtol=1e-13)
    U = stack(rng, 3, 5, 2, transmit=False)
    np.testing.assert_allclose(receive_cascade([np.ones(5)] * 2, U), U[0] @ U[1], rtol=1e-13)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), layers=st.integers(1, 4))
def test_cascades_match_dense_products(seed, layers):
    rng = np.random.default_rng(seed)
    W, U = stack(rng, 2, 6, layers), stack(rng, 3, 7, layers, transmit=False)
    phi, psi = [unit(rng, 6) for _ in range(layers)], [unit(rng, 7) for _ in range(layers)]
    assert rel(transmit_cascade(phi, W), dense_B(phi, W)) < 1e-12
    assert rel(receive_cascade(psi, U), dense_Z(psi, U)) < 1e-12
    # structural identities of the gradient building blocks
    assert rel(theta_product(1, layers, phi, W), transmit_cascade(phi, W).conj().T) < 1e-12
    assert rel(upsilon_product(layers, 1, psi, U), receive_cascade(psi, U).conj().T) < 1e-12


def test_single_layer_norm_preserved(rng):
    W = stack(rng, 2, 6, 1)
    assert np.linalg.norm(transmit_cascade([unit(rng, 6)], W)) == pytest.approx(np.linalg.norm(W[0]))


def test_theta_boundaries(rng):
    W = stack(rng, 2, 6, 3)
    phi = [unit(rng, 6) for _ in range(3)]
    np.testing.assert_array_equal(theta_product(4, 3, phi, W), np.eye(6))
    np.testing.assert_array_equal(theta_product(1, 0, phi, W), np.eye(2))
    np.testing.assert_allclose(theta_product(2, 2, phi, W), W[1].conj().T @ np.diag(phi[1]).conj().T)
    with pytest.raises(IndexError):
        theta_product(0, 2, phi, W)


def test_upsilon_boundaries(rng):
    U = stack(rng, 3, 6, 3, transmit=False)
    psi = [unit(rng, 6) for _ in range(3)]
    np.testing.assert_array_equal(upsilon_product(0, 1, psi, U), np.eye(3))
    np.testing.assert_array_equal(upsilon_product(3, 4, psi, U), np.eye(6))
    np.testing.assert_allclose(upsilon_product(2, 2, psi, U), np.diag(psi[1]).conj().T @ U[1].conj().T)
    with pytest.raises(IndexError):
        upsilon_product(5, 1, psi, U)


def test_dimension_errors(rng):
    W = stack(rng, 2, 6, 2)
    with pytest.raises(ValueError):
        transmit_cascade([unit(rng, 6)], W)
    with pytest.raises(ValueError):
        transmit_cascade([unit(rng, 5), unit(rng, 6)], W)
    with pytest.raises(ValueError):
        end_to_end(np.ones((2, 3)), np.ones((4, 5)), np.ones((5, 2)))


def test_end_to_end_basic():
    assert not np.any(end_to_end(np.ones((2, 3)), np.zeros((3, 4)), np.ones((4, 2))))
    H = end_to_end(np.array([[2.0]]), np.array([[3j]]), np.array([[0.5]]))
    assert H[0, 0] == 3j


def test_cascade_cache_freshness(rng):
    W, U = stack(rng, 2, 4, 2), stack(rng, 2, 4, 2, transmit=False)
    G = crandn(rng, 4, 4)
    x = DesignPoint(np.eye(2, dtype=complex), [unit(rng, 4)] * 2, [unit(rng, 4)] * 2)
    cache = evaluate_cascades(x, W, U, G)
    assert cache.is_fresh(x)
    assert rel(cache.H, cache.Z @ G @ cache.B) < 1e-10
    y = x.with_phi(0, unit(rng, 4))
    assert not cache.is_fresh(y)
    assert y.phi[1] is x.phi[1] and x.phi[0] is not y.phi[0]
