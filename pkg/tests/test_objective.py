import numpy as np
import pytest
from scipy.integrate import quad

from simcr.objective import (NoiseModel, cutoff_rate, draw_noise, evaluate, mutual_information_mc,
                             objective_f, pairwise_distances)
from simcr.signaling import build_constellation, build_differences, enumerate_vectors

from conftest import crandn

BPSK = enumerate_vectors(build_constellation("PSK", 2), 1)
BPSK_D = build_differences(BPSK)
ONE = np.ones((1, 1), dtype=complex)


def qpsk2():
    v = enumerate_vectors(build_constellation("QAM", 4), 2)
    return v, build_differences(v)


def test_noise_model_db():
    assert NoiseModel.from_db(-110).variance == pytest.approx(1e-11)
    assert NoiseModel(1e-11).db == pytest.approx(-110)
    with pytest.raises(ValueError):
        NoiseModel(0.0)


def test_scalar_bpsk_distances():
    np.testing.assert_array_equal(pairwise_distances(ONE, ONE, BPSK_D), [[0, 4], [4, 0]])


def test_distances_brute_force(rng):
    v, d = qpsk2()
    H, P = crandn(rng, 2, 2), crandn(rng, 2, 2)
    F = pairwise_distances(H, P, d)
    for i in range(16):
        for j in range(16):
            brute = np.linalg.norm(H @ P @ (v.vectors[i] - v.vectors[j])) ** 2
            assert F[i, j] == pytest.approx(brute, rel=1e-12, abs=1e-12)
    assert np.all(np.diag(F) == 0)
    np.testing.assert_array_equal(F, F.T)


def test_objective_spot_values():
    F = pairwise_distances(ONE, ONE, BPSK_D)
    f = objective_f(F, 1.0)
    assert f == pytest.approx(2.735758882342884643, abs=1e-12)
    assert cutoff_rate(f, 2) == pytest.approx(0.54805891691695183, abs=1e-12)
    assert objective_f(np.zeros((4, 4)), 1.0) == 16
    assert cutoff_rate(16, 4) == 0
    assert cutoff_rate(4, 4) == 2


def test_objective_low_noise_limit():
    F = pairwise_distances(ONE, ONE, BPSK_D)
    assert objective_f(F, 1e-6) == 2.0


def test_cutoff_rate_rejects_out_of_range():
    with pytest.raises(ValueError):
        cutoff_rate(1.0, 4)
    with pytest.raises(ValueError):
        cutoff_rate(17.0, 4)


def test_objective_bounds_and_permutation_symmetry(rng):
    v, d = qpsk2()
    H, P = crandn(rng, 2, 2), crandn(rng, 2, 2)
    F = pairwise_distances(H, P, d)
    res = evaluate(H, P, d, sigma2=np.median(F))
    assert 16 <= res.f <= 256
    assert 0 <= res.R0 <= 4
    perm = rng.permutation(16)
    assert objective_f(F[np.ix_(perm, perm)], np.median(F)) == pytest.approx(res.f, rel=1e-14)


def test_scaling_channel_increases_rate(rng):
    v, d = qpsk2()
    H, P = crandn(rng, 2, 2), crandn(rng, 2, 2)
    s2 = 1.0
    r = [evaluate(c * H, P, d, s2).R0 for c in (1.0, 1.5, 3.0)]
    assert r[0] <= r[1] <= r[2]


def test_mi_zero_channel():
    v, d = qpsk2()
    mi, se = mutual_information_mc(np.zeros((2, 2)), np.eye(2), v, 1.0, np.random.default_rng(0), 50)
    assert mi == pytest.approx(0.0, abs=1e-12)
    assert se == pytest.approx(0.0, abs=1e-12)


def test_mi_high_snr_limit(rng):
    v, d = qpsk2()
    mi, se = mutual_information_mc(np.eye(2), np.eye(2), v, 1e-6, rng, 100)
    assert mi == pytest.approx(4.0, abs=1e-9)


def test_mi_bpsk_against_quadrature():
    # binary-input channel y = +-1 + n, n ~ CN(0, 1): only Re(n) ~ N(0, 1/2) matters
    def integrand(x):
        return np.logaddexp(0, -4 - 4 * x) / np.log(2) * np.exp(-x**2) / np.sqrt(np.pi)

    oracle = 1 - quad(integrand, -np.inf, np.inf, epsabs=1e-13)[0]
    mi, se = mutual_information_mc(ONE, ONE, BPSK, 1.0, np.random.default_rng(5), 4000)
    assert abs(mi - oracle) < 3 * se
    assert 0 < se < 0.02


def test_mi_common_random_numbers(rng):
    v, d = qpsk2()
    H = crandn(rng, 2, 2)
    noise = draw_noise(np.random.default_rng(1), 16, 200, 2)
    a = mutual_information_mc(H, np.eye(2), v, 1.0, noise=noise)
    b = mutual_information_mc(H, np.eye(2), v, 1.0, noise=noise)
    assert a == b
    perm = rng.permutation(16)
    v_perm = type(v)(v.num_streams, v.vectors[perm], v.indices[perm])
    c = mutual_information_mc(H, np.eye(2), v_perm, 1.0, noise=noise[perm])
    assert c[0] == pytest.approx(a[0], rel=1e-12)


def test_mi_not_below_cutoff_rate(rng):
    v, d = qpsk2()
    for _ in range(5):
        H, P = crandn(rng, 2, 2), crandn(rng, 2, 2)
        s2 = float(np.median(pairwise_distances(H, P, d)))
        r0 = evaluate(H, P, d, s2).R0
        mi, se = mutual_information_mc(H, P, v, s2, rng, 500)
        assert mi >= r0 - 3 * se
        assert mi <= 4 + 3 * se
