"""End-to-end acceptance suite.

Each test prints one ``[PASS]``/``[FAIL]`` line; the lines are collected in
the ``acceptance criteria`` section of the pytest summary. The reference
configuration runs are shared between criteria through session fixtures.
"""
import dataclasses
from pathlib import Path

import numpy as np
import pytest

from simcr.apgm import OptimizerConfig, Problem, random_initial_point, run
from simcr.gradients import directional_fd_error, gradient_bundle
from simcr.harness import load_config, run_experiment, run_sweep
from simcr.objective import cutoff_rate, mutual_information_mc, objective_f, pair_distances, pairwise_distances
from simcr.signaling import build_constellation, build_differences, enumerate_vectors
from simcr.wavefield import DesignPoint, evaluate_cascades, receive_cascade, transmit_cascade

from conftest import crandn

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def reference_config(**run_overrides):
    cfg = load_config(CONFIGS / "reference.ini")
    return dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, **run_overrides))


@pytest.fixture(scope="session")
def fixed_budget_runs():
    # 30 realizations, exactly 200 iterations each (no early stop)
    cfg = reference_config(num_realizations=30)
    cfg = dataclasses.replace(cfg, optimizer=dataclasses.replace(cfg.optimizer, tol=0.0, max_iterations=200))
    return run_experiment(cfg)


_sweeps = {}


def converged_mean(atoms, order, precoding):
    """Paired 10-realization run at default convergence settings, cached."""
    key = (atoms, order, precoding)
    if key not in _sweeps:
        cfg = reference_config(num_realizations=10, mi_every=0)
        geom = dataclasses.replace(cfg.geometry, atoms_per_tx_layer=atoms, atoms_per_rx_layer=atoms)
        cfg = dataclasses.replace(cfg, geometry=geom, signaling=dataclasses.replace(cfg.signaling, order=order))
        _sweeps[key] = run_sweep(cfg, "precoding", [precoding])[0]
    return _sweeps[key]


def test_criterion_01_gradients_match_finite_differences(criterion):
    rng = np.random.default_rng(101)
    worst = 0.0
    vecs = enumerate_vectors(build_constellation("PSK", 2), 2)
    diffs = build_differences(vecs)
    for _ in range(10):
        N = E = 8
        W = [crandn(rng, N, 2), crandn(rng, N, N) / np.sqrt(N)]
        U = [crandn(rng, 2, E), crandn(rng, E, E) / np.sqrt(E)]
        G = crandn(rng, E, N) / np.sqrt(N)
        unit = lambda n: np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        x = DesignPoint(crandn(rng, 2, 2), [unit(N), unit(N)], [unit(E), unit(E)])
        cache = evaluate_cascades(x, W, U, G)
        d = pair_distances(cache.H, x.P, diffs)
        sigma2 = float(np.mean(d)) / 4
        g = gradient_bundle(x, W, U, G, cache, d, diffs, sigma2)

        def f(P, phi, psi):
            H = receive_cascade(psi, U) @ G @ transmit_cascade(phi, W)
            return objective_f(pairwise_distances(H, P, diffs), sigma2)

        errs = [directional_fd_error(lambda P: f(P, x.phi, x.psi), x.P, g.grad_P, crandn(rng, 2, 2))]
        for l in range(2):
            errs.append(directional_fd_error(
                lambda v: f(x.P, [v if i == l else p for i, p in enumerate(x.phi)], x.psi),
                x.phi[l], g.grad_phi[l], crandn(rng, N)))
        for k in range(2):
            errs.append(directional_fd_error(
                lambda v: f(x.P, x.phi, [v if i == k else p for i, p in enumerate(x.psi)]),
                x.psi[k], g.grad_psi[k], crandn(rng, E)))
        worst = max(worst, *errs)
    assert criterion(1, "gradient correctness", worst < 1e-6, f"worst relative error {worst:.2e} < 1e-6")


def test_criterion_02_monotone_descent(fixed_budget_runs, criterion):
    violations, steps = 0, 0
    for r in fixed_budget_runs.realizations:
        f = [row["f"] for row in r.rows]
        steps += len(f) - 1
        violations += sum(b > a for a, b in zip(f, f[1:]))
    full = all(r.iterations == 200 for r in fixed_budget_runs.realizations)
    ok = violations == 0 and full and len(fixed_budget_runs.realizations) == 30
    assert criterion(2, "monotone descent", ok, f"{violations} increases over {steps} iteration steps")


def test_criterion_03_convergence_speed(fixed_budget_runs, criterion):
    R0 = np.array([[row["R0"] for row in r.rows] for r in fixed_budget_runs.realizations])
    mean = R0.mean(axis=0)
    ratio = mean[30] / mean[200]
    first90 = int(np.argmax(mean >= 0.9 * mean[200]))
    ok = ratio >= 0.9
    assert criterion(3, "convergence speed", ok,
                     f"mean R0 at iteration 30 is {100 * ratio:.1f}% of iteration 200 (need >= 90%); "
                     f"90% first reached at iteration {first90}")


def test_criterion_04_cutoff_rate_below_mi(fixed_budget_runs, criterion):
    rs = fixed_budget_runs.realizations
    held = [r.final_MI >= r.final_R0 - 3 * r.MI_stderr for r in rs]
    frac = float(np.mean(held))
    assert criterion(4, "cutoff rate lower-bounds MI", frac >= 0.95,
                     f"{sum(held)}/{len(rs)} realizations with MI >= R0 - 3 stderr")


def test_criterion_05_meta_atom_scaling(criterion):
    small, large = converged_mean(49, 4, True), converged_mean(100, 4, True)
    assert small.seeds == large.seeds
    a, b = small.final_R0.mean(), large.final_R0.mean()
    assert criterion(5, "meta-atom scaling", b > a, f"mean R0 {a:.4f} (N=49) -> {b:.4f} (N=100) bits")


def test_criterion_06_precoding_gain(criterion):
    gains = {}
    for atoms in (49, 100):
        on, off = converged_mean(atoms, 4, True), converged_mean(atoms, 4, False)
        assert on.seeds == off.seeds
        gains[atoms] = on.final_MI.mean() / off.final_MI.mean() - 1
    ok = gains[49] >= 0.15 and gains[100] >= 0.10
    assert criterion(6, "precoding gain", ok,
                     f"MI gain {100 * gains[49]:.1f}% at N=49 (need 15%), {100 * gains[100]:.1f}% at N=100 (need 10%)")


def test_criterion_07_modulation_insensitivity(criterion):
    m4, m16 = converged_mean(49, 4, True), converged_mean(49, 16, True)
    assert m4.seeds == m16.seeds
    a, b = m4.final_R0.mean(), m16.final_R0.mean()
    change = abs(b - a) / a
    assert criterion(7, "CR insensitive to M", change < 0.10,
                     f"mean R0 {a:.4f} (M=4) vs {b:.4f} (M=16), change {100 * change:.1f}% < 10%")


def test_criterion_08_single_atom_oracle(criterion):
    rng = np.random.default_rng(8)
    w, u, g = crandn(rng, 1, 1), crandn(rng, 1, 1), crandn(rng, 1, 1)
    vecs = enumerate_vectors(build_constellation("PSK", 2), 1)
    diffs = build_differences(vecs)
    sigma2 = float(abs(u * g * w)[0, 0] ** 2)
    problem = Problem([w], [u], g, diffs, sigma2)
    start = random_initial_point(rng, 1, 1, 1, 1, 1, 1)
    result = run(problem, start, OptimizerConfig())
    apgm_R0 = result.trace[-1].R0 if result.trace else result.initial_R0

    # exhaustive grid over both phases and the (unit-power) precoder phase
    grid = np.exp(2j * np.pi * np.arange(360) / 360)
    p = np.exp(2j * np.pi * np.arange(8) / 8)
    h = (u * g * w)[0, 0] * grid[:, None, None] * grid[None, :, None] * p[None, None, :]
    dist = np.abs(2 * h) ** 2  # BPSK symbols differ by 2
    f = 2 + 2 * np.exp(-dist / (4 * sigma2))
    oracle = float(np.max(-np.log2(f / 4)))
    gap = abs(apgm_R0 - oracle)
    assert criterion(8, "single-atom grid oracle", gap < 1e-3,
                     f"APGM R0 {apgm_R0:.6f} vs grid {oracle:.6f}, gap {gap:.1e} < 1e-3")


def test_criterion_09_spot_values(criterion):
    vecs = enumerate_vectors(build_constellation("PSK", 2), 1)
    diffs = build_differences(vecs)
    one = np.ones((1, 1), dtype=complex)
    f = objective_f(pairwise_distances(one, one, diffs), 1.0)
    R0 = cutoff_rate(f, 2)
    closed_f = 2 + 2 * np.exp(-1)
    closed_R0 = 2 - np.log2(closed_f)
    zero = np.zeros((1, 1))
    R0_zero = cutoff_rate(objective_f(pairwise_distances(zero, one, diffs), 1.0), 2)
    mi0, se0 = mutual_information_mc(zero, one, vecs, 1.0, np.random.default_rng(9), 1000)
    ok = (abs(f - closed_f) < 1e-9 and abs(R0 - closed_R0) < 1e-9 and abs(R0 - 0.5482) < 5e-4
          and R0_zero == 0.0 and abs(mi0) <= max(se0, 1e-12))
    assert criterion(9, "analytic spot values", ok,
                     f"f={f:.12f}, R0={R0:.10f} bits, R0(H=0)={R0_zero}, MI(H=0)={mi0:.1e}")


def test_criterion_10_reproducible_traces(tmp_path, criterion):
    cfg = load_config(CONFIGS / "quick.ini")
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").glob("trace_*.csv"))
    same = bool(names) and all((tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
                               for n in names)
    summary_same = (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()
    assert criterion(10, "byte-identical reruns", same and summary_same,
                     f"{len(names)} trace CSVs and summary.json compared")
