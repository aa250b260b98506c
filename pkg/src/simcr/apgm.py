"""Adaptive projected gradient method over (P, phi^1..phi^L, psi^1..psi^K).

One outer iteration runs a backtracking line search on the precoder, then on
each transmit layer in order, then on each receive layer in order. Every
block search starts from its own persisted step size and uses the freshest
values of all other blocks.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from .gradients import grad_phase_rx, grad_phase_tx, grad_precoder, weighted_pair_sum
from .objective import cutoff_rate, objective_from_pairs, pair_distances
from .signaling import DifferenceSet
from .wavefield import DesignPoint, end_to_end, receive_cascade, transmit_cascade

__all__ = [
    "StepState",
    "LineSearchParams",
    "OptimizerConfig",
    "IterationTrace",
    "LineSearchResult",
    "Problem",
    "RunResult",
    "project_power",
    "project_unit_modulus",
    "line_search_block",
    "apgm_iteration",
    "random_initial_point",
    "run",
]


def project_power(P: np.ndarray, num_streams: Optional[int] = None) -> np.ndarray:
    """Scale ``P`` onto ``tr(P P^H) = N_s`` (``N_s`` defaults to ``P.shape[1]``)."""
    ns = P.shape[1] if num_streams is None else num_streams
    power = np.real(np.vdot(P, P))
    if power == 0:
        raise ValueError("cannot project an all-zero precoder onto the power constraint")
    return P * np.sqrt(ns / power)


def project_unit_modulus(v: np.ndarray) -> np.ndarray:
    """Entrywise ``x / |x|``; zeros map to ``1``."""
    v = np.asarray(v, dtype=complex)
    mag = np.abs(v)
    out = np.ones_like(v)
    nz = mag > 0
    # componentwise real division stays finite for subnormal entries
    out[nz] = v.real[nz] / mag[nz] + 1j * (v.imag[nz] / mag[nz])
    return out


@dataclass
class StepState:
    nu: float
    mu: List[float]
    tau: List[float]

    def __post_init__(self):
        if not (self.nu > 0 and all(m > 0 for m in self.mu) and all(t > 0 for t in self.tau)):
            raise ValueError("all step sizes must be strictly positive")

    @classmethod
    def uniform(cls, L: int, K: int, nu: float = 1000.0, mu: float = 1000.0, tau: float = 1000.0):
        return cls(nu, [mu] * L, [tau] * K)


@dataclass(frozen=True)
class LineSearchParams:
    rho: float = 0.5
    delta: float = 1e-3
    max_backtracks: int = 60
    growth: float = 2.0

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.max_backtracks < 0:
            raise ValueError("max_backtracks must be >= 0")
        if not self.growth >= 1:
            raise ValueError(f"growth must be >= 1, got {self.growth}")


@dataclass(frozen=True)
class OptimizerConfig:
    precoder_step: float = 1000.0
    tx_step: float = 1000.0
    rx_step: float = 1000.0
    line_search: LineSearchParams = field(default_factory=LineSearchParams)
    tol: float = 1e-6
    patience: int = 5
    max_iterations: int = 200
    optimize_precoder: bool = True


@dataclass(frozen=True)
class IterationTrace:
    iteration: int
    f: float
    R0: float
    backtracks_P: int
    backtracks_phi: List[int]
    backtracks_psi: List[int]
    stalls: int
    wall_time: float
    MI: Optional[float] = None
    MI_stderr: Optional[float] = None

    @property
    def backtracks(self) -> int:
        return self.backtracks_P + sum(self.backtracks_phi) + sum(self.backtracks_psi)


class LineSearchResult(NamedTuple):
    block: np.ndarray
    step: float
    backtracks: int
    value: float
    stalled: bool


def line_search_block(evaluate: Callable[[np.ndarray], float], current: np.ndarray, grad: np.ndarray,
                      step: float, projector: Callable[[np.ndarray], np.ndarray],
                      params: LineSearchParams, f_current: Optional[float] = None) -> LineSearchResult:
    """Backtrack until ``f(cand) <= f(cur) - delta ||cand - cur||^2``.

    If no step within ``max_backtracks`` shrinks passes, the block is left
    untouched, ``stalled`` is set and the incoming step is handed back.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if f_current is None:
        f_current = evaluate(current)
    if not np.any(grad):
        # stationary block: skip the projection round trip so it stays bit-identical
        return LineSearchResult(current, step, 0, f_current, False)
    trial = step
    for backtracks in range(params.max_backtracks + 1):
        cand = projector(current - trial * grad)
        f_cand = evaluate(cand)
        gap = cand - current
        if f_cand <= f_current - params.delta * np.real(np.vdot(gap, gap)):
            return LineSearchResult(cand, trial, backtracks, f_cand, False)
        trial *= params.rho
    return LineSearchResult(current, step, params.max_backtracks, f_current, True)


@dataclass
class Problem:
    """Everything fixed during one optimization: channel, propagation, alphabet, noise."""

    W: List[np.ndarray]
    U: List[np.ndarray]
    G: np.ndarray
    diffs: DifferenceSet
    sigma2: float

    @property
    def num_vectors(self) -> int:
        return self.diffs.num_vectors

    def objective_at(self, P, B, Z) -> float:
        H = end_to_end(Z, self.G, B)
        return objective_from_pairs(pair_distances(H, P, self.diffs), self.sigma2, self.num_vectors)

    def objective(self, point: DesignPoint) -> float:
        return self.objective_at(point.P, transmit_cascade(point.phi, self.W),
                                 receive_cascade(point.psi, self.U))

    def channel(self, point: DesignPoint) -> np.ndarray:
        return end_to_end(receive_cascade(point.psi, self.U), self.G, transmit_cascade(point.phi, self.W))


def _lap(timings: dict, key: str, start: float) -> float:
    now = time.perf_counter()
    timings[key] = timings.get(key, 0.0) + now - start
    return now


def apgm_iteration(problem: Problem, point: DesignPoint, steps: StepState, params: LineSearchParams,
                   optimize_precoder: bool = True, iteration: int = 0,
                   timings: Optional[dict] = None):
    """One outer iteration. Returns ``(point, steps, trace)``.

    If ``timings`` is given, per-block wall times (seconds) are accumulated
    into its ``"P"``, ``"phi"`` and ``"psi"`` entries.
    """
    t0 = time.perf_counter()
    if timings is None:
        timings = {}
    W, U, G, diffs, sigma2 = problem.W, problem.U, problem.G, problem.diffs, problem.sigma2
    n_vec = problem.num_vectors
    steps = StepState(steps.nu, list(steps.mu), list(steps.tau))
    P, phi, psi = point.P, list(point.phi), list(point.psi)
    B = transmit_cascade(phi, W)
    Z = receive_cascade(psi, U)
    stalls = 0

    def weights(P, B, Z):
        H = end_to_end(Z, G, B)
        d = pair_distances(H, P, diffs)
        return H, objective_from_pairs(d, sigma2, n_vec), weighted_pair_sum(d, sigma2, diffs)

    H, f_cur, S = weights(P, B, Z)

    tick = time.perf_counter()
    bt_P = 0
    if optimize_precoder:
        res = line_search_block(lambda X: problem.objective_at(X, B, Z), P,
                                grad_precoder(H, P, S, sigma2), steps.nu, project_power, params, f_cur)
        P, steps.nu, bt_P, f_cur = res.block, res.step, res.backtracks, res.value
        stalls += res.stalled
        H, _, S = weights(P, B, Z)
    tick = _lap(timings, "P", tick)

    bt_phi = []
    for l in range(len(W)):
        g = grad_phase_tx(l + 1, phi, W, G, Z, H, P, S, sigma2)

        def f_layer(v, l=l):
            trial = list(phi)
            trial[l] = v
            return problem.objective_at(P, transmit_cascade(trial, W), Z)

        res = line_search_block(f_layer, phi[l], g, steps.mu[l], project_unit_modulus, params, f_cur)
        phi[l], steps.mu[l], f_cur = res.block, res.step, res.value
        bt_phi.append(res.backtracks)
        stalls += res.stalled
        B = transmit_cascade(phi, W)
        H, _, S = weights(P, B, Z)
    tick = _lap(timings, "phi", tick)

    bt_psi = []
    for k in range(len(U)):
        g = grad_phase_rx(k + 1, psi, U, G, B, H, P, S, sigma2)

        def f_layer(v, k=k):
            trial = list(psi)
            trial[k] = v
            return problem.objective_at(P, B, receive_cascade(trial, U))

        res = line_search_block(f_layer, psi[k], g, steps.tau[k], project_unit_modulus, params, f_cur)
        psi[k], steps.tau[k], f_cur = res.block, res.step, res.value
        bt_psi.append(res.backtracks)
        stalls += res.stalled
        Z = receive_cascade(psi, U)
        if k + 1 < len(U):
            H, _, S = weights(P, B, Z)
    _lap(timings, "psi", tick)

    new_point = DesignPoint(P, phi, psi)
    trace = IterationTrace(iteration, f_cur, cutoff_rate(f_cur, n_vec), bt_P, bt_phi, bt_psi,
                           stalls, time.perf_counter() - t0)
    return new_point, steps, trace


def random_initial_point(rng: np.random.Generator, num_tx: int, num_streams: int,
                         atoms_tx: int, layers_tx: int, atoms_rx: int, layers_rx: int,
                         random_precoder: bool = True) -> DesignPoint:
    """Random feasible start.

    With ``random_precoder=False`` the precoder is the power-normalized
    ``N_t x N_s`` identity map.
    """
    if random_precoder:
        P = rng.standard_normal((num_tx, num_streams)) + 1j * rng.standard_normal((num_tx, num_streams))
    else:
        P = np.eye(num_tx, num_streams, dtype=complex)
    P = project_power(P)
    phi = [np.exp(1j * rng.uniform(0, 2 * np.pi, atoms_tx)) for _ in range(layers_tx)]
    psi = [np.exp(1j * rng.uniform(0, 2 * np.pi, atoms_rx)) for _ in range(layers_rx)]
    return DesignPoint(P, phi, psi)


@dataclass
class RunResult:
    point: DesignPoint
    trace: List[IterationTrace]
    steps: StepState
    initial_f: float
    initial_R0: float
    converged: bool = False


def _grow(steps: StepState, factor: float, cap: StepState) -> StepState:
    # never inflate beyond the configured initial step of each block
    return StepState(
        min(steps.nu * factor, cap.nu),
        [min(m * factor, c) for m, c in zip(steps.mu, cap.mu)],
        [min(t * factor, c) for t, c in zip(steps.tau, cap.tau)],
    )


def run(problem: Problem, initial: DesignPoint, config: OptimizerConfig = OptimizerConfig(),
        callback: Optional[Callable[[DesignPoint, IterationTrace], Optional[IterationTrace]]] = None) -> RunResult:
    """Iterate until ``max_iterations`` or ``patience`` consecutive iterations
    with relative decrease below ``tol``.

    ``callback`` may return a replacement trace record (e.g. with MI filled in).
    """
    L, K = len(problem.W), len(problem.U)
    steps = StepState.uniform(L, K, config.precoder_step, config.tx_step, config.rx_step)
    initial_steps = StepState(steps.nu, list(steps.mu), list(steps.tau))
    params = config.line_search
    point = initial
    f_prev = problem.objective(initial)
    result = RunResult(initial, [], steps, f_prev, cutoff_rate(f_prev, problem.num_vectors))
    quiet = 0
    for n in range(1, config.max_iterations + 1):
        if params.growth != 1.0:
            steps = _grow(steps, params.growth, initial_steps)
        point, steps, rec = apgm_iteration(problem, point, steps, params,
                                           config.optimize_precoder, iteration=n)
        if callback is not None:
            rec = callback(point, rec) or rec
        result.trace.append(rec)
        rel = (f_prev - rec.f) / f_prev
        f_prev = rec.f
        quiet = quiet + 1 if rel < config.tol else 0
        if quiet >= config.patience:
            result.converged = True
            break
    result.point = point
    result.steps = steps
    return result
