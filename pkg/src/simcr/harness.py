"""Experiment runner: config parsing, seeded realizations, sweeps, benchmarks.

Configs are INI-style documents with the sections ``geometry``, ``channel``,
``signaling``, ``noise``, ``optimizer`` and ``run``. Every key has a
default taken from the reference simulation setup, so an empty document is
a valid config.
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .apgm import (LineSearchParams, OptimizerConfig, Problem, apgm_iteration, random_initial_point,
                   run as run_apgm, StepState)
from .channel import PathLossModel, correlation_pair, path_gain_linear, sample_channel
from .geometry import SimGeometry, build_all_propagation, wavelength_from_frequency
from .gradients import weighted_pair_sum
from .objective import NoiseModel, cutoff_rate, draw_noise, mutual_information_mc, pair_distances
from .signaling import DEFAULT_MAX_VECTORS, build_constellation, build_differences, enumerate_vectors

__all__ = [
    "ConfigError",
    "ChannelConfig",
    "SignalingConfig",
    "RunConfig",
    "ExperimentConfig",
    "RealizationResult",
    "RunSummary",
    "parse_config",
    "load_config",
    "child_seeds",
    "run_realization",
    "run_experiment",
    "run_sweep",
    "benchmark_iteration",
    "emit_plot_data",
    "TRACE_COLUMNS",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TRACE_COLUMNS = ["iteration", "f", "R0", "MI", "MI_stderr", "backtracks", "stalls"]
SWEEP_AXES = ("meta_atoms", "modulation_order", "precoding")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


@dataclass(frozen=True)
class ChannelConfig:
    reference_distance: float = 1.0
    path_loss_exponent: float = 3.5
    correlation: str = "sinc"


@dataclass(frozen=True)
class SignalingConfig:
    kind: str = "QAM"
    order: int = 4
    streams: int = 2
    max_vectors: int = DEFAULT_MAX_VECTORS


@dataclass(frozen=True)
class RunConfig:
    num_realizations: int = 30
    seed: int = 0
    mi_samples: int = 1000
    mi_every: int = 0
    output_dir: str = "results"
    workers: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: SimGeometry = field(default_factory=SimGeometry)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    signaling: SignalingConfig = field(default_factory=SignalingConfig)
    sigma2_db: float = -110.0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    run: RunConfig = field(default_factory=RunConfig)
    precoding_enabled: bool = True

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel.from_db(self.sigma2_db)

    def to_dict(self) -> Dict[str, Any]:
        d = dataclasses.asdict(self)
        d["sigma2"] = self.noise.variance
        return d


# section -> key -> type; "optimizer" keys map onto OptimizerConfig/LineSearchParams
_SCHEMA: Dict[str, Dict[str, type]] = {
    "geometry": {
        "wavelength": float, "frequency": float,
        "num_tx_antennas": int, "num_rx_antennas": int,
        "atoms_per_tx_layer": int, "atoms_per_rx_layer": int,
        "tx_layers": int, "rx_layers": int,
        "layer_spacing": float, "antenna_spacing": float, "atom_spacing": float,
        "atom_area": float, "link_distance": float,
    },
    "channel": {"reference_distance": float, "path_loss_exponent": float, "correlation": str},
    "signaling": {"kind": str, "order": int, "streams": int, "max_vectors": int},
    "noise": {"sigma2_db": float},
    "optimizer": {
        "precoder_step": float, "tx_step": float, "rx_step": float,
        "rho": float, "delta": float, "growth": float, "max_backtracks": int,
        "tol": float, "patience": int, "max_iterations": int, "precoding_enabled": bool,
    },
    "run": {"num_realizations": int, "seed": int, "mi_samples": int, "mi_every": int,
            "output_dir": str, "workers": int},
}
_BOOLEANS = {"true": True, "yes": True, "on": True, "1": True,
             "false": False, "no": False, "off": False, "0": False}


def _convert(path: str, raw: str, kind: type):
    text = raw.strip()
    try:
        if kind is bool:
            return _BOOLEANS[text.lower()]
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except (KeyError, ValueError):
        raise ConfigError(f"{path}: expected {kind.__name__}, got {raw!r}") from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate an INI-style experiment config."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    values: Dict[str, Dict[str, Any]] = {s: {} for s in _SCHEMA}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{section}: unknown section; expected one of {sorted(_SCHEMA)}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}: unknown key")
            values[section][key] = _convert(f"{section}.{key}", raw, _SCHEMA[section][key])

    def build(section, factory, **kwargs):
        try:
            return factory(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{section}: {exc}") from None

    geo = dict(values["geometry"])
    if "frequency" in geo:
        if "wavelength" in geo:
            raise ConfigError("geometry.frequency: give either wavelength or frequency, not both")
        geo["wavelength"] = build("geometry.frequency", wavelength_from_frequency, frequency=geo.pop("frequency"))
    geometry = build("geometry", SimGeometry, **geo)

    channel = build("channel", ChannelConfig, **values["channel"])
    if channel.correlation not in ("sinc", "identity"):
        raise ConfigError(f"channel.correlation: unknown model {channel.correlation!r}")
    try:
        PathLossModel(channel.reference_distance, channel.path_loss_exponent, geometry.wavelength)
    except ValueError as exc:
        raise ConfigError(f"channel: {exc}") from None
    if geometry.link_distance < channel.reference_distance:
        raise ConfigError("geometry.link_distance: below channel.reference_distance")

    signaling = build("signaling", SignalingConfig, **values["signaling"])
    try:
        const = build_constellation(signaling.kind, signaling.order)
        enumerate_vectors(const, signaling.streams, signaling.max_vectors)
    except ValueError as exc:
        raise ConfigError(f"signaling: {exc}") from None

    opt = dict(values["optimizer"])
    precoding = opt.pop("precoding_enabled", True)
    ls_keys = {"rho", "delta", "growth", "max_backtracks"}
    line_search = build("optimizer", LineSearchParams, **{k: opt.pop(k) for k in list(opt) if k in ls_keys})
    optimizer = build("optimizer", OptimizerConfig, line_search=line_search,
                      optimize_precoder=precoding, **opt)
    for key in ("precoder_step", "tx_step", "rx_step"):
        if not getattr(optimizer, key) > 0:
            raise ConfigError(f"optimizer.{key}: must be positive")
    if optimizer.max_iterations < 0 or optimizer.patience < 1 or optimizer.tol < 0:
        raise ConfigError("optimizer: need max_iterations >= 0, patience >= 1, tol >= 0")

    run_cfg = build("run", RunConfig, **values["run"])
    if run_cfg.num_realizations < 1:
        raise ConfigError("run.num_realizations: must be >= 1")
    if run_cfg.mi_samples < 1 or run_cfg.mi_every < 0 or run_cfg.workers < 1:
        raise ConfigError("run: need mi_samples >= 1, mi_every >= 0, workers >= 1")

    sigma2_db = values["noise"].get("sigma2_db", -110.0)
    if not np.isfinite(sigma2_db):
        raise ConfigError("noise.sigma2_db: must be finite")

    return ExperimentConfig(geometry, channel, signaling, sigma2_db, optimizer, run_cfg, precoding)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def child_seeds(master: int, count: int) -> List[int]:
    """Per-realization seeds derived from ``(master, index)`` counters."""
    return [int(np.random.SeedSequence([master, r]).generate_state(1, np.uint64)[0])
            for r in range(count)]


@dataclass
class RealizationResult:
    index: int
    seed: int
    rows: List[Dict[str, Any]]
    wall_ms: List[float]
    final_f: float
    final_R0: float
    final_MI: float
    MI_stderr: float
    iterations: int
    converged: bool


@dataclass
class RunSummary:
    realizations: List[RealizationResult]
    config: Dict[str, Any]
    master_seed: int
    label: str = ""

    @property
    def final_R0(self) -> np.ndarray:
        return np.array([r.final_R0 for r in self.realizations])

    @property
    def final_MI(self) -> np.ndarray:
        return np.array([r.final_MI for r in self.realizations])

    @property
    def seeds(self) -> List[int]:
        return [r.seed for r in self.realizations]

    def to_dict(self) -> Dict[str, Any]:
        def stats(x):
            x = np.asarray(x, dtype=float)
            return {"mean": float(np.mean(x)), "std": float(np.std(x)),
                    "min": float(np.min(x)), "max": float(np.max(x))}

        return {
            "schema_version": SCHEMA_VERSION,
            "label": self.label,
            "master_seed": self.master_seed,
            "seeds": self.seeds,
            "R0": stats(self.final_R0),
            "MI": stats(self.final_MI),
            "iterations": stats([r.iterations for r in self.realizations]),
            "realizations": [
                {"index": r.index, "seed": r.seed, "final_f": r.final_f, "final_R0": r.final_R0,
                 "final_MI": r.final_MI, "MI_stderr": r.MI_stderr, "iterations": r.iterations,
                 "converged": r.converged}
                for r in self.realizations
            ],
            "config": self.config,
        }


@dataclass
class _Setup:
    W: list
    U: list
    corr: Any
    beta: float
    vectors: Any
    diffs: Any


def _setup(config: ExperimentConfig) -> _Setup:
    geom = config.geometry
    prop = build_all_propagation(geom)
    corr = correlation_pair(geom, config.channel.correlation)
    model = PathLossModel(config.channel.reference_distance, config.channel.path_loss_exponent, geom.wavelength)
    sig = config.signaling
    vectors = enumerate_vectors(build_constellation(sig.kind, sig.order), sig.streams, sig.max_vectors)
    return _Setup(prop.W, prop.U, corr, path_gain_linear(model, geom.link_distance), vectors,
                  build_differences(vectors))


def run_realization(config: ExperimentConfig, index: int, seed: int, setup: Optional[_Setup] = None) -> RealizationResult:
    """Sample one channel, optimize from a random start and record the trace."""
    setup = setup or _setup(config)
    geom, sigma2 = config.geometry, config.noise.variance
    ch_ss, init_ss, mi_ss = np.random.SeedSequence(seed).spawn(3)
    channel = sample_channel(np.random.default_rng(ch_ss), setup.corr, setup.beta, seed)
    problem = Problem(setup.W, setup.U, channel.G, setup.diffs, sigma2)
    initial = random_initial_point(np.random.default_rng(init_ss), geom.num_tx_antennas, config.signaling.streams,
                                   geom.atoms_per_tx_layer, geom.tx_layers, geom.atoms_per_rx_layer,
                                   geom.rx_layers, random_precoder=config.precoding_enabled)
    noise = draw_noise(np.random.default_rng(mi_ss), len(setup.vectors), config.run.mi_samples,
                       geom.num_rx_antennas)

    def mi_at(point):
        return mutual_information_mc(problem.channel(point), point.P, setup.vectors, sigma2, noise=noise)

    mi0, se0 = mi_at(initial)
    f0 = problem.objective(initial)
    rows = [{"iteration": 0, "f": f0, "R0": cutoff_rate(f0, len(setup.vectors)), "MI": mi0,
             "MI_stderr": se0, "backtracks": 0, "stalls": 0}]
    every = config.run.mi_every
    max_it = config.optimizer.max_iterations

    def on_iteration(point, rec):
        if every and (rec.iteration % every == 0 or rec.iteration == max_it):
            mi, se = mi_at(point)
            return dataclasses.replace(rec, MI=mi, MI_stderr=se)
        return None

    result = run_apgm(problem, initial, config.optimizer, callback=on_iteration)
    for rec in result.trace:
        rows.append({"iteration": rec.iteration, "f": rec.f, "R0": rec.R0, "MI": rec.MI,
                     "MI_stderr": rec.MI_stderr, "backtracks": rec.backtracks, "stalls": rec.stalls})
    if result.trace and rows[-1]["MI"] is None:
        rows[-1]["MI"], rows[-1]["MI_stderr"] = mi_at(result.point)
    last = rows[-1]
    return RealizationResult(index, seed, rows, [rec.wall_time * 1e3 for rec in result.trace],
                             last["f"], last["R0"], last["MI"], last["MI_stderr"],
                             len(result.trace), result.converged)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trace_csv(path, rows: Sequence[Dict[str, Any]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in TRACE_COLUMNS])
    Path(path).write_text(buf.getvalue())


def _write_outputs(summary: RunSummary, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for r in summary.realizations:
        write_trace_csv(out_dir / f"trace_{r.index:03d}.csv", r.rows)
        with open(out_dir / f"timing_{r.index:03d}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "ms"])
            w.writerows([[i + 1, f"{ms:.3f}"] for i, ms in enumerate(r.wall_ms)])
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_one(args):
    config, index, seed = args
    return run_realization(config, index, seed)


def run_experiment(config: ExperimentConfig, out_dir=None, seeds: Optional[Sequence[int]] = None,
                   label: str = "") -> RunSummary:
    """Run ``num_realizations`` independent realizations.

    When ``out_dir`` is given, writes ``trace_NNN.csv``, ``timing_NNN.csv``
    and ``summary.json`` there. Any failing realization aborts the run.
    """
    n = config.run.num_realizations
    seeds = list(seeds) if seeds is not None else child_seeds(config.run.seed, n)
    if config.run.workers > 1:
        with ProcessPoolExecutor(config.run.workers) as pool:
            results = list(pool.map(_run_one, [(config, i, s) for i, s in enumerate(seeds)]))
    else:
        setup = _setup(config)
        results = []
        for i, s in enumerate(seeds):
            results.append(run_realization(config, i, s, setup))
            log.info("realization %d/%d: R0=%.4f MI=%.4f after %d iterations",
                     i + 1, len(seeds), results[-1].final_R0, results[-1].final_MI, results[-1].iterations)
    summary = RunSummary(results, config.to_dict(), config.run.seed, label)
    if out_dir is not None:
        try:
            _write_outputs(summary, Path(out_dir))
        except OSError as exc:
            raise OSError(f"failed to write outputs to {out_dir}: {exc}") from exc
    return summary


def _variant(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "meta_atoms":
        value = int(value)
        geom = dataclasses.replace(config.geometry, atoms_per_tx_layer=value, atoms_per_rx_layer=value)
        return dataclasses.replace(config, geometry=geom)
    if axis == "modulation_order":
        sig = dataclasses.replace(config.signaling, order=int(value))
        build_constellation(sig.kind, sig.order)
        return dataclasses.replace(config, signaling=sig)
    if axis == "precoding":
        on = value if isinstance(value, bool) else _convert("precoding", str(value), bool)
        opt = dataclasses.replace(config.optimizer, optimize_precoder=on)
        return dataclasses.replace(config, optimizer=opt, precoding_enabled=on)
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


def run_sweep(config: ExperimentConfig, axis: str, values: Sequence, out_dir=None) -> List[RunSummary]:
    """One experiment per axis value, all sharing the same per-realization seeds."""
    variants = [_variant(config, axis, v) for v in values]
    seeds = child_seeds(config.run.seed, config.run.num_realizations)
    summaries = []
    for value, variant in zip(values, variants):
        sub = None if out_dir is None else Path(out_dir) / f"{axis}={value}"
        summaries.append(run_experiment(variant, sub, seeds=seeds, label=f"{axis}={value}"))
    if out_dir is not None:
        with open(Path(out_dir) / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["axis", "value", "realization", "seed", "final_R0", "final_MI", "MI_stderr", "iterations"])
            for value, s in zip(values, summaries):
                for r in s.realizations:
                    w.writerow([axis, value, r.index, r.seed, repr(r.final_R0), repr(r.final_MI),
                                repr(r.MI_stderr), r.iterations])
    return summaries


def benchmark_iteration(config: ExperimentConfig, repeats: int = 3,
                        sizes: Sequence[int] = (25, 49, 100)) -> List[Dict[str, Any]]:
    """Per-block wall time of one APGM iteration for several meta-atom counts.

    Each row also carries the operation-count model terms ``L N^3`` (layer
    products) and ``N_vec^2 N_s^2`` (pair sums) and the measured time of one
    weighted pair sum.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    rows = []
    for n in sizes:
        cfg = _variant(config, "meta_atoms", n)
        setup = _setup(cfg)
        rng = np.random.default_rng(child_seeds(config.run.seed, 1)[0])
        channel = sample_channel(rng, setup.corr, setup.beta)
        problem = Problem(setup.W, setup.U, channel.G, setup.diffs, cfg.noise.variance)
        geom = cfg.geometry
        point = random_initial_point(rng, geom.num_tx_antennas, cfg.signaling.streams, n, geom.tx_layers,
                                     n, geom.rx_layers, random_precoder=cfg.precoding_enabled)
        opt = cfg.optimizer
        samples = {"P": [], "phi": [], "psi": [], "total": [], "pair_sum": []}
        for _ in range(repeats):
            steps = StepState.uniform(geom.tx_layers, geom.rx_layers, opt.precoder_step, opt.tx_step, opt.rx_step)
            timings: Dict[str, float] = {}
            t0 = time.perf_counter()
            apgm_iteration(problem, point, steps, opt.line_search, cfg.precoding_enabled, timings=timings)
            samples["total"].append(time.perf_counter() - t0)
            for k in ("P", "phi", "psi"):
                samples[k].append(timings.get(k, 0.0))
            d = pair_distances(problem.channel(point), point.P, setup.diffs)
            t0 = time.perf_counter()
            weighted_pair_sum(d, problem.sigma2, setup.diffs)
            samples["pair_sum"].append(time.perf_counter() - t0)
        n_vec, ns = len(setup.vectors), cfg.signaling.streams
        row = {"N": n, "N_vec": n_vec, "repeats": repeats,
               "layer_term": geom.tx_layers * n**3, "pair_term": n_vec**2 * ns**2}
        for k, v in samples.items():
            row[f"{k}_ms"] = 1e3 * float(np.mean(v))
            row[f"{k}_ms_std"] = 1e3 * float(np.std(v, ddof=1)) if repeats > 1 else None
        rows.append(row)
    return rows


def _read_trace(path: Path) -> List[Dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def emit_plot_data(in_dir, out_file) -> int:
    """Aggregate trace CSVs into long format ``series,iteration,mean,std``.

    Every directory under ``in_dir`` holding ``trace_*.csv`` files is one
    run and contributes an ``R0`` and an ``MI`` series, suffixed with the
    run's relative path when there are several runs. R0 of a realization
    that stopped early is carried forward; MI is averaged over the
    realizations reporting it at that iteration. Returns the row count.
    """
    root = Path(in_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"input directory {root} does not exist")
    run_dirs = sorted({p.parent for p in root.rglob("trace_*.csv")})
    if not run_dirs:
        raise FileNotFoundError(f"no trace_*.csv files under {root}")

    out_rows = []
    for run_dir in run_dirs:
        rel = run_dir.relative_to(root).as_posix()
        suffix = "" if len(run_dirs) == 1 else f" {rel}"
        traces = [_read_trace(p) for p in sorted(run_dir.glob("trace_*.csv"))]
        traces = [t for t in traces if t]
        if not traces:
            continue
        horizon = max(int(t[-1]["iteration"]) for t in traces)
        r0 = np.full((len(traces), horizon + 1), np.nan)
        mi = np.full_like(r0, np.nan)
        for i, t in enumerate(traces):
            for row in t:
                it = int(row["iteration"])
                r0[i, it] = float(row["R0"])
                if row["MI"]:
                    mi[i, it] = float(row["MI"])
            last = int(t[-1]["iteration"])
            r0[i, last + 1:] = r0[i, last]
        for name, data in (("R0", r0), ("MI", mi)):
            for it in range(horizon + 1):
                col = data[:, it]
                col = col[~np.isnan(col)]
                if col.size:
                    out_rows.append([name + suffix, it, repr(float(col.mean())), repr(float(col.std()))])

    out = Path(out_file)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "iteration", "mean", "std"])
        w.writerows(out_rows)
    return len(out_rows)
