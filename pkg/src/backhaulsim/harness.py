"""Experiment orchestration: configs, Monte-Carlo drops, metrics, persistence.

One experiment = one algorithm on `drops` independent network realizations.
The master seed derives per-drop seeds through counter-based spawn keys, so
drop d sees the same topology and channels no matter how many drops run,
in which order, or on how many workers.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import backhaul as bh
from .backhaul import EQUAL, MODES
from .baselines import run_cla, run_off, run_ru1
from .channel import build_channel_state
from .delay_engine import TrafficSpec
from .game import GameParams, UplinkGame, UtilityParams
from .rate_engine import COMBINERS
from .learning import (
    ConvergenceMonitor,
    LearnerState,
    RegretMatcher,
    Schedules,
    noisy_feedback,
    rsl_step,
    sat_step,
)
from .topology import (
    ConfigurationError,
    ScenarioConfig,
    assign_subcarriers,
    distance,
    generate_topology,
)

ALGORITHMS = ("CLA", "RU1", "OFF", "RSF", "RSL", "SAT")
SCHEMA_VERSION = 1


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    mode: str = bh.OTA
    c_bar_bps: float = 50e6
    wired_policy: str = EQUAL
    traffic: TrafficSpec = field(default_factory=TrafficSpec)
    utility: UtilityParams = field(default_factory=UtilityParams)
    game: GameParams = field(default_factory=GameParams)
    schedules: Schedules = field(default_factory=Schedules)
    kappa: float = 10.0
    feedback_sigma: float = 0.0
    sat_threshold: float = 5.0
    # Feedback handed to the bandit learners (RSL, SAT) is the utility
    # computed with rate and delay expressed in these units. The Boltzmann-Gibbs
    # response anneals only when feedback is of order one against kappa; these
    # defaults put desk-scale utilities at 0.5..3. Regret matching is scale
    # invariant so RSF is unaffected, and all reported metrics stay in base
    # units (bits/s, seconds).
    learner_rate_unit_bps: float = 3e8
    learner_delay_unit_s: float = 1e-3
    regret_update_played_only: bool = False
    convergence_window: int = 100
    convergence_tol: float = 1e-3
    offload_vacates_macro: bool = True
    offload_half_duplex: bool = False
    algorithm: str = "RSF"
    drops: int = 100
    iterations: int = 500
    seed: int = 0
    workers: int = 1
    output_dir: str | None = None

    def validate(self) -> None:
        self.scenario.validate()
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown backhaul mode {self.mode!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if self.drops < 1:
            raise ConfigurationError("drops must be at least 1")
        if self.iterations < 1:
            raise ConfigurationError("iterations must be at least 1")
        if self.c_bar_bps < 0:
            raise ConfigurationError("wired capacity must be non-negative")
        if self.wired_policy not in bh.WIRED_POLICIES:
            raise ConfigurationError(f"unknown wired policy {self.wired_policy!r}")
        if self.traffic.rho_bps <= 0:
            raise ConfigurationError("offered load must be positive")
        if self.game.power_levels < 1 or self.game.fine_levels < 0:
            raise ConfigurationError("action grid sizes must be positive")
        if self.game.relay_candidates < 0:
            raise ConfigurationError("relay candidate count must be non-negative")
        if self.game.combiner not in COMBINERS:
            raise ConfigurationError(f"unknown combiner {self.game.combiner!r}")
        if self.kappa <= 0:
            raise ConfigurationError("kappa must be positive")
        if self.feedback_sigma < 0:
            raise ConfigurationError("feedback noise must be non-negative")
        if self.learner_rate_unit_bps <= 0 or self.learner_delay_unit_s <= 0:
            raise ConfigurationError("learner feedback units must be positive")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")

    def replace(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def feedback_scale(self) -> float:
        """Factor converting a utility in base units into learner feedback."""
        a = self.utility.alpha
        return self.learner_rate_unit_bps ** -(1.0 - a) * self.learner_delay_unit_s**a


# Maps "section.key" from a config file (or a CLI override) onto the nested
# dataclass field it configures.
_SECTION_TARGETS = {
    "scenario": ("scenario", ScenarioConfig),
    "traffic": ("traffic", TrafficSpec),
    "utility": ("utility", UtilityParams),
    "game": ("game", GameParams),
    "schedules": ("schedules", Schedules),
}
_RUN_KEYS = {
    "mode",
    "c_bar_bps",
    "wired_policy",
    "kappa",
    "feedback_sigma",
    "sat_threshold",
    "learner_rate_unit_bps",
    "learner_delay_unit_s",
    "regret_update_played_only",
    "convergence_window",
    "convergence_tol",
    "offload_vacates_macro",
    "offload_half_duplex",
    "algorithm",
    "drops",
    "iterations",
    "seed",
    "workers",
    "output_dir",
}


def _parse_as(kind: type, raw: str) -> Any:
    if kind is bool:
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"not a boolean: {raw!r}")
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw


def _field_types(cls) -> dict[str, type]:
    out = {}
    for f in dataclasses.fields(cls):
        t = f.type if isinstance(f.type, type) else {"int": int, "float": float, "bool": bool, "str": str}.get(str(f.type).split(" ")[0], str)
        out[f.name] = t
    return out


def apply_override(config: ExperimentConfig, key: str, raw: str) -> ExperimentConfig:
    """Set one dotted config key ("scenario.seed", "run.drops") from text."""
    section, _, name = key.partition(".")
    if not name:
        section, name = "run", key
    if section == "run":
        if name not in _RUN_KEYS:
            raise ConfigurationError(f"unknown config key {key!r}")
        current = getattr(config, name)
        kind = type(current) if current is not None else str
        value = _parse_as(kind, raw)
        if name == "algorithm":
            value = str(value).upper()
        return config.replace(**{name: value})
    if section not in _SECTION_TARGETS:
        raise ConfigurationError(f"unknown config section {section!r}")
    attr, cls = _SECTION_TARGETS[section]
    types = _field_types(cls)
    if name not in types:
        raise ConfigurationError(f"unknown config key {key!r}")
    inner = getattr(config, attr)
    value = _parse_as(types[name], raw)
    return config.replace(**{attr: replace(inner, **{name: value})})


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read an INI-style config file; sections mirror the config dataclasses."""
    parser = configparser.ConfigParser()
    text = Path(path).read_text()
    parser.read_string(text)
    config = base or ExperimentConfig()
    for section in parser.sections():
        for name, raw in parser.items(section):
            config = apply_override(config, f"{section}.{name}", raw)
    return config


# -- results ---------------------------------------------------------------------


@dataclass(frozen=True)
class MueRow:
    """Final outcome of one macro user in one drop."""

    drop: int
    mue: int
    sector: int
    norm_distance: float
    rate_bps: float
    delay_s: float
    utility: float


@dataclass
class RunResult:
    schema_version: int
    algorithm: str
    mode: str
    drops: int
    iterations: int
    seed: int
    rows: list[MueRow]
    mean_utility_trace: list[float]
    strategy_change_trace: list[float]
    converged_at: list[int | None]
    failures: list[tuple[int, str]]
    summary: dict[str, float]

    def rates(self) -> np.ndarray:
        return np.array([r.rate_bps for r in self.rows])

    def delays(self) -> np.ndarray:
        return np.array([r.delay_s for r in self.rows])

    def utilities(self) -> np.ndarray:
        return np.array([r.utility for r in self.rows])


def _summarize(rows: list[MueRow], converged_at: list[int | None], failures) -> dict[str, float]:
    rates = np.array([r.rate_bps for r in rows]) if rows else np.zeros(0)
    utils = np.array([r.utility for r in rows]) if rows else np.zeros(0)
    delays = np.array([r.delay_s for r in rows]) if rows else np.zeros(0)
    finite = delays[np.isfinite(delays)]
    return {
        "mean_rate_bps": float(rates.mean()) if rates.size else 0.0,
        "mean_utility": float(utils.mean()) if utils.size else 0.0,
        "mean_delay_s": float(delays.mean()) if delays.size else 0.0,
        "mean_finite_delay_s": float(finite.mean()) if finite.size else 0.0,
        "stable_fraction": float(np.isfinite(delays).mean()) if delays.size else 0.0,
        "converged_drops": float(sum(1 for c in converged_at if c is not None)),
        "failed_drops": float(len(failures)),
    }


# -- single drop -------------------------------------------------------------------


@dataclass
class DropOutput:
    drop: int
    rows: list[MueRow]
    utility_trace: np.ndarray
    change_trace: np.ndarray
    converged_at: int | None


def _drop_seeds(master_seed: int, drop: int) -> np.ndarray:
    ss = np.random.SeedSequence(master_seed, spawn_key=(drop,))
    return ss.generate_state(4)


def _build_game(config: ExperimentConfig, drop: int):
    topo_seed, alloc_seed, chan_seed, play_seed = (int(s) for s in _drop_seeds(config.seed, drop))
    topo = generate_topology(config.scenario, seed=topo_seed)
    alloc = assign_subcarriers(topo, config.scenario, seed=alloc_seed)
    ch = build_channel_state(topo, config.scenario, seed=chan_seed)
    game = UplinkGame(
        topo,
        alloc,
        ch,
        config.scenario,
        config.traffic,
        config.utility,
        config.game,
        mode=config.mode,
        c_bar_bps=config.c_bar_bps,
        wired_policy=config.wired_policy,
    )
    return topo, alloc, ch, game, play_seed


def _rows_from_outcome(topo, config, drop, rates, delays, utilities) -> list[MueRow]:
    rows = []
    for m in topo.mue_ids:
        rows.append(
            MueRow(
                drop=drop,
                mue=int(m),
                sector=int(topo.sector_of[m]),
                norm_distance=float(
                    distance(topo, m, topo.mbs) / config.scenario.macro_radius_m
                ),
                rate_bps=float(rates[m]),
                delay_s=float(delays[m]),
                utility=float(utilities[m]),
            )
        )
    return rows


def run_drop(config: ExperimentConfig, drop: int) -> DropOutput:
    """Run the configured algorithm on one network realization."""
    algorithm = config.algorithm
    topo, alloc, ch, game, play_seed = _build_game(config, drop)

    if algorithm in ("CLA", "RU1", "OFF"):
        if algorithm == "CLA":
            res = run_cla(topo, alloc, ch, config.scenario, config.traffic, config.utility)
        elif algorithm == "RU1":
            res = run_ru1(topo, alloc, ch, config.scenario, config.traffic, config.utility)
        else:
            res = run_off(
                topo,
                alloc,
                ch,
                config.scenario,
                config.traffic,
                mode=config.mode,
                c_bar_bps=config.c_bar_bps,
                wired_policy=config.wired_policy,
                uparams=config.utility,
                vacate=config.offload_vacates_macro,
                half_duplex=config.offload_half_duplex,
            )
        rows = _rows_from_outcome(topo, config, drop, res.rates_bps, res.delays_s, res.utilities)
        return DropOutput(drop, rows, np.zeros(0), np.zeros(0), None)

    rng = np.random.default_rng(play_seed)
    mues = list(topo.mue_ids)
    spaces = [game.spaces[m] for m in mues]
    monitor = ConvergenceMonitor(config.convergence_window, config.convergence_tol)
    utility_trace = np.zeros(config.iterations)
    change_trace = np.zeros(config.iterations)

    if algorithm == "RSF":
        matchers = [RegretMatcher(sp.n) for sp in spaces]
        pis = [mt.pi.copy() for mt in matchers]
        for t in range(config.iterations):
            played = [int(rng.choice(sp.n, p=mt.pi)) for sp, mt in zip(spaces, matchers)]
            profile = {m: sp.actions[a] for m, sp, a in zip(mues, spaces, played)}
            ctx = game.context(profile)
            realized = 0.0
            for i, m in enumerate(mues):
                u = game.action_utilities(m, ctx)
                matchers[i].update(u, float(u[played[i]]))
                realized += float(u[played[i]])
            stacked = np.concatenate([mt.pi for mt in matchers])
            previous = np.concatenate(pis)
            change_trace[t] = float(np.abs(stacked - previous).max())
            utility_trace[t] = realized / len(mues)
            pis = [mt.pi.copy() for mt in matchers]
            monitor.update(stacked)
        final_idx = [int(np.argmax(mt.pi)) for mt in matchers]

    elif algorithm == "RSL":
        scale = config.feedback_scale()
        states = [LearnerState.fresh(sp.n, temperature=config.kappa) for sp in spaces]
        for t in range(config.iterations):
            played = [int(rng.choice(sp.n, p=st.pi)) for sp, st in zip(spaces, states)]
            profile = {m: sp.actions[a] for m, sp, a in zip(mues, spaces, played)}
            ctx = game.context(profile)
            realized = game.realized_utilities(ctx)
            previous = np.concatenate([st.pi for st in states])
            mean_u = 0.0
            for i, m in enumerate(mues):
                fb = noisy_feedback(realized[m] * scale, config.feedback_sigma, rng)
                rsl_step(
                    states[i],
                    played[i],
                    fb,
                    config.schedules,
                    update_played_only=config.regret_update_played_only,
                )
                mean_u += realized[m]
            stacked = np.concatenate([st.pi for st in states])
            change_trace[t] = float(np.abs(stacked - previous).max())
            utility_trace[t] = mean_u / len(mues)
            monitor.update(stacked)
        final_idx = [int(np.argmax(st.pi)) for st in states]

    elif algorithm == "SAT":
        scale = config.feedback_scale()
        states = [LearnerState.fresh(sp.n) for sp in spaces]
        current = [int(rng.integers(sp.n)) for sp in spaces]
        for t in range(config.iterations):
            profile = {m: sp.actions[a] for m, sp, a in zip(mues, spaces, current)}
            ctx = game.context(profile)
            realized = game.realized_utilities(ctx)
            onehot_prev = _stack_onehot(current, spaces)
            mean_u = 0.0
            nxt = []
            for i, m in enumerate(mues):
                fb = noisy_feedback(realized[m] * scale, config.feedback_sigma, rng)
                _, a = sat_step(states[i], current[i], fb, config.sat_threshold, rng)
                nxt.append(a)
                mean_u += realized[m]
            current = nxt
            onehot = _stack_onehot(current, spaces)
            change_trace[t] = float(np.abs(onehot - onehot_prev).max())
            utility_trace[t] = mean_u / len(mues)
            monitor.update(onehot)
        final_idx = current

    else:  # pragma: no cover - guarded by validate()
        raise ConfigurationError(f"unknown algorithm {algorithm!r}")

    final_profile = {m: sp.actions[a] for m, sp, a in zip(mues, spaces, final_idx)}
    outcome = game.evaluate_profile(final_profile)
    rows = _rows_from_outcome(
        topo,
        config,
        drop,
        {m: outcome.rates[m].total_bps for m in mues},
        {m: outcome.delays[m].total_s for m in mues},
        outcome.utilities,
    )
    return DropOutput(drop, rows, utility_trace, change_trace, monitor.converged_at)


def _stack_onehot(current: list[int], spaces) -> np.ndarray:
    total = sum(sp.n for sp in spaces)
    out = np.zeros(total)
    offset = 0
    for a, sp in zip(current, spaces):
        out[offset + a] = 1.0
        offset += sp.n
    return out


# -- experiment loop ----------------------------------------------------------------


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Run all drops, aggregate rows and traces, never let one drop kill a run."""
    config.validate()
    learning = config.algorithm in ("RSF", "RSL", "SAT")
    n_trace = config.iterations if learning else 0

    outputs: list[DropOutput] = []
    failures: list[tuple[int, str]] = []
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futs = {pool.submit(run_drop, config, d): d for d in range(config.drops)}
            for fut, d in futs.items():
                try:
                    outputs.append(fut.result())
                except Exception as exc:
                    failures.append((d, f"{type(exc).__name__}: {exc}"))
    else:
        for d in range(config.drops):
            try:
                outputs.append(run_drop(config, d))
            except Exception as exc:
                failures.append((d, f"{type(exc).__name__}: {exc}"))
    outputs.sort(key=lambda o: o.drop)
    failures.sort()

    rows: list[MueRow] = []
    utility_trace = np.zeros(n_trace)
    change_trace = np.zeros(n_trace)
    converged_at: list[int | None] = []
    for out in outputs:
        rows.extend(out.rows)
        if learning:
            utility_trace += out.utility_trace
            change_trace += out.change_trace
            converged_at.append(out.converged_at)
    if learning and outputs:
        utility_trace /= len(outputs)
        change_trace /= len(outputs)

    return RunResult(
        schema_version=SCHEMA_VERSION,
        algorithm=config.algorithm,
        mode=config.mode,
        drops=config.drops,
        iterations=config.iterations,
        seed=config.seed,
        rows=rows,
        mean_utility_trace=[float(x) for x in utility_trace],
        strategy_change_trace=[float(x) for x in change_trace],
        converged_at=converged_at,
        failures=failures,
        summary=_summarize(rows, converged_at, failures),
    )


def run_sweep(
    config: ExperimentConfig, param: str, values: Sequence[str]
) -> list[tuple[str, RunResult]]:
    """Run the experiment once per value of one dotted config key."""
    out = []
    for raw in values:
        point = apply_override(config, param, str(raw))
        out.append((str(raw), run_experiment(point)))
    return out


# -- metrics --------------------------------------------------------------------------


def compute_cdf(samples: Sequence[float]) -> list[tuple[float, float]]:
    """Empirical CDF as (value, cumulative fraction) steps; last fraction is 1."""
    arr = np.asarray(list(samples), dtype=float)
    if arr.size == 0:
        raise ValueError("cannot build a CDF from no samples")
    values, counts = np.unique(arr, return_counts=True)
    fractions = np.cumsum(counts) / arr.size
    return [(float(v), float(f)) for v, f in zip(values, fractions)]


def best_effort_decile(rates: Sequence[float], fraction: float = 0.1) -> np.ndarray:
    """Indices of the top `fraction` of users by rate; ties break to lower index."""
    arr = np.asarray(list(rates), dtype=float)
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    k = int(round(arr.size * fraction))
    if k < 1:
        raise ValueError(f"{arr.size} samples are too few for the top {fraction:.0%}")
    order = np.lexsort((np.arange(arr.size), -arr))
    return np.sort(order[:k])


def distance_binned_throughput(
    result: RunResult, n_bins: int = 10
) -> list[tuple[float, float | None]]:
    """Mean rate per normalized-distance bin; empty bins are None, not zero."""
    if n_bins < 1:
        raise ValueError("need at least one bin")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    centers = (edges[:-1] + edges[1:]) / 2
    dist = np.array([r.norm_distance for r in result.rows])
    rate = np.array([r.rate_bps for r in result.rows])
    out: list[tuple[float, float | None]] = []
    for i in range(n_bins):
        hi = 1.0 + 1e-12 if i == n_bins - 1 else edges[i + 1]
        mask = (dist >= edges[i]) & (dist < hi)
        out.append((float(centers[i]), float(rate[mask].mean()) if mask.any() else None))
    return out


# -- persistence -------------------------------------------------------------------------


def _enc_float(x: float) -> float | str | None:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def _dec_float(x) -> float:
    if x == "inf":
        return math.inf
    if x == "-inf":
        return -math.inf
    return float(x)


def result_to_dict(result: RunResult) -> dict:
    return {
        "schema_version": result.schema_version,
        "algorithm": result.algorithm,
        "mode": result.mode,
        "drops": result.drops,
        "iterations": result.iterations,
        "seed": result.seed,
        "rows": [
            {
                "drop": r.drop,
                "mue": r.mue,
                "sector": r.sector,
                "norm_distance": r.norm_distance,
                "rate_bps": r.rate_bps,
                "delay_s": _enc_float(r.delay_s),
                "utility": r.utility,
            }
            for r in result.rows
        ],
        "mean_utility_trace": result.mean_utility_trace,
        "strategy_change_trace": result.strategy_change_trace,
        "converged_at": result.converged_at,
        "failures": [[d, msg] for d, msg in result.failures],
        "summary": {k: _enc_float(v) for k, v in result.summary.items()},
    }


def result_from_dict(payload: dict) -> RunResult:
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {payload.get('schema_version')!r}")
    return RunResult(
        schema_version=payload["schema_version"],
        algorithm=payload["algorithm"],
        mode=payload["mode"],
        drops=payload["drops"],
        iterations=payload["iterations"],
        seed=payload["seed"],
        rows=[
            MueRow(
                drop=r["drop"],
                mue=r["mue"],
                sector=r["sector"],
                norm_distance=r["norm_distance"],
                rate_bps=r["rate_bps"],
                delay_s=_dec_float(r["delay_s"]),
                utility=r["utility"],
            )
            for r in payload["rows"]
        ],
        mean_utility_trace=[float(x) for x in payload["mean_utility_trace"]],
        strategy_change_trace=[float(x) for x in payload["strategy_change_trace"]],
        converged_at=[None if c is None else int(c) for c in payload["converged_at"]],
        failures=[(int(d), str(m)) for d, m in payload["failures"]],
        summary={k: _dec_float(v) for k, v in payload["summary"].items()},
    )


CSV_HEADER = ["drop", "mue", "sector", "norm_distance", "rate_bps", "delay_s", "utility"]


def export(result: RunResult, fmt: str, path: str | Path) -> Path:
    """Write a result to disk as json (full) or csv (per-user table)."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path.write_text(json.dumps(result_to_dict(result), indent=2) + "\n")
        elif fmt == "csv":
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(CSV_HEADER)
                for r in result.rows:
                    writer.writerow(
                        [
                            r.drop,
                            r.mue,
                            r.sector,
                            repr(r.norm_distance),
                            repr(r.rate_bps),
                            "inf" if math.isinf(r.delay_s) else repr(r.delay_s),
                            repr(r.utility),
                        ]
                    )
        else:
            raise ValueError(f"unknown export format {fmt!r}")
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc
    return path


def import_json(path: str | Path) -> RunResult:
    return result_from_dict(json.loads(Path(path).read_text()))
