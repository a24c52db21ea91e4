"""Regret-based learning rules for the uplink game.

Two information regimes:

* Full information: after each round a player sees the utility every one of
  its actions would have earned against the others' play. Time-averaged
  regrets feed a regret-matching strategy (positive part, normalized), which
  drives the empirical play toward the coarse correlated equilibrium set.

* Noisy bandit feedback: a player observes only a noisy utility for the
  action it actually played. Three coupled estimators run on decreasing step
  sizes ordered fastest to slowest (utility estimates, then regrets, then the
  mixed strategy); the strategy tracks a Boltzmann-Gibbs distribution over
  positive regrets, the smoothed best response of an entropy-regularized
  regret maximizer.

Also hosts a satisfaction-based rule (stick when the observed utility clears
a threshold, otherwise resample uniformly) and numeric trend checks for the
step-size conditions the coupled estimators need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


# -- full information ---------------------------------------------------------


def regret_full_update(
    regret: np.ndarray, t: int, counterfactual: np.ndarray, realized: float
) -> np.ndarray:
    """Fold one round into the running-average regret vector.

    After t rounds, entry l holds (1/t) * sum over rounds of
    (utility of always playing l against the others) - (utility realized).
    """
    if t < 1:
        raise ValueError("round index starts at 1")
    diff = np.asarray(counterfactual, dtype=float) - realized
    return regret + (diff - regret) / t


def strategy_from_regret(regret: np.ndarray, previous: np.ndarray) -> np.ndarray:
    """Regret matching: play proportionally to positive regret.

    With no positive regret anywhere there is nothing to chase, so the
    previous mixed strategy is retained.
    """
    positive = np.maximum(regret, 0.0)
    total = positive.sum()
    if total <= 0.0:
        return previous
    return positive / total


class RegretMatcher:
    """Stateful full-information regret matcher for one player."""

    def __init__(self, n_actions: int):
        self.regret = np.zeros(n_actions)
        self.pi = np.full(n_actions, 1.0 / n_actions)
        self.t = 0

    def update(self, counterfactual: np.ndarray, realized: float) -> np.ndarray:
        self.t += 1
        self.regret = regret_full_update(self.regret, self.t, counterfactual, realized)
        self.pi = strategy_from_regret(self.regret, self.pi)
        return self.pi


def matrix_selfplay(
    utilities: Sequence[np.ndarray], steps: int, seed: int = 0
) -> np.ndarray:
    """Full-information regret-matching self-play on a matrix game.

    Every player holds one axis of the shared payoff tensors. Each round all
    players sample from their current mixed strategies, observe the full
    counterfactual payoff vector against the others' realized actions, and
    update. Returns the empirical joint distribution of play, the object whose
    equilibrium gap shrinks under regret matching.
    """
    tensors = [np.asarray(u, dtype=float) for u in utilities]
    if not tensors:
        raise ValueError("need at least one player")
    shape = tensors[0].shape
    if len(shape) != len(tensors):
        raise ValueError("need one payoff tensor axis per player")
    if any(u.shape != shape for u in tensors):
        raise ValueError("all payoff tensors must share one shape")
    if steps < 1:
        raise ValueError("need at least one round")
    rng = np.random.default_rng(seed)
    matchers = [RegretMatcher(n) for n in shape]
    counts = np.zeros(shape)
    for _ in range(steps):
        played = tuple(int(rng.choice(m.pi.size, p=m.pi)) for m in matchers)
        counts[played] += 1.0
        for axis, (matcher, tensor) in enumerate(zip(matchers, tensors)):
            others = played[:axis] + (slice(None),) + played[axis + 1 :]
            counterfactual = tensor[others]
            matcher.update(counterfactual, float(tensor[played]))
    return counts / steps


# -- Boltzmann-Gibbs ----------------------------------------------------------


def bg_distribution(regret: np.ndarray, temperature: float) -> np.ndarray:
    """Softmax over positive-part regrets at the given temperature.

    Solves argmax over the simplex of sum(pi * r+) + temperature * H(pi).
    All-nonpositive regrets give the uniform distribution (every exponent 0).
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    z = np.maximum(np.asarray(regret, dtype=float), 0.0) / temperature
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def bg_oracle_check(regret: np.ndarray, temperature: float, resolution: float = 1e-3) -> np.ndarray:
    """Grid maximization of the entropy-regularized objective on the simplex.

    Independent check of the closed form, for 2 or 3 actions only; returns the
    best grid point at the given resolution.
    """
    r = np.maximum(np.asarray(regret, dtype=float), 0.0)
    n = r.size
    if n not in (2, 3):
        raise ValueError("grid oracle supports 2 or 3 actions")
    ax = np.arange(0.0, 1.0 + resolution / 2, resolution)
    if n == 2:
        pts = np.column_stack([ax, 1.0 - ax])
    else:
        p1, p2 = np.meshgrid(ax, ax, indexing="ij")
        keep = p1 + p2 <= 1.0 + 1e-12
        p1, p2 = p1[keep], p2[keep]
        pts = np.column_stack([p1, p2, np.clip(1.0 - p1 - p2, 0.0, 1.0)])
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(pts > 0, np.log(np.where(pts > 0, pts, 1.0)), 0.0)
    objective = pts @ r - temperature * np.sum(pts * logs, axis=1)
    return pts[int(np.argmax(objective))]


# -- noisy-feedback three-timescale learner ------------------------------------


@dataclass(frozen=True)
class Schedules:
    """Decreasing step sizes for the coupled estimators, 1/(t+1)^exponent.

    Utility estimates move fastest, regrets next, strategies slowest.
    """

    utility_exp: float = 0.50
    regret_exp: float = 0.55
    strategy_exp: float = 0.60

    def utility_step(self, t: int) -> float:
        return (t + 1.0) ** -self.utility_exp

    def regret_step(self, t: int) -> float:
        return (t + 1.0) ** -self.regret_exp

    def strategy_step(self, t: int) -> float:
        return (t + 1.0) ** -self.strategy_exp


@dataclass
class LearnerState:
    """Per-player state of the noisy-feedback learner."""

    pi: np.ndarray
    regret: np.ndarray
    utility_est: np.ndarray
    temperature: float
    t: int = 0
    cum_feedback: float = 0.0

    @classmethod
    def fresh(cls, n_actions: int, temperature: float = 10.0) -> "LearnerState":
        return cls(
            pi=np.full(n_actions, 1.0 / n_actions),
            regret=np.zeros(n_actions),
            utility_est=np.zeros(n_actions),
            temperature=temperature,
        )

    @property
    def mean_feedback(self) -> float:
        return self.cum_feedback / self.t if self.t else 0.0


def noisy_feedback(utility_value: float, sigma: float, rng: np.random.Generator) -> float:
    """Observed utility: truth plus zero-mean Gaussian measurement noise."""
    if sigma < 0:
        raise ValueError("noise scale must be non-negative")
    if sigma == 0.0:
        return float(utility_value)
    return float(utility_value + rng.normal(0.0, sigma))


def rsl_step(
    state: LearnerState,
    played: int,
    feedback: float,
    schedules: Schedules,
    update_played_only: bool = False,
) -> LearnerState:
    """One coupled update of utility estimates, regrets, and the strategy.

    The utility estimate moves only for the played action; regrets drift for
    every action toward (estimate - observed); the strategy tracks the
    Boltzmann-Gibbs distribution of the updated regrets. Non-finite feedback
    rejects the step and leaves the state unchanged.
    """
    if not math.isfinite(feedback):
        return state
    if not 0 <= played < state.pi.size:
        raise ValueError("played action index out of range")
    t = state.t + 1
    lam = schedules.utility_step(t)
    gam = schedules.regret_step(t)
    mu = schedules.strategy_step(t)

    state.utility_est[played] += lam * (feedback - state.utility_est[played])
    if update_played_only:
        state.regret[played] += gam * (state.utility_est[played] - feedback - state.regret[played])
    else:
        state.regret += gam * (state.utility_est - feedback - state.regret)
    state.pi += mu * (bg_distribution(state.regret, state.temperature) - state.pi)
    state.t = t
    state.cum_feedback += feedback
    return state


def validate_schedules(
    utility_step: Callable[[int], float],
    regret_step: Callable[[int], float],
    strategy_step: Callable[[int], float],
    horizon: int = 10_000,
) -> "ScheduleReport":
    """Numeric trend checks of the step-size conditions over a finite horizon.

    (i) every step-size series should keep accumulating: partial sums at the
    horizon must dominate those at its square root. (ii) squared series must
    flatten: the last half of the horizon may add only a small fraction of the
    squared sum. (iii) timescales must separate: regret/utility and
    strategy/regret step ratios must strictly decrease along the horizon.
    These are finite-sample trend tests, not limit proofs.
    """
    if horizon < 100:
        raise ValueError("horizon too short for trend checks")
    t = np.arange(1, horizon + 1)
    series = {
        "utility": np.array([utility_step(int(k)) for k in t]),
        "regret": np.array([regret_step(int(k)) for k in t]),
        "strategy": np.array([strategy_step(int(k)) for k in t]),
    }
    for name, x in series.items():
        if (x <= 0).any() or (x > 1.0 + 1e-12).any():
            raise ValueError(f"{name} steps must lie in (0, 1]")

    failures: list[str] = []
    sums_half: dict[str, float] = {}
    sums_full: dict[str, float] = {}
    root = int(math.sqrt(horizon))

    for name, x in series.items():
        cum = np.cumsum(x)
        sums_full[name] = float(cum[-1])
        sums_half[name] = float(cum[horizon // 2 - 1])
        if cum[-1] < 1.9 * cum[root - 1]:
            failures.append(f"condition (i): {name} step sums stop growing")
        sq = np.cumsum(x * x)
        tail_fraction = (sq[-1] - sq[horizon // 2 - 1]) / sq[-1]
        if tail_fraction > 0.15:
            failures.append(f"condition (ii): {name} squared step sums do not flatten")

    checkpoints = [horizon // 4, horizon // 2, horizon]
    for label, num, den in (
        ("regret/utility", series["regret"], series["utility"]),
        ("strategy/regret", series["strategy"], series["regret"]),
    ):
        ratios = [num[c - 1] / den[c - 1] for c in checkpoints]
        if not all(b < a * (1.0 - 1e-9) for a, b in zip(ratios, ratios[1:])):
            failures.append(f"condition (iii): {label} step ratio does not vanish")

    return ScheduleReport(
        horizon=horizon,
        step_sums=sums_full,
        step_sums_half=sums_half,
        failures=tuple(failures),
    )


@dataclass(frozen=True)
class ScheduleReport:
    horizon: int
    step_sums: dict[str, float]
    step_sums_half: dict[str, float]
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


# -- satisfaction rule ----------------------------------------------------------


def sat_step(
    state: LearnerState,
    played: int,
    feedback: float,
    threshold: float,
    rng: np.random.Generator,
) -> tuple[LearnerState, int]:
    """Stay on a satisfying action, otherwise resample uniformly at random."""
    state.t += 1
    state.cum_feedback += feedback
    if math.isfinite(feedback) and feedback >= threshold:
        return state, played
    return state, int(rng.integers(state.pi.size))


# -- convergence ------------------------------------------------------------------


class ConvergenceMonitor:
    """Flags convergence when strategies stop moving across a window.

    Feed the stacked strategy vector once per iteration; the monitor fires at
    the first iteration t >= window with ||pi(t) - pi(t - window)||_inf below
    the tolerance. A constant trajectory therefore fires at the first check.
    """

    def __init__(self, window: int = 100, tolerance: float = 1e-3):
        if window < 1:
            raise ValueError("window must be at least 1")
        if tolerance <= 0:
            raise ValueError("tolerance must be positive")
        self.window = window
        self.tolerance = tolerance
        self.converged_at: int | None = None
        self._t = -1
        self._ring: list[np.ndarray | None] = [None] * (window + 1)

    def update(self, stacked_pi: np.ndarray) -> int | None:
        self._t += 1
        size = self.window + 1
        if self.converged_at is None and self._t >= self.window:
            old = self._ring[(self._t - self.window) % size]
            if old is not None and float(np.abs(stacked_pi - old).max()) < self.tolerance:
                self.converged_at = self._t
        self._ring[self._t % size] = np.array(stacked_pi, copy=True)
        return self.converged_at

    @property
    def converged(self) -> bool:
        return self.converged_at is not None
