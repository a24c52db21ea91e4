"""The uplink as a noncooperative game.

Each macro user picks a transmit power level, a fine-stream power fraction,
and a relay SBS (or none: classical operation). Payoffs are system-power
utilities u = rate^(1-alpha) / delay^alpha on the delivered rate and the
worst-stream queueing delay; unstable queues earn a fixed penalty utility.

`UplinkGame.evaluate_profile` is the readable reference path built on the
per-link rate operations. `action_utilities` is the batch path: it reuses a
per-iteration interference snapshot to price every action of one user against
the others' played actions, which is what makes regret-based learning loops
affordable. Both paths agree to float precision and tests hold them together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import backhaul as bh
from .backhaul import BackhaulView, allocate_wired_capacity
from .channel import ChannelState
from .delay_engine import DelayBreakdown, TrafficSpec, delay_split, md1_delay
from .rate_engine import ADD_DIRECT, IDENTITY, RateBreakdown, RateEngine
from .topology import ScenarioConfig, SubcarrierAllocation, Topology


@dataclass(frozen=True)
class Action:
    """One macro user's play: total power, fine-stream fraction, relay choice."""

    power_w: float
    fine_fraction: float
    relay: int | None

    def __post_init__(self):
        if self.power_w < 0:
            raise ValueError("power must be non-negative")
        if not 0.0 <= self.fine_fraction <= 1.0:
            raise ValueError("fine fraction must lie in [0, 1]")


@dataclass(frozen=True)
class ActionSpace:
    actions: tuple[Action, ...]

    @property
    def n(self) -> int:
        return len(self.actions)

    def index(self, action: Action) -> int:
        return self.actions.index(action)


def build_action_space(
    p_max_w: float,
    power_levels: int,
    fine_levels: int,
    candidate_sbs: Sequence[int],
) -> ActionSpace:
    """Grid of actions: powers {P*i/L}, fine fractions {j/L}, candidate relays.

    A zero fine fraction makes every relay choice equivalent, so those
    collapse to the single classical action per power level; conversely a
    positive fine fraction always names a relay. The classical full-power
    action is always present.
    """
    if p_max_w <= 0:
        raise ValueError("maximum power must be positive")
    if power_levels < 1 or fine_levels < 0:
        raise ValueError("grid sizes must be positive")
    actions: list[Action] = []
    for i in range(1, power_levels + 1):
        p = p_max_w * i / power_levels
        actions.append(Action(p, 0.0, None))
        for j in range(1, fine_levels + 1):
            f = j / fine_levels
            for s in candidate_sbs:
                actions.append(Action(p, f, s))
    assert len(set(actions)) == len(actions)
    return ActionSpace(actions=tuple(actions))


@dataclass(frozen=True)
class UtilityParams:
    """System-power utility u = rate^(1-alpha) / delay^alpha."""

    alpha: float = 0.5
    unstable_utility: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


def utility(rate_bps: float, delay_s: float, params: UtilityParams) -> float:
    """System-power utility; unstable (infinite) delay maps to the penalty value."""
    if rate_bps < 0 or delay_s < 0:
        raise ValueError("rate and delay must be non-negative")
    if not math.isfinite(delay_s):
        return params.unstable_utility
    a = params.alpha
    if delay_s == 0.0:
        return rate_bps if a == 0.0 else math.inf
    return rate_bps ** (1.0 - a) / delay_s**a


@dataclass(frozen=True)
class GameParams:
    power_levels: int = 2
    fine_levels: int = 3
    relay_candidates: int = 3
    combiner: str = IDENTITY


@dataclass
class ProfileOutcome:
    """Realized per-MUE results for one action profile."""

    utilities: dict[int, float]
    rates: dict[int, RateBreakdown]
    delays: dict[int, DelayBreakdown]
    view: BackhaulView


@dataclass
class ProfileContext:
    """Per-iteration snapshot shared by all counterfactual evaluations."""

    profile: dict[int, Action]
    rx_access: np.ndarray  # (n_rx, n_subcarriers) aggregate received power
    n_flows: dict[int, int]  # flows carried per SBS under this profile
    relay_of: dict[int, int | None]  # effective relay per MUE (None when idle fine path)
    wired: dict[int, float]


class UplinkGame:
    """One drop's game instance: frozen channel, action spaces, utility map."""

    def __init__(
        self,
        topology: Topology,
        alloc: SubcarrierAllocation,
        ch: ChannelState,
        scenario: ScenarioConfig,
        traffic: TrafficSpec,
        uparams: UtilityParams,
        gparams: GameParams,
        mode: str = bh.OTA,
        c_bar_bps: float = 50e6,
        wired_policy: str = bh.EQUAL,
    ):
        self.topology = topology
        self.alloc = alloc
        self.ch = ch
        self.scenario = scenario
        self.traffic = traffic
        self.uparams = uparams
        self.gparams = gparams
        self.mode = mode
        self.c_bar_bps = c_bar_bps
        self.wired_policy = wired_policy
        self.engine = RateEngine(topology, alloc, ch, scenario)

        # Candidate relays per MUE: rank SBSs by the weakest link of the
        # relayed path, an access-rate estimate under full-power ambient
        # interference against the SBS's backhaul pipe split over the flows
        # it already serves. Distance alone is a poor proxy when backhaul
        # pipes differ by orders of magnitude.
        self.candidates: dict[int, tuple[int, ...]] = {}
        pipe = {}
        for s in topology.sbs_ids:
            wired = c_bar_bps / len(topology.sbs_ids)
            ota = self.engine.ota_rate_bps[s]
            pipe[s] = {bh.WIRED: wired, bh.OTA: ota, bh.HYBRID: max(wired, ota)}[mode]
        noise = ch.noise_per_subcarrier_w
        bw = ch.subcarrier_bw_hz
        rx_full = self.engine.sue_base.copy()
        for u in topology.mue_ids:
            scs = self.engine.sc[u]
            per = self.engine.mue_power_w / scs.size
            rx_full[:, scs] += ch.gains[u, :, scs].T * per
        access_est: dict[int, dict[int, float]] = {}
        for m in topology.mue_ids:
            sc = self.engine.sc[m]
            p = self.engine.mue_power_w / sc.size
            acc = {}
            for s in topology.sbs_ids:
                own = ch.gains[m, ch.rx_row[s], sc] * p
                intf = rx_full[ch.rx_row[s], sc] - own
                acc[s] = bw * float(np.log2(1.0 + own / (noise + intf)).sum())
            access_est[m] = acc

        def _rank(flow_est: dict[int, float]) -> dict[int, tuple[int, ...]]:
            out = {}
            for m in topology.mue_ids:
                scores = [
                    min(access_est[m][s], pipe[s] / flow_est[s]) for s in topology.sbs_ids
                ]
                order = np.argsort(-np.asarray(scores), kind="stable")
                out[m] = tuple(topology.sbs_ids[i] for i in order[: gparams.relay_candidates])
            return out

        if topology.sbs_ids:
            sues = {s: len(topology.sues_of(s)) for s in topology.sbs_ids}
            first = _rank({s: 1.0 + sues[s] for s in topology.sbs_ids})
            demand = {s: 0 for s in topology.sbs_ids}
            for m in topology.mue_ids:
                demand[first[m][0]] += 1
            # Second pass prices each pipe by the contention its first-pass
            # popularity implies, so candidate sets spread across pipes.
            self.candidates = _rank(
                {s: max(1, demand[s]) + sues[s] for s in topology.sbs_ids}
            )
        else:
            self.candidates = {m: () for m in topology.mue_ids}

        self.spaces: dict[int, ActionSpace] = {
            m: build_action_space(
                self.engine.mue_power_w, gparams.power_levels, gparams.fine_levels, self.candidates[m]
            )
            for m in topology.mue_ids
        }

        # Static pieces reused across iterations.
        self._sues_at: dict[int, list[int]] = {s: list(topology.sues_of(s)) for s in topology.sbs_ids}
        self._equal_wired = allocate_wired_capacity(topology.sbs_ids, c_bar_bps, bh.EQUAL)
        self._mue_rows = np.asarray(topology.mue_ids, dtype=int)
        self._mue_gains = ch.gains[self._mue_rows] if len(topology.mue_ids) else np.zeros((0, len(ch.rx_row), alloc.n_total))
        # Per-MUE constants for the batch path: action grids as arrays plus
        # gathered gain rows for the MBS and each candidate relay.
        self._batch: dict[int, dict] = {}
        row0 = ch.rx_row[topology.mbs]
        for m, space in self.spaces.items():
            p = np.array([a.power_w for a in space.actions])
            f = np.array([a.fine_fraction for a in space.actions])
            r = np.array([-1 if a.relay is None else a.relay for a in space.actions], dtype=int)
            sc = self.engine.sc[m]
            self._batch[m] = {
                "p": p,
                "f": f[:, None],
                "relay": r,
                "per_sc": (p / sc.size)[:, None],
                "has_fine": (r >= 0) & (f > 0),
                "load_coarse": (1.0 - f) * traffic.rho_bps,
                "load_fine": f * traffic.rho_bps,
                "g0": ch.gains[m, row0, sc],
                "relay_rows": [
                    (int(s), ch.rx_row[int(s)], ch.gains[m, ch.rx_row[int(s)], sc], r == s)
                    for s in np.unique(r[r >= 0])
                ],
            }
            self._batch[m]["relay_gain"] = {
                s: (rows, g) for s, rows, g, _ in self._batch[m]["relay_rows"]
            }

    # -- profile helpers -------------------------------------------------------

    def classical_profile(self) -> dict[int, Action]:
        p = self.engine.mue_power_w
        return {m: Action(p, 0.0, None) for m in self.topology.mue_ids}

    def flows_per_sbs(self, profile: Mapping[int, Action]) -> dict[int, list[int]]:
        flows = {s: list(sues) for s, sues in self._sues_at.items()}
        for m, act in profile.items():
            if act.relay is not None and act.fine_fraction > 0.0:
                flows[act.relay].append(m)
        return flows

    def _wired_capacity(self, flows: dict[int, list[int]]) -> dict[int, float]:
        if self.wired_policy == bh.EQUAL:
            return self._equal_wired
        loads = {s: float(len(f)) for s, f in flows.items()}
        return allocate_wired_capacity(self.topology.sbs_ids, self.c_bar_bps, self.wired_policy, loads)

    def backhaul_view(self, profile: Mapping[int, Action]) -> BackhaulView:
        flows = self.flows_per_sbs(profile)
        view = BackhaulView(
            mode=self.mode,
            c_bar_bps=self.c_bar_bps,
            wired_capacity_bps=self._wired_capacity(flows),
            ota_rate_bps=self.engine.ota_rate_bps,
        )
        view.set_flows(flows)
        return view

    # -- reference evaluation ---------------------------------------------------

    def evaluate_profile(self, profile: Mapping[int, Action]) -> ProfileOutcome:
        """Readable per-link evaluation of one full action profile."""
        view = self.backhaul_view(profile)
        utilities: dict[int, float] = {}
        rates: dict[int, RateBreakdown] = {}
        delays: dict[int, DelayBreakdown] = {}
        for m in self.topology.mue_ids:
            act = profile[m]
            bd = self.engine.total_rate(m, profile, view, self.gparams.combiner)
            if act.relay is None or act.fine_fraction == 0.0:
                db = delay_split(self.traffic, act.fine_fraction, bd.coarse_bps, 0.0, 0.0)
            else:
                db = delay_split(
                    self.traffic, act.fine_fraction, bd.coarse_bps, bd.fine_sbs_bps, bd.backhaul_share_bps
                )
            rates[m] = bd
            delays[m] = db
            utilities[m] = utility(bd.total_bps, db.total_s, self.uparams)
        return ProfileOutcome(utilities=utilities, rates=rates, delays=delays, view=view)

    # -- batch evaluation --------------------------------------------------------

    def context(self, profile: Mapping[int, Action]) -> ProfileContext:
        """Interference snapshot plus flow counts for counterfactual pricing."""
        n_sc = self.alloc.n_total
        p = np.zeros((len(self._mue_rows), n_sc))
        relay_of: dict[int, int | None] = {}
        n_flows = {s: len(sues) for s, sues in self._sues_at.items()}
        for i, m in enumerate(self._mue_rows):
            act = profile[m]
            sc = self.engine.sc[m]
            p[i, sc] = act.power_w / sc.size
            if act.relay is not None and act.fine_fraction > 0.0:
                relay_of[m] = act.relay
                n_flows[act.relay] += 1
            else:
                relay_of[m] = None
        rx = self.engine.sue_base + np.einsum("mrn,mn->rn", self._mue_gains, p)

        if self.wired_policy == bh.EQUAL:
            wired = self._equal_wired
        else:
            wired = allocate_wired_capacity(
                self.topology.sbs_ids, self.c_bar_bps, self.wired_policy,
                {s: float(c) for s, c in n_flows.items()},
            )
        return ProfileContext(
            profile=dict(profile),
            rx_access=rx,
            n_flows=n_flows,
            relay_of=relay_of,
            wired=wired,
        )

    def _share_for(self, ctx: ProfileContext, s: int, m: int) -> float:
        joins = 0 if ctx.relay_of.get(m) == s else 1
        frac = 1.0 / (ctx.n_flows[s] + joins)
        if self.mode == bh.WIRED:
            return frac * ctx.wired[s]
        if self.mode == bh.OTA:
            return frac * self.engine.ota_rate_bps[s]
        return frac * max(self.engine.ota_rate_bps[s], ctx.wired[s])

    def action_utilities(self, m: int, ctx: ProfileContext) -> np.ndarray:
        """Utility of every action of MUE m against the others' played actions.

        Holds the rest of the profile (and the wired capacity split) fixed;
        the flow count at a candidate relay accounts for m joining it.
        """
        eng = self.engine
        sc = eng.sc[m]
        noise = self.ch.noise_per_subcarrier_w
        bw = self.ch.subcarrier_bw_hz
        row0 = self.ch.rx_row[self.topology.mbs]
        b = self._batch[m]
        f_col = b["f"]
        n_actions = b["p"].size
        p_now = ctx.profile[m].power_w / sc.size

        others0 = np.maximum(ctx.rx_access[row0, sc] - b["g0"] * p_now, 0.0)
        own0 = b["per_sc"] * b["g0"][None, :]
        coarse = bw * np.log2(1.0 + (1.0 - f_col) * own0 / (noise + f_col * own0 + others0[None, :])).sum(axis=1)
        if self.gparams.combiner == ADD_DIRECT:
            fine_mbs = bw * np.log2(1.0 + f_col * own0 / (noise + others0[None, :])).sum(axis=1)

        fine_sbs = np.zeros(n_actions)
        shares = np.zeros(n_actions)
        for s, rows, g_s, mask in b["relay_rows"]:
            others_s = np.maximum(ctx.rx_access[rows, sc] - g_s * p_now, 0.0)
            own_s = b["per_sc"][mask] * g_s[None, :]
            f_m = f_col[mask]
            fine_sbs[mask] = bw * np.log2(
                1.0 + f_m * own_s / (noise + (1.0 - f_m) * own_s + others_s[None, :])
            ).sum(axis=1)
            shares[mask] = self._share_for(ctx, s, m)

        fine_total = np.where(b["has_fine"], 0.5 * np.minimum(fine_sbs, shares), 0.0)
        if self.gparams.combiner == ADD_DIRECT:
            fine_total = fine_total + np.where(b["has_fine"], 0.5 * fine_mbs, 0.0)
        total = coarse + fine_total

        d_coarse = _md1_vec(b["load_coarse"], coarse)
        d_access = _md1_vec(b["load_fine"], np.where(b["relay"] >= 0, fine_sbs, 0.0))
        d_backhaul = _md1_vec(b["load_fine"], shares)
        d_total = np.maximum(d_coarse, d_access + d_backhaul)

        a = self.uparams.alpha
        out = np.full(n_actions, self.uparams.unstable_utility)
        stable = np.isfinite(d_total)
        pos = stable & (d_total > 0)
        out[pos] = total[pos] ** (1.0 - a) / d_total[pos] ** a
        zero = stable & (d_total == 0)
        if zero.any():
            out[zero] = total[zero] if a == 0.0 else np.inf
        return out


    def realized_utilities(self, ctx: ProfileContext) -> dict[int, float]:
        """Utility every MUE actually earned under the played profile.

        Same quantities as evaluate_profile but computed on the shared
        interference snapshot, so the noisy-feedback loop pays for one action
        per player instead of a full counterfactual sweep.
        """
        eng = self.engine
        noise = self.ch.noise_per_subcarrier_w
        bw = self.ch.subcarrier_bw_hz
        row0 = self.ch.rx_row[self.topology.mbs]
        out: dict[int, float] = {}
        for m in self.topology.mue_ids:
            act = ctx.profile[m]
            sc = eng.sc[m]
            b = self._batch[m]
            p_sc = act.power_w / sc.size
            f = act.fine_fraction
            own0 = b["g0"] * p_sc
            others0 = np.maximum(ctx.rx_access[row0, sc] - own0, 0.0)
            coarse = bw * float(np.log2(1.0 + (1.0 - f) * own0 / (noise + f * own0 + others0)).sum())

            if act.relay is None or f == 0.0:
                total = coarse
                d_total = md1_delay((1.0 - f) * self.traffic.rho_bps, coarse)
            else:
                s = act.relay
                pair = b["relay_gain"].get(s)
                if pair is None:
                    rows = self.ch.rx_row[s]
                    g_s = self.ch.gains[m, rows, sc]
                else:
                    rows, g_s = pair
                own_s = g_s * p_sc
                others_s = np.maximum(ctx.rx_access[rows, sc] - own_s, 0.0)
                fine_sbs = bw * float(
                    np.log2(1.0 + f * own_s / (noise + (1.0 - f) * own_s + others_s)).sum()
                )
                share = self._share_for(ctx, s, m)
                fine = 0.5 * min(fine_sbs, share)
                if self.gparams.combiner == ADD_DIRECT:
                    fine += 0.5 * bw * float(np.log2(1.0 + f * own0 / (noise + others0)).sum())
                total = coarse + fine
                load_f = f * self.traffic.rho_bps
                d_total = max(
                    md1_delay((1.0 - f) * self.traffic.rho_bps, coarse),
                    md1_delay(load_f, fine_sbs) + md1_delay(load_f, share),
                )
            out[m] = utility(total, d_total, self.uparams)
        return out


def _md1_vec(load: np.ndarray, rate: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast(load, rate).shape)
    load = np.broadcast_to(load, out.shape)
    rate = np.broadcast_to(rate, out.shape)
    loaded = load > 0
    stable = loaded & (rate > load)
    out[stable] = load[stable] / (2.0 * rate[stable] * (rate[stable] - load[stable]))
    out[loaded & ~stable] = np.inf
    return out


def epsilon_cce_gap(joint: np.ndarray, utilities: Sequence[np.ndarray]) -> np.ndarray:
    """Best unilateral deviation gain per player against a joint distribution.

    For each player, returns max over fixed deviations of the expected payoff
    against the marginal play of the others, minus the expected payoff under
    the joint distribution. A distribution is an epsilon coarse correlated
    equilibrium when every entry is at most epsilon.
    """
    joint = np.asarray(joint, dtype=float)
    if (joint < -1e-12).any():
        raise ValueError("joint distribution must be non-negative")
    if abs(joint.sum() - 1.0) > 1e-6:
        raise ValueError("joint distribution must sum to one")
    gaps = []
    for m, u in enumerate(utilities):
        u = np.asarray(u, dtype=float)
        if u.shape != joint.shape:
            raise ValueError("utility tensor shape must match the joint distribution")
        expected = float((joint * u).sum())
        marginal_others = joint.sum(axis=m).reshape(-1)
        u_front = np.moveaxis(u, m, 0).reshape(u.shape[m], -1)
        deviations = u_front @ marginal_others
        gaps.append(float(deviations.max() - expected))
    return np.asarray(gaps)
