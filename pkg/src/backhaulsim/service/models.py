"""Request and response schemas for the HTTP service.

The request models mirror the simulator's config dataclasses field for field,
so a JSON body round-trips into an ExperimentConfig without translation
tables. Responses mirror the harness result dictionaries; infinite delays
travel as the string "inf" since JSON has no such number.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..backhaul import EQUAL, OTA
from ..game import GameParams, UtilityParams
from ..delay_engine import TrafficSpec
from ..harness import ExperimentConfig
from ..learning import Schedules
from ..rate_engine import IDENTITY
from ..topology import ScenarioConfig


class ScenarioModel(BaseModel):
    macro_radius_m: float = 400.0
    small_cell_radius_m: float = 50.0
    sectors: int = 3
    mues_per_sector: int = 10
    sbss_per_sector: int = 8
    sues_per_sbs: int = 1
    n_subcarriers: int = 16
    n_mue_subcarriers: int = 8
    system_bandwidth_hz: float = 5e6
    carrier_freq_hz: float = 1.85e9
    mue_power_dbm: float = 21.0
    sbs_power_dbm: float = 30.0
    shadowing_std_db: float = 10.0
    rayleigh_fading: bool = True
    min_mbs_distance_m: float = 10.0
    seed: int = 0


class TrafficModel(BaseModel):
    rho_bps: float = 180e3


class UtilityModel(BaseModel):
    alpha: float = Field(default=0.5, ge=0.0, le=1.0)
    unstable_utility: float = 0.0


class GameModel(BaseModel):
    power_levels: int = Field(default=2, ge=1)
    fine_levels: int = Field(default=3, ge=1)
    relay_candidates: int = Field(default=3, ge=0)
    combiner: Literal["identity", "add-direct"] = IDENTITY


class SchedulesModel(BaseModel):
    utility_exp: float = 0.50
    regret_exp: float = 0.55
    strategy_exp: float = 0.60


class RunRequest(BaseModel):
    """One experiment: an algorithm over Monte-Carlo drops."""

    scenario: ScenarioModel = Field(default_factory=ScenarioModel)
    traffic: TrafficModel = Field(default_factory=TrafficModel)
    utility: UtilityModel = Field(default_factory=UtilityModel)
    game: GameModel = Field(default_factory=GameModel)
    schedules: SchedulesModel = Field(default_factory=SchedulesModel)
    mode: Literal["ota", "wrd", "hyb"] = OTA
    c_bar_bps: float = 50e6
    wired_policy: Literal["equal", "proportional-load"] = EQUAL
    kappa: float = 10.0
    feedback_sigma: float = 0.0
    sat_threshold: float = 5.0
    learner_rate_unit_bps: float = 3e8
    learner_delay_unit_s: float = 1e-3
    regret_update_played_only: bool = False
    convergence_window: int = Field(default=100, ge=1)
    convergence_tol: float = Field(default=1e-3, gt=0)
    offload_vacates_macro: bool = True
    offload_half_duplex: bool = False
    algorithm: Literal["CLA", "RU1", "OFF", "RSF", "RSL", "SAT"] = "RSF"
    drops: int = Field(default=100, ge=1)
    iterations: int = Field(default=500, ge=1)
    seed: int = 0
    workers: int = Field(default=1, ge=1)

    def to_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            scenario=ScenarioConfig(**self.scenario.model_dump()),
            traffic=TrafficSpec(**self.traffic.model_dump()),
            utility=UtilityParams(**self.utility.model_dump()),
            game=GameParams(**self.game.model_dump()),
            schedules=Schedules(**self.schedules.model_dump()),
            mode=self.mode,
            c_bar_bps=self.c_bar_bps,
            wired_policy=self.wired_policy,
            kappa=self.kappa,
            feedback_sigma=self.feedback_sigma,
            sat_threshold=self.sat_threshold,
            learner_rate_unit_bps=self.learner_rate_unit_bps,
            learner_delay_unit_s=self.learner_delay_unit_s,
            regret_update_played_only=self.regret_update_played_only,
            convergence_window=self.convergence_window,
            convergence_tol=self.convergence_tol,
            offload_vacates_macro=self.offload_vacates_macro,
            offload_half_duplex=self.offload_half_duplex,
            algorithm=self.algorithm,
            drops=self.drops,
            iterations=self.iterations,
            seed=self.seed,
            workers=self.workers,
        )


class MueRowModel(BaseModel):
    drop: int
    mue: int
    sector: int
    norm_distance: float
    rate_bps: float
    delay_s: float | Literal["inf", "-inf"]
    utility: float


class RunResponse(BaseModel):
    schema_version: int
    algorithm: str
    mode: str
    drops: int
    iterations: int
    seed: int
    rows: list[MueRowModel]
    mean_utility_trace: list[float]
    strategy_change_trace: list[float]
    converged_at: list[int | None]
    failures: list[tuple[int, str]]
    summary: dict[str, float | Literal["inf", "-inf"]]


class SweepRequest(BaseModel):
    base: RunRequest = Field(default_factory=RunRequest)
    param: str
    values: list[str | float | int] = Field(min_length=1)


class SweepPoint(BaseModel):
    value: str
    result: RunResponse


class SweepResponse(BaseModel):
    param: str
    points: list[SweepPoint]


class SchedulesRequest(BaseModel):
    schedules: SchedulesModel = Field(default_factory=SchedulesModel)
    horizon: int = Field(default=10_000, ge=100)


class SchedulesResponse(BaseModel):
    ok: bool
    horizon: int
    step_sums: dict[str, float]
    step_sums_half: dict[str, float]
    failures: list[str]


class CceRequest(BaseModel):
    """Equilibrium-gap check for a finite matrix game.

    `utilities` holds one payoff tensor per player (nested lists, one axis per
    player, identical shapes). With `joint` given, only the gap is computed;
    otherwise regret-matching self-play over `steps` rounds produces the
    empirical joint distribution first.
    """

    utilities: list[list] = Field(min_length=1)
    joint: list | None = None
    steps: int = Field(default=10_000, ge=1)
    seed: int = 0


class CceResponse(BaseModel):
    gaps: list[float]
    epsilon: float
    joint: list
    steps: int | None


class HealthResponse(BaseModel):
    status: str
    version: str
