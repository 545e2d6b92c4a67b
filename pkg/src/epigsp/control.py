"""Online identification of influential nodes and staged isolation control."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .epidemic import (
    BetaEvent,
    EpidemicState,
    IntegratorConfig,
    RunRecord,
    SirParams,
    Simulator,
)
from .errors import ArgumentError, ConfigurationError, WindowError
from .graph import (
    Graph,
    betweenness_centrality,
    closeness_centrality,
    isolate_nodes,
    rank_nodes,
)
from .spectral import HpfConfig, SgwtConfig, Spectrum, graph_spectrum, hpf_mask, sgwt_coefficients
from .variation import local_variation, tlv, tlv_normalized

STRATEGIES = ("Max", "HPF", "LV", "TLV", "SGWT", "BC", "CC")
TEMPORAL_STRATEGIES = ("TLV", "SGWT")


@dataclass(frozen=True)
class IdentifyConfig:
    strategy: str = "TLV"
    r: int = 10
    p: float = 4.0
    alpha: float = 0.5
    normalized: bool = True
    hpf_fraction: float = 0.25
    sgwt: SgwtConfig = field(default_factory=SgwtConfig)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.r < 1 or (self.strategy in TEMPORAL_STRATEGIES and self.r < 2):
            raise ConfigurationError(f"window length r={self.r} too short for {self.strategy}")
        if not 0 < self.p <= 100:
            raise ConfigurationError(f"p must lie in (0, 100], got {self.p}")
        if not 0 <= self.alpha <= 1:
            raise ConfigurationError(f"alpha must lie in [0, 1], got {self.alpha}")
        HpfConfig(self.hpf_fraction)

    def top_count(self, n: int) -> int:
        return top_count(self.p, n)


def top_count(p: float, n: int) -> int:
    """``ceil(p * n / 100)``, robust to float noise such as 4% of 400."""
    return min(n, math.ceil(p * n / 100.0 - 1e-9))


@dataclass(frozen=True, eq=False)
class InfluentialSet:
    time: int
    nodes: tuple
    scores: tuple
    strategy: str = ""


def strategy_scores(g: Graph, window: np.ndarray, cfg: IdentifyConfig,
                    spectrum: Optional[Spectrum] = None) -> np.ndarray:
    """Per-node variation at the last column of ``window`` for ``cfg.strategy``."""
    s = cfg.strategy
    if s == "Max":
        return window[:, -1].copy()
    if s == "HPF":
        if spectrum is None:
            raise ArgumentError("HPF strategy needs the graph spectrum")
        U = spectrum.eigenvectors
        h = hpf_mask(spectrum.n, cfg.hpf_fraction)
        return np.abs(U @ (h * (U.T @ window[:, -1])))
    if s == "LV":
        return local_variation(g, window[:, -1])
    if s == "TLV":
        if cfg.normalized:
            return tlv_normalized(g, window, cfg.alpha).values[:, -1]
        return tlv(g, window, cfg.alpha).values[:, -1]
    if s == "SGWT":
        coeffs, _ = sgwt_coefficients(g, window, cfg.sgwt)
        return np.abs(coeffs[:, -1, :]).sum(axis=1)
    if s == "BC":
        return betweenness_centrality(g)
    if s == "CC":
        return closeness_centrality(g)
    raise ArgumentError(f"unknown strategy {s!r}")


def identify(g: Graph, X, t: int, cfg: IdentifyConfig,
             spectrum: Optional[Spectrum] = None) -> InfluentialSet:
    """Top ``ceil(p N / 100)`` nodes at step ``t`` (1-based) from the window ending at t.

    Column ``k`` of ``X`` holds step ``k + 1``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != g.n:
        raise ArgumentError(f"X must have shape ({g.n}, T), got {X.shape}")
    if t < cfg.r:
        raise WindowError(f"step {t} is earlier than the window length {cfg.r}")
    if t > X.shape[1]:
        raise WindowError(f"step {t} is beyond the last recorded step {X.shape[1]}")
    window = X[:, t - cfg.r : t]
    scores = strategy_scores(g, window, cfg, spectrum)
    order = rank_nodes(scores)[: cfg.top_count(g.n)]
    return InfluentialSet(int(t), tuple(int(v) for v in order),
                          tuple(float(scores[v]) for v in order), cfg.strategy)


def identify_all(g: Graph, X, cfg: IdentifyConfig, times: Optional[Sequence[int]] = None,
                 spectrum: Optional[Spectrum] = None) -> list:
    X = np.asarray(X, dtype=float)
    if times is None:
        times = range(cfg.r, X.shape[1] + 1)
    if cfg.strategy == "HPF" and spectrum is None:
        spectrum = graph_spectrum(g)
    return [identify(g, X, t, cfg, spectrum) for t in times]


def apply_control(g: Graph, X, T_c: int, cfg: IdentifyConfig,
                  spectrum: Optional[Spectrum] = None):
    """Identify influential nodes at ``T_c`` and cut all of their links."""
    if cfg.strategy == "HPF" and spectrum is None:
        spectrum = graph_spectrum(g)
    found = identify(g, X, T_c, cfg, spectrum)
    return isolate_nodes(g, found.nodes), found


@dataclass(frozen=True)
class InterventionPlan:
    """Stage triggers ``T_n`` with isolation percentages ``p_n``; action happens at ``T_n + t_c``."""

    stages: tuple = ()
    t_c: int = 10

    def __post_init__(self):
        stages = tuple((int(t), float(p)) for t, p in self.stages)
        object.__setattr__(self, "stages", stages)
        times = [t for t, _ in stages]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigurationError("stage times must be strictly increasing")
        if any(not 0 < p <= 100 for _, p in stages):
            raise ConfigurationError("stage percentages must lie in (0, 100]")
        if self.t_c < 0:
            raise ConfigurationError("t_c must be non-negative")

    def action_times(self) -> list:
        return [t + self.t_c for t, _ in self.stages]

    def to_dict(self) -> dict:
        return {"stages": [list(s) for s in self.stages], "t_c": self.t_c}


def stage_times(peak: int, fractions: Sequence[float] = (0.3, 0.6, 0.9), r: int = 10) -> list:
    """``floor(f * peak)`` for each fraction, never earlier than the window length."""
    return [max(r, math.floor(f * peak)) for f in fractions]


def plan_from_peak(peak: int, fractions=(0.3, 0.6, 0.9), percents=(5.0, 10.0, 15.0),
                   t_c: int = 10, r: int = 10) -> InterventionPlan:
    times = stage_times(peak, fractions, r)
    # collapse to strictly increasing times when the peak is very early
    fixed = []
    for t in times:
        fixed.append(t if not fixed or t > fixed[-1] else fixed[-1] + 1)
    return InterventionPlan(tuple(zip(fixed, percents)), t_c)


@dataclass(eq=False)
class ControlOutcome:
    controlled_series: np.ndarray
    control_graphs: list
    stages: list  # InfluentialSet per stage
    isolated: tuple
    cumulative_curve: np.ndarray
    plan: InterventionPlan
    strategy: str = ""
    alpha: Optional[float] = None

    @property
    def final_cumulative(self) -> float:
        return float(self.cumulative_curve.sum())

    def overlap(self) -> list:
        """Per stage, how many selected nodes were already isolated earlier."""
        seen: set = set()
        out = []
        for st in self.stages:
            out.append(len(seen.intersection(st.nodes)))
            seen.update(st.nodes)
        return out


def cumulative_infection(series) -> np.ndarray:
    """Total infection over all nodes at each step."""
    return np.asarray(series, dtype=float).sum(axis=0)


def final_cumulative(series) -> float:
    """Total infection accumulated over every node and every recorded step."""
    return float(cumulative_infection(series).sum())


def peak_time(run) -> int:
    """Step (1-based, earliest on ties) at which total infection peaks."""
    if isinstance(run, RunRecord):
        series, times = run.series, run.times
    else:
        series = np.asarray(run, dtype=float)
        times = np.arange(1, series.shape[1] + 1)
    if series.size == 0:
        raise ArgumentError("empty run")
    return int(round(times[int(np.argmax(cumulative_infection(series)))]))


def run_plan(sim: Simulator, schedule: Sequence[BetaEvent], plan: InterventionPlan,
             cfg: IdentifyConfig, horizon: int) -> ControlOutcome:
    """Drive ``sim`` to ``horizon`` applying beta events and control stages.

    ``sim`` is advanced in place. Events strictly before ``sim.t`` are assumed
    applied already; events at ``sim.t`` are applied here.
    """
    actions = []
    for ev in schedule:
        if ev.time >= sim.t:
            actions.append((ev.time, 0, ev))
    for (t, p), ta in zip(plan.stages, plan.action_times()):
        if ta < cfg.r:
            raise ConfigurationError(f"stage at {ta} is earlier than the window length {cfg.r}")
        if ta < sim.t:
            raise ArgumentError(f"simulator already past stage time {ta}")
        if ta <= horizon:
            actions.append((float(ta), 1, p))
    actions.sort(key=lambda a: (a[0], a[1]))

    graphs, stages, isolated = [], [], set()
    for time, kind, payload in actions:
        sim.advance_to(time)
        if kind == 0:
            sim.set_beta(payload.nodes, payload.beta)
            continue
        stage_cfg = replace(cfg, p=payload)
        new_g, found = apply_control(sim.graph, sim.infection(), int(round(time)), stage_cfg)
        sim.set_graph(new_g)
        graphs.append(new_g)
        stages.append(found)
        isolated.update(found.nodes)
    sim.advance_to(float(horizon))
    series = sim.infection()
    return ControlOutcome(
        controlled_series=series,
        control_graphs=graphs,
        stages=stages,
        isolated=tuple(sorted(isolated)),
        cumulative_curve=cumulative_infection(series),
        plan=plan,
        strategy=cfg.strategy,
        alpha=cfg.alpha if cfg.strategy == "TLV" else None,
    )


def staged_control(g: Graph, params: SirParams, init: EpidemicState,
                   schedule: Sequence[BetaEvent], plan: InterventionPlan,
                   cfg: IdentifyConfig, integrator: IntegratorConfig = IntegratorConfig(),
                   horizon: int = 1000) -> ControlOutcome:
    """Simulate with cumulative isolation at every ``T_n + t_c``.

    Each stage identifies nodes on the current control graph using the
    controlled data so far and isolates them from then on.
    """
    sim = Simulator(g, params, init, integrator, t0=1.0)
    return run_plan(sim, sorted(schedule, key=lambda e: e.time), plan, cfg, horizon)
