"""Monte Carlo harness: source identification, staged control and the alpha sweep.

Every trial draws its randomness from ``trial_seed(master, trial)`` so trials
can run in any order or in parallel and still merge to identical results.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .control import (
    IdentifyConfig,
    InterventionPlan,
    identify,
    peak_time,
    plan_from_peak,
    run_plan,
)
from .epidemic import (
    IntegratorConfig,
    ScenarioSpec,
    SirParams,
    Simulator,
    integrate,
    make_scenario,
)
from .errors import ArgumentError
from .graph import Graph, rank_nodes
from .spectral import SgwtConfig, sgwt_coefficients, sgwt_top_nodes
from .variation import tlv_normalized


def trial_seed(master: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(master), int(trial)]).generate_state(1)[0])


def default_alpha_grid() -> np.ndarray:
    """Fine near both ends, coarse in the middle; duplicates removed, ascending."""
    grid = np.concatenate([
        np.linspace(0.0, 0.3, 16),   # 0:0.02:0.3
        np.linspace(0.4, 0.9, 6),    # 0.4:0.1:0.9
        np.linspace(0.9, 1.0, 6),    # 0.9:0.02:1
    ])
    return np.unique(np.round(grid, 10))


# --- perturbation scenarios -----------------------------------------------------


def single_perturbation_trial(g: Graph, seed: int, cfg: IdentifyConfig,
                              params: Optional[SirParams] = None, t_check: int = 10,
                              integrator: IntegratorConfig = IntegratorConfig()) -> dict:
    """Seed one random source and report whether it is identified at ``t_check``."""
    params = params or SirParams.uniform(g.n, 0.3, 0.1, 0.1)
    init, schedule = make_scenario(ScenarioSpec(horizon=t_check), g, seed)
    source = int(np.flatnonzero(init.i)[0])
    run = integrate(g, params, init, integrator, t_check, schedule, keep_full=False)
    found = identify(g, run.series, t_check, cfg)
    return {"seed": seed, "source": source, "nodes": found.nodes, "hit": source in found.nodes}


def double_perturbation_trial(g: Graph, seed: int, cfgs: Sequence[IdentifyConfig],
                              params: Optional[SirParams] = None, event_time: int = 50,
                              new_beta: float = 0.8,
                              integrator: IntegratorConfig = IntegratorConfig()) -> dict:
    """Raise beta at the source at ``event_time``; check re-identification per strategy.

    A strategy re-identifies the source if it appears in the top set at any
    step of the window following the event, ``event_time + 1 .. event_time + r``.
    """
    params = params or SirParams.uniform(g.n, 0.3, 0.1, 0.1)
    r_max = max(c.r for c in cfgs)
    horizon = event_time + r_max
    spec = ScenarioSpec(kind="double-perturbation", event_times=(event_time,),
                        event_beta=new_beta, horizon=horizon)
    init, schedule = make_scenario(spec, g, seed)
    source = int(np.flatnonzero(init.i)[0])
    run = integrate(g, params, init, integrator, horizon, schedule, keep_full=False)
    out = {"seed": seed, "source": source}
    for c in cfgs:
        steps = range(event_time + 1, event_time + c.r + 1)
        hits = [t for t in steps if source in identify(g, run.series, t, c).nodes]
        key = c.strategy if c.strategy != "TLV" else f"TLV{c.alpha:g}"
        out[key] = hits[0] if hits else None
    return out


# --- staged control ------------------------------------------------------------------


@dataclass(frozen=True)
class ControlExperimentConfig:
    """Multiple-infections scenario followed by three isolation stages."""

    beta: float = 0.3
    gamma: float = 0.1
    kappa: float = 0.1
    horizon: int = 1000
    n_sources: int = 5
    initial_fraction: float = 0.002
    event_size: int = 5
    event_beta: float = 0.6
    fractions: tuple = (0.3, 0.6, 0.9)
    percents: tuple = (5.0, 10.0, 15.0)
    t_c: int = 10
    r: int = 10
    normalized: bool = True
    methods: tuple = ("Max", "HPF", "LV", "TLV", "BC", "CC")
    alpha_grid: Optional[tuple] = None  # None -> default_alpha_grid()
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def alphas(self) -> np.ndarray:
        if self.alpha_grid is None:
            return default_alpha_grid()
        grid = np.asarray(self.alpha_grid, dtype=float)
        if grid.size == 0:
            raise ArgumentError("alpha grid must not be empty")
        return grid


@dataclass
class TrialResult:
    trial: int
    seed: int
    peak: int
    plan: InterventionPlan
    ground_truth: np.ndarray  # cumulative curve without control
    curves: dict  # method -> cumulative curve (TLV: best alpha)
    finals: dict  # method -> final cumulative infection
    tlv_finals: dict  # alpha -> final cumulative infection
    best_alpha: Optional[float]
    overlaps: dict  # method -> per-stage overlap with earlier isolations


@dataclass
class ControlSetup:
    """Everything shared by the methods of one control trial."""

    params: SirParams
    peak: int
    plan: InterventionPlan
    schedule: list
    prefix: Simulator  # advanced to the first action time


def prepare_control(g: Graph, cfg: ControlExperimentConfig, seed: int) -> ControlSetup:
    params = SirParams.uniform(g.n, cfg.beta, cfg.gamma, cfg.kappa)
    icfg = cfg.integrator
    base_spec = ScenarioSpec(kind="multiple-infections", n_sources=cfg.n_sources,
                             initial_fraction=cfg.initial_fraction, event_times=(),
                             horizon=cfg.horizon)
    init, _ = make_scenario(base_spec, g, seed)
    # the stage times come from the peak of the run without super-spreading events
    base = integrate(g, params, init, icfg, cfg.horizon, keep_full=False)
    peak = peak_time(base)
    plan = plan_from_peak(peak, cfg.fractions, cfg.percents, cfg.t_c, cfg.r)
    spec = replace(base_spec, event_times=tuple(float(t) for t, _ in plan.stages if t <= cfg.horizon),
                   event_size=cfg.event_size, event_beta=cfg.event_beta)
    init, schedule = make_scenario(spec, g, seed)

    # everything before the first action is shared by all methods
    first = float(min(plan.action_times()[0], cfg.horizon)) if plan.stages else float(cfg.horizon)
    prefix = Simulator(g, params, init, icfg)
    for ev in schedule:
        if ev.time < first:
            prefix.advance_to(ev.time)
            prefix.set_beta(ev.nodes, ev.beta)
    prefix.advance_to(first)
    return ControlSetup(params, peak, plan, schedule, prefix)


def run_method(setup: ControlSetup, cfg: ControlExperimentConfig, method: str,
               alpha: float = 0.5):
    """Staged control with one identification method (None for no control)."""
    if method is None:
        plan = InterventionPlan((), cfg.t_c)
        ic = IdentifyConfig("Max", r=cfg.r)
    else:
        plan = setup.plan
        ic = IdentifyConfig(method, r=cfg.r, alpha=float(alpha), normalized=cfg.normalized)
    return run_plan(setup.prefix.copy(), setup.schedule, plan, ic, cfg.horizon)


def control_trial(g: Graph, cfg: ControlExperimentConfig, seed: int, trial: int = 0) -> TrialResult:
    setup = prepare_control(g, cfg, seed)
    plan, peak = setup.plan, setup.peak
    truth = run_method(setup, cfg, None)

    curves, finals, overlaps, tlv_finals = {}, {}, {}, {}
    best_alpha = None
    for method in cfg.methods:
        if method == "TLV":
            best = None
            for a in cfg.alphas():
                out = run_method(setup, cfg, "TLV", a)
                tlv_finals[float(a)] = out.final_cumulative
                # strict comparison: the first alpha on the grid wins ties
                if best is None or out.final_cumulative < best.final_cumulative:
                    best, best_alpha = out, float(a)
            out = best
        else:
            out = run_method(setup, cfg, method)
        curves[method] = out.cumulative_curve
        finals[method] = out.final_cumulative
        overlaps[method] = out.overlap()
    return TrialResult(trial, seed, peak, plan, truth.cumulative_curve, curves, finals,
                       tlv_finals, best_alpha, overlaps)


@dataclass
class SweepResult:
    trials: list  # TrialResult, ordered by trial index
    alphas: np.ndarray

    def rows(self) -> list:
        """``(trial, alpha, final_cumulative)`` for every TLV cell."""
        return [(t.trial, a, v) for t in self.trials for a, v in t.tlv_finals.items()]

    def best_alphas(self) -> list:
        return [t.best_alpha for t in self.trials]

    def mean_finals(self) -> dict:
        out = {"none": float(np.mean([t.ground_truth.sum() for t in self.trials]))}
        for m in self.trials[0].finals:
            out[m] = float(np.mean([t.finals[m] for t in self.trials]))
        return out

    def mean_curves(self) -> dict:
        out = {"none": np.mean([t.ground_truth for t in self.trials], axis=0)}
        for m in self.trials[0].curves:
            out[m] = np.mean([t.curves[m] for t in self.trials], axis=0)
        return out


def _trial_job(args):
    g, cfg, master, trial = args
    return control_trial(g, cfg, trial_seed(master, trial), trial)


def alpha_sweep(g: Graph, cfg: ControlExperimentConfig, trials: int, seed: int = 0,
                workers: int = 1, first_trial: int = 0) -> SweepResult:
    """Run ``trials`` independent control trials; merge in trial order."""
    jobs = [(g, cfg, seed, k) for k in range(first_trial, first_trial + trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_job, jobs))
    else:
        results = [_trial_job(j) for j in jobs]
    results.sort(key=lambda t: t.trial)
    return SweepResult(results, cfg.alphas())


# --- comparison with spectral graph wavelets ---------------------------------


def sliding_sums(X, width: int = 14, slide: int = 7) -> np.ndarray:
    """Column sums over windows of ``width`` steps advanced by ``slide`` steps."""
    X = np.asarray(X, dtype=float)
    starts = range(0, X.shape[1] - width + 1, slide)
    return np.stack([X[:, s : s + width].sum(axis=1) for s in starts], axis=1)


def sgwt_comparison(g: Graph, X, s_total: int, *, width: int = 14, slide: int = 7,
                    alpha: float = 0.5, sgwt: SgwtConfig = SgwtConfig()) -> dict:
    """Influential (node, window) pairs from SGWT, TLV and Max on windowed sums.

    SGWT selects ``s_total`` pairs over the whole graph-time product; TLV and
    Max select ``s_total // n_windows`` nodes in every window.
    """
    Xb = sliding_sums(X, width, slide)
    n_win = Xb.shape[1]
    coeffs, scales = sgwt_coefficients(g, Xb, replace(sgwt, temporal_graph_len=n_win))
    sg = sgwt_top_nodes(coeffs, s_total)
    k = max(1, s_total // n_win)
    field_ = tlv_normalized(g, Xb, alpha).values
    tlv_sel = [tuple(int(v) for v in rank_nodes(field_[:, j])[:k]) for j in range(n_win)]
    max_sel = [tuple(int(v) for v in rank_nodes(Xb[:, j])[:k]) for j in range(n_win)]
    sg_by_window = [tuple(v for v, w in sg if w == j) for j in range(n_win)]
    return {"windows": Xb, "k": k, "scales": scales, "SGWT": sg_by_window,
            "TLV": tlv_sel, "Max": max_sel}
