"""Single-location and metapopulation network SIR dynamics.

The network model works with population fractions per node. Migration is a
degree-normalised diffusion of every compartment with strength ``kappa``; an
isolated node (degree 0) exchanges nothing.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import ArgumentError, ConfigurationError, IntegrityError, StiffnessError
from .graph import Graph, degrees


@dataclass(frozen=True, eq=False)
class SirParams:
    """Per-node transmission and recovery rates plus the coupling strength."""

    beta: np.ndarray
    gamma: np.ndarray
    kappa: float

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float)
        gamma = np.array(self.gamma, dtype=float)
        if beta.shape != gamma.shape or beta.ndim != 1:
            raise ConfigurationError("beta and gamma must be vectors of equal length")
        if np.any(beta < 0) or np.any(gamma < 0) or self.kappa < 0:
            raise ConfigurationError("beta, gamma and kappa must be non-negative")
        beta.setflags(write=False)
        gamma.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "kappa", float(self.kappa))

    @classmethod
    def uniform(cls, n: int, beta: float, gamma: float, kappa: float) -> "SirParams":
        return cls(np.full(n, float(beta)), np.full(n, float(gamma)), kappa)

    @property
    def n(self) -> int:
        return self.beta.size

    def with_beta(self, nodes, value: float) -> "SirParams":
        beta = np.array(self.beta)
        beta[list(nodes)] = value
        return SirParams(beta, self.gamma, self.kappa)

    def to_dict(self) -> dict:
        return {"beta": self.beta.tolist(), "gamma": self.gamma.tolist(), "kappa": self.kappa}


@dataclass(frozen=True, eq=False)
class EpidemicState:
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        arrays = [np.array(a, dtype=float) for a in (self.s, self.i, self.r)]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
            raise ArgumentError("s, i, r must be vectors of equal length")
        for name, a in zip("sir", arrays):
            if np.any(a < 0) or np.any(a > 1):
                raise ArgumentError(f"compartment {name} must lie in [0, 1]")
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return self.s.size

    def as_array(self) -> np.ndarray:
        return np.stack([self.s, self.i, self.r])

    @classmethod
    def from_array(cls, y) -> "EpidemicState":
        y = np.asarray(y)
        return cls(y[0], y[1], y[2])

    @classmethod
    def seeded(cls, n: int, sources: Sequence[int], fraction: float) -> "EpidemicState":
        """Fully susceptible population with ``fraction`` infected at each source."""
        i = np.zeros(n)
        i[list(sources)] = fraction
        return cls(1.0 - i, i, np.zeros(n))


@dataclass(frozen=True)
class IntegratorConfig:
    output_dt: float = 1.0
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 1.0
    min_step: float = 1e-10
    initial_step: float = 0.1

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ConfigurationError("tolerances must be positive")
        if not 0 < self.min_step <= self.max_step:
            raise ConfigurationError("need 0 < min_step <= max_step")
        if not self.output_dt > 0:
            raise ConfigurationError("output_dt must be positive")


@dataclass(frozen=True)
class BetaEvent:
    """At ``time`` the transmission rate of ``nodes`` becomes ``beta``."""

    time: float
    nodes: tuple
    beta: float

    def to_dict(self) -> dict:
        return {"time": self.time, "nodes": list(self.nodes), "beta": self.beta}


SCENARIO_KINDS = (
    "single-perturbation",
    "double-perturbation",
    "multiple-infections",
    "super-spreader",
    "custom",
)


_DEFAULT_SOURCES = {"multiple-infections": 5}
_DEFAULT_EVENT_BETA = {"multiple-infections": 0.6}
_DEFAULT_EVENT_TIMES = {"double-perturbation": (50.0,)}


@dataclass(frozen=True)
class ScenarioSpec:
    """Recipe for the initial condition and the transmission-rate schedule.

    ``source_nodes`` fixes the sources; otherwise ``n_sources`` are drawn at
    random. ``event_times`` and ``event_size`` drive the random event nodes of
    the multiple-infections and super-spreader kinds; ``events`` is used as-is
    for the custom kind. Fields left as None take a per-kind default.
    """

    kind: str = "single-perturbation"
    n_sources: Optional[int] = None
    initial_fraction: float = 0.002
    source_nodes: Optional[tuple] = None
    event_times: Optional[tuple] = None
    event_size: int = 5
    event_beta: Optional[float] = None
    events: tuple = ()
    horizon: int = 1000

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigurationError(f"unknown scenario kind {self.kind!r}")
        if not 0 < self.initial_fraction <= 1:
            raise ConfigurationError("initial_fraction must lie in (0, 1]")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        events = tuple(e if isinstance(e, BetaEvent) else BetaEvent(e["time"], tuple(e["nodes"]), e["beta"])
                       for e in self.events)
        object.__setattr__(self, "events", events)
        if self.source_nodes is not None:
            object.__setattr__(self, "source_nodes", tuple(int(v) for v in self.source_nodes))
        if self.event_times is not None:
            object.__setattr__(self, "event_times", tuple(float(t) for t in self.event_times))
        times = list(self.times) + [e.time for e in events]
        if any(not 1 <= t <= self.horizon for t in times):
            raise ConfigurationError("event times must lie within [1, horizon]")
        if self.kind == "double-perturbation" and len(self.times) != 1:
            raise ConfigurationError("double perturbation needs exactly one event time")
        if self.source_nodes is None and self.source_count < 1:
            raise ConfigurationError("need at least one source")
        if self.event_size < 1:
            raise ConfigurationError("event_size must be >= 1")

    @property
    def source_count(self) -> int:
        if self.source_nodes is not None:
            return len(self.source_nodes)
        return self.n_sources if self.n_sources is not None else _DEFAULT_SOURCES.get(self.kind, 1)

    @property
    def times(self) -> tuple:
        if self.event_times is not None:
            return self.event_times
        return _DEFAULT_EVENT_TIMES.get(self.kind, ())

    @property
    def beta_after_event(self) -> float:
        if self.event_beta is not None:
            return float(self.event_beta)
        return _DEFAULT_EVENT_BETA.get(self.kind, 0.8)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["events"] = [e.to_dict() for e in self.events]
        for key in ("event_times", "source_nodes"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        return cls(**d)


@dataclass(eq=False)
class RunRecord:
    """Recorded trajectory of one simulation.

    ``series`` is the infection fraction, shape ``(N, len(times))``; ``full_state``
    (when kept) has shape ``(len(times), 3, N)``.
    """

    series: np.ndarray
    times: np.ndarray
    full_state: Optional[np.ndarray] = None
    params: Optional[SirParams] = None
    scenario: Optional[ScenarioSpec] = None
    schedule: tuple = ()
    graph_fingerprint: Optional[str] = None
    seed: Optional[int] = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    n_steps: int = 0

    @property
    def horizon(self) -> int:
        return self.series.shape[1]


# --- right-hand sides --------------------------------------------------------


def sir_rhs_local(state, beta: float, gamma: float, H: float) -> np.ndarray:
    """Classic SIR in absolute counts for one location of population ``H``."""
    if not H > 0:
        raise ArgumentError("population must be positive")
    S, I, R = state
    infection = beta * S * I / H
    recovery = gamma * I
    return np.array([-infection, infection - recovery, recovery])


def diffusion(g: Graph, Y: np.ndarray, kappa: float) -> np.ndarray:
    """``(kappa / d_i) * sum_j w_ij (Y_j - Y_i)``, zero where ``d_i = 0``."""
    d = degrees(g)
    inv = np.divide(1.0, d, out=np.zeros_like(d), where=d > 0)
    return kappa * inv * (g.weights @ Y - d * Y)


def network_rhs(state: EpidemicState, params: SirParams, g: Graph) -> np.ndarray:
    """Time derivative of the network model as a ``(3, N)`` array (dS, dI, dR)."""
    if not state.n == params.n == g.n:
        raise ArgumentError("state, params and graph sizes differ")
    infection = params.beta * state.s * state.i
    recovery = params.gamma * state.i
    ds = -infection + diffusion(g, state.s, params.kappa)
    di = infection - recovery + diffusion(g, state.i, params.kappa)
    dr = recovery + diffusion(g, state.r, params.kappa)
    return np.stack([ds, di, dr])


# --- integration ---------------------------------------------------------------


def _csr_arrays(g: Graph):
    csr = g.csr()
    d = degrees(g)
    inv = np.divide(1.0, d, out=np.zeros_like(d), where=d > 0)
    return (
        csr.indptr.astype(np.int64),
        csr.indices.astype(np.int64),
        csr.data.astype(np.float64),
        inv,
    )


class Simulator:
    """Restartable integrator state for the network model.

    Holds the current graph, rates and state; ``advance_to`` integrates up to a
    grid time and records every output point on the way. The graph and rates
    can be swapped between calls, which is how events and control graphs are
    applied. The adaptive step size carries over across calls, so splitting a
    run at grid points does not change the trajectory.
    """

    def __init__(self, g: Graph, params: SirParams, init: EpidemicState,
                 cfg: IntegratorConfig = IntegratorConfig(), t0: float = 1.0,
                 keep_full: bool = True):
        if not init.n == params.n == g.n:
            raise ArgumentError("state, params and graph sizes differ")
        self.cfg = cfg
        self.t0 = float(t0)
        self.keep_full = keep_full
        self.kappa = params.kappa
        self.gamma = np.array(params.gamma)
        self.beta = np.array(params.beta)
        self.y = init.as_array().copy()
        self.h = cfg.initial_step
        self.k = 0  # number of output intervals completed
        self.n_steps = 0
        self._records = [self.y.copy()[None]]
        self.set_graph(g)

    @property
    def t(self) -> float:
        return self.t0 + self.k * self.cfg.output_dt

    def copy(self) -> "Simulator":
        """Independent snapshot; the graph object is shared since it is immutable."""
        new = object.__new__(Simulator)
        new.__dict__.update(self.__dict__)
        new.beta = self.beta.copy()
        new.y = self.y.copy()
        new._records = list(self._records)
        return new

    def set_graph(self, g: Graph):
        self.graph = g
        self._csr = _csr_arrays(g)

    def set_beta(self, nodes, value: float):
        self.beta[list(nodes)] = value

    def grid_index(self, t: float) -> int:
        k = (t - self.t0) / self.cfg.output_dt
        ki = int(round(k))
        if abs(k - ki) > 1e-9:
            raise ArgumentError(f"time {t} is not on the output grid")
        return ki

    def advance_to(self, t: float):
        k_target = self.grid_index(t)
        n_out = k_target - self.k
        if n_out < 0:
            raise ArgumentError(f"cannot integrate backwards to {t}")
        if n_out == 0:
            return
        indptr, indices, data, inv = self._csr
        cfg = self.cfg
        rec, y, t_end, h, status, steps = _kernels.integrate_segment(
            self.y, self.t, cfg.output_dt, n_out, indptr, indices, data, inv,
            self.beta, self.gamma, self.kappa,
            cfg.rel_tol, cfg.abs_tol, cfg.min_step, cfg.max_step, self.h,
        )
        self.n_steps += steps
        if status == _kernels.STEP_UNDERFLOW:
            raise StiffnessError(
                f"step size {h:.3g} fell below min_step {cfg.min_step:.3g} at t={t_end:.6g}",
                time=t_end, state=y,
            )
        if status == _kernels.NEGATIVE_STATE:
            raise IntegrityError(
                f"compartment fell below -{_kernels.NEGATIVE_TOL:g} at t={t_end:.6g}",
                time=t_end, state=y,
            )
        self.y = y
        self.h = h
        self.k = k_target
        self._records.append(rec)

    def state(self) -> EpidemicState:
        return EpidemicState.from_array(self.y)

    def states(self) -> np.ndarray:
        return np.concatenate(self._records, axis=0)

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.k + 1) * self.cfg.output_dt

    def infection(self) -> np.ndarray:
        return np.ascontiguousarray(self.states()[:, 1, :].T)


def _check_schedule(schedule, n: int, t0: float, t_end: float):
    for ev in schedule:
        if not t0 <= ev.time <= t_end:
            raise ArgumentError(f"event time {ev.time} outside [{t0}, {t_end}]")
        if any(not 0 <= v < n for v in ev.nodes):
            raise ArgumentError(f"event nodes out of range: {list(ev.nodes)}")


def integrate(g: Graph, params: SirParams, init: EpidemicState,
              cfg: IntegratorConfig = IntegratorConfig(), horizon: int = 1000,
              schedule: Sequence[BetaEvent] = (), *, keep_full: bool = True,
              scenario: Optional[ScenarioSpec] = None, seed: Optional[int] = None) -> RunRecord:
    """Integrate from t = 1 to t = horizon, recording every ``output_dt``.

    Transmission-rate events take effect exactly at their time; the integrator
    stops there and resumes with the new rates.
    """
    sim = Simulator(g, params, init, cfg, t0=1.0, keep_full=keep_full)
    schedule = sorted(schedule, key=lambda e: e.time)
    _check_schedule(schedule, g.n, 1.0, float(horizon))
    for ev in schedule:
        sim.advance_to(ev.time)
        sim.set_beta(ev.nodes, ev.beta)
    sim.advance_to(float(horizon))
    return _record(sim, params, schedule, scenario, seed)


def _record(sim: Simulator, params, schedule, scenario, seed) -> RunRecord:
    states = sim.states()
    return RunRecord(
        series=np.ascontiguousarray(states[:, 1, :].T),
        times=sim.times(),
        full_state=states if sim.keep_full else None,
        params=params,
        scenario=scenario,
        schedule=tuple(schedule),
        graph_fingerprint=sim.graph.fingerprint(),
        seed=seed,
        integrator=sim.cfg,
        n_steps=sim.n_steps,
    )


def integrate_fixed_rk4(g: Graph, params: SirParams, init: EpidemicState,
                        step: float, duration: float) -> EpidemicState:
    """Fixed-step classic RK4 over ``duration`` (must be a multiple of ``step``)."""
    n_steps = int(round(duration / step))
    if abs(n_steps * step - duration) > 1e-9 * max(1.0, duration):
        raise ArgumentError("duration must be an integer multiple of step")
    indptr, indices, data, inv = _csr_arrays(g)
    y = _kernels.integrate_fixed(
        init.as_array(), step, n_steps, indptr, indices, data, inv,
        np.array(params.beta), np.array(params.gamma), params.kappa,
    )
    return EpidemicState.from_array(np.clip(y, 0.0, 1.0))


# --- scenarios -------------------------------------------------------------------


def make_scenario(spec: ScenarioSpec, g: Graph, seed: int = 0):
    """Draw sources and event nodes for ``spec`` on ``g``.

    Returns ``(init, schedule)``; identical seeds give identical output.
    """
    n = g.n
    rng = np.random.default_rng(seed)
    if spec.source_nodes is not None:
        sources = sorted(int(v) for v in spec.source_nodes)
        if any(not 0 <= v < n for v in sources):
            raise ConfigurationError(f"source nodes out of range: {sources}")
    else:
        k = spec.source_count
        if k > n:
            raise ConfigurationError(f"cannot draw {k} sources from {n} nodes")
        sources = sorted(rng.choice(n, size=k, replace=False).tolist())
    init = EpidemicState.seeded(n, sources, spec.initial_fraction)

    schedule = []
    if spec.kind == "double-perturbation":
        schedule.append(BetaEvent(spec.times[0], tuple(sources), spec.beta_after_event))
    elif spec.kind == "multiple-infections":
        used = set(sources)
        for t in spec.times:
            pool = np.array([v for v in range(n) if v not in used])
            if pool.size < spec.event_size:
                raise ConfigurationError(
                    f"only {pool.size} unused nodes left for an event of size {spec.event_size}"
                )
            chosen = sorted(rng.choice(pool, size=spec.event_size, replace=False).tolist())
            used.update(chosen)
            schedule.append(BetaEvent(t, tuple(chosen), spec.beta_after_event))
    elif spec.kind == "super-spreader":
        pool = np.array([v for v in range(n) if v not in set(sources)])
        if pool.size < spec.event_size:
            raise ConfigurationError("not enough nodes for the super-spreader events")
        for t in spec.times:
            chosen = sorted(rng.choice(pool, size=spec.event_size, replace=False).tolist())
            schedule.append(BetaEvent(t, tuple(chosen), spec.beta_after_event))
    elif spec.kind == "custom":
        schedule.extend(spec.events)
    schedule.sort(key=lambda e: e.time)
    _check_schedule(schedule, n, 1.0, float(spec.horizon))
    return init, schedule


# Disease rates for the hybrid H1N1 run are not restated alongside the network
# coupling; these are placeholders meant to be overridden from a config file.
H1N1_BETA = 0.4
H1N1_GAMMA = 0.25
H1N1_KAPPA = 0.0028


def h1n1_config(g: Graph, *, source: int = 0, super_spreader: bool = False,
                event_times: Sequence[float] = (), beta: float = H1N1_BETA,
                gamma: float = H1N1_GAMMA, kappa: float = H1N1_KAPPA,
                spreader_fraction: float = 0.02, spreader_beta: float = 0.8,
                initial_fraction: float = 0.002, horizon: int = 1000):
    """Parameters and scenario for the airport-network H1N1 configuration.

    The super-spreader variant raises beta to ``spreader_beta`` on
    ``ceil(spreader_fraction * N)`` random nodes at each of ``event_times``.
    """
    if not 0 <= source < g.n:
        raise ConfigurationError(f"source node {source} out of range")
    params = SirParams.uniform(g.n, beta, gamma, kappa)
    if super_spreader:
        if not event_times:
            raise ConfigurationError("super-spreader variant needs event times")
        spec = ScenarioSpec(
            kind="super-spreader",
            source_nodes=(source,),
            initial_fraction=initial_fraction,
            event_times=tuple(float(t) for t in event_times),
            event_size=math.ceil(spreader_fraction * g.n),
            event_beta=spreader_beta,
            horizon=horizon,
        )
    else:
        spec = ScenarioSpec(
            kind="single-perturbation",
            source_nodes=(source,),
            initial_fraction=initial_fraction,
            horizon=horizon,
        )
    return params, spec


def airport_like_graph(n: int = 1292, m: int = 3, seed: int = 0) -> Graph:
    """Seeded scale-free stand-in for the airport network; node 0 is labelled ``MEX``."""
    from .graph import ScaleFreeConfig, build_scale_free_graph

    g = build_scale_free_graph(ScaleFreeConfig(n=n, m=m, seed=seed))
    labels = ["MEX"] + [f"AP{i:04d}" for i in range(1, n)]
    return Graph(g.weights, coords=g.coords, labels=labels)
