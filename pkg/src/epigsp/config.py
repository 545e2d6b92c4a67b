"""One declarative YAML document holding every tunable of the pipeline.

Each top-level key is a section; unknown keys are rejected so typos surface
as configuration errors instead of silently falling back to defaults.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .control import STRATEGIES, IdentifyConfig, InterventionPlan
from .epidemic import IntegratorConfig, ScenarioSpec, SirParams
from .errors import ConfigurationError
from .experiments import ControlExperimentConfig
from .graph import DistanceGraphConfig, ScaleFreeConfig
from .spectral import SgwtConfig


def _tuples(obj):
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, list):
            object.__setattr__(obj, f.name, tuple(v))


@dataclass(frozen=True)
class GraphSection:
    kind: str = "distance"  # distance | scale-free
    n: int = 400
    box_side: float = 10.0
    threshold: float = 1.95
    sigma2: Optional[float] = None
    m: int = 3

    def build_config(self, seed: int):
        if self.kind == "distance":
            return DistanceGraphConfig(self.n, self.box_side, self.threshold, self.sigma2, seed)
        if self.kind == "scale-free":
            return ScaleFreeConfig(self.n, self.m, seed)
        raise ConfigurationError(f"unknown graph kind {self.kind!r}")


@dataclass(frozen=True)
class SirSection:
    beta: float = 0.3
    gamma: float = 0.1
    kappa: float = 0.1

    def params(self, n: int) -> SirParams:
        return SirParams.uniform(n, self.beta, self.gamma, self.kappa)


@dataclass(frozen=True)
class ScenarioSection:
    kind: str = "single-perturbation"
    n_sources: Optional[int] = None
    initial_fraction: float = 0.002
    source_nodes: Optional[tuple] = None
    event_times: Optional[tuple] = None
    event_size: int = 5
    event_beta: Optional[float] = None
    horizon: int = 1000

    def __post_init__(self):
        _tuples(self)

    def spec(self) -> ScenarioSpec:
        return ScenarioSpec(**dataclasses.asdict(self))


@dataclass(frozen=True)
class IdentifySection:
    strategy: str = "TLV"
    r: int = 10
    p: float = 4.0
    alpha: float = 0.5
    normalized: bool = True
    hpf_fraction: float = 0.25
    times: Optional[tuple] = None  # steps to evaluate; None means every step from r on
    sgwt_scales: int = 4
    sgwt_scale_range: float = 20.0
    sgwt_max_nodes: int = 3000

    def __post_init__(self):
        _tuples(self)

    def config(self) -> IdentifyConfig:
        sg = SgwtConfig(n_scales=self.sgwt_scales, scale_range=self.sgwt_scale_range,
                        max_nodes=self.sgwt_max_nodes)
        return IdentifyConfig(self.strategy, self.r, self.p, self.alpha, self.normalized,
                              self.hpf_fraction, sg)


@dataclass(frozen=True)
class ControlSection:
    strategy: str = "TLV"
    n_sources: int = 5
    initial_fraction: float = 0.002
    event_size: int = 5
    event_beta: float = 0.6
    fractions: tuple = (0.3, 0.6, 0.9)
    percents: tuple = (5.0, 10.0, 15.0)
    t_c: int = 10
    horizon: int = 1000
    methods: tuple = ("Max", "HPF", "LV", "TLV", "BC", "CC")

    def __post_init__(self):
        _tuples(self)
        for m in (self.strategy, *self.methods):
            if m not in STRATEGIES:
                raise ConfigurationError(f"unknown control method {m!r}")
        if len(self.fractions) != len(self.percents):
            raise ConfigurationError("fractions and percents must have the same length")
        InterventionPlan(tuple((k + 1, p) for k, p in enumerate(self.percents)), self.t_c)


@dataclass(frozen=True)
class SweepSection:
    trials: int = 50
    alpha_grid: Optional[tuple] = None  # None means the default 27-value grid
    workers: int = 1

    def __post_init__(self):
        _tuples(self)
        if self.trials < 1 or self.workers < 1:
            raise ConfigurationError("trials and workers must be >= 1")
        if self.alpha_grid is not None and any(not 0 <= a <= 1 for a in self.alpha_grid):
            raise ConfigurationError("alpha grid values must lie in [0, 1]")


@dataclass(frozen=True)
class IngestSection:
    threshold_km: float = 100.0
    sigma_km: Optional[float] = None
    planar: bool = False
    daily: bool = False
    repair: bool = False

    def __post_init__(self):
        if not self.threshold_km > 0:
            raise ConfigurationError("threshold_km must be positive")


@dataclass(frozen=True)
class ReportSection:
    metric: str = "TLV"  # TLV | LV | HPF | Max
    alpha: float = 0.5
    r: int = 10
    hpf_fraction: float = 0.25
    db_floor: float = -120.0

    def __post_init__(self):
        if self.metric not in ("TLV", "LV", "HPF", "Max"):
            raise ConfigurationError(f"unknown report metric {self.metric!r}")
        if self.r < 2:
            raise ConfigurationError("report window must cover at least 2 steps")
        if not 0 <= self.alpha <= 1:
            raise ConfigurationError("alpha must lie in [0, 1]")


SECTIONS = {
    "graph": GraphSection,
    "sir": SirSection,
    "integrator": IntegratorConfig,
    "scenario": ScenarioSection,
    "identify": IdentifySection,
    "control": ControlSection,
    "sweep": SweepSection,
    "ingest": IngestSection,
    "report": ReportSection,
}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    graph: GraphSection = field(default_factory=GraphSection)
    sir: SirSection = field(default_factory=SirSection)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    identify: IdentifySection = field(default_factory=IdentifySection)
    control: ControlSection = field(default_factory=ControlSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    ingest: IngestSection = field(default_factory=IngestSection)
    report: ReportSection = field(default_factory=ReportSection)

    def validate(self):
        """Build every module-level config once so invariant violations surface on load."""
        self.graph.build_config(self.seed)
        self.sir.params(1)
        self.scenario.spec()
        self.identify.config()
        self.experiment()

    def experiment(self) -> ControlExperimentConfig:
        c = self.control
        return ControlExperimentConfig(
            beta=self.sir.beta, gamma=self.sir.gamma, kappa=self.sir.kappa,
            horizon=c.horizon, n_sources=c.n_sources, initial_fraction=c.initial_fraction,
            event_size=c.event_size, event_beta=c.event_beta, fractions=c.fractions,
            percents=c.percents, t_c=c.t_c, r=self.identify.r,
            normalized=self.identify.normalized, methods=c.methods,
            alpha_grid=self.sweep.alpha_grid, integrator=self.integrator,
        )

    def to_dict(self) -> dict:
        def plain(v):
            return list(v) if isinstance(v, tuple) else v

        out = {"seed": self.seed}
        for name in SECTIONS:
            section = getattr(self, name)
            out[name] = {f.name: plain(getattr(section, f.name)) for f in dataclasses.fields(section)}
        return out

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "PipelineConfig":
        data = dict(data or {})
        unknown = set(data) - set(SECTIONS) - {"seed"}
        if unknown:
            raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        if "seed" in data:
            seed = data.pop("seed")
            if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
                raise ConfigurationError(f"seed must be a non-negative integer, got {seed!r}")
            kwargs["seed"] = seed
        for name, body in data.items():
            section_cls = SECTIONS[name]
            if not isinstance(body, dict):
                raise ConfigurationError(f"section {name!r} must be a mapping")
            names = {f.name for f in dataclasses.fields(section_cls)}
            bad = set(body) - names
            if bad:
                raise ConfigurationError(f"unknown keys in {name!r}: {sorted(bad)}")
            try:
                kwargs[name] = section_cls(**body)
            except (TypeError, ValueError) as e:
                raise ConfigurationError(f"section {name!r}: {e}") from None
        cfg = cls(**kwargs)
        try:
            cfg.validate()
        except (TypeError, ValueError) as e:
            raise ConfigurationError(str(e)) from None
        return cfg

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    def with_seed(self, seed: Optional[int]) -> "PipelineConfig":
        return self if seed is None else dataclasses.replace(self, seed=seed)


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-8`` style numbers as floats."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)


def load_config(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
        data = yaml.load(text, Loader=_Loader)
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigurationError(f"config {path} is not valid YAML: {e}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigurationError(f"config {path} must be a mapping of sections")
    return PipelineConfig.from_dict(data)
