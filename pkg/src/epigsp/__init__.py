"""Temporal local variation of epidemic graph signals.

Build graphs, simulate metapopulation SIR dynamics, rank influential nodes
with graph-signal variation metrics and evaluate staged isolation.
"""

from .control import (
    STRATEGIES,
    ControlOutcome,
    IdentifyConfig,
    InfluentialSet,
    InterventionPlan,
    apply_control,
    identify,
    identify_all,
    staged_control,
)
from .epidemic import (
    BetaEvent,
    EpidemicState,
    IntegratorConfig,
    RunRecord,
    ScenarioSpec,
    SirParams,
    Simulator,
    h1n1_config,
    integrate,
    make_scenario,
)
from .errors import (
    ArgumentError,
    CapacityError,
    ConfigurationError,
    EpigspError,
    IngestionError,
    IntegrationError,
    IntegrityError,
    StiffnessError,
    WindowError,
)
from .graph import (
    DistanceGraphConfig,
    Graph,
    ScaleFreeConfig,
    build_distance_graph,
    build_scale_free_graph,
    laplacian,
)
from .spectral import HpfConfig, SgwtConfig, Spectrum, eigendecompose, graph_hpf, sgwt_coefficients
from .variation import VariationField, local_variation, tlv, tlv_normalized, total_variation

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "BetaEvent",
    "CapacityError",
    "ConfigurationError",
    "ControlOutcome",
    "DistanceGraphConfig",
    "EpidemicState",
    "EpigspError",
    "Graph",
    "HpfConfig",
    "IdentifyConfig",
    "InfluentialSet",
    "IngestionError",
    "IntegrationError",
    "IntegratorConfig",
    "IntegrityError",
    "InterventionPlan",
    "RunRecord",
    "STRATEGIES",
    "ScaleFreeConfig",
    "ScenarioSpec",
    "SgwtConfig",
    "Simulator",
    "SirParams",
    "Spectrum",
    "StiffnessError",
    "VariationField",
    "WindowError",
    "apply_control",
    "build_distance_graph",
    "build_scale_free_graph",
    "eigendecompose",
    "graph_hpf",
    "h1n1_config",
    "identify",
    "identify_all",
    "integrate",
    "laplacian",
    "local_variation",
    "make_scenario",
    "sgwt_coefficients",
    "staged_control",
    "tlv",
    "tlv_normalized",
    "total_variation",
]
