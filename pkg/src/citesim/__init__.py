"""Synthetic citation networks with controllable citation inflation.

Grows preferential-attachment citation networks with a tunable
redirection (triadic closure) mechanism, measures the disruption-index
family over citation-window subgraphs, and provides the aggregate
series, distribution fits, and regression tooling used to study how
reference-list growth biases those measures.
"""

__version__ = "0.1.0"

from .netcore import (
    CitationNetwork,
    GrowthSchedule,
    NetworkBuilder,
    citations_before,
    network_from_lists,
    schedule_n,
    schedule_r,
)
from .generator import GeneratorConfig, generate, lambda_of_beta
from .disruption import (
    DisruptionRecord,
    RecordTable,
    cd_index,
    cd_nok,
    extract_subgraph,
    measure_all,
    rk,
)
from .analytics import (
    SeriesTable,
    cd_distribution,
    correlate,
    fit_extreme_value,
    fit_normal,
    series,
    znorm_citations,
)
from .regress import ObservationTable, marginal_effect, ols_fixed_effects
from .scenarios import SCENARIOS, ScenarioSpec

__all__ = [
    "__version__",
    "CitationNetwork",
    "GrowthSchedule",
    "NetworkBuilder",
    "citations_before",
    "network_from_lists",
    "schedule_n",
    "schedule_r",
    "GeneratorConfig",
    "generate",
    "lambda_of_beta",
    "DisruptionRecord",
    "RecordTable",
    "cd_index",
    "cd_nok",
    "rk",
    "extract_subgraph",
    "measure_all",
    "SeriesTable",
    "series",
    "cd_distribution",
    "fit_extreme_value",
    "fit_normal",
    "znorm_citations",
    "correlate",
    "ObservationTable",
    "ols_fixed_effects",
    "marginal_effect",
    "SCENARIOS",
    "ScenarioSpec",
]
