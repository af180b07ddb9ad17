"""Simulation and exact analysis of network constructor protocols."""

from .catalog import builtin, catalog_names, scenario, scenario_for
from .dsl import parse_protocol, serialize_protocol, validate_protocol
from .engine import (
    Overrides,
    apply_interaction,
    initial_configuration,
    output_graph,
    run_until,
    trial_rng,
    uniform_pair,
)
from .graphs import Graph, graphs_isomorphic
from .kernel import run_fast
from .model import ChangeRecord, Configuration, Protocol, Rule, RunResult

__all__ = [
    "ChangeRecord", "Configuration", "Graph", "Overrides", "Protocol", "Rule", "RunResult",
    "apply_interaction", "builtin", "catalog_names", "graphs_isomorphic",
    "initial_configuration", "output_graph", "parse_protocol", "run_fast", "run_until",
    "scenario", "scenario_for", "serialize_protocol", "trial_rng", "uniform_pair",
    "validate_protocol",
]
