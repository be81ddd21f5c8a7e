"""Scenario runner, report emitter and command-line interface."""

from .report import SCHEMA_VERSION, Report, dumps, emit_report, load_report, validate_report
from .scenario import (
    KINDS,
    Scenario,
    load_scenario,
    resolve_seed,
    run_scenario,
    scenario_from_dict,
    validate_scenario,
)
