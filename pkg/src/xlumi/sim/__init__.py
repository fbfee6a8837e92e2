"""Scenario engine, attack runs and the punishment-channel baseline."""

from xlumi.sim.adversarial import ATTACKS, AdversarialResult, run_adversarial
from xlumi.sim.baseline import PunishmentBaseline, UnsupportedEvent, run_punishment_baseline
from xlumi.sim.engine import (
    InvariantViolation,
    Metrics,
    RunResult,
    Sample,
    SimConfig,
    metrics_report,
    run_scenario,
    usage_level_check,
)
from xlumi.sim.script import MalformedScript, Scenario, ScenarioEvent, load_script, parse_script

__all__ = [
    "ATTACKS",
    "AdversarialResult",
    "InvariantViolation",
    "MalformedScript",
    "Metrics",
    "PunishmentBaseline",
    "RunResult",
    "Sample",
    "Scenario",
    "ScenarioEvent",
    "SimConfig",
    "UnsupportedEvent",
    "load_script",
    "metrics_report",
    "parse_script",
    "run_adversarial",
    "run_punishment_baseline",
    "run_scenario",
    "usage_level_check",
]
