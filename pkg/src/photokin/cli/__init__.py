from .scenario import Scenario, ScenarioError, parse_scenario
from .runner import emit_output, run_scan

__all__ = ["Scenario", "ScenarioError", "parse_scenario", "run_scan", "emit_output"]
