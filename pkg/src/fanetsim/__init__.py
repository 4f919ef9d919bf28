"""Deterministic discrete-event simulator for flying ad-hoc networks with brokerless pub/sub."""

__version__ = "0.1.0"

from .scenario import Scenario, ScenarioError, load_scenario  # noqa: E402
from .runner import run_scenario, simulate  # noqa: E402

__all__ = ["Scenario", "ScenarioError", "load_scenario", "run_scenario", "simulate",
           "__version__"]
