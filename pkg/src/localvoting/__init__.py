"""Distributed TDMA slot scheduling by local voting, with baselines and a simulator."""
from .config import ScenarioConfig, SweepSpec, load_scenario, parse_scenario
from .engine import SimulationResult, run
from .kernels import BACKEND
from .topology import Topology, generate_random_topology

__version__ = "0.1.0"

__all__ = ["BACKEND", "ScenarioConfig", "SimulationResult", "SweepSpec", "Topology",
           "generate_random_topology", "load_scenario", "parse_scenario", "run"]
