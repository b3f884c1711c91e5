"""Discrete-event simulator for TSN traffic over a 5G indoor-factory radio link."""

from .config import load_config
from .engine import build, run, run_batch, simulate
from .scenario import Scenario

__all__ = ["Scenario", "build", "load_config", "run", "run_batch", "simulate"]
__version__ = "0.1.0"
