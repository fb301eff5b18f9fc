"""Experiment configuration, drivers and the command-line front end."""
from .config import ExperimentConfig, load, loads, dumps

__all__ = ["ExperimentConfig", "load", "loads", "dumps"]
