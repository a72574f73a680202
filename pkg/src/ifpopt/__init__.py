"""Passivity-certified distributed optimization with event-triggered communication."""

from .ct_engine import CtConfig, run_ct
from .dt_engine import DtConfig, run_dt
from .graph import GraphSchedule, WeightedDigraph, check_ujsc, paper_schedule
from .objective import ObjectiveSpec, from_name, paper_objectives, solve_centralized_optimum
from .passivity import (certify, ifp_index_ct, ifp_index_dt, ifp_index_dt_robust,
                        max_stepsize)
from .scenario import load_scenario, paper_scenario
from .trace import compute_metrics
from .trigger import TriggerPolicy

__version__ = "0.1.0"

__all__ = [
    "CtConfig", "DtConfig", "GraphSchedule", "ObjectiveSpec", "TriggerPolicy",
    "WeightedDigraph", "certify", "check_ujsc", "compute_metrics", "from_name",
    "ifp_index_ct", "ifp_index_dt", "ifp_index_dt_robust", "load_scenario",
    "max_stepsize", "paper_objectives", "paper_schedule", "paper_scenario", "run_ct",
    "run_dt", "solve_centralized_optimum",
]
