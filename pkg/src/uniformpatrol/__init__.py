"""Optimal patrols against an attacker who watches a uniformed patroller."""

from .errors import (
    AwayChainAbsorbed,
    InvalidDuration,
    InvalidParams,
    InvalidSize,
    NoConvergence,
    PatrolError,
    UnreachableDelay,
)
from .networks import Family, Network, ParamSpace, build_matrix, build_network, param_space, random_walk_params
from .dynamics import AwayDistribution, AwaySequence, StationaryCycle, away_sequence, hit_vector, stationary_away
from .interception import AttackPlan, BestResponse, InterceptionCurve, best_response, intercept_prob, interception_curve, limit_value
from .stackelberg import SolveConfig, SolveResult, objective_value, solve, solve_family, verify_conjecture_reflection
from .extensions import MemoryStarChain, VisionChain, memory_solve, vision_solve
from .montecarlo import SimConfig, SimEstimate, simulate, simulate_extension

__version__ = "0.1.0"

__all__ = [
    "AttackPlan", "AwayChainAbsorbed", "AwayDistribution", "AwaySequence", "BestResponse", "Family",
    "InterceptionCurve", "InvalidDuration", "InvalidParams", "InvalidSize", "MemoryStarChain", "Network",
    "NoConvergence", "ParamSpace", "PatrolError", "SimConfig", "SimEstimate", "SolveConfig", "SolveResult",
    "StationaryCycle", "UnreachableDelay", "VisionChain", "away_sequence", "best_response", "build_matrix",
    "build_network", "hit_vector", "intercept_prob", "interception_curve", "limit_value", "memory_solve",
    "objective_value", "param_space", "random_walk_params", "simulate", "simulate_extension", "solve",
    "solve_family", "stationary_away", "verify_conjecture_reflection", "vision_solve",
]
