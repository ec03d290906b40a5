"""Quantum-repeater chain calculators and a discrete-event simulator."""

from .engine import (
    RepeaterChainConfig,
    RunStatistics,
    analytic_model,
    direct_transmission_rate,
    run_trials,
    simulate,
    sweep,
)
from .generation import EmissionPulse, LinkHardware, dlcz_herald, single_emitter_herald
from .memory import AfcMemory, AfcParams
from .photonics import CavityParams, DetectorParams, EmitterParams, FiberParams
from .repeater import AnalyticLinkModel, PurificationPlan, SwapStation, expected_chain_time, purify, swap
from .scenario import load_scenario, parse_scenario
from .states import FockSystem, PairState, fidelity

__all__ = [
    "AfcMemory", "AfcParams", "AnalyticLinkModel", "CavityParams", "DetectorParams",
    "EmissionPulse", "EmitterParams", "FiberParams", "FockSystem", "LinkHardware",
    "PairState", "PurificationPlan", "RepeaterChainConfig", "RunStatistics", "SwapStation",
    "analytic_model", "direct_transmission_rate", "dlcz_herald", "expected_chain_time",
    "fidelity", "load_scenario", "parse_scenario", "purify", "run_trials", "simulate",
    "single_emitter_herald", "swap", "sweep",
]
