"""Entanglement swapping, purification and waiting-time analytics.

A swap reads out the two inner memories of adjacent pairs into photons,
mixes them on a 50:50 beamsplitter and keeps the single-detection
outcomes. A herald can be false: two photons of which one was lost, or a
dark count on top of nothing, both leave the outer memories outside the
entangled block. That error weight is what makes ``w_ent / w_vac`` fall
with every nesting level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .generation import herald_kernel
from .photonics import DetectorParams
from .states import (
    FockSystem,
    PairState,
    beamsplitter,
    loss_channel,
    pair_from_registers,
    single_detection_outcomes,
)


@dataclass(frozen=True)
class SwapStation:
    readout_efficiency: float = 1.0
    detector: DetectorParams = field(default_factory=DetectorParams)
    indistinguishability: float = 1.0

    def __post_init__(self) -> None:
        for name in ("readout_efficiency", "indistinguishability"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")

    @property
    def arm_efficiency(self) -> float:
        return self.readout_efficiency * self.detector.efficiency


@dataclass(frozen=True)
class PurificationPlan:
    """Nested purification: ``L`` links joined per level, ``M`` pairs per purified pair, ``n`` levels."""

    branching_l: int
    pairs_m: int
    levels_n: int
    total_links: int | None = None

    def __post_init__(self) -> None:
        if self.branching_l < 2:
            raise ValueError("branching_l must be at least 2")
        if self.pairs_m < 1:
            raise ValueError("pairs_m must be at least 1")
        if self.levels_n < 0:
            raise ValueError("levels_n must be non-negative")
        expected = self.branching_l**self.levels_n
        if self.total_links is None:
            object.__setattr__(self, "total_links", expected)
        elif self.total_links != expected:
            raise ValueError(
                f"total_links = {self.total_links} but branching_l**levels_n = {expected}"
            )


@dataclass(frozen=True)
class AnalyticLinkModel:
    """Inputs of the waiting-time Markov chain.

    ``success_prob_per_attempt`` is the per-mode heralding probability; a
    round of ``mode_capacity`` modes succeeds with 1 - (1 - p)^N.
    """

    success_prob_per_attempt: float
    attempt_interval: float
    mode_capacity: int = 1
    swap_success_prob: float = 1.0
    cutoff: float = math.inf

    def __post_init__(self) -> None:
        for name in ("success_prob_per_attempt", "swap_success_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
        if not self.attempt_interval > 0:
            raise ValueError("attempt_interval must be positive")
        if self.mode_capacity < 1:
            raise ValueError("mode_capacity must be at least 1")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")

    @property
    def round_success_prob(self) -> float:
        return -math.expm1(self.mode_capacity * math.log1p(-self.success_prob_per_attempt)) \
            if self.success_prob_per_attempt < 1 else 1.0


# --------------------------------------------------------------------------
# swapping
# --------------------------------------------------------------------------


def swap(
    left: PairState,
    right: PairState,
    station: SwapStation = SwapStation(),
    *,
    method: str = "closed",
) -> tuple[float, PairState]:
    """Bell measurement on the inner memories of two adjacent pairs.

    Returns the probability that exactly one detector heralds and the
    outer pair conditioned on detector 1. Detector 2 yields the same
    weights with the sign flipped.
    """
    if left.right_node != right.left_node:
        raise ValueError(
            f"pairs do not share a node: {left.right_node!r} != {right.left_node!r}"
        )
    if method not in ("closed", "oracle"):
        raise ValueError(f"method must be 'closed' or 'oracle', got {method!r}")
    meta = dict(
        created_at=min(left.created_at, right.created_at),
        left_node=left.left_node,
        right_node=right.right_node,
    )
    if method == "oracle":
        return _swap_oracle(left, right, station, meta)

    det = station.detector
    k = herald_kernel(station.arm_efficiency, det.dark_count_prob_per_gate, det.number_resolving)
    wl, wr = left.w_ent, right.w_ent
    both = wl * wr
    one = wl * (1.0 - wr) + (1.0 - wl) * wr
    none = (1.0 - wl) * (1.0 - wr)
    # an entangled pair puts its excitation in the inner memory half the time
    per_detector = both * (k.f0 / 4 + k.f1 / 2 + k.f2 / 4) + one * (k.f0 + k.f1) / 2 + none * k.f0
    if per_detector <= 0:
        return 0.0, PairState.entangled(0.0, 0.0, **meta)
    single = both * k.f1 / 2 + one * k.f0 / 2
    coherent = both * k.g / 2 * left.coherence * right.coherence
    coherence = coherent / single if single > 0 else 0.0
    out = PairState.entangled(
        single / per_detector,
        min(coherence * station.indistinguishability, 1.0),
        sign=left.sign * right.sign,
        **meta,
    )
    return 2 * per_detector, out


def _pair_system(ps: PairState) -> FockSystem:
    """Embed a pair into two Fock modes, error weight on vacuum."""
    rho = ps.density_matrix()
    basis = [(0, 0), (0, 1), (1, 0), (1, 1)]
    entries = {
        (basis[i], basis[j]): rho[i, j] for i in range(4) for j in range(4) if rho[i, j] != 0
    }
    return FockSystem.from_populations(entries, mode_count=2)


def _swap_oracle(left: PairState, right: PairState, station: SwapStation, meta: dict):
    a, b = _pair_system(left), _pair_system(right)
    sys = FockSystem(np.kron(a.density_matrix, b.density_matrix), mode_count=4)
    sys = loss_channel(loss_channel(sys, 1, station.readout_efficiency), 2, station.readout_efficiency)
    sys = beamsplitter(sys, 1, 2)
    det = station.detector
    outcomes = single_detection_outcomes(
        sys, 1, 2, det.efficiency, det.dark_count_prob_per_gate, det.number_resolving
    )
    success = sum(prob for _, prob, _ in outcomes)
    _, _, state = outcomes[0]
    if state is None:
        return success, PairState.entangled(0.0, 0.0, **meta)
    out = pair_from_registers(state, **meta)
    # the oracle sees the input signs through the off-diagonal phase already
    out = out.replace(coherence=min(out.coherence * station.indistinguishability, 1.0))
    return success, out


def _relabel_right(ps: PairState) -> PairState:
    """Copy of ``ps`` placed immediately to the right of itself."""
    lo, hi = ps.left_node, ps.right_node
    if isinstance(lo, (int, np.integer)) and isinstance(hi, (int, np.integer)):
        return ps.replace(left_node=hi, right_node=hi + (hi - lo))
    return ps.replace(left_node=hi, right_node=(hi, "copy"))


def vacuum_ratio_decay(
    initial: PairState, swap_count: int, station: SwapStation = SwapStation()
) -> list[PairState]:
    """Swap identical copies level by level; element ``k`` is the pair after ``k + 1`` levels."""
    if swap_count < 1:
        raise ValueError("swap_count must be at least 1")
    out = []
    current = initial
    for _ in range(swap_count):
        _, current = swap(current, _relabel_right(current), station)
        out.append(current)
    return out


# --------------------------------------------------------------------------
# purification
# --------------------------------------------------------------------------


def vacuum_filter(a: PairState, b: PairState) -> tuple[float, PairState]:
    """Keep the pair only when both inputs hold their excitation.

    Succeeds with probability ``a.w_ent * b.w_ent`` and returns a pair
    free of vacuum with coherence ``a.coherence * b.coherence``.
    """
    out = PairState(
        1.0, 0.0, a.coherence * b.coherence, a.sign,
        created_at=min(a.created_at, b.created_at),
        left_node=a.left_node, right_node=a.right_node,
    )
    return a.w_ent * b.w_ent, out


PurificationMap = Callable[[PairState, PairState], "tuple[float, PairState]"]


def purify(a: PairState, b: PairState, rule: PurificationMap = vacuum_filter) -> tuple[float, PairState]:
    """Distil two pairs between the same endpoints with ``rule`` (vacuum filtering by default)."""
    if (a.left_node, a.right_node) != (b.left_node, b.right_node):
        raise ValueError(
            f"pairs span different endpoints: {(a.left_node, a.right_node)} vs {(b.left_node, b.right_node)}"
        )
    return rule(a, b)


def resource_count(plan: PurificationPlan) -> int:
    """Elementary pairs consumed per end-to-end pair, (L M)^n."""
    return (plan.branching_l * plan.pairs_m) ** plan.levels_n


def resource_power_law(plan: PurificationPlan) -> float:
    """The same count written as N^(log_L M + 1), evaluated in floating point."""
    exponent = math.log(plan.pairs_m) / math.log(plan.branching_l) + 1.0
    return float(plan.total_links) ** exponent


# --------------------------------------------------------------------------
# waiting times
# --------------------------------------------------------------------------

_TAIL = 1e-12
# matches the engine, which treats times within 1e-6 of a round boundary as on it
_ROUND_EPS = 1e-6


def cutoff_rounds(cutoff: float, interval: float) -> tuple[float, float]:
    """(last swappable age, age at which the memory is released) in rounds."""
    if math.isinf(cutoff):
        return math.inf, math.inf
    ratio = cutoff / interval
    return math.floor(ratio + _ROUND_EPS), math.ceil(ratio - _ROUND_EPS)


def expected_chain_time(model: AnalyticLinkModel, num_links: int) -> float:
    """Expected time to the first end-to-end pair of a 1- or 2-link chain.

    Links run in lock-step rounds of ``attempt_interval``. A pair is
    created when its round is launched and is heralded one round later.
    For two links the middle node swaps as soon as both hold a pair; a
    failed swap sends both links back to generation. A pair older than
    ``cutoff`` can no longer be swapped and its link restarts at the next
    round boundary. The distribution over link states is propagated round
    by round until less than 1e-12 of the probability mass remains.
    """
    if num_links not in (1, 2):
        raise ValueError("expected_chain_time supports 1 or 2 links; longer chains need the engine")
    q = model.round_success_prob
    if q <= 0:
        return math.inf
    if num_links == 1:
        return model.attempt_interval / q
    if model.swap_success_prob <= 0:
        return math.inf
    valid, release = cutoff_rounds(model.cutoff, model.attempt_interval)
    if valid < 1:
        return math.inf
    if math.isinf(valid) or (1 - q) ** valid < _TAIL * 1e-6:
        return _two_link_rounds_no_cutoff(q, model.swap_success_prob) * model.attempt_interval
    return _two_link_rounds(q, model.swap_success_prob, int(valid), int(release)) * model.attempt_interval


def _two_link_rounds_no_cutoff(q: float, s: float) -> float:
    # states: 0 = both generating, 1 = exactly one holding
    dist = np.array([1.0, 0.0])
    expected = 0.0
    done = 0.0
    t = 0
    both_fail = (1 - q) ** 2
    while 1.0 - done > _TAIL:
        t += 1
        to_both = dist[0] * q * q + dist[1] * q
        nxt = np.array([dist[0] * both_fail, dist[0] * 2 * q * (1 - q) + dist[1] * (1 - q)])
        nxt[0] += to_both * (1 - s)
        expected += t * to_both * s
        done += to_both * s
        dist = nxt
        if t > 10_000_000:
            raise RuntimeError("waiting-time enumeration did not converge")
    return expected


def _two_link_rounds(q: float, s: float, valid: int, release: int) -> float:
    # Both links holding triggers the swap at once, so at most one link
    # holds a pair between rounds: track P(both generating) and the age
    # distribution of the single held pair.
    idle = 1.0
    held = np.zeros(release + 1)  # held[a]: one link holds a pair of age a
    ages = np.arange(release + 1)
    fresh_ok = (ages >= 1) & (ages + 1 <= valid)
    expected = 0.0
    done = 0.0
    t = 0
    while 1.0 - done > _TAIL:
        t += 1
        ready = idle * q * q + q * held[fresh_ok].sum()
        # the other link heralds after the held pair went stale: keep the new one
        replaced = q * held[~fresh_ok].sum()
        shifted = np.zeros_like(held)
        shifted[2:] = (1 - q) * held[1:-1]
        shifted[1] = idle * 2 * q * (1 - q) + replaced
        idle = idle * (1 - q) ** 2 + shifted[release] + ready * (1 - s)
        shifted[release] = 0.0
        held = shifted
        expected += t * ready * s
        done += ready * s
        if t > 10_000_000:
            raise RuntimeError("waiting-time enumeration did not converge")
    return expected
