"""Heralded entanglement generation over one elementary link.

Two schemes are modelled, both with a central beamsplitter station at the
midpoint of the link:

* ``dlcz``: each ensemble emits a Stokes photon with probability
  ``p = (g t)^2`` together with one collective spin excitation.
* ``single_emitter``: each node holds a single emitter prepared in
  (|up> + |down>)/sqrt2 that emits only from |down>; after the first herald
  both qubits are flipped and the round is repeated, which removes the
  |down down> admixture.

Every heralding quantity has two routes. The default ``"closed"`` route
evaluates combinatorial closed forms built on :class:`HeraldKernel`; the
``"oracle"`` route builds the full state in :class:`~qrepeater.states.FockSystem`
and runs loss, beamsplitter and detection explicitly. The two agree to
numerical precision and the tests hold them to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .photonics import (
    DetectorParams,
    EmitterParams,
    FiberParams,
    communication_time,
    fiber_transmission,
)
from .states import (
    FockSystem,
    PairState,
    beamsplitter,
    loss_channel,
    pair_from_registers,
    single_detection_outcomes,
)

DEFAULT_P_MAX = 0.1


@dataclass(frozen=True)
class EmissionPulse:
    coupling_g: float
    duration_t: float
    p_max: float = DEFAULT_P_MAX

    def __post_init__(self) -> None:
        if self.coupling_g < 0 or self.duration_t < 0:
            raise ValueError("coupling_g and duration_t must be non-negative")
        if self.emission_prob > self.p_max:
            raise ValueError(
                f"emission probability (g t)^2 = {self.emission_prob:.4g} exceeds p_max = {self.p_max}"
            )

    @property
    def emission_prob(self) -> float:
        return (self.coupling_g * self.duration_t) ** 2

    @classmethod
    def from_gt(cls, gt: float, p_max: float = DEFAULT_P_MAX) -> "EmissionPulse":
        return cls(gt, 1.0, p_max)

    @classmethod
    def from_probability(cls, p: float, p_max: float = DEFAULT_P_MAX) -> "EmissionPulse":
        if p < 0:
            raise ValueError("emission probability must be non-negative")
        return cls(math.sqrt(p), 1.0, p_max)


@dataclass(frozen=True)
class LinkHardware:
    emitter: EmitterParams = field(default_factory=lambda: EmitterParams.from_lifetime(1e-2))
    detector: DetectorParams = field(default_factory=DetectorParams)
    fiber: FiberParams = field(default_factory=FiberParams)
    half_length_km: float = 0.0
    memory_in_efficiency: float = 1.0
    indistinguishability: float = 1.0

    def __post_init__(self) -> None:
        if self.half_length_km < 0:
            raise ValueError("half_length_km must be non-negative")
        for name in ("memory_in_efficiency", "indistinguishability"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")

    @property
    def arm_survival(self) -> float:
        """Probability that a photon reaches the station and is accepted by the memory path."""
        return fiber_transmission(self.half_length_km, self.fiber) * self.memory_in_efficiency


@dataclass(frozen=True)
class HeraldOutcome:
    success: bool
    pair: PairState | None
    attempt_duration: float

    def __post_init__(self) -> None:
        if self.success != (self.pair is not None):
            raise ValueError("pair must be present exactly when the attempt succeeded")


@dataclass(frozen=True)
class HeraldKernel:
    """Per-detector heralding probabilities for a balanced two-arm station.

    ``eta`` is the end-to-end detection efficiency of one arm (equal losses
    before and after the beamsplitter commute with it). Entries give the
    probability that detector 1 alone heralds when the arms carry

    * ``f0``: no photons,
    * ``f1``: one photon in either arm,
    * ``f2``: one photon in each arm (Hong-Ou-Mandel bunching applies),

    and ``g`` is the part of ``f1`` that keeps the which-arm coherence
    (photon detected, no dark count involved).
    """

    eta: float
    dark: float
    number_resolving: bool
    f0: float
    f1: float
    f2: float
    g: float


def herald_kernel(eta: float, dark: float = 0.0, number_resolving: bool = True) -> HeraldKernel:
    """Closed-form :class:`HeraldKernel` for per-arm efficiency ``eta``."""
    lost = 1.0 - eta
    dark_only = dark * (1.0 - dark)
    if number_resolving:
        quiet = (1.0 - dark) ** 2
        g = eta / 2 * quiet
        f1 = g + lost * dark_only
        # both photons surviving bunch into one detector and are rejected
        f2 = eta * lost * quiet + lost**2 * dark_only
    else:
        quiet = 1.0 - dark
        g = eta / 2 * quiet
        f1 = g + lost * dark_only
        f2 = (eta**2 / 2 + eta * lost) * quiet + lost**2 * dark_only
    return HeraldKernel(eta, dark, number_resolving, dark_only, f1, f2, g)


def _check_method(method: str) -> None:
    if method not in ("closed", "oracle"):
        raise ValueError(f"method must be 'closed' or 'oracle', got {method!r}")


def dlcz_arm_click_prob(pulse: EmissionPulse, hw: LinkHardware) -> float:
    """First-order photon-click probability of one arm, q = p * T_fiber * eta_d."""
    p = pulse.emission_prob
    if p > pulse.p_max:
        raise ValueError(f"emission probability {p:.4g} exceeds p_max = {pulse.p_max}")
    return p * fiber_transmission(hw.half_length_km, hw.fiber) * hw.detector.efficiency


def _nodes(hw_nodes: tuple) -> dict:
    return {"left_node": hw_nodes[0], "right_node": hw_nodes[1]}


def dlcz_herald(
    pulse: EmissionPulse,
    hw: LinkHardware,
    *,
    method: str = "closed",
    nodes: tuple = (0, 1),
    created_at: float = 0.0,
) -> tuple[float, PairState]:
    """Single-herald probability and heralded ensemble pair for the DLCZ scheme.

    Each ensemble carries at most one excitation per attempt: its joint
    state with the Stokes mode is sqrt(1-p)|0,0> - i sqrt(p)|1,1>. The
    returned pair is the one heralded by detector 1 (sign +1); detector 2
    yields the same weights with the opposite sign.
    """
    _check_method(method)
    p = pulse.emission_prob
    if p > pulse.p_max:
        raise ValueError(f"emission probability {p:.4g} exceeds p_max = {pulse.p_max}")
    meta = dict(created_at=created_at, **_nodes(nodes))
    if method == "oracle":
        return _dlcz_oracle(p, hw, meta)

    k = herald_kernel(hw.arm_survival * hw.detector.efficiency,
                      hw.detector.dark_count_prob_per_gate, hw.detector.number_resolving)
    p0, p1 = 1.0 - p, p
    single = 2 * p0 * p1
    per_detector = p0 * p0 * k.f0 + single * k.f1 + p1 * p1 * k.f2
    if per_detector <= 0:
        return 0.0, PairState.entangled(0.0, 0.0, **meta)
    coherence = k.g / k.f1 if k.f1 > 0 else 0.0
    pair = PairState.entangled(
        single * k.f1 / per_detector, coherence * hw.indistinguishability, **meta
    )
    return 2 * per_detector, pair


def _dlcz_oracle(p: float, hw: LinkHardware, meta: dict) -> tuple[float, PairState]:
    # modes: ensemble 1, ensemble 2, Stokes 1, Stokes 2
    source = np.zeros((3, 3), dtype=complex)
    source[0, 0] = math.sqrt(1.0 - p)
    source[1, 1] = -1j * math.sqrt(p)
    ket = np.einsum("ac,bd->abcd", source, source)
    sys = FockSystem.from_ket(ket, mode_count=4)
    survival = hw.arm_survival
    sys = loss_channel(loss_channel(sys, 2, survival), 3, survival)
    sys = beamsplitter(sys, 2, 3)
    det = hw.detector
    outcomes = single_detection_outcomes(
        sys, 2, 3, det.efficiency, det.dark_count_prob_per_gate, det.number_resolving
    )
    success = sum(prob for _, prob, _ in outcomes)
    _, prob, state = outcomes[0]
    if state is None:
        return success, PairState.entangled(0.0, 0.0, **meta)
    pair = _pair_from_registers(state, hw.indistinguishability, meta)
    return success, pair


def _pair_from_registers(state: FockSystem, interference: float, meta: dict) -> PairState:
    pair = pair_from_registers(state, **meta)
    return pair.replace(coherence=pair.coherence * interference)


def single_emitter_herald(
    hw: LinkHardware,
    round_efficiency: float = 1.0,
    *,
    method: str = "closed",
    nodes: tuple = (0, 1),
    created_at: float = 0.0,
) -> tuple[float, PairState]:
    """Two-round single-emitter heralding with a qubit flip between rounds.

    ``round_efficiency`` is the probability that an emitted photon leaves
    the node into the fiber in each round. Success requires one herald in
    each round. The returned pair is the one heralded by detector 1 twice;
    the other three detector combinations give the same weights.
    """
    _check_method(method)
    if not 0.0 <= round_efficiency <= 1.0:
        raise ValueError("round_efficiency must lie in [0, 1]")
    meta = dict(created_at=created_at, **_nodes(nodes))
    if method == "oracle":
        return _single_emitter_oracle(hw, round_efficiency, meta)

    det = hw.detector
    k = herald_kernel(round_efficiency * hw.arm_survival * det.efficiency,
                      det.dark_count_prob_per_gate, det.number_resolving)
    # round 1: |up up> emits nothing, the entangled half emits one photon,
    # |down down> emits one photon into each arm
    r1_uu, r1_ent, r1_dd = 0.25 * k.f0, 0.5 * k.f1, 0.25 * k.f2
    r1 = r1_uu + r1_ent + r1_dd
    if r1 <= 0:
        return 0.0, PairState.entangled(0.0, 0.0, **meta)
    v1 = k.g / k.f1 if k.f1 > 0 else 0.0
    # the flip swaps |up up> and |down down>; the entangled block is unchanged
    r2_ent = r1_ent / r1 * k.f1
    r2_err = r1_dd / r1 * k.f0 + r1_uu / r1 * k.f2
    r2 = r2_ent + r2_err
    if r2 <= 0:
        return 0.0, PairState.entangled(0.0, 0.0, **meta)
    v2 = v1 * (k.g / k.f1 if k.f1 > 0 else 0.0)
    pair = PairState.entangled(r2_ent / r2, v2 * hw.indistinguishability, **meta)
    return (2 * r1) * (2 * r2), pair


_EMIT = np.eye(6)
# (qubit, mode) basis index = 3*q + n; |down,0> <-> |down,1> with down = 1
_EMIT[[3, 4]] = _EMIT[[4, 3]]
_FLIP = np.array([[0.0, 1.0], [1.0, 0.0]])


def _emission_round(state: FockSystem, survival: float, det: DetectorParams) -> list:
    sys = state.add_modes(2)
    sys = sys.apply_unitary(_EMIT, modes=(0,), qubits=(0,))
    sys = sys.apply_unitary(_EMIT, modes=(1,), qubits=(1,))
    sys = loss_channel(loss_channel(sys, 0, survival), 1, survival)
    sys = beamsplitter(sys, 0, 1)
    return single_detection_outcomes(
        sys, 0, 1, det.efficiency, det.dark_count_prob_per_gate, det.number_resolving
    )


def _single_emitter_oracle(hw: LinkHardware, round_efficiency: float, meta: dict) -> tuple[float, PairState]:
    plus = np.array([1.0, 1.0]) / math.sqrt(2)
    start = FockSystem.from_ket(np.kron(plus, plus), mode_count=0, qubit_count=2)
    survival = round_efficiency * hw.arm_survival
    success = 0.0
    chosen = None
    for d1, p1, s1 in _emission_round(start, survival, hw.detector):
        if s1 is None:
            continue
        flipped = s1.apply_unitary(np.kron(_FLIP, _FLIP), qubits=(0, 1))
        for d2, p2, s2 in _emission_round(flipped, survival, hw.detector):
            success += p1 * p2
            if d1 == 1 and d2 == 1:
                chosen = s2
    if chosen is None:
        return success, PairState.entangled(0.0, 0.0, **meta)
    return success, _pair_from_registers(chosen, hw.indistinguishability, meta)


def attempt_interval(hw: LinkHardware, pulse_overhead: float = 0.0) -> float:
    """Duration of one attempt round: photon to the midpoint and herald back, plus overhead."""
    if pulse_overhead < 0:
        raise ValueError("pulse_overhead must be non-negative")
    return communication_time(2.0 * hw.half_length_km * 1e3, hw.fiber) + pulse_overhead


def resolve_attempt(success_prob: float, pair: PairState, duration: float, u: float) -> HeraldOutcome:
    """Turn a uniform deviate ``u`` into the outcome of one heralding attempt."""
    if u < success_prob:
        return HeraldOutcome(True, pair, duration)
    return HeraldOutcome(False, None, duration)
