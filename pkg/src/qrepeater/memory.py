"""Multimode atomic-frequency-comb (AFC) memory.

An absorbed photon rephases after ``T = 2 pi / Delta`` where ``Delta`` is
the comb tooth spacing in rad/s. With spin-wave transfer the excitation is
parked in a ground-state spin level and recalled on demand; the spin
coherence time then limits storage.

Storage and recall losses are not heralded. They move weight from the
entangled component of the stored pair to its vacuum component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .photonics import EmitterParams, photon_coherence_time
from .states import PairState, decohere

_TIME_TOL = 1e-12


class StorageRejected(RuntimeError):
    """Raised when a photon cannot be written into the memory."""


def _check_prob(value: float, name: str) -> None:
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class AfcParams:
    """AFC memory settings.

    Parameters
    ----------
    comb_spacing : float
        Tooth spacing Delta in rad/s.
    comb_bandwidth : float
        Total comb width in Hz.
    mode_capacity : int
        Number of temporal modes that fit in the comb.
    on_demand : bool
        If true the excitation is transferred to a spin level (efficiency
        ``spinwave_transfer_efficiency`` on the way in and out) and can be
        recalled at any time. Otherwise recall happens exactly ``recall_time``
        after storage.
    """

    comb_spacing: float
    comb_bandwidth: float = math.inf
    mode_capacity: int = 1
    write_efficiency: float = 1.0
    recall_efficiency: float = 1.0
    spinwave_transfer_efficiency: float = 1.0
    spin_t2: float = math.inf
    on_demand: bool = True

    def __post_init__(self) -> None:
        if not self.comb_spacing > 0:
            raise ValueError(f"comb_spacing must be positive, got {self.comb_spacing!r}")
        if not self.comb_bandwidth > 0:
            raise ValueError("comb_bandwidth must be positive")
        if int(self.mode_capacity) != self.mode_capacity or self.mode_capacity < 1:
            raise ValueError(f"mode_capacity must be an integer >= 1, got {self.mode_capacity!r}")
        for name in ("write_efficiency", "recall_efficiency", "spinwave_transfer_efficiency"):
            _check_prob(getattr(self, name), name)
        if not self.spin_t2 > 0:
            raise ValueError("spin_t2 must be positive")

    @classmethod
    def from_hz(cls, comb_spacing_hz: float, **kwargs) -> "AfcParams":
        """Build from a tooth spacing given in Hz."""
        return cls(2.0 * math.pi * comb_spacing_hz, **kwargs)

    @property
    def write_factor(self) -> float:
        if self.on_demand:
            return self.write_efficiency * self.spinwave_transfer_efficiency
        return self.write_efficiency

    @property
    def recall_factor(self) -> float:
        if self.on_demand:
            return self.recall_efficiency * self.spinwave_transfer_efficiency
        return self.recall_efficiency


@dataclass(frozen=True)
class StoredMode:
    pair: PairState
    stored_at: float
    mode_index: int


def recall_time(a: AfcParams) -> float:
    """Echo time T = 2 pi / Delta."""
    if not a.comb_spacing > 0:
        raise ValueError("comb_spacing must be positive")
    return 2.0 * math.pi / a.comb_spacing


def multiplex_gain(a: AfcParams) -> int:
    return int(a.mode_capacity)


def no_cloning_check(efficiency: float, fidelity: float) -> bool:
    """True when the memory beats any cloner: efficiency > 1/2 and fidelity > 2/3."""
    _check_prob(efficiency, "efficiency")
    _check_prob(fidelity, "fidelity")
    return efficiency > 0.5 and fidelity > 2.0 / 3.0


def photon_bandwidth(emitter: EmitterParams) -> float:
    """Spectral width in Hz of photons from ``emitter``, 1/(2 pi T2)."""
    return 1.0 / (2.0 * math.pi * photon_coherence_time(emitter))


def accepts_bandwidth(a: AfcParams, bandwidth_hz: float) -> bool:
    """A photon fits the comb if it is wider than one tooth spacing and narrower than the comb."""
    return a.comb_spacing / (2.0 * math.pi) <= bandwidth_hz <= a.comb_bandwidth


def attenuate(pair: PairState, efficiency: float) -> PairState:
    """Scale the entangled weight by ``efficiency``; the lost weight becomes vacuum."""
    _check_prob(efficiency, "efficiency")
    w_ent = pair.w_ent * efficiency
    return pair.replace(w_ent=w_ent, w_vac=1.0 - w_ent)


def write_loss(pair: PairState, a: AfcParams) -> PairState:
    return attenuate(pair, a.write_factor)


def recall_loss(pair: PairState, a: AfcParams) -> PairState:
    return attenuate(pair, a.recall_factor)


class AfcMemory:
    """Single-owner AFC memory holding up to ``mode_capacity`` pairs."""

    def __init__(self, params: AfcParams):
        self.params = params
        self._modes: dict[int, StoredMode] = {}

    def __len__(self) -> int:
        return len(self._modes)

    @property
    def occupied(self) -> int:
        return len(self._modes)

    @property
    def free_modes(self) -> int:
        return self.params.mode_capacity - len(self._modes)

    def stored(self, mode_index: int) -> StoredMode:
        try:
            return self._modes[mode_index]
        except KeyError:
            raise KeyError(f"mode {mode_index} is empty") from None

    def store(self, pair: PairState, now: float, photon_bandwidth_hz: float | None = None) -> int:
        """Write ``pair`` into the lowest free mode and return its index.

        Raises
        ------
        StorageRejected
            If every mode is occupied or the photon bandwidth does not fit the comb.
        """
        if photon_bandwidth_hz is not None and not accepts_bandwidth(self.params, photon_bandwidth_hz):
            raise StorageRejected(
                f"photon bandwidth {photon_bandwidth_hz:.4g} Hz lies outside "
                f"[{self.params.comb_spacing / (2 * math.pi):.4g}, {self.params.comb_bandwidth:.4g}] Hz"
            )
        if self.free_modes <= 0:
            raise StorageRejected(f"all {self.params.mode_capacity} modes are occupied")
        index = next(i for i in range(self.params.mode_capacity) if i not in self._modes)
        self._modes[index] = StoredMode(write_loss(pair, self.params), now, index)
        return index

    def retrieve(self, mode_index: int, now: float) -> PairState:
        """Recall the pair in ``mode_index`` at time ``now`` and free the mode."""
        entry = self.stored(mode_index)
        elapsed = now - entry.stored_at
        if elapsed < -_TIME_TOL:
            raise ValueError("cannot retrieve before the pair was stored")
        if not self.params.on_demand:
            due = recall_time(self.params)
            if abs(elapsed - due) > _TIME_TOL * max(1.0, due):
                raise ValueError(
                    f"fixed-delay memory re-emits at {entry.stored_at + due:.9g} s, not {now:.9g} s"
                )
        del self._modes[mode_index]
        pair = decohere(entry.pair, max(elapsed, 0.0), self.params.spin_t2)
        return recall_loss(pair, self.params)
