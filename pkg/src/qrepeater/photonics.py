"""Emitter, cavity, detector and fiber calculators.

Every function here is pure and works in SI units. Rates are in 1/s,
times in s, lengths in m unless the argument name says km.

A note on the dephasing convention: the pure-dephasing timescale ``T2*``
enters the photon coherence time as ``1/T2 = 1/(2 T1) + 1/T2*`` while the
indistinguishability uses the rate ``gamma* = 2/T2*``. The factor of two
is easy to drop; :func:`dephasing_rate` is the one place it is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 2.99792458e8
DEFAULT_FIBER_SPEED = 2.0e8
_REL_TOL = 1e-9


def _check_nonneg(value: float, name: str) -> None:
    if math.isnan(value) or value < 0:
        raise ValueError(f"{name} must be non-negative, got {value!r}")


def _check_prob(value: float, name: str) -> None:
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class EmitterParams:
    """Decay and dephasing parameters of one emitter (or ensemble).

    ``t2_star = inf`` means no extra dephasing. Use :meth:`from_lifetime`
    or :meth:`from_rates` rather than filling all four fields by hand; the
    constructor still checks that ``gamma_r + gamma_nr == 1/t1_excited``.
    """

    t1_excited: float
    t2_star: float = math.inf
    gamma_r: float | None = None
    gamma_nr: float = 0.0

    def __post_init__(self) -> None:
        _check_nonneg(self.t1_excited, "t1_excited")
        _check_nonneg(self.t2_star, "t2_star")
        _check_nonneg(self.gamma_nr, "gamma_nr")
        if self.gamma_r is None:
            total = 0.0 if math.isinf(self.t1_excited) else (
                math.inf if self.t1_excited == 0 else 1.0 / self.t1_excited
            )
            if self.gamma_nr > total * (1 + _REL_TOL):
                raise ValueError("gamma_nr exceeds the total decay rate 1/t1_excited")
            object.__setattr__(self, "gamma_r", max(total - self.gamma_nr, 0.0))
            return
        _check_nonneg(self.gamma_r, "gamma_r")
        total = self.gamma_r + self.gamma_nr
        if math.isinf(self.t1_excited):
            consistent = total == 0.0
        elif self.t1_excited == 0:
            consistent = math.isinf(total)
        else:
            consistent = math.isclose(total, 1.0 / self.t1_excited, rel_tol=_REL_TOL)
        if not consistent:
            raise ValueError(
                f"gamma_r + gamma_nr = {total!r} does not match 1/t1_excited "
                f"for t1_excited = {self.t1_excited!r}"
            )

    @classmethod
    def from_lifetime(
        cls, t1: float, branching_ratio: float = 1.0, t2_star: float = math.inf
    ) -> "EmitterParams":
        """Build from the excited-state lifetime and the radiative branching ratio."""
        _check_prob(branching_ratio, "branching_ratio")
        _check_nonneg(t1, "t1")
        if t1 == 0:
            raise ValueError("t1 must be positive")
        total = 0.0 if math.isinf(t1) else 1.0 / t1
        return cls(t1, t2_star, branching_ratio * total, (1.0 - branching_ratio) * total)

    @classmethod
    def from_rates(
        cls, gamma_r: float, gamma_nr: float = 0.0, t2_star: float = math.inf
    ) -> "EmitterParams":
        _check_nonneg(gamma_r, "gamma_r")
        _check_nonneg(gamma_nr, "gamma_nr")
        total = gamma_r + gamma_nr
        t1 = math.inf if total == 0 else 1.0 / total
        return cls(t1, t2_star, gamma_r, gamma_nr)


@dataclass(frozen=True)
class CavityParams:
    wavelength_in_medium: float
    mode_volume: float
    quality_factor: float

    def __post_init__(self) -> None:
        if not self.wavelength_in_medium > 0:
            raise ValueError("wavelength_in_medium must be positive")
        if not self.mode_volume > 0:
            raise ValueError("mode_volume must be positive")
        _check_nonneg(self.quality_factor, "quality_factor")


@dataclass(frozen=True)
class FiberParams:
    attenuation_db_per_km: float = 0.2
    speed_in_fiber: float = DEFAULT_FIBER_SPEED

    def __post_init__(self) -> None:
        _check_nonneg(self.attenuation_db_per_km, "attenuation_db_per_km")
        if not 0 < self.speed_in_fiber <= SPEED_OF_LIGHT:
            raise ValueError(
                f"speed_in_fiber must lie in (0, {SPEED_OF_LIGHT}], got {self.speed_in_fiber!r}"
            )


@dataclass(frozen=True)
class DetectorParams:
    """Single-photon detector at a heralding station.

    ``number_resolving`` detectors report how many photons arrived (a dark
    count adds one); threshold detectors only report click / no click.
    """

    efficiency: float = 1.0
    dark_count_prob_per_gate: float = 0.0
    number_resolving: bool = True

    def __post_init__(self) -> None:
        _check_prob(self.efficiency, "efficiency")
        _check_prob(self.dark_count_prob_per_gate, "dark_count_prob_per_gate")


def total_decay_rate(p: EmitterParams) -> float:
    return p.gamma_r + p.gamma_nr


def dephasing_rate(p: EmitterParams) -> float:
    """gamma* = 2/T2*, zero when there is no extra dephasing."""
    if math.isinf(p.t2_star):
        return 0.0
    if p.t2_star == 0:
        return math.inf
    return 2.0 / p.t2_star


def photon_coherence_time(p: EmitterParams) -> float:
    """Coherence time of emitted photons, 1/T2 = 1/(2 T1) + 1/T2*.

    Equals the transform limit ``2 * T1`` when ``t2_star`` is infinite.
    """
    if p.t1_excited == 0:
        raise ValueError("photon coherence time is undefined for t1_excited = 0")
    if p.t2_star == 0:
        return 0.0
    inv = 0.0
    if not math.isinf(p.t1_excited):
        inv += 1.0 / (2.0 * p.t1_excited)
    if not math.isinf(p.t2_star):
        inv += 1.0 / p.t2_star
    return math.inf if inv == 0 else 1.0 / inv


def indistinguishability(gamma: float, gamma_star: float) -> float:
    """I = gamma / (gamma + gamma*)."""
    _check_nonneg(gamma, "gamma")
    _check_nonneg(gamma_star, "gamma_star")
    if gamma == 0 and gamma_star == 0:
        raise ValueError("indistinguishability is undefined when gamma = gamma_star = 0")
    if math.isinf(gamma_star):
        return 0.0 if not math.isinf(gamma) else math.nan
    return gamma / (gamma + gamma_star)


def emitter_indistinguishability(p: EmitterParams, f_p: float = 1.0) -> float:
    """Indistinguishability of photons from ``p`` placed in a cavity with Purcell factor ``f_p``."""
    return indistinguishability(enhanced_decay_rate(p, f_p), dephasing_rate(p))


def hom_coincidence_probability(i: float) -> float:
    """Two-detector coincidence probability after a balanced beamsplitter.

    Normalised so that fully distinguishable photons give 1/2.
    """
    _check_prob(i, "indistinguishability")
    return (1.0 - i) / 2.0


def purcell_factor(c: CavityParams) -> float:
    """F_P = 3/(4 pi^2) * (lambda^3 / V) * Q."""
    return 3.0 / (4.0 * math.pi**2) * (c.wavelength_in_medium**3 / c.mode_volume) * c.quality_factor


def enhanced_decay_rate(p: EmitterParams, f_p: float) -> float:
    """Excited-state decay rate in a cavity: only the radiative part is enhanced."""
    _check_nonneg(f_p, "f_p")
    return f_p * p.gamma_r + p.gamma_nr


def fiber_transmission(length_km: float, f: FiberParams) -> float:
    _check_nonneg(length_km, "length_km")
    return 10.0 ** (-f.attenuation_db_per_km * length_km / 10.0)


def communication_time(length_m: float, f: FiberParams) -> float:
    _check_nonneg(length_m, "length_m")
    return length_m / f.speed_in_fiber
