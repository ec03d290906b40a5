"""Heralded pair states and a small Fock-space density-matrix simulator.

:class:`PairState` is the two-component link state used by the protocol
engine: an entangled single-excitation part with weight ``w_ent`` and an
error part (vacuum or multi-excitation) with weight ``w_vac``. The
entangled part is stored as a twirled block, so the whole state is fixed
by ``(w_ent, coherence, sign)``::

    rho_ent = 1/2 (|10><10| + |01><01|) + sign * coherence/2 (|10><01| + h.c.)

:class:`FockSystem` is the exact few-mode oracle. Bosonic modes are
truncated at ``cutoff`` photons and may be tensored with up to four
qubit registers. Anything that would push population past the cutoff
raises :class:`TruncationError` instead of being clipped.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
import string
from dataclasses import dataclass
from typing import Hashable, NamedTuple, Sequence

import numpy as np

MAX_MODES = 6
MAX_CUTOFF = 2
MAX_QUBITS = 4
_TOL = 1e-10


class TruncationError(RuntimeError):
    """An operation would create population above the photon-number cutoff."""


@dataclass(frozen=True)
class PairState:
    w_ent: float
    w_vac: float
    coherence: float = 1.0
    sign: int = 1
    created_at: float = 0.0
    left_node: Hashable = 0
    right_node: Hashable = 1

    def __post_init__(self) -> None:
        if not (0.0 <= self.w_ent <= 1.0 and 0.0 <= self.w_vac <= 1.0):
            raise ValueError(f"weights must lie in [0, 1]: {self.w_ent!r}, {self.w_vac!r}")
        if abs(self.w_ent + self.w_vac - 1.0) > 1e-12:
            raise ValueError(f"w_ent + w_vac must equal 1, got {self.w_ent + self.w_vac!r}")
        if not 0.0 <= self.coherence <= 1.0:
            raise ValueError(f"coherence must lie in [0, 1], got {self.coherence!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @classmethod
    def entangled(cls, w_ent: float = 1.0, coherence: float = 1.0, **kwargs) -> "PairState":
        """Pair with entangled weight ``w_ent`` and the rest in the error component."""
        w_ent = min(max(w_ent, 0.0), 1.0)
        return cls(w_ent, 1.0 - w_ent, coherence, **kwargs)

    def replace(self, **changes) -> "PairState":
        return dataclasses.replace(self, **changes)

    @property
    def ratio(self) -> float:
        """w_ent / w_vac (infinite for a pure entangled pair)."""
        return math.inf if self.w_vac == 0 else self.w_ent / self.w_vac

    def density_matrix(self) -> np.ndarray:
        """4x4 matrix on the excitation basis |00>, |01>, |10>, |11> of (left, right).

        The error weight is placed on |00>.
        """
        rho = np.zeros((4, 4))
        rho[0, 0] = self.w_vac
        rho[1, 1] = rho[2, 2] = self.w_ent / 2
        rho[1, 2] = rho[2, 1] = self.sign * self.w_ent * self.coherence / 2
        return rho


def fidelity(ps: PairState) -> float:
    """Overlap with the target Bell state of matching sign."""
    return ps.w_ent * (1.0 + ps.coherence) / 2.0


def decohere(ps: PairState, elapsed: float, t2_spin: float) -> PairState:
    """Exponential decay of the entangled-part coherence: ``v -> v exp(-elapsed/t2)``."""
    if elapsed < 0:
        raise ValueError("elapsed must be non-negative")
    if not t2_spin > 0:
        raise ValueError("t2_spin must be positive")
    if elapsed == 0 or math.isinf(t2_spin):
        return ps
    return ps.replace(coherence=ps.coherence * math.exp(-elapsed / t2_spin))


def pair_from_block(
    p_single: float, off: complex, total: float, **kwargs
) -> PairState:
    """Project a conditional two-register state onto a :class:`PairState`.

    ``p_single`` is the population of the single-excitation block, ``off``
    the <10|rho|01> element and ``total`` the normalisation. The mapping
    keeps the Bell-state fidelity exact.
    """
    w_ent = p_single / total
    if p_single <= 0:
        return PairState.entangled(0.0, 0.0, **kwargs)
    coherence = min(2.0 * abs(off) / p_single, 1.0)
    sign = 1 if off.real >= 0 else -1
    return PairState.entangled(w_ent, coherence, sign=sign, **kwargs)


def pair_from_registers(state: "FockSystem", **kwargs) -> PairState:
    """:func:`pair_from_block` applied to a two-mode :class:`FockSystem` (left, right)."""
    rho = state.density_matrix
    i10 = state.flat_index((1, 0))
    i01 = state.flat_index((0, 1))
    return pair_from_block(
        float(np.real(rho[i10, i10] + rho[i01, i01])), complex(rho[i10, i01]), state.trace(), **kwargs
    )


class ClickPattern(NamedTuple):
    detector_1_clicked: bool
    detector_2_clicked: bool


# --------------------------------------------------------------------------
# Fock-space oracle
# --------------------------------------------------------------------------


def beamsplitter_amplitude(k: int, l: int, m1: int, m2: int) -> float:
    """<k, l| U |m1, m2> for the 50:50 map a -> (c + d)/sqrt2, b -> (c - d)/sqrt2."""
    if k + l != m1 + m2:
        return 0.0
    acc = 0
    for i in range(max(0, k - m2), min(m1, k) + 1):
        j = k - i
        acc += math.comb(m1, i) * math.comb(m2, j) * (-1) ** (m2 - j)
    norm = math.sqrt(math.factorial(k) * math.factorial(l) / (math.factorial(m1) * math.factorial(m2)))
    return acc * norm * 2.0 ** (-(m1 + m2) / 2)


class FockSystem:
    """Density operator over qubit registers followed by truncated bosonic modes.

    Subsystem order is ``qubits..., modes...``. Modes are addressed by
    their index among the modes, qubits by their index among the qubits.
    Instances are treated as immutable; every operation returns a new one.
    """

    def __init__(self, rho: np.ndarray, mode_count: int, qubit_count: int = 0, cutoff: int = 2):
        if not 0 <= mode_count <= MAX_MODES:
            raise ValueError(f"mode_count must be at most {MAX_MODES}")
        if not 0 <= qubit_count <= MAX_QUBITS:
            raise ValueError(f"qubit_count must be at most {MAX_QUBITS}")
        if not 1 <= cutoff <= MAX_CUTOFF:
            raise ValueError(f"cutoff must lie in [1, {MAX_CUTOFF}]")
        self.mode_count = mode_count
        self.qubit_count = qubit_count
        self.cutoff = cutoff
        dim = int(np.prod(self.dims)) if self.dims else 1
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (dim, dim):
            raise ValueError(f"density matrix must have shape {(dim, dim)}, got {rho.shape}")
        self.density_matrix = rho

    # construction ---------------------------------------------------------

    @property
    def dims(self) -> tuple[int, ...]:
        return (2,) * self.qubit_count + (self.cutoff + 1,) * self.mode_count

    @classmethod
    def from_ket(cls, ket: np.ndarray, mode_count: int, qubit_count: int = 0, cutoff: int = 2) -> "FockSystem":
        ket = np.asarray(ket, dtype=complex).ravel()
        ket = ket / np.linalg.norm(ket)
        return cls(np.outer(ket, ket.conj()), mode_count, qubit_count, cutoff)

    @classmethod
    def vacuum(cls, mode_count: int, qubit_count: int = 0, cutoff: int = 2) -> "FockSystem":
        """All modes empty, all qubits in |0>."""
        dim = 2**qubit_count * (cutoff + 1) ** mode_count
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
        return cls(rho, mode_count, qubit_count, cutoff)

    @classmethod
    def from_populations(
        cls, entries: dict[tuple[tuple[int, ...], tuple[int, ...]], complex],
        mode_count: int, qubit_count: int = 0, cutoff: int = 2,
    ) -> "FockSystem":
        """Build from sparse ``{(ket_index_tuple, bra_index_tuple): value}`` entries."""
        sys = cls.vacuum(mode_count, qubit_count, cutoff)
        rho = np.zeros_like(sys.density_matrix)
        for (ket, bra), value in entries.items():
            rho[sys.flat_index(ket), sys.flat_index(bra)] += value
        return cls(rho, mode_count, qubit_count, cutoff)

    def flat_index(self, occupation: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(occupation), self.dims))

    def _replace(self, rho: np.ndarray, mode_count: int | None = None, qubit_count: int | None = None) -> "FockSystem":
        return FockSystem(
            rho,
            self.mode_count if mode_count is None else mode_count,
            self.qubit_count if qubit_count is None else qubit_count,
            self.cutoff,
        )

    # bookkeeping ----------------------------------------------------------

    def _mode_axis(self, mode: int) -> int:
        if not 0 <= mode < self.mode_count:
            raise IndexError(f"mode index {mode} out of range for {self.mode_count} modes")
        return self.qubit_count + mode

    def _qubit_axis(self, qubit: int) -> int:
        if not 0 <= qubit < self.qubit_count:
            raise IndexError(f"qubit index {qubit} out of range for {self.qubit_count} qubits")
        return qubit

    def _tensor(self) -> np.ndarray:
        return self.density_matrix.reshape(self.dims + self.dims)

    def _from_tensor(self, t: np.ndarray, dims: tuple[int, ...] | None = None) -> np.ndarray:
        dims = self.dims if dims is None else dims
        dim = int(np.prod(dims)) if dims else 1
        return t.reshape(dim, dim)

    def _apply_ops(self, ops: Sequence[np.ndarray], axes: Sequence[int]) -> np.ndarray:
        """sum_k K rho K^dagger for operators K acting jointly on ``axes``."""
        n = len(self.dims)
        letters = string.ascii_letters
        ket = list(letters[:n])
        bra = list(letters[n:2 * n])
        new_ket = list(letters[2 * n:2 * n + len(axes)])
        new_bra = list(letters[2 * n + len(axes):2 * n + 2 * len(axes)])
        op_ket = "".join(new_ket + [ket[a] for a in axes])
        op_bra = "".join(new_bra + [bra[a] for a in axes])
        out_ket, out_bra = ket[:], bra[:]
        for slot, a in enumerate(axes):
            out_ket[a] = new_ket[slot]
            out_bra[a] = new_bra[slot]
        subscripts = f"{op_ket},{''.join(ket + bra)},{op_bra}->{''.join(out_ket + out_bra)}"
        shape = tuple(self.dims[a] for a in axes)
        t = self._tensor()
        acc = np.zeros_like(t)
        for op in ops:
            k = np.asarray(op, dtype=complex).reshape(shape + shape)
            acc += np.einsum(subscripts, k, t, k.conj(), optimize=True)
        return self._from_tensor(acc)

    def apply_unitary(self, op: np.ndarray, modes: Sequence[int] = (), qubits: Sequence[int] = ()) -> "FockSystem":
        """Conjugate by ``op`` acting on the listed qubits (first) and modes."""
        axes = [self._qubit_axis(q) for q in qubits] + [self._mode_axis(m) for m in modes]
        return self._replace(self._apply_ops([op], axes))

    def apply_kraus(self, ops: Sequence[np.ndarray], modes: Sequence[int] = (), qubits: Sequence[int] = ()) -> "FockSystem":
        axes = [self._qubit_axis(q) for q in qubits] + [self._mode_axis(m) for m in modes]
        return self._replace(self._apply_ops(ops, axes))

    def add_modes(self, count: int) -> "FockSystem":
        """Append ``count`` modes in the vacuum."""
        vac = np.zeros((self.cutoff + 1, self.cutoff + 1))
        vac[0, 0] = 1.0
        rho = self.density_matrix
        for _ in range(count):
            rho = np.kron(rho, vac)
        return self._replace(rho, mode_count=self.mode_count + count)

    def partial_trace(self, modes: Sequence[int] = (), qubits: Sequence[int] = ()) -> "FockSystem":
        """Trace out the listed modes and qubits."""
        drop = sorted({self._qubit_axis(q) for q in qubits} | {self._mode_axis(m) for m in modes})
        n = len(self.dims)
        t = self._tensor()
        letters = string.ascii_letters
        ket = list(letters[:n])
        bra = list(letters[n:2 * n])
        for a in drop:
            bra[a] = ket[a]
        keep = [a for a in range(n) if a not in drop]
        out = "".join(ket[a] for a in keep) + "".join(bra[a] for a in keep)
        reduced = np.einsum(f"{''.join(ket + bra)}->{out}", t)
        dims = tuple(self.dims[a] for a in keep)
        qubit_count = self.qubit_count - sum(1 for a in drop if a < self.qubit_count)
        mode_count = self.mode_count - sum(1 for a in drop if a >= self.qubit_count)
        return FockSystem(self._from_tensor(reduced, dims), mode_count, qubit_count, self.cutoff)

    def photon_number_distribution(self, mode: int) -> np.ndarray:
        others = [m for m in range(self.mode_count) if m != mode]
        reduced = self.partial_trace(modes=others, qubits=range(self.qubit_count))
        return np.real(np.diag(reduced.density_matrix))

    def trace(self) -> float:
        return float(np.real(np.trace(self.density_matrix)))

    def normalized(self) -> "FockSystem":
        return self._replace(self.density_matrix / self.trace())

    def check(self, tol: float = _TOL) -> None:
        """Raise ``ValueError`` unless the state is a valid density operator."""
        rho = self.density_matrix
        if abs(self.trace() - 1.0) > tol:
            raise ValueError(f"trace {self.trace()!r} differs from 1")
        if np.max(np.abs(rho - rho.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)) < -tol:
            raise ValueError("density matrix has a negative eigenvalue")

    def occupation_above(self, total_photons: int, modes: Sequence[int]) -> float:
        """Population with more than ``total_photons`` photons across ``modes``."""
        axes = [self._mode_axis(m) for m in modes]
        diag = np.real(np.diag(self.density_matrix)).reshape(self.dims)
        weight = 0.0
        for idx in itertools.product(*(range(d) for d in self.dims)):
            if sum(idx[a] for a in axes) > total_photons:
                weight += diag[idx]
        return weight


_NORMAL_MIN = 1e-250


def _beamsplitter_matrix(cutoff: int) -> np.ndarray:
    d = cutoff + 1
    u = np.zeros((d * d, d * d))
    for m1, m2 in itertools.product(range(d), repeat=2):
        if m1 + m2 > cutoff:
            continue
        for k in range(m1 + m2 + 1):
            u[k * d + (m1 + m2 - k), m1 * d + m2] = beamsplitter_amplitude(k, m1 + m2 - k, m1, m2)
    return u


def beamsplitter(sys: FockSystem, mode_a: int, mode_b: int) -> FockSystem:
    """Mix two modes on a balanced beamsplitter.

    Output mode ``mode_a`` carries (a + b)/sqrt2 and ``mode_b`` carries
    (a - b)/sqrt2, matching the emission operators l+ and l-.
    """
    if mode_a == mode_b:
        raise ValueError("beamsplitter needs two distinct modes")
    sys._mode_axis(mode_a)
    sys._mode_axis(mode_b)
    excess = sys.occupation_above(sys.cutoff, (mode_a, mode_b))
    if excess > _TOL:
        raise TruncationError(
            f"{excess:.3g} of the population carries more than {sys.cutoff} photons into the beamsplitter"
        )
    return sys.apply_unitary(_beamsplitter_matrix(sys.cutoff), modes=(mode_a, mode_b))


def loss_kraus(survival: float, cutoff: int) -> list[np.ndarray]:
    d = cutoff + 1
    ops = []
    for lost in range(d):
        k = np.zeros((d, d))
        for n in range(lost, d):
            k[n - lost, n] = math.sqrt(
                math.comb(n, lost) * survival ** (n - lost) * (1 - survival) ** lost
            )
        ops.append(k)
    return ops


def loss_channel(sys: FockSystem, mode: int, survival: float) -> FockSystem:
    """Pure-loss channel with transmissivity ``survival`` on one mode."""
    if not 0.0 <= survival <= 1.0:
        raise ValueError("survival must lie in [0, 1]")
    return sys.apply_kraus(loss_kraus(survival, sys.cutoff), modes=(mode,))


def _project_counts(sys: FockSystem, mode_1: int, mode_2: int) -> dict[tuple[int, int], FockSystem]:
    """Unnormalised post-measurement states for each photon-number pair (n1, n2)."""
    d = sys.cutoff + 1
    out = {}
    for n1, n2 in itertools.product(range(d), repeat=2):
        p1 = np.zeros((d, d))
        p1[n1, n1] = 1.0
        p2 = np.zeros((d, d))
        p2[n2, n2] = 1.0
        projected = sys.apply_kraus([np.kron(p1, p2)], modes=(mode_1, mode_2))
        out[(n1, n2)] = projected.partial_trace(modes=(mode_1, mode_2))
    return out


def _combine(weights: dict, states: dict[tuple[int, int], FockSystem]) -> tuple[float, FockSystem | None]:
    rho = None
    for key, w in weights.items():
        if w == 0:
            continue
        term = w * states[key].density_matrix
        rho = term if rho is None else rho + term
    template = next(iter(states.values()))
    if rho is None:
        return 0.0, None
    prob = float(np.real(np.trace(rho)))
    if prob <= 0:
        return 0.0, None
    if prob < _NORMAL_MIN:
        # too small to normalise without overflow; report it as impossible to condition on
        return prob, None
    return prob, template._replace(rho / prob)


def threshold_measure(
    sys: FockSystem, mode_1: int, mode_2: int, efficiency: float = 1.0, dark_count: float = 0.0
) -> list[tuple[ClickPattern, float, FockSystem | None]]:
    """Click / no-click measurement of two modes with lossy, noisy detectors.

    Detector inefficiency is a loss channel applied before the projection;
    dark counts are independent per detector and OR-ed with photon clicks.
    Returns all four patterns with their probabilities and the normalised
    state of the unmeasured subsystems (``None`` for impossible outcomes).
    """
    if mode_1 == mode_2:
        raise ValueError("threshold_measure needs two distinct modes")
    lossy = loss_channel(loss_channel(sys, mode_1, efficiency), mode_2, efficiency)
    counts = _project_counts(lossy, mode_1, mode_2)
    d = sys.cutoff + 1

    def seen(clicked: bool, photons: int) -> float:
        if photons > 0:
            return 1.0 if clicked else 0.0
        return dark_count if clicked else 1.0 - dark_count

    results = []
    for c1, c2 in itertools.product((False, True), repeat=2):
        weights = {
            (n1, n2): seen(c1, n1) * seen(c2, n2)
            for n1, n2 in itertools.product(range(d), repeat=2)
        }
        prob, state = _combine(weights, counts)
        results.append((ClickPattern(c1, c2), prob, state))
    return results


def count_measure(
    sys: FockSystem, mode_1: int, mode_2: int, efficiency: float = 1.0, dark_count: float = 0.0
) -> list[tuple[tuple[int, int], float, FockSystem | None]]:
    """Photon-number-resolving counterpart of :func:`threshold_measure`.

    Reported counts are photons detected plus one per dark count, capped at
    2 (meaning "two or more").
    """
    if mode_1 == mode_2:
        raise ValueError("count_measure needs two distinct modes")
    lossy = loss_channel(loss_channel(sys, mode_1, efficiency), mode_2, efficiency)
    counts = _project_counts(lossy, mode_1, mode_2)
    d = sys.cutoff + 1

    def seen(reported: int, photons: int) -> float:
        p = 0.0
        if min(photons, 2) == reported:
            p += 1.0 - dark_count
        if min(photons + 1, 2) == reported:
            p += dark_count
        return p

    results = []
    for r1, r2 in itertools.product(range(3), repeat=2):
        weights = {
            (n1, n2): seen(r1, n1) * seen(r2, n2)
            for n1, n2 in itertools.product(range(d), repeat=2)
        }
        prob, state = _combine(weights, counts)
        results.append(((r1, r2), prob, state))
    return results


def single_detection_outcomes(
    sys: FockSystem, mode_1: int, mode_2: int, efficiency: float, dark_count: float, number_resolving: bool
) -> list[tuple[int, float, FockSystem | None]]:
    """The two heralding outcomes ``(detector, probability, state)``.

    A herald is one detector reporting exactly one photon (number-resolving)
    or exactly one detector clicking (threshold).
    """
    if number_resolving:
        table = {k: (p, s) for k, p, s in count_measure(sys, mode_1, mode_2, efficiency, dark_count)}
        picks = {1: (1, 0), 2: (0, 1)}
    else:
        table = {k: (p, s) for k, p, s in threshold_measure(sys, mode_1, mode_2, efficiency, dark_count)}
        picks = {1: ClickPattern(True, False), 2: ClickPattern(False, True)}
    return [(det, *table[key]) for det, key in picks.items()]
