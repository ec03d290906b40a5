"""Seeded discrete-event Monte Carlo simulation of a repeater chain.

Each elementary link runs its own attempt clock with period
``attempt_interval``. A round launched at tick ``k`` creates the memory
excitation at ``k * interval`` and its herald reaches the end nodes at
``(k + 1) * interval``. Failed rounds are skipped in bulk by drawing the
number of rounds to the first success from a geometric law.

Links are grouped into blocks. Without a purification plan the whole
chain is one block; with a plan of ``n`` levels, block ``j`` joins ``L``
blocks of level ``j - 1`` and distils ``M`` of its raw pairs into one.
Inside a block adjacent pairs are swapped as soon as both exist.

Random numbers come from counter-based Philox streams keyed by
``(seed, stream kind, index)``: link ``i`` uses ``(0, i)``, the swap at
node ``k`` uses ``(1, k)``, and purification in block ``(level, i)`` uses
``(2, level, i)``. Adding links leaves the other streams untouched.
"""

from __future__ import annotations

import enum
import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .generation import (
    EmissionPulse,
    LinkHardware,
    attempt_interval,
    dlcz_herald,
    single_emitter_herald,
)
from .memory import AfcParams, write_loss
from .photonics import fiber_transmission
from .repeater import AnalyticLinkModel, PurificationPlan, SwapStation, purify, swap
from .states import PairState, decohere, fidelity

SCHEMES = ("dlcz", "single_emitter")
# expiries are nudged this fraction of an attempt interval past the nominal
# time so a pair exactly ``cutoff`` old can still be swapped
_NUDGE = 1e-6
_TICK_EPS = 2e-6


@dataclass(frozen=True)
class RepeaterChainConfig:
    """Everything needed to simulate one chain.

    ``hardware`` is shared by every link; its ``half_length_km`` is
    replaced by half of each segment length. ``herald_override`` bypasses
    the physical scheme with a fixed per-mode success probability and
    heralded pair, which is how the engine is checked against the
    waiting-time analytics.
    """

    segment_lengths_km: tuple[float, ...]
    hardware: LinkHardware = field(default_factory=LinkHardware)
    memory: AfcParams = field(default_factory=lambda: AfcParams(2 * math.pi * 1e6))
    scheme: str = "dlcz"
    pulse: EmissionPulse = field(default_factory=lambda: EmissionPulse.from_gt(0.1))
    station: SwapStation = field(default_factory=SwapStation)
    purification: PurificationPlan | None = None
    cutoff: float = math.inf
    pulse_overhead: float = 0.0
    round_efficiency: float = 1.0
    herald_override: tuple[float, PairState] | None = None

    def __post_init__(self) -> None:
        segments = tuple(float(x) for x in self.segment_lengths_km)
        object.__setattr__(self, "segment_lengths_km", segments)
        if not segments:
            raise ValueError("at least one segment is required")
        if any(not x >= 0 for x in segments):
            raise ValueError("segment lengths must be non-negative")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.purification is not None and self.purification.total_links != len(segments):
            raise ValueError(
                f"purification plan covers {self.purification.total_links} links "
                f"but the chain has {len(segments)} segments"
            )
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")
        if self.pulse_overhead < 0:
            raise ValueError("pulse_overhead must be non-negative")
        if self.herald_override is not None:
            prob, _ = self.herald_override
            if not 0.0 <= prob <= 1.0:
                raise ValueError("override success probability must lie in [0, 1]")
        for i in range(len(segments)):
            if not self.link_interval(i) > 0:
                raise ValueError(
                    f"link {i} has a zero attempt interval; give it a length or a pulse overhead"
                )

    @property
    def num_links(self) -> int:
        return len(self.segment_lengths_km)

    @property
    def total_km(self) -> float:
        return float(sum(self.segment_lengths_km))

    @property
    def mode_capacity(self) -> int:
        return int(self.memory.mode_capacity)

    def link_hardware(self, i: int) -> LinkHardware:
        return replace(self.hardware, half_length_km=self.segment_lengths_km[i] / 2.0)

    def link_interval(self, i: int) -> float:
        return attempt_interval(self.link_hardware(i), self.pulse_overhead)

    def link_herald(self, i: int) -> tuple[float, PairState]:
        """Per-mode success probability and the pair as stored in memory."""
        if self.herald_override is not None:
            prob, pair = self.herald_override
        elif self.scheme == "dlcz":
            prob, pair = dlcz_herald(self.pulse, self.link_hardware(i))
        else:
            prob, pair = single_emitter_herald(self.link_hardware(i), self.round_efficiency)
        pair = write_loss(pair, self.memory).replace(left_node=i, right_node=i + 1)
        return prob, pair

    @property
    def pair_t2(self) -> float:
        # both halves dephase independently, so the pair coherence decays twice as fast
        return self.memory.spin_t2 / 2.0


class EventKind(enum.IntEnum):
    """Event kinds; the value is the tie-break priority at equal times."""

    HERALD_ARRIVE = 0
    SWAP_READY = 1
    PURIFY_READY = 2
    DELIVERY = 3
    CUTOFF_EXPIRE = 4
    ATTEMPT_LAUNCH = 5


@dataclass(order=True, frozen=True)
class Event:
    time: float
    kind: EventKind
    seq: int
    subject: object = field(compare=False, default=None)
    payload: object = field(compare=False, default=None)
    scheduled_at: float = field(compare=False, default=0.0)


@dataclass(frozen=True)
class RunStatistics:
    delivered_pairs: int
    elapsed: float
    rate: float
    fidelity_mean: float
    fidelity_stddev: float
    attempts_total: int
    link_heralds: tuple[int, ...]
    resources_consumed: int
    rounds_total: int = 0
    rounds_succeeded: int = 0
    swap_attempts: int = 0
    swap_successes: int = 0
    delivery_events: int = 0
    delivery_interval_mean: float = math.nan
    delivery_interval_stddev: float = math.nan
    trace: tuple | None = field(default=None, compare=False, repr=False)

    @property
    def per_round_success(self) -> float:
        return self.rounds_succeeded / self.rounds_total if self.rounds_total else math.nan

    @property
    def delivery_interval_stderr(self) -> float:
        if self.delivery_events < 2:
            return math.nan
        return self.delivery_interval_stddev / math.sqrt(self.delivery_events)


# --------------------------------------------------------------------------
# simulation internals
# --------------------------------------------------------------------------


@dataclass
class _Held:
    pair: PairState
    as_of: float
    elementary: int
    token: int = -1


def _stream(seed, *key: int) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def _round_success(p: float, n: int) -> float:
    if p >= 1.0:
        return 1.0
    return -math.expm1(n * math.log1p(-p))


class _Link:
    def __init__(self, run: "_Run", index: int, deliver_all: bool):
        cfg = run.config
        self.run = run
        self.index = index
        self.label = ("link", index)
        self.interval = cfg.link_interval(index)
        self.mode_prob, self.pair = cfg.link_herald(index)
        self.modes = cfg.mode_capacity
        self.round_prob = _round_success(self.mode_prob, self.modes)
        self.rng = _stream(run.seed, 0, index)
        self.parent: _Block | None = None
        self.position = 0
        self.deliver_all = deliver_all
        self.epoch = 0
        self._count_cdf = self._successes_cdf() if deliver_all and self.modes > 1 else None

    @property
    def links(self) -> list["_Link"]:
        return [self]

    def _successes_cdf(self) -> np.ndarray | None:
        """CDF of the number of successful modes given at least one success."""
        p, n = self.mode_prob, self.modes
        if self.round_prob <= 0 or p >= 1.0:
            return None
        k = np.arange(1, n + 1)
        log_pmf = (
            np.array([math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1) for j in k])
            + k * math.log(p) + (n - k) * math.log1p(-p)
        )
        pmf = np.exp(log_pmf) / self.round_prob
        return np.cumsum(pmf)

    def start(self, now: float) -> None:
        if self.round_prob <= 0:
            return
        # a restart supersedes whatever the link was doing
        self.epoch += 1
        tick = math.ceil(now / self.interval - _TICK_EPS)
        at = max(tick * self.interval, now)
        self.run.schedule(at, EventKind.ATTEMPT_LAUNCH, self, (self.epoch, tick))

    def on_launch(self, payload: tuple[int, int]) -> None:
        epoch, tick = payload
        if epoch != self.epoch:
            return
        rounds = 1 if self.round_prob >= 1.0 else int(self.rng.geometric(self.round_prob))
        run = self.run
        run.rounds_total += rounds
        run.rounds_succeeded += 1
        run.attempts_total += rounds * self.modes
        emit_tick = tick + rounds - 1
        if not self.deliver_all:
            count = 1
        elif self.mode_prob >= 1.0:
            count = self.modes
        elif self._count_cdf is None:
            count = 1
        else:
            count = int(np.searchsorted(self._count_cdf, self.rng.random() * self._count_cdf[-1])) + 1
            count = min(count, self.modes)
        created = emit_tick * self.interval
        pairs = []
        for _ in range(count):
            sign = 1 if self.rng.random() < 0.5 else -1
            pairs.append(self.pair.replace(sign=sign * self.pair.sign, created_at=created))
        run.schedule((emit_tick + 1) * self.interval, EventKind.HERALD_ARRIVE, self, (epoch, pairs))

    def on_herald(self, now: float, payload: tuple[int, list[PairState]]) -> None:
        epoch, pairs = payload
        if epoch != self.epoch:
            return
        run = self.run
        run.link_heralds[self.index] += len(pairs)
        if now - pairs[0].created_at > run.config.cutoff + _NUDGE * run.min_interval:
            self.start(now)
            return
        held = [_Held(p, p.created_at, 1) for p in pairs]
        if self.parent is None:
            run.deliver(self, held)
        else:
            self.parent.receive(self.position, held[0], now)


class _Block:
    def __init__(self, run: "_Run", level: int, index: int, children: list, pairs_m: int):
        self.run = run
        self.level = level
        self.index = index
        self.label = ("block", level, index)
        self.children = children
        for pos, child in enumerate(children):
            child.parent = self
            child.position = pos
        self.pairs_m = pairs_m
        self.parent: _Block | None = None
        self.position = 0
        self.spans: dict[int, tuple[int, _Held]] = {}
        self.raw: list[_Held] = []
        self.rng = _stream(run.seed, 2, level, index)
        # node id at the left edge of every child
        self.edges = [child.links[0].index for child in children]

    @property
    def links(self) -> list[_Link]:
        return [link for child in self.children for link in child.links]

    def start(self, now: float) -> None:
        for token in [h.token for _, h in self.spans.values()] + [h.token for h in self.raw]:
            self.run.forget(token)
        self.spans.clear()
        self.raw.clear()
        for child in self.children:
            child.start(now)

    def _restart_children(self, first: int, last: int, now: float) -> None:
        for child in self.children[first : last + 1]:
            child.start(now)

    def _span_ending_at(self, pos: int) -> int | None:
        for start, (end, _) in self.spans.items():
            if end == pos:
                return start
        return None

    def receive(self, pos: int, held: _Held, now: float) -> None:
        run = self.run
        run.track(held, lambda t, s=pos: self._expire_span(s, t))
        self.spans[pos] = (pos, held)
        self._after_span_change(pos, now)

    def _after_span_change(self, start: int, now: float) -> None:
        end, held = self.spans[start]
        if start == 0 and end == len(self.children) - 1:
            del self.spans[start]
            self._add_raw(held, now)
            return
        if start > 0 and self._span_ending_at(start - 1) is not None:
            self.run.schedule(now, EventKind.SWAP_READY, self, start)
        if end + 1 in self.spans:
            self.run.schedule(now, EventKind.SWAP_READY, self, end + 1)

    def _expire_span(self, start: int, now: float) -> None:
        end, _ = self.spans.pop(start)
        self._restart_children(start, end, now)

    def on_swap(self, boundary: int, now: float) -> None:
        left_start = self._span_ending_at(boundary - 1)
        if left_start is None or boundary not in self.spans:
            return
        run = self.run
        left_end, left = self.spans.pop(left_start)
        right_end, right = self.spans.pop(boundary)
        run.forget(left.token)
        run.forget(right.token)
        node = self.edges[boundary]
        rng = run.swap_stream(node)
        prob, out = swap(run.current(left, now), run.current(right, now), run.config.station)
        run.swap_attempts += 1
        if rng.random() >= prob:
            self._restart_children(left_start, right_end, now)
            return
        run.swap_successes += 1
        if rng.random() >= 0.5:
            out = out.replace(sign=-out.sign)
        merged = _Held(out, now, left.elementary + right.elementary)
        run.track(merged, lambda t, s=left_start: self._expire_span(s, t))
        self.spans[left_start] = (right_end, merged)
        self._after_span_change(left_start, now)

    def _add_raw(self, held: _Held, now: float) -> None:
        run = self.run
        run.forget(held.token)
        run.track(held, lambda t, h=held: self._expire_raw(h, t))
        self.raw.append(held)
        if len(self.raw) >= self.pairs_m:
            run.schedule(now, EventKind.PURIFY_READY, self, None)
        else:
            self._restart_children(0, len(self.children) - 1, now)

    def _expire_raw(self, held: _Held, now: float) -> None:
        # purification fires as soon as the buffer is full, so the
        # children are still producing while any raw pair can expire
        self.raw.remove(held)

    def on_purify(self, now: float) -> None:
        run = self.run
        if len(self.raw) < self.pairs_m:
            return
        batch, self.raw = self.raw, []
        for h in batch:
            run.forget(h.token)
        current = run.current(batch[0], now)
        elementary = batch[0].elementary
        ok = True
        for h in batch[1:]:
            prob, current = purify(current, run.current(h, now))
            elementary += h.elementary
            if self.rng.random() >= prob:
                ok = False
                break
        if not ok:
            self._restart_children(0, len(self.children) - 1, now)
            return
        out = _Held(current, now, elementary)
        if self.parent is None:
            run.deliver(self, [out])
        else:
            self.parent.receive(self.position, out, now)


class _Run:
    def __init__(self, config: RepeaterChainConfig, seed, trace: bool):
        self.config = config
        self.seed = seed
        self.queue: list[Event] = []
        self.clock = 0.0
        self._seq = 0
        self._next_token = 0
        self._live: dict[int, object] = {}
        self._swap_streams: dict[int, np.random.Generator] = {}
        self.trace: list | None = [] if trace else None
        self.attempts_total = 0
        self.rounds_total = 0
        self.rounds_succeeded = 0
        self.swap_attempts = 0
        self.swap_successes = 0
        self.link_heralds = [0] * config.num_links
        self.fidelities: list[float] = []
        self.delivery_times: list[float] = []
        self.resources = 0
        single = config.num_links == 1 and config.purification is None
        self.links = [_Link(self, i, deliver_all=single) for i in range(config.num_links)]
        self.min_interval = min(link.interval for link in self.links)
        self.top = self.links[0] if single else self._build_blocks()

    def _build_blocks(self):
        plan = self.config.purification
        if plan is None:
            return _Block(self, 1, 0, list(self.links), 1)
        if plan.levels_n == 0:
            return _Block(self, 0, 0, list(self.links), plan.pairs_m)
        units: list = list(self.links)
        for level in range(1, plan.levels_n + 1):
            size = plan.branching_l
            units = [
                _Block(self, level, i, units[i * size : (i + 1) * size], plan.pairs_m)
                for i in range(len(units) // size)
            ]
        return units[0]

    # bookkeeping -------------------------------------------------------

    def schedule(self, time: float, kind: EventKind, subject, payload) -> None:
        if time < self.clock:
            raise RuntimeError(f"event {kind.name} at {time} scheduled in the past ({self.clock})")
        self._seq += 1
        heapq.heappush(self.queue, Event(time, kind, self._seq, subject, payload, self.clock))

    def swap_stream(self, node: int) -> np.random.Generator:
        if node not in self._swap_streams:
            self._swap_streams[node] = _stream(self.seed, 1, node)
        return self._swap_streams[node]

    def current(self, held: _Held, now: float) -> PairState:
        return decohere(held.pair, max(now - held.as_of, 0.0), self.config.pair_t2)

    def track(self, held: _Held, on_expire) -> None:
        self._next_token += 1
        held.token = self._next_token
        cutoff = self.config.cutoff
        if math.isinf(cutoff):
            return
        self._live[held.token] = on_expire
        expire = held.pair.created_at + cutoff + _NUDGE * self.min_interval
        self.schedule(max(expire, self.clock), EventKind.CUTOFF_EXPIRE, None, held.token)

    def forget(self, token: int) -> None:
        self._live.pop(token, None)

    def deliver(self, unit, held: list[_Held]) -> None:
        self.schedule(self.clock, EventKind.DELIVERY, unit, held)

    # main loop ---------------------------------------------------------

    def run(self, max_time: float, max_pairs: int | None) -> RunStatistics:
        self.top.start(0.0)
        stopped_at = None
        while self.queue:
            event = heapq.heappop(self.queue)
            if event.time > max_time:
                break
            self.clock = event.time
            if self.trace is not None:
                label = getattr(event.subject, "label", event.subject)
                self.trace.append((event.time, event.kind.name, label, event.scheduled_at))
            self._dispatch(event)
            if max_pairs is not None and len(self.fidelities) >= max_pairs:
                stopped_at = self.clock
                break
        if stopped_at is not None:
            elapsed = stopped_at
        elif math.isfinite(max_time):
            elapsed = max_time
        else:
            elapsed = self.clock
        return self._statistics(elapsed)

    def _dispatch(self, event: Event) -> None:
        now = event.time
        kind = event.kind
        if kind == EventKind.ATTEMPT_LAUNCH:
            event.subject.on_launch(event.payload)
        elif kind == EventKind.HERALD_ARRIVE:
            event.subject.on_herald(now, event.payload)
        elif kind == EventKind.SWAP_READY:
            event.subject.on_swap(event.payload, now)
        elif kind == EventKind.PURIFY_READY:
            event.subject.on_purify(now)
        elif kind == EventKind.CUTOFF_EXPIRE:
            handler = self._live.pop(event.payload, None)
            if handler is not None:
                handler(now)
        elif kind == EventKind.DELIVERY:
            for h in event.payload:
                self.fidelities.append(fidelity(self.current(h, now)))
                self.resources += h.elementary
                self.forget(h.token)
            self.delivery_times.append(now)
            event.subject.start(now)

    def _statistics(self, elapsed: float) -> RunStatistics:
        delivered = len(self.fidelities)
        fids = np.array(self.fidelities)
        times = np.array(self.delivery_times)
        gaps = np.diff(times, prepend=0.0)
        return RunStatistics(
            delivered_pairs=delivered,
            elapsed=elapsed,
            rate=delivered / elapsed if elapsed > 0 else (0.0 if delivered == 0 else math.inf),
            fidelity_mean=float(fids.mean()) if delivered else math.nan,
            fidelity_stddev=float(fids.std()) if delivered else math.nan,
            attempts_total=self.attempts_total,
            link_heralds=tuple(self.link_heralds),
            resources_consumed=self.resources,
            rounds_total=self.rounds_total,
            rounds_succeeded=self.rounds_succeeded,
            swap_attempts=self.swap_attempts,
            swap_successes=self.swap_successes,
            delivery_events=len(times),
            delivery_interval_mean=float(gaps.mean()) if len(gaps) else math.nan,
            delivery_interval_stddev=float(gaps.std(ddof=1)) if len(gaps) > 1 else math.nan,
            trace=tuple(self.trace) if self.trace is not None else None,
        )


# --------------------------------------------------------------------------
# public entry points
# --------------------------------------------------------------------------


def simulate(
    config: RepeaterChainConfig,
    seed: int | np.random.SeedSequence = 0,
    *,
    max_time: float = math.inf,
    max_pairs: int | None = None,
    trace: bool = False,
) -> RunStatistics:
    """Run one chain until ``max_time`` seconds or ``max_pairs`` deliveries, whichever comes first."""
    if max_pairs is None and math.isinf(max_time):
        raise ValueError("give a finite max_time or a max_pairs limit")
    if max_pairs is not None and max_pairs <= 0:
        raise ValueError("max_pairs must be positive")
    if not max_time > 0:
        raise ValueError("max_time must be positive")
    return _Run(config, seed, trace).run(max_time, max_pairs)


def direct_transmission_rate(total_km: float, source_rate: float, hw: LinkHardware) -> float:
    """Pair rate without repeaters: source rate times end-to-end transmission and detection."""
    if total_km < 0 or source_rate < 0:
        raise ValueError("total_km and source_rate must be non-negative")
    return source_rate * fiber_transmission(total_km, hw.fiber) * hw.detector.efficiency


def analytic_model(config: RepeaterChainConfig) -> AnalyticLinkModel:
    """Waiting-time model of a chain whose links are identical."""
    if len(set(config.segment_lengths_km)) != 1:
        raise ValueError("the analytic model needs equal segment lengths")
    prob, pair = config.link_herald(0)
    swap_prob = 1.0
    if config.num_links > 1:
        swap_prob, _ = swap(pair, pair.replace(left_node=1, right_node=2), config.station)
    return AnalyticLinkModel(
        success_prob_per_attempt=prob,
        attempt_interval=config.link_interval(0),
        mode_capacity=config.mode_capacity,
        swap_success_prob=swap_prob,
        cutoff=config.cutoff,
    )


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

SWEEP_AXES = ("total_km", "gt", "p", "n_modes", "spin_t2_s", "cutoff_s", "links", "repeaters")


def with_axis(config: RepeaterChainConfig, axis: str, value: float) -> RepeaterChainConfig:
    """Copy of ``config`` with one sweepable parameter set to ``value``."""
    if axis == "total_km":
        n = config.num_links
        return replace(config, segment_lengths_km=(float(value) / n,) * n)
    if axis in ("links", "repeaters"):
        n = int(value) + (1 if axis == "repeaters" else 0)
        if n < 1 or n != float(value) + (1 if axis == "repeaters" else 0):
            raise ValueError(f"{axis} must be a non-negative integer, got {value!r}")
        if config.purification is not None:
            raise ValueError("cannot change the number of links of a chain with a purification plan")
        return replace(config, segment_lengths_km=(config.total_km / n,) * n)
    if axis == "gt":
        return replace(config, pulse=EmissionPulse.from_gt(float(value), config.pulse.p_max))
    if axis == "p":
        return replace(config, pulse=EmissionPulse.from_probability(float(value), config.pulse.p_max))
    if axis == "n_modes":
        if int(value) != value:
            raise ValueError(f"n_modes must be an integer, got {value!r}")
        return replace(config, memory=replace(config.memory, mode_capacity=int(value)))
    if axis == "spin_t2_s":
        return replace(config, memory=replace(config.memory, spin_t2=float(value)))
    if axis == "cutoff_s":
        return replace(config, cutoff=float(value))
    raise ValueError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")


def pool(runs: Sequence[RunStatistics]) -> RunStatistics:
    """Combine independent trials: counts and times add, fidelity moments are pooled."""
    if not runs:
        raise ValueError("nothing to pool")
    delivered = sum(r.delivered_pairs for r in runs)
    elapsed = sum(r.elapsed for r in runs)
    filled = [r for r in runs if r.delivered_pairs]
    if filled:
        mean = sum(r.fidelity_mean * r.delivered_pairs for r in filled) / delivered
        second = sum((r.fidelity_stddev**2 + r.fidelity_mean**2) * r.delivered_pairs for r in filled) / delivered
        std = math.sqrt(max(second - mean * mean, 0.0))
    else:
        mean = std = math.nan
    events = sum(r.delivery_events for r in runs)
    gap_runs = [r for r in runs if r.delivery_events > 1]
    if gap_runs:
        gap_mean = sum(r.delivery_interval_mean * r.delivery_events for r in gap_runs) / sum(
            r.delivery_events for r in gap_runs
        )
        gap_var = sum(
            ((r.delivery_events - 1) * r.delivery_interval_stddev**2
             + r.delivery_events * (r.delivery_interval_mean - gap_mean) ** 2)
            for r in gap_runs
        ) / max(sum(r.delivery_events for r in gap_runs) - 1, 1)
        gap_std = math.sqrt(gap_var)
    else:
        gap_mean = gap_std = math.nan
    return RunStatistics(
        delivered_pairs=delivered,
        elapsed=elapsed,
        rate=delivered / elapsed if elapsed > 0 else 0.0,
        fidelity_mean=mean,
        fidelity_stddev=std,
        attempts_total=sum(r.attempts_total for r in runs),
        link_heralds=tuple(int(x) for x in np.sum([r.link_heralds for r in runs], axis=0))
        if len({len(r.link_heralds) for r in runs}) == 1 else (),
        resources_consumed=sum(r.resources_consumed for r in runs),
        rounds_total=sum(r.rounds_total for r in runs),
        rounds_succeeded=sum(r.rounds_succeeded for r in runs),
        swap_attempts=sum(r.swap_attempts for r in runs),
        swap_successes=sum(r.swap_successes for r in runs),
        delivery_events=events,
        delivery_interval_mean=gap_mean,
        delivery_interval_stddev=gap_std,
    )


@dataclass(frozen=True)
class SweepRow:
    value: float
    config: RepeaterChainConfig
    stats: RunStatistics


def _trial(args) -> RunStatistics:
    config, seed, max_time, max_pairs = args
    return simulate(config, seed, max_time=max_time, max_pairs=max_pairs)


def _run_jobs(jobs: list, workers: int | None) -> list[RunStatistics]:
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(_trial, jobs))
    return [_trial(job) for job in jobs]


def run_trials(
    config: RepeaterChainConfig,
    seed: int = 0,
    trials: int = 1,
    *,
    max_time: float = math.inf,
    max_pairs: int | None = None,
    workers: int | None = None,
) -> RunStatistics:
    """Pool ``trials`` independent runs seeded by the children of ``SeedSequence(seed)``."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    seeds = np.random.SeedSequence(seed).spawn(trials)
    return pool(_run_jobs([(config, s, max_time, max_pairs) for s in seeds], workers))


def sweep(
    config: RepeaterChainConfig,
    axis: str,
    values: Sequence[float],
    seed: int = 0,
    trials: int = 1,
    *,
    max_time: float = math.inf,
    max_pairs: int | None = None,
    workers: int | None = None,
) -> list[SweepRow]:
    """Simulate ``config`` at every value of ``axis`` and pool ``trials`` runs per point.

    Trial ``j`` at every point uses the ``j``-th child of ``SeedSequence(seed)``,
    so points differ only through the swept parameter.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    configs = [with_axis(config, axis, v) for v in values]
    seeds = np.random.SeedSequence(seed).spawn(trials)
    results = _run_jobs([(c, s, max_time, max_pairs) for c in configs for s in seeds], workers)
    return [
        SweepRow(float(value), cfg, pool(results[i * trials : (i + 1) * trials]))
        for i, (value, cfg) in enumerate(zip(values, configs))
    ]
