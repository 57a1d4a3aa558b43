"""Run driver: interleaves adversary choices with protocol steps.

A run is fully determined by its :class:`RunSpec`. Protocol draws come from
per-philosopher substreams split off the run seed, so the adversary's
scheduling order never perturbs the draw sequence any one philosopher sees.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import protocol
from .protocol import (
    Configuration, HungerModel, StepEvent, check_invariants, init_configuration, step,
)
from .topology import Topology


# Substream derivation (documented contract, echoed in report headers):
#   philosopher p:      SeedSequence(entropy=seed, spawn_key=(0, p))
#   adversary private:  SeedSequence(entropy=seed, spawn_key=(1,))
#   trial t of a batch: effective seed = seed + t  (then split as above)
SUBSTREAM_DOC = "phil p: SeedSequence(seed, spawn_key=(0,p)); adversary: spawn_key=(1,); trial t: seed+t"


class PhilosopherStream:
    """Protocol draws for one philosopher (binary side picks, nr labels)."""

    __slots__ = ("gen", "draws")

    def __init__(self, seed: int, p: int):
        self.gen = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(entropy=seed, spawn_key=(0, p))))
        self.draws = 0

    def side(self, bias: float) -> int:
        self.draws += 1
        return 0 if self.gen.random() < bias else 1

    def label(self, m: int) -> int:
        self.draws += 1
        return int(self.gen.integers(1, m + 1))


class DrawStreams:
    def __init__(self, seed: int, n: int):
        self.streams = [PhilosopherStream(seed, p) for p in range(n)]

    def __getitem__(self, p: int) -> PhilosopherStream:
        return self.streams[p]


def adversary_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=seed, spawn_key=(1,))))


@dataclass
class RunSpec:
    """Everything that determines a run, seed included."""

    topology: Topology
    algorithm: str
    adversary: tuple  # (name, args tuple) resolved via adversary.make_strategy
    seed: int = 0
    horizon: int = 10_000
    m: Optional[int] = None
    eat_steps: int = 1
    hunger: HungerModel = field(default_factory=HungerModel)
    draw_bias: float = 0.5
    initial_nr: Optional[tuple[int, ...]] = None  # test fixture override
    checked: bool = False

    def build_configuration(self) -> Configuration:
        return init_configuration(
            self.topology, self.algorithm, self.m, self.eat_steps,
            self.draw_bias, self.hunger,
            list(self.initial_nr) if self.initial_nr else None)


class History:
    """What an adversary may look at: the past, never unconsumed draws.

    Exposes the live configuration, the event list so far and the step index.
    With ``record_snapshots`` every pre-step configuration copy is kept
    (expensive; for small diagnostic runs only).
    """

    def __init__(self, config: Configuration, record_snapshots: bool = False):
        self.config = config
        self.events: list[StepEvent] = []
        self.snapshots: list[Configuration] = [] if record_snapshots else None
        self.record_snapshots = record_snapshots

    @property
    def step_index(self) -> int:
        return len(self.events)

    @property
    def last_event(self) -> Optional[StepEvent]:
        return self.events[-1] if self.events else None

    def append(self, event: StepEvent) -> None:
        self.events.append(event)


@dataclass
class Trace:
    spec: RunSpec
    events: list[StepEvent]
    final: Configuration
    round_marks: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)


class StrategyMismatch(Exception):
    """Scripted strategy applied to a run it was not built for."""


def run(spec: RunSpec, strategy=None, stop_when=None,
        record_events: bool = True, record_snapshots: bool = False) -> Trace:
    """Execute up to ``horizon`` atomic steps under the adversary.

    ``stop_when(config, event, step_index)`` may end the run early (used by
    estimators; a success already observed cannot be unobserved). Returns the
    trace; ``record_events=False`` keeps only metrics-relevant bookkeeping out
    and is the bulk Monte Carlo fast path.
    """
    from . import adversary as adversary_mod  # local import to avoid cycle

    config = spec.build_configuration()
    if strategy is None:
        strategy = adversary_mod.make_strategy(spec.adversary, spec, config)
    streams = DrawStreams(spec.seed, spec.topology.philosopher_count)
    history = History(config, record_snapshots)
    events: list[StepEvent] = [] if record_events else None
    n = spec.topology.philosopher_count

    for idx in range(spec.horizon):
        p = strategy.choose(history)
        if not (0 <= p < n):
            raise StrategyMismatch(f"strategy chose invalid philosopher {p}")
        if record_snapshots:
            history.snapshots.append(config.copy())
        event = step(config, p, streams[p])
        history.append(event)
        if record_events:
            events.append(event)
        observe = getattr(strategy, "observe", None)
        if observe is not None:
            observe(history, event)
        if spec.checked:
            check_invariants(config)
        if stop_when is not None and stop_when(config, event, idx):
            break

    marks = list(getattr(strategy, "round_marks", []) or [])
    return Trace(spec, events if record_events else history.events[:0], config, marks)


def fairness_check(trace: Trace, window: int) -> list[tuple[int, tuple[int, int]]]:
    """Finite-horizon fairness proxy.

    Flags (philosopher, (gap_start, gap_end)) for every maximal interval of
    more than ``window`` consecutive steps in which that philosopher is never
    scheduled. Boundary gaps (before first / after last scheduling) count.
    An empty list means fair at this resolution.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    n = trace.spec.topology.philosopher_count
    total = len(trace.events)
    last_seen = [-1] * n
    violations: list[tuple[int, tuple[int, int]]] = []
    open_from = [0] * n  # start of current unscheduled gap
    for idx, ev in enumerate(trace.events):
        p = ev.actor
        gap = idx - open_from[p]
        if gap > window:
            violations.append((p, (open_from[p], idx)))
        open_from[p] = idx + 1
        last_seen[p] = idx
    for p in range(n):
        gap = total - open_from[p]
        if gap > window:
            violations.append((p, (open_from[p], total)))
    violations.sort()
    return violations


@dataclass
class RunMetrics:
    eat_count: list[int]
    first_eat_step: list[Optional[int]]
    max_hunger_duration: list[int]
    fairness_violations: list[tuple[int, tuple[int, int]]]

    def total_eats(self) -> int:
        return sum(self.eat_count)


def metrics(trace: Trace, fairness_window: Optional[int] = None) -> RunMetrics:
    """Aggregate per-philosopher eat counts, first-eat steps and hunger spans."""
    n = trace.spec.topology.philosopher_count
    eat_count = [0] * n
    first_eat: list[Optional[int]] = [None] * n
    max_hunger = [0] * n
    hungry_since = [None] * n
    for idx, ev in enumerate(trace.events):
        p = ev.actor
        act = ev.action
        if act == protocol.A_GET_HUNGRY:
            hungry_since[p] = idx
        elif act == protocol.A_TAKE_SECOND and ev.outcome == "success":
            if hungry_since[p] is not None:
                max_hunger[p] = max(max_hunger[p], idx - hungry_since[p])
                hungry_since[p] = None
        elif act == protocol.A_FINISH_EAT:
            eat_count[p] += 1
            if first_eat[p] is None:
                first_eat[p] = idx
    total = len(trace.events)
    for p in range(n):
        if hungry_since[p] is not None:
            max_hunger[p] = max(max_hunger[p], total - hungry_since[p])
    violations = fairness_check(trace, fairness_window) if fairness_window else []
    return RunMetrics(eat_count, first_eat, max_hunger, violations)


# -- artifact formats ----------------------------------------------------------

def format_trace(trace: Trace) -> str:
    """Tab-separated trace: stepIndex, philosopher, action, outcome, draw-or-dash."""
    out = io.StringIO()
    for idx, ev in enumerate(trace.events):
        out.write(f"{idx}\t{ev.actor}\t{ev.action}\t{ev.outcome or '-'}\t{ev.draw or '-'}\n")
    return out.getvalue()


def format_metrics_csv(m: RunMetrics) -> str:
    lines = ["philosopher,eatCount,firstEatStep,maxHungerDuration"]
    for p, (cnt, first, hung) in enumerate(zip(m.eat_count, m.first_eat_step,
                                               m.max_hunger_duration)):
        first_s = "" if first is None else str(first)
        lines.append(f"{p},{cnt},{first_s},{hung}")
    return "\n".join(lines) + "\n"


def replay_matches(trace: Trace) -> bool:
    """Re-execute the spec and compare event-for-event (determinism witness)."""
    again = run(trace.spec)
    return again.events == trace.events and \
        again.final.canonical_key() == trace.final.canonical_key()
