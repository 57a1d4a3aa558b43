"""Atomic-step operational semantics of LR1, LR2, GDP1 and GDP2.

One call to :func:`step` executes exactly one atomic step of one philosopher
under the active algorithm. Fork-touching primitives (test-and-take, release,
request insert/remove, guest-book signing, relabel) are each a single atomic
step; the commitment draw is its own observable step so a scheduler can react
to a commitment before the fork is taken.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .topology import LEFT, RIGHT, SIDE_NAMES, Topology

ALGORITHMS = ("LR1", "LR2", "GDP1", "GDP2")

# Program counter labels. Only a subset is live per algorithm; the flow is
#   LR1 : THINK COMMIT TAKE1 TAKE2 EAT RELEASE
#   LR2 : THINK INSERT_L INSERT_R COMMIT TAKE1 TAKE2 EAT REMOVE_L REMOVE_R
#         SIGN_L SIGN_R RELEASE
#   GDP1: THINK COMMIT TAKE1 RELABEL TAKE2 EAT RELEASE
#   GDP2: THINK INSERT_L INSERT_R COMMIT TAKE1 RELABEL TAKE2 EAT REMOVE_L
#         REMOVE_R SIGN_L SIGN_R RELEASE
# A failed second take releases the held fork and jumps back to COMMIT within
# the same atomic step.
PC_THINK = 0
PC_INSERT_L = 1
PC_INSERT_R = 2
PC_COMMIT = 3
PC_TAKE1 = 4
PC_RELABEL = 5
PC_TAKE2 = 6
PC_EAT = 7
PC_REMOVE_L = 8
PC_REMOVE_R = 9
PC_SIGN_L = 10
PC_SIGN_R = 11
PC_RELEASE = 12

PC_NAMES = (
    "think", "insertL", "insertR", "commit", "take1", "relabel", "take2",
    "eat", "removeL", "removeR", "signL", "signR", "release",
)

# pcs forming the trying section (between getting hungry and starting to eat)
TRYING_PCS = frozenset(
    {PC_INSERT_L, PC_INSERT_R, PC_COMMIT, PC_TAKE1, PC_RELABEL, PC_TAKE2}
)


def uses_requests(algorithm: str) -> bool:
    return algorithm in ("LR2", "GDP2")


def uses_priority(algorithm: str) -> bool:
    return algorithm in ("GDP1", "GDP2")


def first_trying_pc(algorithm: str) -> int:
    return PC_INSERT_L if uses_requests(algorithm) else PC_COMMIT


def after_take1_pc(algorithm: str) -> int:
    return PC_RELABEL if uses_priority(algorithm) else PC_TAKE2


def after_eat_pc(algorithm: str) -> int:
    return PC_REMOVE_L if uses_requests(algorithm) else PC_RELEASE


class StepEvent(NamedTuple):
    """One trace record: who stepped, what happened, any random draw."""

    actor: int
    action: str
    outcome: Optional[str]
    draw: Optional[str]


# action vocabulary (kept stable: trace files use these strings)
A_THINK = "think"
A_GET_HUNGRY = "getHungry"
A_COMMIT_RANDOM = "commitRandom"
A_COMMIT_PRIORITY = "commitPriority"
A_TAKE_FIRST = "testAndTakeFirst"
A_COND_FAIL = "condFail"
A_RELABEL = "relabel"
A_TAKE_SECOND = "testAndTakeSecond"
A_RELEASE_FIRST = "releaseFirst"
A_EAT_TICK = "eatTick"
A_FINISH_EAT = "finishEat"
A_INSERT = "insertRequests"
A_REMOVE = "removeRequests"
A_SIGN = "signGuestBooks"
A_RELEASE_BOTH = "releaseBoth"


@dataclass
class HungerModel:
    """Externalised think durations.

    ``always`` (default): a thinking philosopher gets hungry on his next step.
    ``scheduled``: per-philosopher think durations, consumed cyclically; a
    duration of d means d think steps before getting hungry.
    """

    kind: str = "always"
    durations: dict[int, list[int]] = field(default_factory=dict)

    def next_duration(self, p: int, cycle: int) -> int:
        if self.kind == "always":
            return 0
        seq = self.durations.get(p)
        if not seq:
            return 0
        return seq[cycle % len(seq)]


class ProtocolError(Exception):
    """Internal invariant violation: indicates a simulator bug."""


class ConfigurationError(ValueError):
    """Invalid run setup (e.g. nr bound below fork count for GDP)."""


class Configuration:
    """Complete system snapshot: per-fork and per-philosopher state.

    Mutable; :func:`step` updates it in place. Use :meth:`copy` for a
    value-semantic snapshot.
    """

    __slots__ = (
        "topology", "algorithm", "m", "eat_steps", "draw_bias", "hunger",
        "holder", "nr", "requests", "use_clock", "last_use",
        "pc", "committed", "eat_left", "think_left", "hunger_cycle",
    )

    def __init__(self, topology: Topology, algorithm: str, m: int,
                 eat_steps: int = 1, draw_bias: float = 0.5,
                 hunger: HungerModel | None = None):
        if algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {algorithm!r}")
        k = topology.fork_count
        n = topology.philosopher_count
        if uses_priority(algorithm) and m < k:
            raise ConfigurationError(
                f"{algorithm} needs nr bound m >= fork count ({m} < {k})")
        if eat_steps < 1:
            raise ConfigurationError("eat_steps must be >= 1")
        self.topology = topology
        self.algorithm = algorithm
        self.m = m
        self.eat_steps = eat_steps
        self.draw_bias = draw_bias
        self.hunger = hunger or HungerModel()
        self.holder: list[Optional[int]] = [None] * k
        self.nr: list[int] = [0] * k
        self.requests: list[set[int]] = [set() for _ in range(k)]
        self.use_clock: list[int] = [0] * k
        self.last_use: list[dict[int, int]] = [{} for _ in range(k)]
        self.pc: list[int] = [PC_THINK] * n
        self.committed: list[Optional[int]] = [None] * n
        self.eat_left: list[int] = [0] * n
        self.think_left: list[int] = [self.hunger.next_duration(p, 0) for p in range(n)]
        self.hunger_cycle: list[int] = [0] * n

    def copy(self) -> "Configuration":
        c = Configuration.__new__(Configuration)
        c.topology = self.topology
        c.algorithm = self.algorithm
        c.m = self.m
        c.eat_steps = self.eat_steps
        c.draw_bias = self.draw_bias
        c.hunger = self.hunger
        c.holder = list(self.holder)
        c.nr = list(self.nr)
        c.requests = [set(s) for s in self.requests]
        c.use_clock = list(self.use_clock)
        c.last_use = [dict(d) for d in self.last_use]
        c.pc = list(self.pc)
        c.committed = list(self.committed)
        c.eat_left = list(self.eat_left)
        c.think_left = list(self.think_left)
        c.hunger_cycle = list(self.hunger_cycle)
        return c

    # -- convenience accessors -------------------------------------------------

    def committed_fork(self, p: int) -> Optional[int]:
        side = self.committed[p]
        if side is None:
            return None
        return self.topology.arcs[p][side]

    def holding(self, p: int) -> list[int]:
        return [f for f, h in enumerate(self.holder) if h == p]

    def is_trying(self, p: int) -> bool:
        return self.pc[p] in TRYING_PCS

    def is_eating(self, p: int) -> bool:
        return self.pc[p] == PC_EAT

    def canonical_key(self) -> tuple:
        """Hashable encoding of the full configuration (state-space search)."""
        return (
            tuple(self.holder),
            tuple(self.nr),
            tuple(tuple(sorted(s)) for s in self.requests),
            tuple(tuple(sorted(d.items())) for d in self.last_use),
            tuple(self.pc),
            tuple(self.committed),
            tuple(self.eat_left),
            tuple(self.think_left),
        )


def init_configuration(topology: Topology, algorithm: str, m: int | None = None,
                       eat_steps: int = 1, draw_bias: float = 0.5,
                       hunger: HungerModel | None = None,
                       initial_nr: list[int] | None = None) -> Configuration:
    """All forks free with nr 0, empty requests and guest books; all
    philosophers thinking in identical state.

    ``initial_nr`` is a test-fixture override that pre-labels the forks (used
    by the starvation harness); production runs leave it unset.
    """
    if m is None:
        m = topology.fork_count
    c = Configuration(topology, algorithm, m, eat_steps, draw_bias, hunger)
    if initial_nr is not None:
        if len(initial_nr) != topology.fork_count:
            raise ConfigurationError("initial_nr must label every fork")
        if any(not (0 <= v <= m) for v in initial_nr):
            raise ConfigurationError("initial_nr values must lie in [0, m]")
        c.nr = list(initial_nr)
    return c


def cond(c: Configuration, fork: int, p: int) -> bool:
    """Courtesy test: no other pending request, or every other requester has
    used the fork at least as recently as ``p``.

    Uses >= so that the symmetric never-eaten start (all timestamps 0) passes.
    """
    others = c.requests[fork]
    if not others or others == {p}:
        return True
    lu = c.last_use[fork]
    mine = lu.get(p, 0)
    for q in others:
        if q != p and lu.get(q, 0) < mine:
            return False
    return True


def enabled(c: Configuration, p: int) -> bool:
    """Every philosopher always has a next atomic step (a failed test is a step)."""
    return 0 <= p < c.topology.philosopher_count


def is_eating_event(e: StepEvent) -> bool:
    return e.action == A_FINISH_EAT


def step(c: Configuration, p: int, stream) -> StepEvent:
    """Execute one atomic step of philosopher ``p``; mutate ``c``; return the event.

    ``stream`` supplies p's protocol draws: ``side(bias) -> int`` (0 left /
    1 right) and ``label(m) -> int`` (uniform on [1, m]). It is consulted only
    on steps that actually draw.
    """
    topo = c.topology
    alg = c.algorithm
    pc = c.pc[p]
    left, right = topo.arcs[p]

    if pc == PC_THINK:
        if c.think_left[p] > 0:
            c.think_left[p] -= 1
            return StepEvent(p, A_THINK, None, None)
        c.pc[p] = first_trying_pc(alg)
        return StepEvent(p, A_GET_HUNGRY, None, None)

    if pc == PC_INSERT_L:
        c.requests[left].add(p)
        c.pc[p] = PC_INSERT_R
        return StepEvent(p, A_INSERT, "left", None)

    if pc == PC_INSERT_R:
        c.requests[right].add(p)
        c.pc[p] = PC_COMMIT
        return StepEvent(p, A_INSERT, "right", None)

    if pc == PC_COMMIT:
        if uses_priority(alg):
            side = LEFT if c.nr[left] > c.nr[right] else RIGHT
            c.committed[p] = side
            c.pc[p] = PC_TAKE1
            return StepEvent(p, A_COMMIT_PRIORITY, SIDE_NAMES[side], None)
        side = stream.side(c.draw_bias)
        c.committed[p] = side
        c.pc[p] = PC_TAKE1
        return StepEvent(p, A_COMMIT_RANDOM, SIDE_NAMES[side], SIDE_NAMES[side])

    if pc == PC_TAKE1:
        fork = topo.arcs[p][c.committed[p]]
        if c.holder[fork] is not None:
            return StepEvent(p, A_TAKE_FIRST, "fail", None)
        if uses_requests(alg) and not cond(c, fork, p):
            return StepEvent(p, A_COND_FAIL, SIDE_NAMES[c.committed[p]], None)
        c.holder[fork] = p
        c.pc[p] = after_take1_pc(alg)
        return StepEvent(p, A_TAKE_FIRST, "success", None)

    if pc == PC_RELABEL:
        fork = topo.arcs[p][c.committed[p]]
        other = topo.other_fork(p, fork)
        if c.nr[fork] == c.nr[other]:
            old = c.nr[fork]
            new = stream.label(c.m)
            c.nr[fork] = new
            c.pc[p] = PC_TAKE2
            return StepEvent(p, A_RELABEL, f"{old}->{new}", str(new))
        c.pc[p] = PC_TAKE2
        return StepEvent(p, A_RELABEL, "skip", None)

    if pc == PC_TAKE2:
        fork = topo.arcs[p][c.committed[p]]
        other = topo.other_fork(p, fork)
        if c.holder[other] is None:
            c.holder[other] = p
            c.committed[p] = None
            c.pc[p] = PC_EAT
            c.eat_left[p] = c.eat_steps
            return StepEvent(p, A_TAKE_SECOND, "success", None)
        # Failed test and release of the held fork are one atomic step.
        if c.holder[fork] != p:
            raise ProtocolError(f"philosopher {p} at take2 without first fork")
        c.holder[fork] = None
        c.committed[p] = None
        c.pc[p] = PC_COMMIT
        return StepEvent(p, A_RELEASE_FIRST, SIDE_NAMES[topo.arcs[p].index(fork)], None)

    if pc == PC_EAT:
        c.eat_left[p] -= 1
        if c.eat_left[p] > 0:
            return StepEvent(p, A_EAT_TICK, None, None)
        c.pc[p] = after_eat_pc(alg)
        return StepEvent(p, A_FINISH_EAT, None, None)

    if pc == PC_REMOVE_L:
        c.requests[left].discard(p)
        c.pc[p] = PC_REMOVE_R
        return StepEvent(p, A_REMOVE, "left", None)

    if pc == PC_REMOVE_R:
        c.requests[right].discard(p)
        c.pc[p] = PC_SIGN_L
        return StepEvent(p, A_REMOVE, "right", None)

    if pc == PC_SIGN_L:
        c.use_clock[left] += 1
        c.last_use[left][p] = c.use_clock[left]
        c.pc[p] = PC_SIGN_R
        return StepEvent(p, A_SIGN, "left", None)

    if pc == PC_SIGN_R:
        c.use_clock[right] += 1
        c.last_use[right][p] = c.use_clock[right]
        c.pc[p] = PC_RELEASE
        return StepEvent(p, A_SIGN, "right", None)

    if pc == PC_RELEASE:
        released = 0
        for f in (left, right):
            if c.holder[f] == p:
                c.holder[f] = None
                released += 1
        if released != 2:
            raise ProtocolError(f"philosopher {p} releasing with {released} forks held")
        c.hunger_cycle[p] += 1
        c.think_left[p] = c.hunger.next_duration(p, c.hunger_cycle[p])
        c.pc[p] = PC_THINK
        return StepEvent(p, A_RELEASE_BOTH, None, None)

    raise ProtocolError(f"philosopher {p} at malformed pc {pc}")


def check_invariants(c: Configuration) -> None:
    """Assert the cross-cutting state invariants; raise ProtocolError on violation.

    Used by the engine's checked mode after every step.
    """
    topo = c.topology
    n = topo.philosopher_count
    held_by: dict[int, list[int]] = {}
    for f, h in enumerate(c.holder):
        if h is not None:
            if f not in topo.arcs[h]:
                raise ProtocolError(f"fork {f} held by non-adjacent philosopher {h}")
            held_by.setdefault(h, []).append(f)
    for p in range(n):
        holds = held_by.get(p, [])
        if len(holds) > 2:
            raise ProtocolError(f"philosopher {p} holds {len(holds)} forks")
        pc = c.pc[p]
        if len(holds) == 2 and pc not in (
            PC_EAT, PC_REMOVE_L, PC_REMOVE_R, PC_SIGN_L, PC_SIGN_R, PC_RELEASE
        ):
            raise ProtocolError(f"philosopher {p} holds 2 forks at pc {PC_NAMES[pc]}")
        if pc in (PC_RELABEL, PC_TAKE2) and (
            c.committed[p] is None or c.holder[c.committed_fork(p)] != p
        ):
            raise ProtocolError(f"philosopher {p} at {PC_NAMES[pc]} without committed fork")
        if (c.committed[p] is not None) != (pc in (PC_TAKE1, PC_RELABEL, PC_TAKE2)):
            raise ProtocolError(
                f"philosopher {p}: commitment present iff pc between choice and "
                f"acquisition/release (pc={PC_NAMES[pc]})")
        if c.eat_left[p] > 0 and pc != PC_EAT:
            raise ProtocolError(f"philosopher {p} has eat steps left at pc {PC_NAMES[pc]}")
    for f in range(topo.fork_count):
        if not (0 <= c.nr[f] <= c.m):
            raise ProtocolError(f"fork {f} nr {c.nr[f]} outside [0, m]")
        adj = set(topo.adjacent_philosophers(f))
        if not c.requests[f] <= adj:
            raise ProtocolError(f"fork {f} has non-adjacent requests")
        for q, ts in c.last_use[f].items():
            if ts > c.use_clock[f]:
                raise ProtocolError(f"fork {f}: lastUse {ts} exceeds useClock")
    if uses_requests(c.algorithm):
        # requests(f) must exactly match philosophers between insert and remove
        for f in range(topo.fork_count):
            expect = set()
            for q in topo.adjacent_philosophers(f):
                pcq = c.pc[q]
                if pcq in (PC_COMMIT, PC_TAKE1, PC_RELABEL, PC_TAKE2, PC_EAT):
                    expect.add(q)
                elif pcq == PC_INSERT_R and topo.arcs[q][LEFT] == f:
                    expect.add(q)
                elif pcq == PC_REMOVE_R and topo.arcs[q][RIGHT] == f:
                    expect.add(q)
                elif pcq == PC_REMOVE_L:
                    expect.add(q)
            if c.requests[f] != expect:
                raise ProtocolError(
                    f"fork {f} requests {sorted(c.requests[f])} != expected {sorted(expect)}")
