"""Scheduling strategies, including the counterexample constructions.

A strategy is a deterministic decision function from the observable past to
the next philosopher to schedule. Scripted blockade strategies come in two
modes sharing one class:

* script mode - a deterministic program that, when the protocol draws land
  as desired (the draw-forcing verification harness, or a cooperating seed),
  walks the exact state sequence of the construction: establish the blockade
  pattern, then repeat rounds whose end state is isomorphic to their start.
* defensive mode - a reactive safe scheduler that keeps the blockade alive
  against live randomness: it never schedules a step that would let an
  in-scope philosopher eat while any safe alternative exists, services every
  philosopher each cycle (fairness), and exploits out-of-scope philosophers
  (the pendant arc) as pressure valves.

Live runs start in script mode and drop to defensive mode at the first draw
the script cannot absorb with a bounded retry loop.
"""

from __future__ import annotations

import math
from typing import Optional

from . import protocol
from .engine import History, StrategyMismatch, adversary_generator
from .protocol import (
    PC_COMMIT, PC_EAT, PC_INSERT_L, PC_INSERT_R, PC_RELABEL, PC_RELEASE,
    PC_REMOVE_L, PC_REMOVE_R, PC_SIGN_L, PC_SIGN_R, PC_TAKE1, PC_TAKE2,
    PC_THINK, Configuration, cond,
)
from .topology import LEFT, RIGHT, Topology, doubled_triangle, ring_with_pendant, theta


class AdversaryStrategy:
    """Base: ``choose`` picks the next philosopher; ``observe`` sees the event."""

    round_marks: list[int]

    def __init__(self):
        self.round_marks = []

    def choose(self, history: History) -> int:
        raise NotImplementedError

    def observe(self, history: History, event) -> None:
        pass


class RoundRobin(AdversaryStrategy):
    """Cyclic schedule 0, 1, ..., n-1, 0, ...; fair by construction."""

    def __init__(self):
        super().__init__()
        self._next = 0

    def choose(self, history: History) -> int:
        n = history.config.topology.philosopher_count
        p = self._next % n
        self._next = (self._next + 1) % n
        if self._next == 0:
            self.round_marks.append(history.step_index + 1)
        return p


class UniformRandom(AdversaryStrategy):
    """Uniform philosopher each step from the adversary's private stream."""

    def __init__(self, seed: int):
        super().__init__()
        self.seed = seed
        self._gen = adversary_generator(seed)

    def choose(self, history: History) -> int:
        n = history.config.topology.philosopher_count
        return int(self._gen.integers(n))


# ---------------------------------------------------------------------------
# Scripted blockade strategies
# ---------------------------------------------------------------------------

class _Deviate(Exception):
    """Script-mode draw landed somewhere the script cannot absorb."""


class ScriptedStrategy(AdversaryStrategy):
    """Common machinery for the blockade scripts.

    Subclasses implement ``_script()`` (a generator yielding philosopher
    indices and receiving the resulting events) and ``in_scope`` (the
    philosophers whose starvation the construction claims). ``want_draw``
    communicates the desired outcome of the next draw to the draw-forcing
    harness; ``None`` marks an adaptive draw the script accepts either way.
    """

    #: stubborn-wait points per round, used for the default retry budget
    stubborn_points_per_round = 8

    def __init__(self, expected_algorithms: tuple[str, ...], strict: bool = True):
        super().__init__()
        self.expected_algorithms = expected_algorithms
        self.strict = strict
        self.history: Optional[History] = None
        self.cfg: Optional[Configuration] = None
        self._gen = None
        self._pending: Optional[int] = None
        self.want_draw: Optional[int] = None  # desired side for the next draw
        self.current_stubborn: Optional[str] = None
        self.round_index = 0
        self.defensive: Optional[DefensivePlanner] = None
        self.budget_fn = None  # round index -> max consecutive retries (None = unbounded)
        self._validated = False

    # -- wiring ---------------------------------------------------------------

    def _validate(self, cfg: Configuration) -> None:
        self.check_topology(cfg.topology)
        if cfg.algorithm not in self.expected_algorithms:
            if self.strict:
                raise StrategyMismatch(
                    f"{type(self).__name__} expects algorithm in "
                    f"{self.expected_algorithms}, got {cfg.algorithm}")
            self._go_defensive()

    def check_topology(self, topo: Topology) -> None:
        raise NotImplementedError

    @property
    def in_scope(self) -> frozenset[int]:
        raise NotImplementedError

    def allowance(self) -> Optional[int]:
        if self.budget_fn is None:
            return None
        return self.budget_fn(max(1, self.round_index + 1))

    def choose(self, history: History) -> int:
        self.history = history
        self.cfg = history.config
        if not self._validated:
            self._validated = True
            self._validate(self.cfg)
        if self.defensive is not None:
            return self.defensive.choose(history)
        if self._gen is None:
            self._gen = self._script()
            try:
                self._pending = next(self._gen)
            except (_Deviate, StopIteration):
                self._go_defensive()
                return self.defensive.choose(history)
        return self._pending

    def observe(self, history: History, event) -> None:
        self.history = history
        self.cfg = history.config
        if self.defensive is not None:
            self.defensive.observe(history, event)
            return
        self.want_draw = None
        self.current_stubborn = None
        try:
            self._pending = self._gen.send(event)
        except (_Deviate, StopIteration):
            self._go_defensive()

    def _go_defensive(self) -> None:
        if self.defensive is None:
            self.defensive = DefensivePlanner(self)

    def force_defensive(self) -> None:
        self._go_defensive()

    def mark_round(self) -> None:
        self.round_index += 1
        self.round_marks.append(self.history.step_index)

    # -- script-side helpers (generators; use with ``yield from``) -------------

    def _sched(self, p: int):
        ev = yield p
        return ev

    def _hungry_all(self):
        for p in range(self.cfg.topology.philosopher_count):
            while self.cfg.pc[p] in (PC_THINK, PC_INSERT_L, PC_INSERT_R):
                yield p

    def _commit(self, p: int, side: int, stubborn_id: Optional[str] = None):
        """One draw attempt aimed at ``side``; returns the drawn side."""
        self.want_draw = side
        if stubborn_id is not None:
            self.current_stubborn = stubborn_id
        ev = yield p
        if ev.action not in (protocol.A_COMMIT_RANDOM, protocol.A_COMMIT_PRIORITY):
            raise _Deviate
        return self.cfg.committed[p]

    def _commit_free(self, p: int):
        """Adaptive draw: either outcome is absorbed (factor 1 in accounting)."""
        self.want_draw = None
        ev = yield p
        if ev.action not in (protocol.A_COMMIT_RANDOM, protocol.A_COMMIT_PRIORITY):
            raise _Deviate
        return self.cfg.committed[p]

    def _take1(self, p: int, expect_success: bool = True):
        ev = yield p
        ok = ev.action == protocol.A_TAKE_FIRST and ev.outcome == "success"
        if ok != expect_success:
            raise _Deviate
        return ev

    def _fail2(self, p: int):
        """Schedule the second-fork test expecting failure and release."""
        ev = yield p
        if ev.action != protocol.A_RELEASE_FIRST:
            raise _Deviate
        return ev

    def _skip_relabel(self, p: int):
        if self.cfg.pc[p] == PC_RELABEL:
            yield p

    def _eat_through(self, p: int):
        """Schedule p through take2, eating and all post-eat lines back to hungry."""
        while True:
            yield p
            pc = self.cfg.pc[p]
            if pc == PC_COMMIT:
                return
            if pc == PC_THINK:
                while self.cfg.pc[p] in (PC_THINK, PC_INSERT_L, PC_INSERT_R):
                    yield p
                return

    def _stubborn_commit(self, p: int, target_side: int, stubborn_id: str,
                         retry_via_take: bool):
        """Keep drawing until ``p`` commits to ``target_side``.

        ``retry_via_take``: a miss lands on a free fork, so the retry loop is
        take, failed second test (the other fork must be taken), release,
        redraw. A miss without a retry path deviates the script.
        Bounded by the fairize allowance when one is installed.
        """
        attempts = 0
        while True:
            allowance = self.allowance()
            if allowance is not None and attempts >= allowance:
                raise _Deviate
            attempts += 1
            side = yield from self._commit(p, target_side, stubborn_id)
            if side == target_side:
                return
            if not retry_via_take:
                raise _Deviate
            miss_fork = self.cfg.topology.arcs[p][side]
            if self.cfg.holder[miss_fork] is not None:
                raise _Deviate  # sticky park on a taken fork
            other = self.cfg.topology.other_fork(p, miss_fork)
            if self.cfg.holder[other] is None:
                raise _Deviate  # second free: taking would let p eat
            yield from self._take1(p, expect_success=True)
            yield from self._skip_relabel(p)
            yield from self._fail2(p)

    def _pad(self, p: int, count: int):
        """Safe no-op steps: failed first tests of a parked philosopher."""
        for _ in range(count):
            fork = self.cfg.committed_fork(p)
            if fork is None or self.cfg.holder[fork] is None or self.cfg.pc[p] != PC_TAKE1:
                return
            yield p

    def _pad_round_to(self, pad_phil: int, target_len: int, round_start: int):
        used = self.history.step_index - round_start
        if used < target_len:
            yield from self._pad(pad_phil, target_len - used)

    def _script(self):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Defensive planner: reactive fair no-eat scheduling from any state
# ---------------------------------------------------------------------------

# move classes, in the order the planner prefers them
_FINISH, _SAFE_PAD, _DRAW, _TAKE_PROTECTED, _RELEASE, _TAKE_BOMB, _EAT = range(7)


class DefensivePlanner:
    """Keeps a blockade alive reactively from any configuration.

    Schedules by staleness, preferring harmless steps, defusing any
    philosopher one step from eating by occupying his second fork, and
    releasing holders only when someone stands parked on their fork (the
    hand-off rotation). A philosopher is forced only at his deadline; if his
    only step is a successful second take, that eat is the honest failure of
    the blockade. Out-of-scope philosophers (the pendant arc) may always eat.
    """

    def __init__(self, owner: ScriptedStrategy):
        self.owner = owner
        self.last: dict[int, int] = {}
        self.served: set[int] = set()
        self.deadline = None

    def classify(self, cfg: Configuration, p: int) -> int:
        pc = cfg.pc[p]
        if pc in (PC_EAT, PC_REMOVE_L, PC_REMOVE_R, PC_SIGN_L, PC_SIGN_R, PC_RELEASE):
            return _FINISH
        if pc in (PC_THINK, PC_INSERT_L, PC_INSERT_R, PC_RELABEL):
            return _SAFE_PAD
        if pc == PC_COMMIT:
            return _DRAW
        topo = cfg.topology
        if pc == PC_TAKE1:
            fork = cfg.committed_fork(p)
            if cfg.holder[fork] is not None:
                return _SAFE_PAD
            if protocol.uses_requests(cfg.algorithm) and not cond(cfg, fork, p):
                return _SAFE_PAD
            other = topo.other_fork(p, fork)
            return _TAKE_PROTECTED if cfg.holder[other] is not None else _TAKE_BOMB
        if pc == PC_TAKE2:
            fork = cfg.committed_fork(p)
            other = topo.other_fork(p, fork)
            return _RELEASE if cfg.holder[other] is not None else _EAT
        return _SAFE_PAD

    def choose(self, history: History) -> int:
        cfg = history.config
        n = cfg.topology.philosopher_count
        if self.deadline is None:
            self.deadline = 8 * n + 24
        in_scope = self.owner.in_scope
        classes = [self.classify(cfg, p) for p in range(n)]
        now = history.step_index
        stale = sorted(range(n), key=lambda p: self.last.get(p, -1))

        # Finish eat/post-eat sequences first so forks free up again, and let
        # out-of-scope philosophers eat whenever they stand ready.
        for p in stale:
            if classes[p] == _FINISH:
                return self._pick(p, now)
        for p in stale:
            if classes[p] == _EAT and p not in in_scope:
                return self._pick(p, now)

        # Defuse: anyone one step from eating needs his free second fork
        # occupied. Prefer a philosopher already committed to it; otherwise
        # spend a fresh draw of an adjacent philosopher on the chance.
        danger = set()
        for p in range(n):
            if classes[p] == _EAT and p in in_scope:
                fork = cfg.committed_fork(p)
                danger.add(cfg.topology.other_fork(p, fork))
        # Secondary targets: the free second fork of anyone parked on a free
        # fork (his deadline take would leave him one step from eating).
        soft = set()
        for p in range(n):
            if classes[p] == _TAKE_BOMB and p in in_scope:
                fork = cfg.committed_fork(p)
                soft.add(cfg.topology.other_fork(p, fork))
        soft -= danger
        if danger:
            for q in stale:
                if classes[q] in (_TAKE_PROTECTED, _TAKE_BOMB) and \
                        cfg.committed_fork(q) in danger:
                    return self._pick(q, now)
            for q in stale:
                if classes[q] == _DRAW and \
                        (cfg.topology.arcs[q][0] in danger or
                         cfg.topology.arcs[q][1] in danger):
                    return self._pick(q, now)
        if soft:
            for q in stale:
                if classes[q] == _TAKE_PROTECTED and cfg.committed_fork(q) in soft:
                    return self._pick(q, now)
            for q in stale:
                if classes[q] == _DRAW and \
                        (cfg.topology.arcs[q][0] in soft or
                         cfg.topology.arcs[q][1] in soft):
                    return self._pick(q, now)

        # Deadline: the stalest philosopher gets his step no matter what.
        p0 = stale[0]
        if now - self.last.get(p0, -1) >= self.deadline:
            return self._pick(p0, now)

        # Pressure service: philosophers halfway to their deadline act now,
        # preferring a rotation hand-off (release with a parked taker), then
        # a fresh draw, then an unprotected take.
        pressure = [p for p in stale
                    if now - self.last.get(p, -1) >= self.deadline // 2]
        for p in pressure:
            if classes[p] == _RELEASE and self._has_closer(cfg, classes, p):
                return self._pick(p, now)
        for p in pressure:
            if classes[p] == _DRAW:
                return self._pick(p, now)
        for p in pressure:
            if classes[p] == _TAKE_BOMB:
                return self._pick(p, now)
        for p in pressure:
            if classes[p] == _RELEASE:
                return self._pick(p, now)
        # Cover growth is always safe; padding fills the remaining time.
        # Draws outside a defuse or pressure context are a last resort: a
        # commitment is irrevocable until the fork is taken and released, so
        # unspent draws are the planner's only steering resource.
        for p in stale:
            if classes[p] == _TAKE_PROTECTED:
                return self._pick(p, now)
        for p in stale:
            if classes[p] == _SAFE_PAD:
                return self._pick(p, now)
        for p in stale:
            if classes[p] == _RELEASE and self._has_closer(cfg, classes, p):
                return self._pick(p, now)
        if not danger:
            for p in stale:
                if classes[p] == _TAKE_BOMB:
                    return self._pick(p, now)
        for p in stale:
            if classes[p] == _DRAW:
                return self._pick(p, now)
        for p in stale:
            if classes[p] == _TAKE_BOMB:
                return self._pick(p, now)
        for p in stale:
            if classes[p] == _RELEASE:
                return self._pick(p, now)
        return self._pick(p0, now)

    def _has_closer(self, cfg: Configuration, classes, p: int) -> bool:
        held = cfg.committed_fork(p)
        if held is None:
            return False
        for q in range(cfg.topology.philosopher_count):
            if q != p and cfg.pc[q] == PC_TAKE1 and cfg.committed_fork(q) == held:
                return True
        return False

    def _pick(self, p: int, now: int) -> int:
        self.last[p] = now
        self.served.add(p)
        return p

    def observe(self, history: History, event) -> None:
        # Round marks: one mark whenever every philosopher has been scheduled
        # since the previous mark.
        cfg = history.config
        n = cfg.topology.philosopher_count
        if len(self.served) == n:
            self.served.clear()
            self.owner.round_index += 1
            self.owner.round_marks.append(history.step_index)


# ---------------------------------------------------------------------------
# Concrete blockade scripts
# ---------------------------------------------------------------------------

def _pair_arcs(topo: Topology, x: int, y: int) -> list[int]:
    want = {x, y}
    return [p for p, (a, b) in enumerate(topo.arcs) if {a, b} == want]


class StubbornTriangle(ScriptedStrategy):
    """Blockade on the doubled triangle (6 philosophers, 3 forks).

    Script mode drives the walkthrough: from the start, one philosopher H
    takes a fork fa while A and B stand committed to the other two forks
    (first-attempt probability 1/4: H's draw is adaptive, A's and B's are
    forced). Each round then parks H's partner on fa, lets A and B take and
    release in turn, and hands the pattern to the three partner arcs; the
    round-end configuration is isomorphic to the round start with only the
    philosophers renamed.
    """

    stubborn_points_per_round = 3

    def __init__(self, strict: bool = True):
        super().__init__(("LR1", "LR2"), strict)

    def check_topology(self, topo: Topology) -> None:
        if topo.fork_count != 3 or topo.philosopher_count != 6 or \
                sorted(tuple(sorted(a)) for a in topo.arcs) != \
                [(0, 1), (0, 1), (0, 2), (0, 2), (1, 2), (1, 2)]:
            raise StrategyMismatch("stubbornLR1Triangle needs the doubled triangle")

    @property
    def in_scope(self) -> frozenset[int]:
        return frozenset(range(6))

    def _script(self):
        topo = self.cfg.topology
        yield from self._hungry_all()
        H = 2
        side = yield from self._commit_free(H)
        fa = topo.arcs[H][side]
        fc = topo.other_fork(H, fa)
        fb = 3 - fa - fc
        A, Ap = _pair_arcs(topo, fa, fb)
        B, Bp = _pair_arcs(topo, fb, fc)
        Hp = _pair_arcs(topo, fa, fc)
        Hp.remove(H)
        Hp = Hp[0]
        yield from self._take1(H)
        got = yield from self._commit(A, topo.arcs[A].index(fb))
        if got != topo.arcs[A].index(fb):
            raise _Deviate
        got = yield from self._commit(B, topo.arcs[B].index(fc))
        if got != topo.arcs[B].index(fc):
            raise _Deviate
        # State 1: H holds fa; A committed to fb; B committed to fc.
        while True:
            sb_fa_Hp = topo.arcs[Hp].index(fa)
            sb_fb_Ap = topo.arcs[Ap].index(fb)
            sb_fc_Bp = topo.arcs[Bp].index(fc)
            # [1] park the partner of H on the held fork
            yield from self._stubborn_commit(Hp, sb_fa_Hp, "park-H", retry_via_take=True)
            # [2] A takes fb
            yield from self._take1(A)
            # [3] park A' on fb (a miss lands on fa; retried once fa frees)
            got = yield from self._commit(Ap, sb_fb_Ap, "park-A")
            ap_missed = got != sb_fb_Ap
            # [4] B takes fc
            yield from self._take1(B)
            # [5] H's second fork is taken by B: release fa
            yield from self._fail2(H)
            if ap_missed:
                attempts = 0
                while True:
                    allowance = self.allowance()
                    if allowance is not None and attempts >= allowance:
                        raise _Deviate
                    attempts += 1
                    yield from self._take1(Ap)   # takes the freed fa
                    yield from self._fail2(Ap)   # fb is taken by A
                    got = yield from self._commit(Ap, sb_fb_Ap, "park-A")
                    if got == sb_fb_Ap:
                        break
            # [6] park B' on fc (a miss parks on fb: unrecoverable in-round)
            got = yield from self._commit(Bp, sb_fc_Bp, "park-B")
            if got != sb_fc_Bp:
                raise _Deviate
            # [7] B's second fork is taken by A: release fc
            yield from self._fail2(B)
            # [8] H' takes the freed fa
            yield from self._take1(Hp)
            # [9] A's second fork is taken by H': release fb
            yield from self._fail2(A)
            self.mark_round()
            # State 6 == State 1 with the partner cast
            H, Hp = Hp, H
            A, Ap = Ap, A
            B, Bp = Bp, B


class StubbornRingPendant(ScriptedStrategy):
    """Blockade on a ring with one pendant arc hung off fork 0.

    The pendant philosopher eats once per round; no ring philosopher ever
    does. Script mode builds the full hold pattern (every ring fork held,
    pendant parked on fork 0), then rotates it: each ring philosopher
    releases, re-parks one fork over, and the freed fork is retaken by the
    philosopher parked on it; the pendant's eat rotates the pattern past
    fork 0. Rounds alternate direction, so a round end is the mirror image
    of its start and two rounds reproduce the start state exactly.
    """

    def __init__(self, ring_size: int, strict: bool = True):
        super().__init__(("LR1", "LR2"), strict)
        self.ring_size = ring_size
        self.stubborn_points_per_round = ring_size + 1
        self._cycle_len_max = 0

    def check_topology(self, topo: Topology) -> None:
        want = ring_with_pendant(self.ring_size)
        if topo.fork_count != want.fork_count or topo.arcs != want.arcs:
            raise StrategyMismatch(
                f"stubbornTheorem1 needs ring_with_pendant({self.ring_size})")

    @property
    def in_scope(self) -> frozenset[int]:
        return frozenset(range(self.ring_size))

    def _p_anchor(self, P: int):
        # Commit the pendant to fork 0; misses are resolved by letting it eat.
        attempts = 0
        while True:
            allowance = self.allowance()
            if allowance is not None and attempts >= allowance:
                raise _Deviate
            attempts += 1
            got = yield from self._commit(P, LEFT, "P-anchor")
            if got == LEFT:
                break
            yield from self._take1(P)    # takes the pendant fork
            yield from self._eat_through(P)
        yield from self._take1(P)        # takes fork 0

    def _script(self):
        r = self.ring_size
        P = r
        yield from self._hungry_all()
        # Build: pendant anchors fork 0, ring chain grows downward from the
        # top so every take's second fork is already held.
        yield from self._p_anchor(P)
        yield from self._stubborn_commit(0, LEFT, "park-R0", retry_via_take=True)
        for i in range(r - 1, 0, -1):
            got = yield from self._commit(i, LEFT, f"chain-{i}")
            if got != LEFT:
                raise _Deviate
            yield from self._take1(i)
        yield from self._eat_through(P)
        yield from self._take1(0)        # parked on fork 0, now protected by R1
        yield from self._stubborn_commit(P, LEFT, "park-P", retry_via_take=True)
        # State 1: every ring philosopher holds his left fork; P parked on 0.
        forward = True
        while True:
            start = self.history.step_index
            if forward:
                order = list(range(r))
                park_side, take_back = RIGHT, lambda i: i - 1
            else:
                order = [r - 1] + list(range(r - 2, -1, -1))
                park_side, take_back = LEFT, lambda i: i + 1
            first = True
            for i in order:
                yield from self._fail2(i)
                yield from self._stubborn_commit(i, park_side, f"rot-{i}",
                                                 retry_via_take=True)
                taker = P if first else take_back(i) % r
                yield from self._take1(taker)
                first = False
            yield from self._eat_through(P)
            # the ring philosopher parked on fork 0 retakes it after the eat
            yield from self._take1(order[-1])
            yield from self._stubborn_commit(P, LEFT, "park-P", retry_via_take=True)
            # pad so cycle lengths never decrease (fairness window discipline)
            used = self.history.step_index - start
            self._cycle_len_max = max(self._cycle_len_max, used)
            yield from self._pad(P, self._cycle_len_max - used)
            self.mark_round()
            forward = not forward


class StubbornTheta(ScriptedStrategy):
    """Blockade on a theta graph: no philosopher ever eats.

    Script mode holds every fork (a holder cycle through the first and third
    paths plus an anchored chain along the middle path) with one floating
    philosopher parked on a held fork. Rounds are hand-off tours: each holder
    releases, re-parks on his other fork, and the philosopher parked on the
    released fork takes it; after the tour every holding has shifted one arc
    and the configuration is the path-reversal image of the round start.
    Since nobody eats, every request list stays full, every guest book stays
    empty, and the courtesy test never blocks anyone.
    """

    def __init__(self, len1: int, len2: int, len3: int, strict: bool = True):
        super().__init__(("LR1", "LR2"), strict)
        self.lens = (len1, len2, len3)
        self.stubborn_points_per_round = len1 + len2 + len3
        self._cycle_len_max = 0

    def check_topology(self, topo: Topology) -> None:
        want = theta(*self.lens)
        if topo.fork_count != want.fork_count or topo.arcs != want.arcs:
            raise StrategyMismatch(f"stubbornTheorem2 needs theta{self.lens}")

    @property
    def in_scope(self) -> frozenset[int]:
        return frozenset(range(sum(self.lens)))

    def _layout(self):
        from .topology import theta_fork_layout
        return theta_fork_layout(*self.lens)

    def _script(self):
        topo = self.cfg.topology
        lay = self._layout()
        p0, p1, p2 = lay["paths"]
        yield from self._hungry_all()
        # Holder cycle: hub u, down path 0 to hub v, back along path 2.
        cycle_forks = p0["forks"][:-1] + p2["forks"][::-1][:-1]
        cycle_arcs = p0["arcs"] + p2["arcs"][::-1]
        L = len(cycle_arcs)
        for t in range(L):
            arc, fork = cycle_arcs[t], cycle_forks[t]
            got = yield from self._commit(arc, topo.arcs[arc].index(fork), f"cyc-{t}")
            if got != topo.arcs[arc].index(fork):
                raise _Deviate
            yield from self._take1(arc)
        # Middle-path chain, anchored at hub v: arc k+1 holds interior fork k.
        chain_pairs = []  # (arc, fork) from the v side inward
        mid_arcs, mid_forks = p1["arcs"], p1["forks"]
        for k in range(len(mid_arcs) - 1, 0, -1):
            chain_pairs.append((mid_arcs[k], mid_forks[k]))
        for arc, fork in chain_pairs:
            got = yield from self._commit(arc, topo.arcs[arc].index(fork), f"mid-{arc}")
            if got != topo.arcs[arc].index(fork):
                raise _Deviate
            yield from self._take1(arc)
        # Floater: the middle path's hub-u arc, parked on hub u.
        floater = mid_arcs[0]
        yield from self._commit(floater, topo.arcs[floater].index(0), "park-f")
        # either outcome of that draw is a safe park (both forks are held)
        while True:
            start = self.history.step_index
            park = self.cfg.committed_fork(floater)
            tour = self._make_tour(floater, park)
            if tour is None:
                raise _Deviate
            taker = floater
            for arc, fork in tour:
                if self.cfg.committed_fork(taker) != fork:
                    raise _Deviate
                yield from self._fail2(arc)
                other = topo.other_fork(arc, fork)
                yield from self._stubborn_commit(
                    arc, topo.arcs[arc].index(other), f"tour-{arc}",
                    retry_via_take=True)
                yield from self._take1(taker)
                taker = arc
            floater = taker
            used = self.history.step_index - start
            self._cycle_len_max = max(self._cycle_len_max, used)
            yield from self._pad(floater, self._cycle_len_max - used)
            self.mark_round()

    def _make_tour(self, floater: int, park: Optional[int]):
        """Hand-off tour visiting every holder once, simulated in advance.

        From the floater's parked fork, repeatedly release that fork's
        holder (who re-parks on his other fork, where the walk continues)
        and hand the fork to the philosopher the walk arrived with.
        """
        topo = self.cfg.topology
        holder = list(self.cfg.holder)
        if park is None or holder[park] is None:
            return None
        tour = []
        serviced = set()
        taker, fork = floater, park
        # every arc is released exactly once per tour (the floater holds from
        # the first hand-off on and is itself serviced later in the walk)
        while len(tour) < topo.philosopher_count:
            arc = holder[fork]
            if arc is None or arc in serviced:
                return None
            tour.append((arc, fork))
            serviced.add(arc)
            holder[fork] = taker
            taker, fork = arc, topo.other_fork(arc, fork)
        return tour


# ---------------------------------------------------------------------------
# GDP1 starvation scheduler
# ---------------------------------------------------------------------------

class Gdp1Starver(AdversaryStrategy):
    """Starves one philosopher under GDP1 while his neighbor eats forever.

    Needs a victim whose shared fork f carries a smaller nr value than his
    other fork g, with the three involved fork labels pairwise distinct (so
    no relabel ever fires). The victim then always picks g first and the
    scheduler runs his second-fork test only while the feeder holds f. Every
    other philosopher is scheduled once per round at a moment where its step
    is a failing test, so the schedule is fair.

    If the labels never arise (or the algorithm's courtesy test blocks the
    feeder, as under GDP2) the strategy degrades to plain round robin, which
    is fair and lets everyone through. ``setup_horizon``/``abort`` implement
    the arising-labels mode: wait that many steps for the ordering, then
    either abort or continue round robin.
    """

    def __init__(self, setup_horizon: int = 0, abort: bool = False):
        super().__init__()
        self.setup_horizon = setup_horizon
        self.abort = abort
        self.cast = None  # (victim, feeder, f, g, e)
        self._rr = 0
        self._fallback = False
        self._feeder_stall = 0
        self._feeder_sig = None
        self._round_served: set[int] = set()

    def _detect(self, cfg: Configuration):
        topo = cfg.topology
        nr = cfg.nr
        for f in range(topo.fork_count):
            adj = topo.adjacent_philosophers(f)
            for victim in adj:
                g = topo.other_fork(victim, f)
                if nr[g] <= nr[f]:
                    continue
                for feeder in adj:
                    if feeder == victim:
                        continue
                    e = topo.other_fork(feeder, f)
                    labels = (nr[f], nr[g], nr[e])
                    if e not in (f, g) and len(set(labels)) == 3:
                        return (victim, feeder, f, g, e)
        return None

    def _rr_step(self, n: int) -> int:
        p = self._rr % n
        self._rr += 1
        return p

    def choose(self, history: History) -> int:
        cfg = history.config
        n = cfg.topology.philosopher_count
        if self._fallback:
            p = self._rr_step(n)
            if self._rr % n == 0:
                self.round_marks.append(history.step_index + 1)
            return p
        if self.cast is None:
            self.cast = self._detect(cfg)
            if self.cast is None:
                if self.abort and history.step_index >= self.setup_horizon:
                    raise StrategyMismatch(
                        "gdp1Starver: required nr ordering never arose")
                return self._rr_step(n)
        victim, feeder, f, g, e = self.cast

        # Stall detection: a blocked feeder (e.g. GDP2's courtesy test)
        # forces permanent fallback to round robin.
        sig = (cfg.pc[feeder], cfg.committed[feeder], cfg.holder[f], cfg.holder[e])
        if sig == self._feeder_sig:
            self._feeder_stall += 1
            if self._feeder_stall > 4 * n + 8:
                self._fallback = True
                return self._rr_step(n)
        else:
            self._feeder_sig = sig
            self._feeder_stall = 0

        pc = cfg.pc
        busy = (PC_EAT, PC_REMOVE_L, PC_REMOVE_R, PC_SIGN_L, PC_SIGN_R, PC_RELEASE)
        if pc[feeder] in busy:
            return feeder
        if cfg.holder[f] != feeder:
            return feeder  # drive the feeder toward holding the shared fork
        if cfg.holder[g] != victim and pc[victim] != PC_TAKE2:
            return victim  # victim re-arms: commits to g, takes it
        # feeder holds f, victim holds g at his second-fork test: fair pass
        # over the bystanders first (their tests fail while g is held).
        for q in range(n):
            if q not in (victim, feeder) and q not in self._round_served:
                self._round_served.add(q)
                return q
        if pc[victim] == PC_TAKE2:
            self._round_served.clear()
            self.round_marks.append(history.step_index + 1)
            return victim  # fails against the feeder's hold and releases g
        return feeder


# ---------------------------------------------------------------------------
# Fairization
# ---------------------------------------------------------------------------

def default_budget(stubborn_points: int):
    """Retry budget n_k = k + ceil(log2 s) + 1: round failure <= 2^-k at bias 1/2."""
    extra = max(0, math.ceil(math.log2(max(1, stubborn_points)))) + 1
    return lambda k: k + extra


class Fairized(AdversaryStrategy):
    """Bounded-stubbornness wrapper around a scripted strategy.

    Allows at most n_k consecutive retries at any stubborn point during round
    k. On exhaustion the script abandons its round (dropping to its defensive
    planner, which restores the pattern reactively) and one full round-robin
    rotation re-establishes fairness before the script resumes.
    """

    def __init__(self, inner: ScriptedStrategy, budget_fn=None):
        super().__init__()
        self.inner = inner
        self.budget_fn = budget_fn or default_budget(inner.stubborn_points_per_round)
        inner.budget_fn = self.budget_fn
        self._rotation: list[int] = []
        self._point = None
        self._count = 0

    @property
    def round_marks(self) -> list[int]:
        return self.inner.round_marks

    @round_marks.setter
    def round_marks(self, value) -> None:
        pass

    def choose(self, history: History) -> int:
        if self._rotation:
            return self._rotation.pop(0)
        p = self.inner.choose(history)
        point = self.inner.current_stubborn if isinstance(self.inner, ScriptedStrategy) \
            else None
        if point is not None and point == self._point:
            self._count += 1
            limit = self.budget_fn(max(1, self.inner.round_index + 1))
            if self._count > 3 * limit + 6:
                # Safety net: the script should have self-policed via its
                # allowance; force the defensive planner and restore fairness.
                self.inner.force_defensive()
                n = history.config.topology.philosopher_count
                self._rotation = list(range(n))
                self._point = None
                self._count = 0
                return self._rotation.pop(0)
        else:
            self._point = point
            self._count = 1
        return p

    def observe(self, history: History, event) -> None:
        self.inner.observe(history, event)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def make_strategy(descriptor, spec, config: Configuration) -> AdversaryStrategy:
    """Instantiate a strategy from its (name, args) descriptor.

    External names: roundRobin, uniformRandom(seed), stubbornLR1Triangle,
    stubbornTheorem1(ringSize), stubbornTheorem2(l1,l2,l3),
    gdp1Starver([setupHorizon[, abort]]), fairize(inner[, tolerant]).
    ``tolerant`` lets a scripted strategy run under a non-matching algorithm
    by dropping straight to its defensive planner instead of erroring.
    """
    name, args = descriptor
    if name == "roundRobin":
        return RoundRobin()
    if name == "uniformRandom":
        seed = int(args[0]) if args else spec.seed
        return UniformRandom(seed)
    if name == "stubbornLR1Triangle":
        strict = "tolerant" not in args
        return StubbornTriangle(strict=strict)
    if name == "stubbornTheorem1":
        strict = "tolerant" not in args
        nums = [a for a in args if not isinstance(a, str)]
        if len(nums) != 1:
            raise StrategyMismatch("stubbornTheorem1 takes the ring size")
        return StubbornRingPendant(int(nums[0]), strict=strict)
    if name == "stubbornTheorem2":
        strict = "tolerant" not in args
        nums = [a for a in args if not isinstance(a, str)]
        if len(nums) != 3:
            raise StrategyMismatch("stubbornTheorem2 takes three path lengths")
        return StubbornTheta(*(int(a) for a in nums), strict=strict)
    if name == "gdp1Starver":
        nums = [a for a in args if not isinstance(a, str)]
        setup = int(nums[0]) if nums else 0
        return Gdp1Starver(setup_horizon=setup, abort="abort" in args)
    if name == "fairize":
        inner_desc = None
        flags = []
        for a in args:
            if isinstance(a, tuple):
                inner_desc = a
            else:
                flags.append(a)
        if inner_desc is None:
            raise StrategyMismatch("fairize needs an inner strategy")
        inner = make_strategy((inner_desc[0], tuple(inner_desc[1]) + tuple(flags)),
                              spec, config)
        if not isinstance(inner, ScriptedStrategy):
            return inner  # nothing stubborn to bound
        return Fairized(inner)
    known = ("roundRobin, uniformRandom, stubbornLR1Triangle, stubbornTheorem1, "
             "stubbornTheorem2, gdp1Starver, fairize")
    raise StrategyMismatch(f"unknown adversary {name!r} (available: {known})")
