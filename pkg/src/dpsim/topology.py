"""Multigraph topologies: forks are nodes, philosophers are arcs.

Every philosopher is an arc joining its two (distinct) forks; parallel arcs
are allowed, so two or more philosophers may share the same pair of forks.
Each arc designates one endpoint as "left" and the other as "right".
"""

from __future__ import annotations

from dataclasses import dataclass, field


class TopologyError(ValueError):
    """Raised for invalid topology constructions or spec files."""


LEFT = 0
RIGHT = 1
SIDES = (LEFT, RIGHT)
SIDE_NAMES = ("left", "right")


@dataclass(frozen=True)
class Topology:
    """Immutable multigraph: ``fork_count`` nodes, one arc per philosopher.

    ``arcs[p] = (left_fork, right_fork)`` for philosopher ``p``.
    """

    fork_count: int
    arcs: tuple[tuple[int, int], ...]
    _cycle_cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    @property
    def philosopher_count(self) -> int:
        return len(self.arcs)

    def forks_of(self, p: int) -> tuple[int, int]:
        return self.arcs[p]

    def side_fork(self, p: int, side: int) -> int:
        return self.arcs[p][side]

    def other_fork(self, p: int, fork: int) -> int:
        left, right = self.arcs[p]
        return right if fork == left else left

    def adjacent_philosophers(self, fork: int) -> list[int]:
        return [p for p, (a, b) in enumerate(self.arcs) if a == fork or b == fork]

    def degree(self, fork: int) -> int:
        return sum((a == fork) + (b == fork) for a, b in self.arcs)

    def neighbors_of_philosopher(self, p: int) -> list[int]:
        """Philosophers sharing at least one fork with ``p`` (excluding ``p``)."""
        a, b = self.arcs[p]
        out = []
        for q, (c, d) in enumerate(self.arcs):
            if q != p and (c in (a, b) or d in (a, b)):
                out.append(q)
        return out


def validate(t: Topology) -> None:
    """Check all topology invariants; raise TopologyError at the first violation."""
    if t.fork_count < 2:
        raise TopologyError(f"need at least 2 forks, got {t.fork_count}")
    if len(t.arcs) < 1:
        raise TopologyError("need at least 1 philosopher")
    for p, (a, b) in enumerate(t.arcs):
        if not (0 <= a < t.fork_count):
            raise TopologyError(f"philosopher {p}: dangling fork reference {a}")
        if not (0 <= b < t.fork_count):
            raise TopologyError(f"philosopher {p}: dangling fork reference {b}")
        if a == b:
            raise TopologyError(f"philosopher {p} with identical forks ({a},{b})")


def ring(size: int) -> Topology:
    """Ring of ``size`` forks and ``size`` philosophers.

    Arc ``i`` joins forks ``(i, (i+1) % size)`` with left = ``i``. ``ring(2)``
    is the smallest instance: two parallel arcs between the two forks.
    """
    if size < 2:
        raise TopologyError(f"ring needs size >= 2, got {size}")
    arcs = tuple((i, (i + 1) % size) for i in range(size))
    return Topology(size, arcs)


def doubled_triangle() -> Topology:
    """Three forks, six philosophers: every fork pair carries two parallel arcs.

    Arc numbering fixes the cast used by the scripted adversary: arcs 0..5
    sit on the fork pairs (0,1), (1,2), (0,2), (0,2), (0,1), (1,2), so arc i
    and its partner share a pair for the partner map {0:4, 1:5, 2:3}.
    """
    arcs = ((0, 1), (1, 2), (0, 2), (0, 2), (0, 1), (1, 2))
    return Topology(3, arcs)


def doubled_triangle_partner(p: int) -> int:
    """The other arc on the same fork pair of the doubled triangle."""
    return {0: 4, 4: 0, 1: 5, 5: 1, 2: 3, 3: 2}[p]


def ring_with_pendant(ring_size: int) -> Topology:
    """Ring of ``ring_size`` forks plus a pendant fork hung off fork 0.

    Fork ``ring_size`` is the pendant fork; the last arc joins it to fork 0,
    giving fork 0 three incident arcs.
    """
    if ring_size < 3:
        raise TopologyError(f"ring_with_pendant needs ring_size >= 3, got {ring_size}")
    arcs = [(i, (i + 1) % ring_size) for i in range(ring_size)]
    arcs.append((0, ring_size))
    return Topology(ring_size + 1, tuple(arcs))


def theta(len1: int, len2: int, len3: int) -> Topology:
    """Two hub forks joined by three internally disjoint paths.

    Fork 0 and fork 1 are the hubs. Path ``i`` contributes ``len_i`` arcs and
    ``len_i - 1`` interior forks, numbered consecutively from 2 in path order.
    At most one path may have length 1 (two length-1 paths would be parallel
    arcs, not distinct hub-to-hub paths).
    """
    lens = (len1, len2, len3)
    if any(l < 1 for l in lens):
        raise TopologyError(f"theta path lengths must be >= 1, got {lens}")
    if sum(1 for l in lens if l == 1) > 1:
        raise TopologyError(f"theta allows at most one path of length 1, got {lens}")
    hub_u, hub_v = 0, 1
    arcs: list[tuple[int, int]] = []
    next_fork = 2
    for length in lens:
        prev = hub_u
        for step in range(length):
            if step == length - 1:
                cur = hub_v
            else:
                cur = next_fork
                next_fork += 1
            arcs.append((min(prev, cur), max(prev, cur)))
            prev = cur
    return Topology(next_fork, tuple(arcs))


def theta_fork_layout(len1: int, len2: int, len3: int) -> dict:
    """Fork/arc index bookkeeping for a theta instance (hubs, per-path lists)."""
    lens = (len1, len2, len3)
    layout = {"hub_u": 0, "hub_v": 1, "paths": []}
    next_fork = 2
    arc_index = 0
    for length in lens:
        interior = list(range(next_fork, next_fork + length - 1))
        path_arcs = list(range(arc_index, arc_index + length))
        forks_seq = [0] + interior + [1]
        layout["paths"].append({"arcs": path_arcs, "forks": forks_seq, "interior": interior})
        next_fork += length - 1
        arc_index += length
    return layout


def all_cycles(t: Topology, max_forks: int = 16) -> list[tuple[int, ...]]:
    """All simple cycles of the multigraph, each as a tuple of arc indices.

    A cycle visits distinct forks (except closing back on the start) and
    distinct arcs; a pair of parallel arcs forms a 2-cycle. The order is
    deterministic: cycles are reported in sorted canonical form. Refuses to
    run on topologies larger than ``max_forks`` (enumeration is exponential).
    """
    key = ("all", max_forks)
    if key in t._cycle_cache:
        return t._cycle_cache[key]
    if t.fork_count > max_forks:
        raise TopologyError(
            f"cycle enumeration capped at {max_forks} forks, topology has {t.fork_count}"
        )
    incident: list[list[int]] = [[] for _ in range(t.fork_count)]
    for p, (a, b) in enumerate(t.arcs):
        incident[a].append(p)
        incident[b].append(p)

    found: set[tuple[int, ...]] = set()

    def canonical(arcseq: tuple[int, ...]) -> tuple[int, ...]:
        # Rotate/reflect the arc sequence so the smallest arc leads; pick the
        # lexicographically smaller direction so each cycle appears once.
        best = None
        n = len(arcseq)
        for seq in (arcseq, arcseq[::-1]):
            for i in range(n):
                rot = seq[i:] + seq[:i]
                if best is None or rot < best:
                    best = rot
        return best

    def dfs(start_fork: int, fork: int, used_arcs: list[int], used_forks: set[int]):
        for p in incident[fork]:
            if used_arcs and p == used_arcs[-1]:
                continue
            if p in used_arcs:
                continue
            nxt = t.other_fork(p, fork)
            if nxt == start_fork and len(used_arcs) >= 1:
                found.add(canonical(tuple(used_arcs + [p])))
                continue
            if nxt in used_forks:
                continue
            used_arcs.append(p)
            used_forks.add(nxt)
            dfs(start_fork, nxt, used_arcs, used_forks)
            used_arcs.pop()
            used_forks.remove(nxt)

    for f in range(t.fork_count):
        dfs(f, f, [], {f})
    # The same 2-cycle (parallel pair) can register from both endpoints but
    # canonicalisation collapses it; drop degenerate single-arc "cycles".
    cycles = sorted(c for c in found if len(c) >= 2)
    t._cycle_cache[key] = cycles
    return cycles


def cycles_through(t: Topology, p: int, max_forks: int = 16) -> list[tuple[int, ...]]:
    """All simple cycles containing arc ``p``, in deterministic order."""
    if not (0 <= p < t.philosopher_count):
        raise TopologyError(f"philosopher {p} out of range")
    return [c for c in all_cycles(t, max_forks=max_forks) if p in c]


def cycle_fork_sequence(t: Topology, cycle: tuple[int, ...]) -> list[int]:
    """Fork sequence visited by an arc cycle (length == len(cycle))."""
    if len(cycle) == 2:
        a, b = t.arcs[cycle[0]]
        return [a, b]
    # Start at the fork shared by the last and first arc.
    first, last = cycle[0], cycle[-1]
    fa = set(t.arcs[first])
    shared = fa.intersection(t.arcs[last])
    start = min(shared)
    seq = [start]
    cur = start
    for arc in cycle[:-1]:
        cur = t.other_fork(arc, cur)
        seq.append(cur)
    return seq


def format_topology_spec(t: Topology) -> str:
    """Line-oriented text form: ``forks <k>`` then one ``arc <left> <right>`` per arc."""
    lines = [f"forks {t.fork_count}"]
    lines.extend(f"arc {a} {b}" for a, b in t.arcs)
    return "\n".join(lines) + "\n"


def parse_topology_spec(text: str) -> Topology:
    """Parse the topology spec file format emitted by :func:`format_topology_spec`."""
    fork_count = None
    arcs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "forks":
            if fork_count is not None:
                raise TopologyError(f"line {lineno}: duplicate forks line")
            if len(parts) != 2 or not parts[1].isdigit():
                raise TopologyError(f"line {lineno}: expected 'forks <k>'")
            fork_count = int(parts[1])
        elif parts[0] == "arc":
            if fork_count is None:
                raise TopologyError(f"line {lineno}: 'arc' before 'forks'")
            if len(parts) != 3:
                raise TopologyError(f"line {lineno}: expected 'arc <left> <right>'")
            try:
                a, b = int(parts[1]), int(parts[2])
            except ValueError as exc:
                raise TopologyError(f"line {lineno}: non-integer fork index") from exc
            arcs.append((a, b))
        else:
            raise TopologyError(f"line {lineno}: unknown directive {parts[0]!r}")
    if fork_count is None:
        raise TopologyError("missing 'forks <k>' line")
    t = Topology(fork_count, tuple(arcs))
    validate(t)
    return t


_GENERATORS = {
    "ring": (ring, 1),
    "doubledTriangle": (lambda: doubled_triangle(), 0),
    "ringWithPendant": (ring_with_pendant, 1),
    "theta": (theta, 3),
}


def make_topology(name: str, args: tuple = ()) -> Topology:
    """Instantiate a named generator (external names as used in config files)."""
    if name not in _GENERATORS:
        known = ", ".join(sorted(_GENERATORS))
        raise TopologyError(f"unknown topology generator {name!r} (known: {known})")
    fn, arity = _GENERATORS[name]
    if len(args) != arity:
        raise TopologyError(f"topology {name} takes {arity} argument(s), got {len(args)}")
    return fn(*args)
