"""Problem instances, sample graphs, knowledge tracking, and reward accounting.

An :class:`Instance` is the problem definition: vertices with integer
capacities, probabilistic (hyper)edges, a round count and per-round
weights.  Nature's hidden draw is a :class:`SampleGraph` (one boolean per
edge); what a policy has learned so far is a :class:`KnowledgeState`
(per-edge Unknown/Success/Fail); a policy execution record is a
:class:`Trace`.

Instances and sample graphs are immutable and safe to share across
threads.  Edge sets are manipulated as bitmasks internally (edge ids are
dense 0..m-1 by construction) and exposed as frozensets at the API
boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import LimitExceededError, UnknownEdgeError, ValidationError
from .rng import uniform01

ENUMERATION_LIMIT = 16
ENUMERATION_HARD_CAP = 20


@dataclass(frozen=True)
class General:
    """Plain matching: every edge has exactly two endpoints."""


@dataclass(frozen=True)
class ManyToOne:
    """Bipartite, left side capacity 1, right side arbitrary capacities."""

    left: frozenset[int]

    def __init__(self, left: Iterable[int]):
        object.__setattr__(self, "left", frozenset(left))


@dataclass(frozen=True)
class Hypergraph:
    """Team formation: edges of 2..k vertices, selections vertex-disjoint."""

    k: int


Structure = General | ManyToOne | Hypergraph


@dataclass(frozen=True)
class Vertex:
    id: int
    capacity: int = 1


@dataclass(frozen=True)
class Edge:
    id: int
    endpoints: tuple[int, ...]
    p: float

    def __init__(self, id: int, endpoints: Iterable[int], p: float):
        ends = tuple(sorted(endpoints))
        if len(set(ends)) != len(ends):
            raise ValidationError(f"edge {id} repeats an endpoint")
        object.__setattr__(self, "id", id)
        object.__setattr__(self, "endpoints", ends)
        object.__setattr__(self, "p", float(p))


@dataclass(frozen=True)
class Instance:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    rounds: int
    weights: tuple[float, ...]
    structure: Structure = field(default_factory=General)

    def __init__(self, vertices, edges, rounds, weights=None, structure=None):
        object.__setattr__(self, "vertices", tuple(vertices))
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "rounds", int(rounds))
        if weights is None:
            weights = (1.0,) * int(rounds)
        object.__setattr__(self, "weights", tuple(float(w) for w in weights))
        object.__setattr__(self, "structure", structure if structure is not None else General())
        self._validate()

    # -- validation ---------------------------------------------------

    def _validate(self) -> None:
        ids = [v.id for v in self.vertices]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate vertex ids")
        vset = set(ids)
        for v in self.vertices:
            if v.capacity < 1:
                raise ValidationError(f"vertex {v.id}: capacity must be a positive integer")
        for pos, e in enumerate(self.edges):
            if e.id != pos:
                raise ValidationError("edge ids must be unique and dense 0..m-1, in order")
            if len(set(e.endpoints)) != len(e.endpoints):
                raise ValidationError(f"edge {e.id} repeats an endpoint")
            if not set(e.endpoints) <= vset:
                raise ValidationError(f"edge {e.id} references undeclared vertices")
            if not (0.0 <= e.p <= 1.0):
                raise ValidationError(f"edge {e.id}: p={e.p} outside [0, 1]")
        if self.rounds < 1:
            raise ValidationError("rounds must be >= 1")
        if len(self.weights) != self.rounds:
            raise ValidationError("weights length must equal rounds")
        if any(w < 0 for w in self.weights):
            raise ValidationError("round weights must be non-negative")

        st = self.structure
        if isinstance(st, General):
            for e in self.edges:
                if len(e.endpoints) != 2:
                    raise ValidationError(f"edge {e.id}: general structure needs exactly 2 endpoints")
        elif isinstance(st, ManyToOne):
            if not st.left <= vset:
                raise ValidationError("left side references undeclared vertices")
            caps = {v.id: v.capacity for v in self.vertices}
            for vid in st.left:
                if caps[vid] != 1:
                    raise ValidationError(f"left vertex {vid} must have capacity 1")
            for e in self.edges:
                if len(e.endpoints) != 2:
                    raise ValidationError(f"edge {e.id}: bipartite edges need exactly 2 endpoints")
                sides = sum(1 for u in e.endpoints if u in st.left)
                if sides != 1:
                    raise ValidationError(f"edge {e.id} must join the two sides")
        elif isinstance(st, Hypergraph):
            if st.k < 2:
                raise ValidationError("hypergraph arity k must be >= 2")
            for e in self.edges:
                if not (2 <= len(e.endpoints) <= st.k):
                    raise ValidationError(f"edge {e.id}: hyperedge size outside 2..{st.k}")
        else:
            raise ValidationError(f"unknown structure {st!r}")

    # -- accessors ----------------------------------------------------

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    def capacity(self, vertex_id: int) -> int:
        for v in self.vertices:
            if v.id == vertex_id:
                return v.capacity
        raise ValidationError(f"unknown vertex {vertex_id}")

    def unit_capacities(self) -> bool:
        return all(v.capacity == 1 for v in self.vertices)

    # -- JSON schema ---------------------------------------------------
    #
    # {"vertices":[{"id":0,"capacity":1},...],
    #  "edges":[{"id":0,"endpoints":[0,1],"p":0.5},...],
    #  "rounds":T, "weights":[...], "structure":"general"|"many_to_one"|"hypergraph",
    #  "k":..., "left":[...]}
    # weights default to all-ones when omitted.

    def to_json(self) -> dict:
        out = {
            "vertices": [{"id": v.id, "capacity": v.capacity} for v in self.vertices],
            "edges": [{"id": e.id, "endpoints": list(e.endpoints), "p": e.p} for e in self.edges],
            "rounds": self.rounds,
            "weights": list(self.weights),
        }
        st = self.structure
        if isinstance(st, General):
            out["structure"] = "general"
        elif isinstance(st, ManyToOne):
            out["structure"] = "many_to_one"
            out["left"] = sorted(st.left)
        else:
            out["structure"] = "hypergraph"
            out["k"] = st.k
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "Instance":
        try:
            vertices = [Vertex(int(v["id"]), int(v.get("capacity", 1))) for v in data["vertices"]]
            raw_edges = sorted(data["edges"], key=lambda e: int(e["id"]))
            edges = [Edge(int(e["id"]), [int(u) for u in e["endpoints"]], float(e["p"])) for e in raw_edges]
            rounds = int(data["rounds"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed instance JSON: {exc}") from exc
        weights = data.get("weights")
        name = data.get("structure", "general")
        if name == "general":
            structure: Structure = General()
        elif name == "many_to_one":
            structure = ManyToOne(data.get("left", []))
        elif name == "hypergraph":
            structure = Hypergraph(int(data.get("k", 2)))
        else:
            raise ValidationError(f"unknown structure {name!r}")
        return cls(vertices, edges, rounds, weights, structure)

    def dumps(self, **kw) -> str:
        return json.dumps(self.to_json(), **kw)

    @classmethod
    def loads(cls, text: str) -> "Instance":
        return cls.from_json(json.loads(text))


# ---------------------------------------------------------------------
# sample graphs and knowledge states


@dataclass(frozen=True)
class SampleGraph:
    """One realization of every edge; nature's hidden draw."""

    realized: tuple[bool, ...]

    @property
    def mask(self) -> int:
        m = 0
        for i, r in enumerate(self.realized):
            if r:
                m |= 1 << i
        return m

    @classmethod
    def from_mask(cls, num_edges: int, mask: int) -> "SampleGraph":
        return cls(tuple(bool(mask >> i & 1) for i in range(num_edges)))


class Status(IntEnum):
    UNKNOWN = 0
    SUCCESS = 1
    FAIL = 2


@dataclass(frozen=True)
class KnowledgeState:
    """Per-edge Unknown/Success/Fail; the dynamic-programming state."""

    statuses: tuple[Status, ...]

    def encode(self) -> int:
        """Canonical base-3 integer keyed by edge id; unique per state."""
        code = 0
        for s in reversed(self.statuses):
            code = code * 3 + int(s)
        return code

    @classmethod
    def from_encoding(cls, num_edges: int, code: int) -> "KnowledgeState":
        statuses = []
        for _ in range(num_edges):
            statuses.append(Status(code % 3))
            code //= 3
        return cls(tuple(statuses))

    @classmethod
    def from_masks(cls, num_edges: int, success_mask: int, fail_mask: int) -> "KnowledgeState":
        if success_mask & fail_mask:
            raise ValidationError("an edge cannot be both successful and failed")
        return cls(tuple(
            Status.SUCCESS if success_mask >> i & 1 else
            Status.FAIL if fail_mask >> i & 1 else Status.UNKNOWN
            for i in range(num_edges)))

    @property
    def success_mask(self) -> int:
        return sum(1 << i for i, s in enumerate(self.statuses) if s is Status.SUCCESS)

    @property
    def fail_mask(self) -> int:
        return sum(1 << i for i, s in enumerate(self.statuses) if s is Status.FAIL)

    def consistent_with(self, sample: SampleGraph) -> bool:
        for s, r in zip(self.statuses, sample.realized):
            if s is Status.SUCCESS and not r:
                return False
            if s is Status.FAIL and r:
                return False
        return True


@dataclass(frozen=True)
class RoundSelection:
    """Edges selected within a single round; must be feasible."""

    chosen: frozenset[int]

    def __init__(self, chosen: Iterable[int]):
        object.__setattr__(self, "chosen", frozenset(chosen))

    @property
    def mask(self) -> int:
        return sum(1 << e for e in self.chosen)

    def total_weight(self, weights: Mapping[int, float]) -> float:
        return sum(weights[e] for e in sorted(self.chosen))


# ---------------------------------------------------------------------
# traces


def mask_to_set(mask: int) -> frozenset[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return frozenset(out)


def set_to_mask(edges: Iterable[int]) -> int:
    m = 0
    for e in edges:
        m |= 1 << e
    return m


@dataclass(frozen=True)
class Trace:
    """Per-round record of one policy execution on one sample graph.

    ``successful[t]`` is the set of successful edges inside the round-t
    selection; ``newly_successful[t]`` restricts that to edges the policy
    selected for the first time in round t.  For committing policies the
    newly-successful sets are disjoint and their union up to t equals
    ``successful[t]``.
    """

    instance: Instance
    policy: str
    selections: tuple[frozenset[int], ...]
    successful: tuple[frozenset[int], ...]
    newly_successful: tuple[frozenset[int], ...]
    round_rewards: tuple[int, ...]
    total_weighted_reward: float
    sample_mask: int

    @classmethod
    def from_selection_masks(cls, instance: Instance, policy: str,
                             selection_masks: Sequence[int], real_mask: int) -> "Trace":
        selections = []
        successful = []
        newly = []
        rewards = []
        seen = 0
        total = 0.0
        for t, sel in enumerate(selection_masks):
            succ = sel & real_mask
            new = succ & ~seen
            seen |= sel
            selections.append(mask_to_set(sel))
            successful.append(mask_to_set(succ))
            newly.append(mask_to_set(new))
            rewards.append(succ.bit_count())
            total += instance.weights[t] * succ.bit_count()
        return cls(instance, policy, tuple(selections), tuple(successful),
                   tuple(newly), tuple(rewards), total, real_mask)

    @property
    def rounds(self) -> int:
        return len(self.selections)

    def selection_masks(self) -> list[int]:
        return [set_to_mask(s) for s in self.selections]

    def to_json(self) -> dict:
        return {
            "policy": self.policy,
            "selections": [sorted(s) for s in self.selections],
            "successful": [sorted(s) for s in self.successful],
            "newly_successful": [sorted(s) for s in self.newly_successful],
            "round_rewards": list(self.round_rewards),
            "total_weighted_reward": self.total_weighted_reward,
            "sample_mask": self.sample_mask,
        }


# ---------------------------------------------------------------------
# operations


def sample(instance: Instance, seed: int) -> SampleGraph:
    """Realize each edge independently with probability p_e; deterministic in (instance, seed)."""
    return SampleGraph(tuple(uniform01(seed, e.id) < e.p for e in instance.edges))


def enumerate_samples(instance: Instance, limit: int = ENUMERATION_LIMIT
                      ) -> Iterator[tuple[SampleGraph, float]]:
    """Yield all 2^m sample graphs with their probabilities (summing to 1).

    Zero-probability realizations are yielded with weight 0.0 so callers
    can rely on seeing every mask exactly once, in ascending mask order.
    """
    m = instance.num_edges
    limit = min(limit, ENUMERATION_HARD_CAP)
    if m > limit:
        raise LimitExceededError(f"enumeration over {m} edges exceeds limit {limit}")
    ps = [e.p for e in instance.edges]
    for mask in range(1 << m):
        prob = 1.0
        for i, p in enumerate(ps):
            prob *= p if mask >> i & 1 else 1.0 - p
        yield SampleGraph.from_mask(m, mask), prob


def feasible(instance: Instance, selection) -> bool:
    """True iff per-vertex load respects capacity (hyperedges: vertex-disjoint)."""
    if isinstance(selection, RoundSelection):
        chosen = selection.chosen
    else:
        chosen = set(selection)
    m = instance.num_edges
    for e in chosen:
        if not (0 <= e < m):
            raise UnknownEdgeError(f"unknown edge id {e}")
    hyper = isinstance(instance.structure, Hypergraph)
    load: dict[int, int] = {}
    for e in chosen:
        for v in instance.edges[e].endpoints:
            load[v] = load.get(v, 0) + 1
    caps = {v.id: (1 if hyper else v.capacity) for v in instance.vertices}
    return all(cnt <= caps[v] for v, cnt in load.items())


def weighted_reward(trace: Trace, weights: Sequence[float]) -> float:
    """Sum over rounds of weight_t times the round-t successful count."""
    if len(weights) != trace.rounds:
        raise ValidationError("weights length does not match trace rounds")
    return sum(w * r for w, r in zip(weights, trace.round_rewards))


# ---------------------------------------------------------------------
# precomputed mask tables shared with the trace/DP kernels


class Tables:
    """Dense-index mask tables for one instance (internal).

    Kernel code sees only plain ints, floats and lists, so the compiled
    and pure-Python backends can share this object.  ``cap`` holds the
    effective capacity: hypergraph selections are vertex-disjoint, so
    capacities collapse to 1 there.
    """

    __slots__ = ("instance", "m", "n", "p", "all_mask", "posp_mask", "vmask",
                 "ev", "cap", "inc", "order", "feas", "ext", "weights")

    def __init__(self, instance: Instance):
        self.instance = instance
        self.m = instance.num_edges
        self.n = instance.num_vertices
        vindex = {v.id: i for i, v in enumerate(instance.vertices)}
        hyper = isinstance(instance.structure, Hypergraph)
        self.p = [e.p for e in instance.edges]
        self.all_mask = (1 << self.m) - 1
        self.posp_mask = sum(1 << e.id for e in instance.edges if e.p > 0.0)
        self.ev = [tuple(vindex[u] for u in e.endpoints) for e in instance.edges]
        self.vmask = [sum(1 << v for v in ev) for ev in self.ev]
        self.cap = [1 if hyper else v.capacity for v in instance.vertices]
        self.inc = [0] * self.n
        for e, ev in enumerate(self.ev):
            for v in ev:
                self.inc[v] |= 1 << e
        self.order = sorted(range(self.m), key=lambda e: (-self.p[e], e))
        self.weights = list(instance.weights)
        self.feas: list[int] | None = None
        self.ext: list[int] | None = None

    def mask_feasible(self, mask: int) -> bool:
        for v in range(self.n):
            if (mask & self.inc[v]).bit_count() > self.cap[v]:
                return False
        return True

    def build_enumeration(self, limit: int = ENUMERATION_LIMIT) -> None:
        """Populate the feasible-selection list and its extension masks."""
        if self.feas is not None:
            return
        if self.m > min(limit, ENUMERATION_HARD_CAP):
            raise LimitExceededError(
                f"selection enumeration over {self.m} edges exceeds limit {limit}")
        flags = bytearray(1 << self.m)
        feas = []
        for mask in range(1 << self.m):
            if self.mask_feasible(mask):
                flags[mask] = 1
                feas.append(mask)
        ext = []
        for mask in feas:
            x = 0
            rest = self.all_mask & ~mask
            while rest:
                low = rest & -rest
                if flags[mask | low]:
                    x |= low
                rest ^= low
            ext.append(x)
        self.feas = feas
        self.ext = ext


@lru_cache(maxsize=2048)
def build_tables(instance: Instance) -> Tables:
    return Tables(instance)
