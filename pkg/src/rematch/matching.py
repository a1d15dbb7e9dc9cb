"""Deterministic matching subroutines shared by all policies.

All operations are pure functions of their inputs.  Tie-breaking is
deterministic everywhere: weight descending, then edge id ascending for
greedy; lexicographically smallest edge-id set among optima for the
exact solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import LimitExceededError, UnknownEdgeError, ValidationError
from .model import Hypergraph, Instance, ManyToOne, RoundSelection

EXACT_SEARCH_LIMIT = 20
EXACT_SEARCH_HARD_CAP = 26


@dataclass(frozen=True)
class WeightedSubproblem:
    """One round's residual matching problem.

    ``weights`` defines the available edges (id -> weight >= 0);
    ``residual`` the remaining per-vertex capacity (defaults to the
    declared capacities); ``blocked`` edges are excluded outright and
    must not overlap the available set.
    """

    instance: Instance
    weights: Mapping[int, float]
    residual: Mapping[int, int]
    blocked: frozenset[int] = field(default_factory=frozenset)

    def __init__(self, instance, weights, residual=None, blocked=()):
        object.__setattr__(self, "instance", instance)
        object.__setattr__(self, "weights", dict(weights))
        if residual is None:
            residual = {v.id: v.capacity for v in instance.vertices}
        object.__setattr__(self, "residual", dict(residual))
        object.__setattr__(self, "blocked", frozenset(blocked))
        self._validate()

    def _validate(self):
        m = self.instance.num_edges
        caps = {v.id: v.capacity for v in self.instance.vertices}
        for e, w in self.weights.items():
            if not (0 <= e < m):
                raise UnknownEdgeError(f"unknown edge id {e}")
            if not math.isfinite(w) or w < 0:
                raise ValidationError(f"edge {e}: weight must be finite and >= 0")
        for v, r in self.residual.items():
            if v not in caps:
                raise ValidationError(f"unknown vertex {v}")
            if not (0 <= r <= caps[v]):
                raise ValidationError(f"vertex {v}: residual outside 0..capacity")
        if self.blocked & set(self.weights):
            raise ValidationError("blocked edges overlap the available set")

    @classmethod
    def fresh(cls, instance: Instance, weights: Mapping[int, float] | None = None
              ) -> "WeightedSubproblem":
        """Full-capacity subproblem; weights default to the edge probabilities."""
        if weights is None:
            weights = {e.id: e.p for e in instance.edges}
        return cls(instance, weights)

    def _effective_residual(self) -> dict[int, int]:
        if isinstance(self.instance.structure, Hypergraph):
            return {v: min(r, 1) for v, r in self.residual.items()}
        return dict(self.residual)


def greedy_matching(sub: WeightedSubproblem) -> RoundSelection:
    """Repeatedly take the heaviest positive-weight edge that still fits.

    Ties break toward the lowest edge id.  Zero-weight edges are never
    selected.
    """
    inst = sub.instance
    residual = sub._effective_residual()
    order = sorted((e for e, w in sub.weights.items() if w > 0 and e not in sub.blocked),
                   key=lambda e: (-sub.weights[e], e))
    chosen = []
    for e in order:
        ends = inst.edges[e].endpoints
        if all(residual.get(v, 0) >= 1 for v in ends):
            chosen.append(e)
            for v in ends:
                residual[v] -= 1
    return RoundSelection(chosen)


def greedy_hypergraph_matching(sub: WeightedSubproblem) -> RoundSelection:
    """Greedy by descending weight over vertex-disjoint hyperedges."""
    if not isinstance(sub.instance.structure, Hypergraph):
        raise ValidationError("greedy_hypergraph_matching requires a hypergraph instance")
    return greedy_matching(sub)


def _bipartite_sides(inst: Instance) -> tuple[set[int], set[int]] | None:
    """Left/right vertex sets, or None when the graph is not bipartite."""
    if isinstance(inst.structure, ManyToOne):
        left = set(inst.structure.left)
        return left, {v.id for v in inst.vertices} - left
    if isinstance(inst.structure, Hypergraph):
        return None
    color: dict[int, int] = {}
    adj: dict[int, list[int]] = {v.id: [] for v in inst.vertices}
    for e in inst.edges:
        u, w = e.endpoints
        adj[u].append(w)
        adj[w].append(u)
    for start in adj:
        if start in color:
            continue
        color[start] = 0
        stack = [start]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in color:
                    color[w] = color[u] ^ 1
                    stack.append(w)
                elif color[w] == color[u]:
                    return None
    left = {v for v, c in color.items() if c == 0}
    return left, {v for v in adj} - left


def _branch_and_bound(inst: Instance, avail: list[int], weights: Mapping[int, float],
                      residual: dict[int, int]) -> tuple[float, list[int]]:
    """Exact max-weight selection by include-first DFS over ids ascending.

    Visiting the include branch first enumerates candidate sets in
    lexicographic edge-id order, so keeping only strict improvements
    returns the lexicographically smallest optimum (weights are strictly
    positive, so distinct optima are never subset-related).  The greedy
    solution seeds the incumbent bound.
    """
    avail = sorted(avail)
    wts = [weights[e] for e in avail]
    suffix = [0.0] * (len(avail) + 1)
    for i in range(len(avail) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + wts[i]

    greedy = greedy_matching(WeightedSubproblem(
        inst, {e: weights[e] for e in avail}, residual))
    best_w = sum(weights[e] for e in greedy.chosen) - 1e-12
    best: list[int] | None = None

    chosen: list[int] = []

    def dfs(i: int, cur: float):
        nonlocal best_w, best
        if cur + suffix[i] <= best_w:
            return
        if i == len(avail):
            if cur > best_w:
                best_w = cur
                best = list(chosen)
            return
        e = avail[i]
        ends = inst.edges[e].endpoints
        if all(residual[v] >= 1 for v in ends):
            for v in ends:
                residual[v] -= 1
            chosen.append(e)
            dfs(i + 1, cur + wts[i])
            chosen.pop()
            for v in ends:
                residual[v] += 1
        dfs(i + 1, cur)

    dfs(0, 0.0)
    if best is None:
        # nothing beat the greedy incumbent
        return sum(weights[e] for e in greedy.chosen), sorted(greedy.chosen)
    return best_w, best


def _assignment(inst: Instance, avail: list[int], weights: Mapping[int, float],
                residual: dict[int, int], sides: tuple[set[int], set[int]]
                ) -> list[int]:
    """Polynomial bipartite path: capacity-expanded assignment problem.

    Sound whenever at most one endpoint of each edge has capacity > 1
    (otherwise the same edge could be assigned twice), which covers the
    unit and many-to-one cases this path is used for.
    """
    from scipy.optimize import linear_sum_assignment

    left, right = sides
    for e in avail:
        u, w = inst.edges[e].endpoints
        if residual.get(u, 0) > 1 and residual.get(w, 0) > 1:
            raise LimitExceededError(
                "exact matching beyond the search limit needs one side of unit capacity")
    lcopies = [(v, i) for v in sorted(left) for i in range(residual.get(v, 0))]
    rcopies = [(v, i) for v in sorted(right) for i in range(residual.get(v, 0))]
    lpos = {}
    for idx, (v, _) in enumerate(lcopies):
        lpos.setdefault(v, []).append(idx)
    rpos = {}
    for idx, (v, _) in enumerate(rcopies):
        rpos.setdefault(v, []).append(idx)
    cost = np.zeros((len(lcopies), len(rcopies)))
    edge_at = {}
    for e in avail:
        u, w = inst.edges[e].endpoints
        if u not in left:
            u, w = w, u
        for i in lpos.get(u, []):
            for j in rpos.get(w, []):
                if weights[e] > cost[i, j]:
                    cost[i, j] = weights[e]
                    edge_at[i, j] = e
    if cost.size == 0:
        return []
    rows, cols = linear_sum_assignment(cost, maximize=True)
    chosen = set()
    for i, j in zip(rows, cols):
        if cost[i, j] > 0:
            chosen.add(edge_at[i, j])
    return sorted(chosen)


def max_weight_matching(sub: WeightedSubproblem, exact_limit: int = EXACT_SEARCH_LIMIT
                        ) -> RoundSelection:
    """Feasible selection maximizing total weight.

    Small problems (and all non-bipartite ones up to the exact-search
    limit) are solved exactly by branch and bound with a deterministic
    lexicographic tie-break; larger bipartite problems fall back to the
    augmenting-path assignment solver.
    """
    inst = sub.instance
    if isinstance(inst.structure, Hypergraph):
        raise ValidationError("max_weight_matching covers general/many-to-one structures")
    exact_limit = min(exact_limit, EXACT_SEARCH_HARD_CAP)
    avail = [e for e, w in sub.weights.items() if w > 0 and e not in sub.blocked]
    residual = sub._effective_residual()
    for v in (v.id for v in inst.vertices):
        residual.setdefault(v, 0)
    if len(avail) <= exact_limit:
        _, chosen = _branch_and_bound(inst, avail, sub.weights, residual)
        return RoundSelection(chosen)
    sides = _bipartite_sides(inst)
    if sides is None:
        raise LimitExceededError(
            f"exact matching over {len(avail)} edges exceeds limit {exact_limit} "
            "on a non-bipartite instance")
    return RoundSelection(_assignment(inst, avail, sub.weights, residual, sides))


def degree_halving_subgraph(edges: Iterable[tuple[int, int, float]]) -> set[int]:
    """Heavy subgraph with per-vertex degree at most ceil(d_v / 2).

    Input is a weighted multigraph as (u, v, weight) triples; the result
    is the set of selected edge positions.  Repeatedly moves the
    heaviest remaining edge into the output, then deletes one remaining
    edge at each of its endpoints (lowest position first).  The output
    carries at least one third of the total weight.
    """
    edges = list(edges)
    for i, (u, v, w) in enumerate(edges):
        if u == v:
            raise ValidationError(f"edge {i} is a self-loop")
        if not math.isfinite(w) or w < 0:
            raise ValidationError(f"edge {i}: weight must be finite and >= 0")
    remaining = set(range(len(edges)))
    incident: dict[int, set[int]] = {}
    for i, (u, v, _) in enumerate(edges):
        incident.setdefault(u, set()).add(i)
        incident.setdefault(v, set()).add(i)

    def drop(i: int):
        remaining.discard(i)
        u, v, _ = edges[i]
        incident[u].discard(i)
        incident[v].discard(i)

    selected: set[int] = set()
    while remaining:
        i = min(remaining, key=lambda j: (-edges[j][2], j))
        selected.add(i)
        drop(i)
        for v in edges[i][:2]:
            live = incident[v] & remaining
            if live:
                drop(min(live))
    return selected
