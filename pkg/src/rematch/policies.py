"""Executable matching policies.

Committing policies (stable matching, greedy-commit, the optimal
committing policy, the opt-follower) reselect every discovered
successful edge in all later rounds.  The exact optimal policies come
from an expectimax dynamic program over knowledge states; its value
table doubles as the argmax policy for per-sample replay.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import LimitExceededError, ValidationError
from .matching import WeightedSubproblem, max_weight_matching
from .model import (ENUMERATION_LIMIT, Hypergraph, Instance, KnowledgeState,
                    SampleGraph, Tables, Trace, build_tables, mask_to_set)

DP_LIMIT = 12
DP_HARD_CAP = 14


class PolicyId(str, Enum):
    SM = "sm"
    GREEDY_COMMIT = "greedy_commit"
    OPT = "opt"
    OPT_COMMIT = "opt_commit"
    OPT_FOLLOWER = "opt_follower"
    ALTERNATING_SCAN = "alternating_scan"
    OFFLINE_MAX = "offline_max"


def _tables_with_enum(instance: Instance, limit: int = ENUMERATION_LIMIT) -> Tables:
    tables = build_tables(instance)
    tables.build_enumeration(limit)
    return tables


# ---------------------------------------------------------------------
# committing heuristics


def run_sm(instance: Instance, sample: SampleGraph) -> Trace:
    """Decentralized stable matching process.

    Per round: committed successes occupy capacity, the remaining
    positive-probability untried edges are matched greedily by
    descending probability, outcomes are observed, failures drop to
    probability zero and successes commit.
    """
    tables = build_tables(instance)
    sels = kernels.sm_trace(tables, sample.mask)
    return Trace.from_selection_masks(instance, PolicyId.SM.value, sels, sample.mask)


def run_greedy_commit(instance: Instance, sample: SampleGraph) -> Trace:
    """Committed successes plus a max-expected-weight matching each round."""
    if isinstance(instance.structure, Hypergraph):
        raise ValidationError("greedy-commit covers general/many-to-one structures")
    if instance.num_edges <= ENUMERATION_LIMIT:
        tables = _tables_with_enum(instance)
        sels = kernels.gc_trace(tables, sample.mask)
    else:
        sels = _gc_trace_large(instance, sample.mask)
    return Trace.from_selection_masks(
        instance, PolicyId.GREEDY_COMMIT.value, sels, sample.mask)


def _gc_trace_large(instance: Instance, real: int) -> list[int]:
    # beyond the enumeration limit: per-round exact matching on the residual
    committed: set[int] = set()
    failed: set[int] = set()
    caps = {v.id: v.capacity for v in instance.vertices}
    sels = []
    for _ in range(instance.rounds):
        residual = dict(caps)
        for e in committed:
            for v in instance.edges[e].endpoints:
                residual[v] -= 1
        weights = {e.id: e.p for e in instance.edges
                   if e.id not in committed and e.id not in failed and e.p > 0.0}
        picked = max_weight_matching(WeightedSubproblem(
            instance, weights, residual, frozenset(failed))).chosen
        sel = committed | set(picked)
        sels.append(sum(1 << e for e in sel))
        for e in picked:
            if real >> e & 1:
                committed.add(e)
            else:
                failed.add(e)
    return sels


# ---------------------------------------------------------------------
# exact optimal policies


@dataclass
class DpValueTable:
    """Memoized expectimax values and argmax actions for one instance.

    Keys are reachable (knowledge state, round) pairs; the public
    accessors accept a :class:`KnowledgeState` or its canonical base-3
    encoding.  ``commit`` forces every known success into the action;
    ``prune`` restricts actions to maximal selections (the exhaustive
    mode ``prune=False`` exists to verify that restriction).
    """

    instance: Instance
    commit: bool
    prune: bool
    root_value: float
    _values: dict[int, float]
    _actions: dict[int, int]

    def _packed(self, knowledge, round_index: int) -> int:
        m = self.instance.num_edges
        if isinstance(knowledge, KnowledgeState):
            s, f = knowledge.success_mask, knowledge.fail_mask
        else:
            ks = KnowledgeState.from_encoding(m, int(knowledge))
            s, f = ks.success_mask, ks.fail_mask
        return (round_index << (2 * m)) | (s << m) | f

    def value(self, knowledge, round_index: int) -> float:
        return self._values[self._packed(knowledge, round_index)]

    def action(self, knowledge, round_index: int) -> frozenset[int]:
        return mask_to_set(self._actions[self._packed(knowledge, round_index)])

    def items(self):
        """Yield ((base-3 encoding, round), value) over all memoized states."""
        m = self.instance.num_edges
        for key, v in self._values.items():
            f = key & ((1 << m) - 1)
            s = (key >> m) & ((1 << m) - 1)
            t = key >> (2 * m)
            yield (KnowledgeState.from_masks(m, s, f).encode(), t), v

    def __len__(self) -> int:
        return len(self._values)


def build_dp(instance: Instance, commit: bool, prune: bool = True,
             dp_limit: int = DP_LIMIT) -> DpValueTable:
    limit = min(dp_limit, DP_HARD_CAP)
    if instance.num_edges > limit:
        raise LimitExceededError(
            f"DP over {instance.num_edges} edges exceeds limit {limit}")
    tables = _tables_with_enum(instance)
    root, values, actions = kernels.dp_solve(tables, commit, prune)
    return DpValueTable(instance, commit, prune, root, values, actions)


def opt_value(instance: Instance, commit: bool, prune: bool = True,
              dp_limit: int = DP_LIMIT) -> float:
    """Optimal expected weighted reward from the all-unknown state."""
    return build_dp(instance, commit, prune, dp_limit).root_value


def run_opt(instance: Instance, sample: SampleGraph, table: DpValueTable) -> Trace:
    """Replay the DP argmax policy against one realization."""
    if table.instance != instance:
        raise ValidationError("value table was built for a different instance")
    m = instance.num_edges
    real = sample.mask
    s = f = 0
    sels = []
    for t in range(1, instance.rounds + 1):
        key = (t << (2 * m)) | (s << m) | f
        try:
            mask = table._actions[key]
        except KeyError:
            raise ValidationError(
                "sample graph reaches a state the table never evaluated "
                "(inconsistent with an edge of probability 0 or 1)") from None
        sels.append(mask)
        unknown = mask & ~s
        s |= unknown & real
        f |= unknown & ~real
    name = PolicyId.OPT_COMMIT.value if table.commit else PolicyId.OPT.value
    return Trace.from_selection_masks(instance, name, sels, real)


# ---------------------------------------------------------------------
# opt-follower: commit to own successes, copy the augmenting edges of a
# companion run


def run_opt_follower(instance: Instance, sample: SampleGraph, opt_trace: Trace) -> Trace:
    """Each round, reselect all own successes plus the companion's newly
    selected edges that can augment them.

    The companion trace must come from the same sample graph; the
    construction is specific to unit-capacity matching.
    """
    if isinstance(instance.structure, Hypergraph) or not instance.unit_capacities():
        raise ValidationError("opt-follower is defined for unit-capacity matching")
    if opt_trace.instance != instance:
        raise ValidationError("companion trace belongs to a different instance")
    if opt_trace.sample_mask != sample.mask:
        raise ValidationError("companion trace was run on a different sample graph")
    tables = build_tables(instance)
    real = sample.mask
    opt_sels = opt_trace.selection_masks()
    committed = 0
    committed_verts = 0
    seen = 0
    sels = []
    for t in range(instance.rounds):
        fresh = opt_sels[t] & ~seen
        seen |= opt_sels[t]
        add = 0
        x = fresh
        while x:
            low = x & -x
            e = low.bit_length() - 1
            if not (tables.vmask[e] & committed_verts):
                add |= low
            x ^= low
        sels.append(committed | add)
        won = add & real
        committed |= won
        y = won
        while y:
            low = y & -y
            committed_verts |= tables.vmask[low.bit_length() - 1]
            y ^= low
    return Trace.from_selection_masks(
        instance, PolicyId.OPT_FOLLOWER.value, sels, real)


# ---------------------------------------------------------------------
# alternating scan for the double-star family


def run_alternating_scan(instance: Instance, sample: SampleGraph) -> Trace:
    """Scan the spoke pairs of a double-star instance, then hold the best
    discovered fully-successful cross pair (falling back to cyclic
    re-scanning while none exists)."""
    from .generators import double_star_layout

    layout = double_star_layout(instance)
    if layout is None:
        raise ValidationError("instance is not a double-star family member")
    n, _, left_ids, right_ids = layout
    real = sample.mask
    success = 0
    tried = 0
    sels = []
    pairs = list(zip(left_ids, right_ids))
    for r in range(instance.rounds):
        if r < n - 1:
            pair = pairs[r]
            sel = (1 << pair[0]) | (1 << pair[1])
        else:
            ls = next((e for e in left_ids if success >> e & 1), None)
            rs = next((e for e in right_ids if success >> e & 1), None)
            if ls is not None and rs is not None:
                sel = (1 << ls) | (1 << rs)
            else:
                pair = pairs[r % (n - 1)]
                sel = (1 << pair[0]) | (1 << pair[1])
        sels.append(sel)
        tried |= sel
        success |= sel & real
    return Trace.from_selection_masks(
        instance, PolicyId.ALTERNATING_SCAN.value, sels, real)


# ---------------------------------------------------------------------
# offline benchmark


def offline_max_matching(instance: Instance, sample: SampleGraph) -> int:
    """Maximum-cardinality feasible selection among realized edges."""
    if isinstance(instance.structure, Hypergraph):
        raise ValidationError("offline benchmark covers general/many-to-one structures")
    realized = [e.id for e in instance.edges if sample.realized[e.id]]
    if not realized:
        return 0
    sides = _bipartite_unit_sides(instance)
    if sides is not None and len(realized) > 12:
        return _hopcroft_karp_size(instance, realized, sides)
    sel = max_weight_matching(WeightedSubproblem(
        instance, {e: 1.0 for e in realized}))
    return len(sel.chosen)


def _bipartite_unit_sides(instance: Instance):
    if not instance.unit_capacities():
        return None
    from .matching import _bipartite_sides

    return _bipartite_sides(instance)


def _hopcroft_karp_size(instance: Instance, realized: list[int], sides) -> int:
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    left, right = sides
    li = {v: i for i, v in enumerate(sorted(left))}
    ri = {v: i for i, v in enumerate(sorted(right))}
    rows, cols = [], []
    for e in realized:
        u, w = instance.edges[e].endpoints
        if u not in left:
            u, w = w, u
        rows.append(li[u])
        cols.append(ri[w])
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                       shape=(len(li), len(ri)))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return int((match >= 0).sum())
