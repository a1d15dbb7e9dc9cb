import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_instance
from oracles import brute_max_weight
from rematch.errors import ValidationError
from rematch.kernels import lex_less
from rematch.matching import (WeightedSubproblem, degree_halving_subgraph,
                              greedy_matching, greedy_hypergraph_matching,
                              max_weight_matching)
from rematch.model import Hypergraph, ManyToOne, mask_to_set
from rematch.rng import CounterRng

PATH = make_instance([(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5)])
PATH_W = {0: 2.0, 1: 3.0, 2: 2.0}


def test_greedy_empty_when_no_positive_weights():
    sub = WeightedSubproblem(PATH, {0: 0.0, 1: 0.0})
    assert greedy_matching(sub).chosen == frozenset()


def test_greedy_path_takes_the_middle():
    # optimum is the outer pair (4); greedy gets 3, within the 1/2 bound
    sel = greedy_matching(WeightedSubproblem(PATH, PATH_W))
    assert sel.chosen == {1}


def test_greedy_disjoint_edges_all_selected():
    inst = make_instance([(0, 1, 0.9), (2, 3, 0.8)])
    sel = greedy_matching(WeightedSubproblem(inst, {0: 0.9, 1: 0.8}))
    assert sel.chosen == {0, 1}


def test_max_weight_path_takes_outer_pair():
    sel = max_weight_matching(WeightedSubproblem(PATH, PATH_W))
    assert sel.chosen == {0, 2}
    assert sel.total_weight(PATH_W) == 4.0


def test_max_weight_single_edge():
    inst = make_instance([(0, 1, 0.5)])
    sel = max_weight_matching(WeightedSubproblem(inst, {0: 7.0}))
    assert sel.chosen == {0} and sel.total_weight({0: 7.0}) == 7.0


def test_max_weight_triangle():
    tri = make_instance([(0, 1, 0.5), (1, 2, 0.5), (0, 2, 0.5)])
    w = {0: 3.0, 1: 2.0, 2: 2.0}
    sel = max_weight_matching(WeightedSubproblem(tri, w))
    assert sel.chosen == {0}


def test_max_weight_lexicographic_tie_break():
    k22 = make_instance([(0, 2, 0.5), (0, 3, 0.5), (1, 2, 0.5), (1, 3, 0.5)])
    w = dict.fromkeys(range(4), 1.0)
    assert max_weight_matching(WeightedSubproblem(k22, w)).chosen == {0, 3}


def _random_instance(rng, capacitated):
    nv = rng.randint(3, 7)
    pairs = [(u, v) for u in range(nv) for v in range(u + 1, nv)]
    rng.shuffle(pairs)
    m = rng.randint(1, min(8, len(pairs)))
    caps = {v: rng.randint(1, 3) for v in range(nv)} if capacitated else None
    return make_instance([p + (0.5,) for p in pairs[:m]], caps=caps)


def test_max_weight_agrees_with_enumeration():
    rng = CounterRng(314)
    for k in range(300):
        inst = _random_instance(rng, capacitated=k % 2 == 1)
        weights = {e.id: rng.uniform(0.01, 1.0) for e in inst.edges}
        sub = WeightedSubproblem(inst, weights)
        sel = max_weight_matching(sub)
        got = sel.total_weight(weights)
        want = brute_max_weight(inst, weights)
        assert got == pytest.approx(want, abs=1e-12)


def test_greedy_is_half_of_exact():
    rng = CounterRng(2718)
    for k in range(300):
        inst = _random_instance(rng, capacitated=k % 2 == 1)
        weights = {e.id: rng.uniform(0.0, 1.0) for e in inst.edges}
        sub = WeightedSubproblem(inst, weights)
        g = greedy_matching(sub).total_weight(weights)
        opt = max_weight_matching(sub).total_weight(weights)
        assert g >= 0.5 * opt - 1e-12


def test_assignment_path_matches_enumeration():
    # force the polynomial path with exact_limit=0 on one-side-unit instances
    from rematch.model import Edge, Instance, Vertex

    rng = CounterRng(41)
    for k in range(60):
        n_left = rng.randint(2, 4)
        n_right = rng.randint(1, 3)
        vertices = [Vertex(i) for i in range(n_left)]
        vertices += [Vertex(n_left + j, rng.randint(1, 3) if k % 2 else 1)
                     for j in range(n_right)]
        pairs = [(u, n_left + j) for u in range(n_left) for j in range(n_right)]
        rng.shuffle(pairs)
        m = rng.randint(1, min(8, len(pairs)))
        edges = [Edge(i, pairs[i], 0.5) for i in range(m)]
        inst = Instance(vertices, edges, 1, structure=ManyToOne(range(n_left)))
        weights = {e.id: rng.uniform(0.01, 1.0) for e in inst.edges}
        sub = WeightedSubproblem(inst, weights)
        fast = max_weight_matching(sub, exact_limit=0).total_weight(weights)
        assert fast == pytest.approx(brute_max_weight(inst, weights), abs=1e-9)


def test_hypergraph_greedy():
    disjoint = make_instance([(0, 1, 2, 0.5), (3, 4, 5, 0.5)], structure=Hypergraph(3))
    w = {0: 1.0, 1: 2.0}
    assert greedy_hypergraph_matching(WeightedSubproblem(disjoint, w)).chosen == {0, 1}

    overlapping = make_instance([(0, 1, 2, 0.5), (2, 3, 4, 0.5)], structure=Hypergraph(3))
    w = {0: 5.0, 1: 4.0}
    assert greedy_hypergraph_matching(WeightedSubproblem(overlapping, w)).chosen == {0}

    sunflower = make_instance([(0, 1 + 2 * i, 2 + 2 * i, 0.5) for i in range(3)],
                              structure=Hypergraph(3))
    w = dict.fromkeys(range(3), 1.0)
    sel = greedy_hypergraph_matching(WeightedSubproblem(sunflower, w))
    assert len(sel.chosen) == 1
    assert brute_max_weight(sunflower, w) == 1.0


def test_hypergraph_greedy_is_one_third_of_exact():
    rng = CounterRng(55)
    for _ in range(150):
        nv = rng.randint(4, 7)
        edges = []
        seen = set()
        for _ in range(rng.randint(1, 7)):
            ids = set()
            while len(ids) < rng.randint(2, 3):
                ids.add(rng.randint(0, nv - 1))
            key = tuple(sorted(ids))
            if key not in seen and len(key) >= 2:
                seen.add(key)
                edges.append(key + (0.5,))
        if not edges:
            continue
        inst = make_instance(edges, structure=Hypergraph(3))
        weights = {e.id: rng.uniform(0.01, 1.0) for e in inst.edges}
        g = greedy_hypergraph_matching(
            WeightedSubproblem(inst, weights)).total_weight(weights)
        assert g >= brute_max_weight(inst, weights) / 3.0 - 1e-12


def test_degree_halving_examples():
    assert degree_halving_subgraph([]) == set()
    assert degree_halving_subgraph([(0, 1, 0.3)]) == {0}
    star = [(0, i, 1.0) for i in range(1, 5)]
    chosen = degree_halving_subgraph(star)
    assert chosen == {0, 2}
    assert sum(star[i][2] for i in chosen) == 2.0  # half the weight, >= 1/3
    with pytest.raises(ValidationError):
        degree_halving_subgraph([(2, 2, 1.0)])


def test_degree_halving_postconditions():
    import math

    rng = CounterRng(77)
    for _ in range(200):
        nv = rng.randint(2, 6)
        edges = []
        for _ in range(rng.randint(1, 9)):
            u = rng.randint(0, nv - 2)
            edges.append((u, rng.randint(u + 1, nv - 1), rng.uniform(0.0, 1.0)))
        chosen = degree_halving_subgraph(edges)
        total = sum(w for _, _, w in edges)
        assert sum(edges[i][2] for i in chosen) >= total / 3.0 - 1e-12
        deg, deg_s = {}, {}
        for i, (u, v, _) in enumerate(edges):
            for x in (u, v):
                deg[x] = deg.get(x, 0) + 1
                deg_s[x] = deg_s.get(x, 0) + (1 if i in chosen else 0)
        assert all(deg_s[v] <= math.ceil(deg[v] / 2) for v in deg)


def test_subproblem_validation():
    with pytest.raises(ValidationError):
        WeightedSubproblem(PATH, {0: -1.0})
    with pytest.raises(ValidationError):
        WeightedSubproblem(PATH, {0: 1.0}, blocked=[0])
    with pytest.raises(ValidationError):
        WeightedSubproblem(PATH, {9: 1.0})


@settings(max_examples=200, deadline=None)
@given(st.integers(0, (1 << 10) - 1), st.integers(0, (1 << 10) - 1))
def test_lex_less_matches_tuple_order(a, b):
    assert lex_less(a, b) == (tuple(sorted(mask_to_set(a))) < tuple(sorted(mask_to_set(b))))
