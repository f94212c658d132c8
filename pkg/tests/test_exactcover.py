import random
from itertools import permutations
from math import comb

import pytest

from oaclass.exactcover import CoverProblem, Solver, check_solution, solve_all, solve_exists, solve_weighted

import oracles


def random_problem(rng: random.Random, max_options: int = 12) -> CoverProblem:
    nd = rng.randint(1, 5)
    nc = rng.randint(0, 3)
    demand = [(f"d{i}", rng.randint(1, 3)) for i in range(nd)]
    capacity = [(f"c{i}", rng.randint(0, 2)) for i in range(nc)]
    items = [i for i, _ in demand] + [i for i, _ in capacity]
    options = []
    for k in range(rng.randint(1, max_options)):
        touched = frozenset(rng.sample(items, rng.randint(1, min(3, len(items)))))
        options.append((k, touched))
    return CoverProblem(demand, capacity, options)


def collect(problem):
    out = []
    n = solve_all(problem, out.append)
    assert n == len(out)
    return out


def test_choose_two_of_three():
    p = CoverProblem([("x", 2)], [], [(1, frozenset("x")), (2, frozenset("x")), (3, frozenset("x"))])
    assert sorted(map(sorted, collect(p))) == [[1, 2], [1, 3], [2, 3]]


def test_two_ways_to_cover_a_b():
    p = CoverProblem([("a", 1), ("b", 1)], [], [(1, frozenset("a")), (2, frozenset("b")), (3, frozenset("ab"))])
    assert sorted(map(sorted, collect(p))) == [[1, 2], [3]]


def test_unreachable_demand():
    p = CoverProblem([("x", 2)], [], [(1, frozenset("x"))])
    assert solve_all(p) == 0
    assert not solve_exists(p)


def test_capacity_vetoes():
    p = CoverProblem([("a", 1), ("b", 1)], [("k", 1)],
                     [(1, frozenset({"a", "k"})), (2, frozenset({"b", "k"})), (3, frozenset({"a", "b"}))])
    assert sorted(map(sorted, collect(p))) == [[3]]


def test_empty_demand_has_one_empty_solution():
    p = CoverProblem([], [], [])
    assert collect(p) == [()]


def test_oracle_equivalence_random():
    rng = random.Random(2024)
    for _ in range(1200):
        p = random_problem(rng, max_options=14)
        got = [frozenset(s) for s in collect(p)]
        assert len(set(got)) == len(got)
        ref = oracles.exact_cover(p.demand_items, p.capacity_items, p.options)
        assert set(got) == set(ref)
        assert all(check_solution(p, s) for s in got)
        assert solve_exists(p) == bool(ref)


def test_oracle_equivalence_twenty_options():
    rng = random.Random(99)
    for _ in range(15):
        p = random_problem(rng, max_options=20)
        ref = oracles.exact_cover(p.demand_items, p.capacity_items, p.options)
        assert {frozenset(s) for s in collect(p)} == set(ref)


def test_deterministic_order():
    rng = random.Random(5)
    for _ in range(50):
        p = random_problem(rng)
        assert collect(p) == collect(p)


def test_text_roundtrip():
    rng = random.Random(8)
    for _ in range(50):
        p = random_problem(rng)
        text = p.to_text()
        q = CoverProblem.from_text(text)
        assert q.to_text() == text
        # ids become strings, the solution sets must correspond
        assert {frozenset(map(str, s)) for s in collect(p)} == {frozenset(s) for s in collect(q)}


def test_rejects_malformed():
    with pytest.raises(ValueError):
        CoverProblem([("a", 1)], [("a", 1)], [])
    with pytest.raises(ValueError):
        CoverProblem([("a", 0)], [], [])
    with pytest.raises(ValueError):
        CoverProblem([("a", 1)], [], [(1, frozenset())])
    with pytest.raises(ValueError):
        CoverProblem([("a", 1)], [], [(1, frozenset("b"))])
    with pytest.raises(ValueError):
        CoverProblem.from_text("item a weird 2\n")


def _group_oracle(group, item_map):
    """Orbit oracle from an explicit group of option maps and matching item maps."""

    def oracle(chosen, item, subsets):
        ch = frozenset(chosen)
        stab = [(g, h) for g, h in zip(group, item_map)
                if h[item] == item and frozenset(g[o] for o in ch) == ch]
        if len(stab) == 1:
            return None
        seen, reps = set(), []
        for s in subsets:
            if frozenset(s) in seen:
                continue
            orbit = {frozenset(g[o] for o in s) for g, _ in stab}
            seen |= orbit
            reps.append((s, len(orbit)))
        return reps

    return oracle


@pytest.mark.parametrize("m,need", [(4, 2), (5, 2), (5, 3)])
def test_weighted_star_under_symmetric_group(m, need):
    # hub x needs `need` spokes a_k = {x, y_k}; each y_k is covered by a_k or b_k = {y_k}
    demand = [("x", need)] + [(f"y{k}", 1) for k in range(m)]
    options = [(f"a{k}", frozenset({"x", f"y{k}"})) for k in range(m)]
    options += [(f"b{k}", frozenset({f"y{k}"})) for k in range(m)]
    p = CoverProblem(demand, [], options)
    group, items = [], []
    for perm in permutations(range(m)):
        g = {f"{c}{k}": f"{c}{perm[k]}" for c in "ab" for k in range(m)}
        h = {"x": "x", **{f"y{k}": f"y{perm[k]}" for k in range(m)}}
        group.append(g)
        items.append(h)
    got = []
    total = solve_weighted(p, lambda s, w: got.append((s, w)), _group_oracle(group, items))
    assert total == solve_all(p) == comb(m, need)
    # symmetry pruning must actually have collapsed some orbits
    assert len(got) < total


def test_weighted_refuses_capacity_only_options():
    p = CoverProblem([("a", 1)], [("k", 1)], [(1, frozenset("a")), (2, frozenset("k"))])
    with pytest.raises(ValueError):
        Solver(p).run(lambda s, w: None, lambda *a: None)


def test_vectorised_oracle_agrees_with_naive_oracle():
    rng = random.Random(31)
    for _ in range(200):
        p = random_problem(rng, max_options=10)
        a = oracles.exact_cover(p.demand_items, p.capacity_items, p.options)
        b = oracles.exact_cover_masks(p.demand_items, p.capacity_items, p.options)
        assert sorted(map(sorted, a)) == sorted(map(sorted, b))
