import random
from itertools import combinations
from math import comb, factorial

import pytest

from oaclass import canonical, core
from oaclass.core import Code, params_from_c
from oaclass.localcode import (
    LocalCode,
    LocalCodeError,
    build_continuation,
    check_local,
    continuations,
    cycle_type,
    enumerate_continuations,
    finalize,
    has_continuation,
    is_square,
    lift_to_split,
    next_locality,
    seed,
    unsplit,
)
from oaclass.pipeline import reject_isomorphs

import oracles

# (n, c) pairs on the bound, small enough for brute force
SMALL = [(3, 1), (4, 4), (5, 3), (6, 2), (7, 1)]


def e(*coords):
    return sum(1 << (i - 1) for i in coords)


# ------------------------------------------------------------------ checks


def test_seed_examples():
    assert seed(params_from_c(14, 2)).words == Code(14, (e(1), e(14)))
    assert seed(params_from_c(7, 1)).words == Code(7, (e(1),))
    assert seed(params_from_c(3, 1)).words == Code(3, (e(1),))
    assert seed(params_from_c(9, 3)).words == Code(9, (e(1), e(8), e(9)))


@pytest.mark.parametrize("n,c", SMALL + [(9, 3), (14, 2)])
def test_seed_is_valid(n, c):
    lc = seed(params_from_c(n, c))
    assert check_local(lc) is None
    assert check_local(seed(params_from_c(n, c), split=True)) is None
    if n <= 9:
        assert oracles.local_ok(n, c, lc.words, 1)


def test_zero_word_violates_ii():
    bad = check_local(LocalCode.plain(params_from_c(14, 2), 1, [0]))
    assert bad is not None and bad.condition == "II"


def test_removing_weight_two_word_violates_iii():
    lc = continuations(seed(params_from_c(6, 2)))[0]
    w2 = [x for x in lc.words if core.popcount(x) == 2]
    broken = LocalCode.plain(lc.params, 2, [x for x in lc.words if x != w2[0]])
    bad = check_local(broken)
    assert bad is not None and bad.condition == "III" and core.popcount(bad.vertex) == 1


def test_check_local_matches_definition_on_random_sets():
    rng = random.Random(1)
    for _ in range(400):
        n, c = rng.choice(SMALL)
        r = rng.randint(1, n)
        words = rng.sample(range(1, 1 << n), rng.randint(0, min(8, (1 << n) - 1)))
        lc = LocalCode.plain(params_from_c(n, c), r, words)
        assert (check_local(lc) is None) == oracles.local_ok(n, c, words, r)


def test_split_cap_rejects_r1_gap():
    with pytest.raises(LocalCodeError):
        LocalCode.split_code(params_from_c(6, 2), 1, 3, [1])


# ------------------------------------------------------------ continuations


def test_seed_14_2_instance():
    lc = seed(params_from_c(14, 2))
    cont = build_continuation(lc)
    deficits = {x: d for x, d in cont.frontier.items() if d}
    assert len(deficits) == 12
    assert set(deficits.values()) == {2}
    # candidates are the edges among the 12 free coordinates
    assert len(cont.candidates) == comb(12, 2)


def labeled_two_factors(m: int, shortest: int) -> int:
    """Labelled 2-regular graphs on m vertices with all cycles of length >= shortest."""
    a = [1] + [0] * m
    for k in range(1, m + 1):
        # the cycle through the smallest vertex has length j
        a[k] = sum(comb(k - 1, j - 1) * factorial(j - 1) // 2 * a[k - j] for j in range(shortest, k + 1))
    return a[m]


@pytest.mark.parametrize("n", [6, 14])
def test_seed_continuations_count_triangle_free_two_factors(n):
    lc = seed(params_from_c(n, 2))
    total = enumerate_continuations(lc, lambda s, w: None, symmetric=True)
    assert total == labeled_two_factors(n - 2, 4)
    if n <= 6:
        assert enumerate_continuations(lc, lambda s, w: None, symmetric=False) == total


def two_local_classes_14():
    lc = seed(params_from_c(14, 2))
    found = []
    enumerate_continuations(lc, lambda s, w: found.append(s))
    cont = build_continuation(lc)
    return [rep for rep, _, _ in reject_isomorphs([cont.child(s) for s in found], canonical.PERM)]


def test_two_local_cycle_types_and_symmetry():
    reps = two_local_classes_14()
    assert sorted(cycle_type(r) for r in reps) == [(4, 4, 4), (4, 8), (5, 7), (6, 6), (12,)]
    for rep in reps:
        edges = [tuple(i for i in range(14) if x >> i & 1) for x in rep.words if core.popcount(x) == 2]
        verts = {v for ed in edges for v in ed}
        aut = oracles.aut_count_graph(verts, edges)
        # swapping the two weight-1 codewords times automorphisms of the cycle graph
        assert canonical.symmetry_group(rep.words, canonical.PERM).order == 2 * aut


def brute_continuations(lc: LocalCode) -> set[frozenset] | None:
    """Valid children by testing every subset of the admissible layer words.

    None when there are more than 18 such words.
    """
    n, c = lc.n, lc.c
    r0, r1 = next_locality(lc)
    if not lc.split:
        weight, first = r0, None
    elif r1 > r0:
        weight, first = r1, 1
    else:
        weight, first = r0, 0
    P = set(lc.words)
    layer = [x for x in range(1 << n) if oracles.wt(x) == weight and (first is None or x & 1 == first)]
    # a new word next to an old codeword breaks the packing condition outright
    layer = [x for x in layer if not any(x ^ (1 << i) in P for i in range(n))]
    if len(layer) > 18:
        return None
    out = set()
    for k in range(len(layer) + 1):
        for sub in combinations(layer, k):
            words = P | set(sub)
            ok = oracles.local_ok(n, c, words, r0, r1 if lc.split else None)
            if ok:
                out.add(frozenset(words))
    return out


def walk(n, c, split=False, limit=40):
    """Local codes reachable from the seed, class representatives only."""
    todo = [seed(params_from_c(n, c), split=split)]
    seen = []
    while todo and len(seen) < limit:
        lc = todo.pop(0)
        seen.append(lc)
        if lc.is_complete() or lc.r1 == n:
            continue
        kids = continuations(lc)
        todo += [rep for rep, _, _ in reject_isomorphs(kids, lc.mode)]
    return seen


@pytest.mark.parametrize("n,c", [(3, 1), (4, 4), (5, 3), (6, 2), (7, 1)])
def test_continuations_match_brute_force(n, c):
    checked = 0
    for lc in walk(n, c):
        if lc.is_complete():
            continue
        ref = brute_continuations(lc)
        if ref is None:
            continue
        got = {frozenset(ch.words) for ch in continuations(lc)}
        assert got == ref
        assert has_continuation(lc) == bool(got)
        checked += 1
    assert checked


@pytest.mark.parametrize("n,c", [(5, 3), (6, 2), (7, 1)])
def test_split_continuations_match_brute_force(n, c):
    checked = 0
    for lc in walk(n, c, split=True, limit=25):
        ref = brute_continuations(lc)
        if ref is None:
            continue
        got = {frozenset(ch.words) for ch in continuations(lc)}
        assert got == ref
        checked += 1
    assert checked


@pytest.mark.parametrize("n,c", [(6, 2), (7, 1), (9, 3)])
def test_symmetric_enumeration_matches_plain(n, c):
    for lc in walk(n, c, limit=8):
        if lc.is_complete():
            continue
        plain = {}
        enumerate_continuations(lc, lambda s, w: plain.__setitem__(frozenset(s), w), symmetric=False)
        weighted = []
        total = enumerate_continuations(lc, lambda s, w: weighted.append((s, w)))
        assert total == len(plain)
        # per-class weights agree with plain counts
        cont = build_continuation(lc)
        by_class: dict[bytes, int] = {}
        for s, w in weighted:
            k = cont.child(s).key()
            by_class[k] = by_class.get(k, 0) + w
        ref: dict[bytes, int] = {}
        for s in plain:
            k = cont.child(s).key()
            ref[k] = ref.get(k, 0) + 1
        assert by_class == ref


def test_complete_code_continues_to_itself():
    params = params_from_c(7, 1)
    for lc in walk(7, 1):
        if lc.is_complete():
            cont = build_continuation(lc)
            assert not cont.frontier and not cont.candidates
            kids = continuations(lc)
            assert [k.words for k in kids] == [lc.words]
            assert finalize(lc) == lc.words
            assert core.intersection_array(lc.words).b == (7,)
            return
    pytest.fail(f"no complete code reached for {params}")


def test_finalize_rejects_non_codes():
    params = params_from_c(3, 1)
    with pytest.raises(LocalCodeError):
        finalize(LocalCode.plain(params, 3, [e(1), e(2)]))
    with pytest.raises(LocalCodeError):
        finalize(LocalCode.plain(params, 2, [e(1), e(2, 3)]))


# --------------------------------------------------------------- invariants


@pytest.mark.parametrize("n,c", [(6, 2), (7, 1), (9, 3)])
def test_truncation_closure(n, c):
    params = params_from_c(n, c)
    for lc in walk(n, c, limit=15):
        for r in range(1, lc.r):
            assert check_local(LocalCode.plain(params, r, lc.words.truncate(r).words)) is None


def test_square_examples():
    quad = [0b000011, 0b000101, 0b001010, 0b001100]
    assert is_square(Code(14, tuple(quad)))
    assert not is_square(Code(14, tuple(quad[:3])))
    assert not is_square(Code(5, ()))


def test_square_matches_brute_force():
    sq = [0b0011, 0b0101, 0b1010, 0b1100]
    rng = random.Random(2)
    n = 5
    for _ in range(60):
        code = Code(n, tuple(rng.sample(range(32), rng.randint(3, 8))))
        ref = any(oracles.full_equivalent(n, sub, sq) for sub in combinations(code.words, 4))
        assert is_square(code) == ref


@pytest.mark.parametrize("n,c", [(6, 2), (9, 3)])
def test_square_monotone_along_continuations(n, c):
    for lc in walk(n, c, limit=12):
        if lc.is_complete() or not is_square(lc):
            continue
        assert all(is_square(ch) for ch in continuations(lc))


# -------------------------------------------------------------- split steps


def test_lift_and_unsplit():
    params = params_from_c(6, 2)
    lc = continuations(seed(params))[0]
    lifts = lift_to_split(lc)
    assert len(lifts) == 2
    for s in lifts:
        assert s.split and 1 in s.words
        assert check_local(s) is None
        assert canonical.canonical_key(s.words, canonical.PERM) == lc.key()
        assert unsplit(s).key() == lc.key()
    with pytest.raises(LocalCodeError):
        lift_to_split(lifts[0])
