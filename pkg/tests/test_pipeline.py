from itertools import permutations
from math import factorial

import pytest

from oaclass import canonical, core, pipeline
from oaclass.core import Code, params_from_c
from oaclass.localcode import lift_to_split, seed
from oaclass.pipeline import (
    Step,
    Strategy,
    StrategyError,
    ValidationError,
    classify,
    count_labeled,
    fingerprint_validate,
    plan,
    reduce_split_to_plain,
    reject_isomorphs,
    validate_level,
)

import oracles

SMALL = [(3, 1, 1), (6, 3, 1), (7, 3, 1), (9, 5, 2)]


def orbit_size(code: Code) -> int:
    """Distinct images under all 2^n n! hypercube automorphisms."""
    n = code.n
    images = set()
    for p in permutations(range(1, n + 1)):
        img = [oracles.perm_word(x, p) for x in code.words]
        for v in range(1 << n):
            images.add(frozenset(x ^ v for x in img))
    return len(images)


# ------------------------------------------------------------------ plan


def test_plan_labels():
    assert [s.label for s in plan(4, [])] == ["2", "3", "4"]
    assert [s.label for s in plan(5, [3])] == ["2", "lift:(2,2)", "(2,3)", "(3,3)", "reduce:3", "4", "5"]
    assert [s.label for s in plan(5, [2, 3])] == [
        "lift:(1,1)", "(1,2)", "(2,2)", "(2,3)", "(3,3)", "reduce:3", "4", "5"]
    assert Step("continue", 2, 3, True).full_level is None
    assert Step("continue", 3, 3, True).full_level == 3


def test_strategy_rejections():
    p = params_from_c(9, 3)
    with pytest.raises(StrategyError):
        Strategy(split_levels=frozenset({2, 4})).resolve(p)
    with pytest.raises(StrategyError):
        Strategy(square_split=True).resolve(p)
    with pytest.raises(StrategyError):
        Strategy(fingerprint_depth=12).resolve(p)
    with pytest.raises(StrategyError):
        Strategy(jobs=0).resolve(p)
    assert Strategy().resolve(params_from_c(14, 2)).split_levels == {3}
    assert Strategy().resolve(p).split_levels == frozenset()


# ------------------------------------------------------------ classification


@pytest.mark.parametrize("n,t,classes", SMALL)
@pytest.mark.parametrize("strategy", [
    Strategy(),
    Strategy(split_levels=frozenset()),
    Strategy(symmetry_pruning=False),
    Strategy(split_levels=frozenset({2, 3})),
])
def test_strategies_agree(n, t, classes, strategy):
    params = core.intersection_array_for(n, t)
    if strategy.split_levels and max(strategy.split_levels) > n:
        pytest.skip("split level beyond n")
    ref = classify(params, Strategy(split_levels=frozenset(), symmetry_pruning=False))
    res = classify(params, strategy)
    assert len(res.classes) == classes
    assert res.keys == ref.keys
    assert all(r.ok for r in res.reports)
    for code in res.codes:
        assert core.intersection_array(code) == core.IntersectionArray((n,), (params.c,))
        assert core.is_oa_on_bound(code, params)


def test_representatives_are_sorted_and_distinct():
    res = classify(core.intersection_array_for(9, 5))
    assert res.keys == sorted(res.keys)
    assert len(set(res.keys)) == len(res.keys)


# -------------------------------------------------------------- counting


def test_count_labeled_small_by_brute_force():
    perfect3 = oracles.all_codes_with_array(3, ((3,), (1,)))
    assert len(perfect3) == 4
    assert count_labeled([Code(3, (0, 7))]) == 4
    for n in (2, 3, 4, 5):
        even = Code.even_weight(n)
        assert count_labeled([even]) == orbit_size(even) == 2


def test_count_labeled_matches_orbit_enumeration():
    res = classify(core.intersection_array_for(6, 3))
    assert count_labeled(res.codes) == sum(orbit_size(c) for c in res.codes) == res.total_labeled()


def test_orbit_stabilizer_total_hamming():
    res = classify(core.intersection_array_for(7, 3))
    assert res.total_labeled() == 2**7 * factorial(7) // (168 * 16)


# ------------------------------------------------------------ double counting


def test_validate_level_identities():
    assert validate_level(1, 3, [(1, 1), (1, 1), (1, 1)]) == (True, 3)
    assert validate_level(12, 7, [(6, 2), (1, 12)])[0]
    ok, expected = validate_level(12, 6, [(5, 2), (1, 12)])
    assert not ok and expected == 7


def test_seed_14_double_counting():
    res = classify(params_from_c(14, 2), Strategy(square_split=False), stop_after="2")
    report = res.reports[0]
    assert report.ok
    reps = res.tracks[0].stages[-1].reps
    assert len(reps) == 5
    total = sum(2 * factorial(12) // canonical.symmetry_group(lc.words, canonical.PERM).order for lc in reps)
    assert total == report.found == 28941165


def test_dropped_continuation_is_detected(monkeypatch):
    real = pipeline.enumerate_continuations

    def lossy(lc, visitor, symmetric=True):
        skipped = []

        def visit(sol, w):
            if not skipped:
                skipped.append(sol)
                return
            visitor(sol, w)

        return real(lc, visit, symmetric)

    monkeypatch.setattr(pipeline, "enumerate_continuations", lossy)
    with pytest.raises(ValidationError):
        classify(core.intersection_array_for(7, 3))


def test_lift_check_counts_weight_one_words():
    params = params_from_c(9, 3)
    res = classify(params, Strategy(split_levels=frozenset({3})), stop_after="lift:(2,2)")
    lift = res.reports[-1]
    assert lift.ok
    assert all(p.found == params.c for p in lift.parents)


# ---------------------------------------------------------------- reduction


def test_reduce_matches_plain_level():
    params = params_from_c(9, 3)
    plain = classify(params, Strategy(split_levels=frozenset()), stop_after="3")
    split = classify(params, Strategy(split_levels=frozenset({3})), stop_after="reduce:3")
    keys = lambda res: sorted(lc.key() for lc in res.tracks[0].stages[-1].reps)
    assert keys(plain) == keys(split)
    assert len(keys(plain)) > 1


def test_reduce_keeps_one_per_plain_class():
    params = params_from_c(9, 3)
    res = classify(params, Strategy(split_levels=frozenset()), stop_after="2")
    for lc in res.tracks[0].stages[-1].reps:
        lifted = [rep for rep, _, _ in reject_isomorphs(lift_to_split(lc), canonical.PERM0)]
        kept = reduce_split_to_plain(lifted)
        assert len(kept) == 1
        assert kept[0].key() == lc.key()


def test_symmetric_lift_is_kept():
    # the seed's unit vectors are interchangeable, so every lift is kept alone
    lc = seed(params_from_c(9, 3))
    lifts = lift_to_split(lc)
    assert len(lifts) == 3
    assert len({canonical.canonical_key(s.words, canonical.PERM0) for s in lifts}) == 1
    assert len(reduce_split_to_plain(lifts[:1])) == 1


# ---------------------------------------------------------------- fingerprint


@pytest.mark.parametrize("n,t,depth", [(3, 1, 2), (9, 5, 4), (6, 3, 2), (7, 3, 3)])
def test_fingerprint_ok(n, t, depth):
    res = classify(core.intersection_array_for(n, t), Strategy(fingerprint_depth=depth))
    assert res.fingerprint is not None and res.fingerprint.ok


def test_fingerprint_detects_missing_class():
    res = classify(core.intersection_array_for(9, 5), Strategy(fingerprint_depth=4))
    finals = {"all": res.codes}
    assert fingerprint_validate(res.tracks, finals, 4).ok
    dropped = {"all": res.codes[1:]}
    verdict = fingerprint_validate(res.tracks, dropped, 4)
    assert not verdict.ok and verdict.loc < verdict.classified


# ------------------------------------------------------------------ routing


def test_routed_equals_unrouted():
    params = core.intersection_array_for(6, 3)
    routed = classify(params, Strategy(square_split=True))
    plain = classify(params, Strategy(square_split=False))
    assert routed.keys == plain.keys
    assert [t.name for t in routed.tracks] == ["square", "squarefree"]
    assert routed.fingerprint.ok
    # the square-free prune never loses a square-free final code
    sf_track = next(t for t in routed.tracks if t.name == "squarefree")
    sf_final = {lc.words for lc in sf_track.stages[-1].reps}
    sf_keys = {canonical.canonical_key(c, canonical.FULL) for c in sf_final}
    for code in plain.codes:
        if not pipeline.is_square(code):
            assert canonical.canonical_key(code, canonical.FULL) in sf_keys


def test_jobs_do_not_change_results():
    params = core.intersection_array_for(9, 5)
    one = classify(params, Strategy(jobs=1))
    two = classify(params, Strategy(jobs=3))
    assert one.keys == two.keys
    assert one.report_lines() == two.report_lines()
    assert one.manifest_lines() == two.manifest_lines()


# ---------------------------------------------------------------- checkpoints


def test_checkpoint_resume(tmp_path, monkeypatch):
    params = core.intersection_array_for(9, 5)
    first = classify(params, Strategy(checkpoint_dir=tmp_path))
    assert (tmp_path / "run.txt").exists()
    assert sorted(p.name for p in (tmp_path / "all").glob("*.arc"))

    def boom(*a, **k):
        raise AssertionError("stage recomputed")

    monkeypatch.setattr(pipeline, "_run_continue", boom)
    again = classify(params, Strategy(checkpoint_dir=tmp_path))
    assert again.keys == first.keys
    assert again.report_lines() == first.report_lines()


def test_checkpoint_partial_resume(tmp_path):
    params = core.intersection_array_for(9, 5)
    ref = classify(params)
    classify(params, Strategy(checkpoint_dir=tmp_path), stop_after="4")
    done = sorted((tmp_path / "all").glob("*.arc"))
    assert done
    done[-1].unlink()
    res = classify(params, Strategy(checkpoint_dir=tmp_path))
    assert res.keys == ref.keys


def test_checkpoint_refuses_other_run(tmp_path):
    classify(core.intersection_array_for(9, 5), Strategy(checkpoint_dir=tmp_path), stop_after="2")
    with pytest.raises(StrategyError):
        classify(core.intersection_array_for(7, 3), Strategy(checkpoint_dir=tmp_path))


def test_stop_after_unknown_label():
    with pytest.raises(StrategyError):
        classify(core.intersection_array_for(9, 5), stop_after="(7,8)")
