"""Level-by-level classification driver.

A run is a fixed sequence of steps.  A *continue* step extends every
representative by one layer and rejects isomorphs; *lift* moves a plain level
into split mode by putting each weight-1 codeword on coordinate 1; *reduce*
returns from split (r, r) to plain r-local classes.  For c = 2 the run can be
routed into a square and a square-free track after level 2.

Every continue step is checked by double counting: the labeled continuations
of a parent P that are equivalent to a child class C number exactly
|Sym(P)| / |Sym(C)| (Sym fixing coordinate 1 in split mode).
"""

from __future__ import annotations

import logging
import multiprocessing
import os
import time
from dataclasses import dataclass, field, replace
from math import factorial
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import canonical
from .core import Code, CRParams
from .formats import FormatError, Record, read_archive, write_archive
from .localcode import (
    LocalCode,
    LocalCodeError,
    enumerate_continuations,
    finalize,
    is_square,
    lift_to_split,
    seed,
    swap_first,
    unsplit,
)

log = logging.getLogger(__name__)


class ValidationError(RuntimeError):
    pass


class StrategyError(ValueError):
    pass


# ------------------------------------------------------------------ strategy


@dataclass(frozen=True)
class Strategy:
    """How to run a classification.

    ``split_levels`` lists the levels r whose step r-1 -> r runs in split
    mode; None picks the default ({3} for c = 2, none otherwise).
    ``square_split`` None means: route when c = 2.
    """

    split_levels: frozenset[int] | None = None
    square_split: bool | None = None
    jobs: int = 1
    checkpoint_dir: Path | None = None
    symmetry_pruning: bool = True
    fingerprint_depth: int | None = None

    def resolve(self, params: CRParams) -> "Strategy":
        n, c = params.n, params.c
        levels = self.split_levels
        if levels is None:
            levels = frozenset({3}) if c == 2 and n >= 3 else frozenset()
        levels = frozenset(levels)
        if levels:
            lo, hi = min(levels), max(levels)
            if lo < 2 or hi > n:
                raise StrategyError(f"split levels must lie in 2..{n}, got {sorted(levels)}")
            if levels != frozenset(range(lo, hi + 1)):
                raise StrategyError(f"split levels must be contiguous, got {sorted(levels)}")
        square = self.square_split
        if square is None:
            square = c == 2 and n >= 2
        elif square and c != 2:
            raise StrategyError("square routing needs c = 2")
        if self.jobs < 1:
            raise StrategyError("jobs must be >= 1")
        depth = self.fingerprint_depth
        if depth is None:
            depth = default_fingerprint_depth(n)
        elif depth and not 1 <= depth <= n:
            raise StrategyError(f"fingerprint depth must lie in 1..{n}")
        ckpt = Path(self.checkpoint_dir) if self.checkpoint_dir is not None else None
        return replace(self, split_levels=levels, square_split=square, fingerprint_depth=depth, checkpoint_dir=ckpt)


def default_fingerprint_depth(n: int) -> int:
    return max(1, min(n - 1, max(2, (n - 1) // 2)))


@dataclass(frozen=True)
class Step:
    op: str  # "continue", "lift", "reduce"
    r0: int
    r1: int
    split: bool

    @property
    def label(self) -> str:
        base = f"({self.r0},{self.r1})" if self.split else str(self.r0)
        return base if self.op in ("continue", "seed") else f"{self.op}:{base}"

    @property
    def full_level(self) -> int | None:
        return self.r0 if self.r0 == self.r1 else None


def plan(n: int, split_levels: Iterable[int]) -> list[Step]:
    levels = set(split_levels)
    steps: list[Step] = []
    split = False
    for r in range(2, n + 1):
        if r in levels:
            if not split:
                steps.append(Step("lift", r - 1, r - 1, True))
                split = True
            steps.append(Step("continue", r - 1, r, True))
            steps.append(Step("continue", r, r, True))
            if r + 1 not in levels:
                steps.append(Step("reduce", r, r, False))
                split = False
        else:
            steps.append(Step("continue", r, r, False))
    return steps


# ------------------------------------------------------------------ reports


@dataclass
class ParentReport:
    parent: int
    found: int
    classes: int
    symcheck: bool
    expected: int = 0

    def line(self, label: str) -> str:
        return (f"level={label} parent={self.parent} found={self.found} "
                f"classes={self.classes} symcheck={'ok' if self.symcheck else 'fail'}")


@dataclass
class LevelReport:
    label: str
    op: str
    track: str = "all"
    parents: list[ParentReport] = field(default_factory=list)
    classes: int = 0
    pruned: int = 0
    seconds: float = 0.0

    @property
    def found(self) -> int:
        return sum(p.found for p in self.parents)

    @property
    def ok(self) -> bool:
        return all(p.symcheck for p in self.parents)

    def lines(self) -> list[str]:
        return [p.line(self.label) for p in self.parents]


@dataclass
class Stage:
    step: Step
    reps: list[LocalCode]
    parents: list[int]
    sym: list[int]
    report: LevelReport


# ------------------------------------------------------------------ helpers


def reject_isomorphs(codes: Iterable[Code | LocalCode], mode: str) -> list[tuple[Code | LocalCode, int, bytes]]:
    """One representative (the first seen) per canonical key, with multiplicities.

    Output is sorted by key.
    """
    seen: dict[bytes, list] = {}
    for code in codes:
        words = code.words if isinstance(code, LocalCode) else code
        key = canonical.canonical_key(words, mode)
        if key in seen:
            seen[key][1] += 1
        else:
            seen[key] = [code, 1]
    return [(rep, mult, key) for key, (rep, mult) in sorted(seen.items())]


def sym_order(code: Code | LocalCode, mode: str | None = None) -> int:
    if isinstance(code, LocalCode):
        mode = mode or code.mode
        code = code.words
    return canonical.symmetry_group(code, mode or canonical.PERM).order


def count_labeled(reps: Iterable[Code]) -> int:
    """Number of distinct codes equivalent to one of ``reps`` (pairwise inequivalent)."""
    total = 0
    for code in reps:
        aut = canonical.symmetry_group(code, canonical.FULL).order
        whole = 2**code.n * factorial(code.n)
        if whole % aut:
            raise ValidationError(f"|Aut| = {aut} does not divide 2^n n!")
        total += whole // aut
    return total


def validate_level(parent_sym: int, found: int, child_weights: Sequence[tuple[int, int]]) -> tuple[bool, int]:
    """Double-counting check for one parent.

    ``child_weights`` holds (continuations equivalent to the child, |Sym(child)|)
    per child class.  Returns the verdict and the expected total
    sum |Sym(parent)| / |Sym(child)|.
    """
    ok = True
    expected = 0
    for weight, sym in child_weights:
        if parent_sym % sym or weight * sym != parent_sym:
            ok = False
        expected += parent_sym // sym if parent_sym % sym == 0 else 0
    return ok and expected == found, expected


def _reduce_keep(lc: LocalCode) -> bool:
    """Keep a split (r, r) representative iff it is the least among its swaps."""
    own = canonical.canonical_key(lc.words, canonical.PERM0)
    for x in lc.words:
        if x != 1 and x & (x - 1) == 0:
            other = canonical.canonical_key(swap_first(lc.words, x.bit_length()), canonical.PERM0)
            if other < own:
                return False
    return True


def reduce_split_to_plain(codes: Sequence[LocalCode]) -> list[LocalCode]:
    """Plain representatives from split (r, r) representatives, one per class."""
    out = []
    for lc in codes:
        if _reduce_keep(lc):
            out.append(unsplit(lc))
    return out


# ------------------------------------------------------------------ workers


def _expand(task: tuple[LocalCode, bool]) -> tuple[int, list[tuple[bytes, tuple[int, ...], int, int]]]:
    """Continue one parent; aggregate the continuations by child class."""
    parent, symmetric = task
    classes: dict[bytes, list] = {}
    mode = parent.mode
    base = parent.words.words
    n = parent.n

    def visit(sol: tuple, w: int) -> None:
        words = Code(n, base + tuple(sol))
        key = canonical.canonical_key(words, mode)
        entry = classes.get(key)
        if entry is None:
            classes[key] = [words.words, w]
        else:
            entry[1] += w

    total = enumerate_continuations(parent, visit, symmetric)
    out = []
    for key in sorted(classes):
        words, w = classes[key]
        out.append((key, words, w, canonical.symmetry_group(Code(n, words), mode).order))
    return total, out


def _map(func: Callable, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    ctx = multiprocessing.get_context("fork" if os.name == "posix" else "spawn")
    with ctx.Pool(min(jobs, len(tasks))) as pool:
        return pool.map(func, tasks, chunksize=1)


# ------------------------------------------------------------------ steps


def _run_continue(step: Step, prev: Stage, strategy: Strategy, track: str) -> Stage:
    t0 = time.perf_counter()
    tasks = [(p, strategy.symmetry_pruning) for p in prev.reps]
    results = _map(_expand, tasks, strategy.jobs)
    report = LevelReport(step.label, step.op, track)
    reps: list[LocalCode] = []
    parents: list[int] = []
    syms: list[int] = []
    seen: set[bytes] = set()
    for i, (parent, (total, children)) in enumerate(zip(prev.reps, results)):
        ok, expected = validate_level(prev.sym[i], total, [(w, s) for _, _, w, s in children])
        report.parents.append(ParentReport(i, total, len(children), ok, expected))
        for key, words, _w, s in children:
            if key in seen:
                raise ValidationError(f"level {step.label}: children of distinct parents coincide")
            seen.add(key)
            reps.append(LocalCode(parent.params, step.r0, step.r1, Code(parent.n, words), step.split))
            parents.append(i)
            syms.append(s)
    report.classes = len(reps)
    report.seconds = time.perf_counter() - t0
    return Stage(step, reps, parents, syms, report)


def _run_lift(step: Step, prev: Stage, track: str) -> Stage:
    """Lift plain r to split (r, r); checked by sum |Sym(P)|/|Sym0(L)| = c."""
    t0 = time.perf_counter()
    report = LevelReport(step.label, step.op, track)
    reps, parents, syms = [], [], []
    for i, parent in enumerate(prev.reps):
        lifted = lift_to_split(parent)
        classes = reject_isomorphs(lifted, canonical.PERM0)
        child_syms = [sym_order(lc) for lc, _, _ in classes]
        expected = sum(prev.sym[i] // s for s in child_syms)
        ok = all(prev.sym[i] % s == 0 for s in child_syms) and expected == len(lifted)
        report.parents.append(ParentReport(i, len(lifted), len(classes), ok, expected))
        for (lc, _, _), s in zip(classes, child_syms):
            reps.append(lc)
            parents.append(i)
            syms.append(s)
    report.classes = len(reps)
    report.seconds = time.perf_counter() - t0
    return Stage(step, reps, parents, syms, report)


def _run_reduce(step: Step, prev: Stage, track: str) -> Stage:
    """Reduce split (r, r) to plain r; the kept codes must have distinct plain keys
    covering every plain class present."""
    t0 = time.perf_counter()
    report = LevelReport(step.label, step.op, track)
    reps, parents, syms = [], [], []
    plain_keys = [canonical.canonical_key(lc.words, canonical.PERM) for lc in prev.reps]
    kept_keys: list[bytes] = []
    for i, lc in enumerate(prev.reps):
        if _reduce_keep(lc):
            reps.append(unsplit(lc))
            parents.append(i)
            syms.append(sym_order(reps[-1]))
            kept_keys.append(plain_keys[i])
    ok = len(set(kept_keys)) == len(kept_keys) and set(kept_keys) == set(plain_keys)
    report.parents.append(ParentReport(0, len(prev.reps), len(reps), ok, len(set(plain_keys))))
    report.classes = len(reps)
    report.seconds = time.perf_counter() - t0
    return Stage(step, reps, parents, syms, report)


# ------------------------------------------------------------------ checkpoints


class Checkpoint:
    """Per-stage archives and report lines under one directory."""

    def __init__(self, root: Path | None, params: CRParams, strategy: Strategy):
        self.root = root
        if root is None:
            return
        root.mkdir(parents=True, exist_ok=True)
        ident = (f"n={params.n} c={params.c} split={','.join(map(str, sorted(strategy.split_levels)))} "
                 f"square={int(bool(strategy.square_split))}\n")
        stamp = root / "run.txt"
        if stamp.exists() and stamp.read_text() != ident:
            raise StrategyError(f"checkpoint directory {root} belongs to a different run: {stamp.read_text().strip()}")
        stamp.write_text(ident)

    def _paths(self, track: str, index: int) -> tuple[Path, Path]:
        base = self.root / track
        return base / f"stage-{index:02d}.arc", base / f"stage-{index:02d}.report"

    def load(self, track: str, index: int, step: Step, params: CRParams) -> Stage | None:
        if self.root is None:
            return None
        arc, rep = self._paths(track, index)
        if not arc.exists() or not rep.exists():
            return None
        try:
            records = read_archive(arc)
        except FormatError as exc:
            log.warning("ignoring unreadable checkpoint %s: %s", arc, exc)
            return None
        reps, parents, syms = [], [], []
        for rec in records:
            reps.append(LocalCode(params, step.r0, step.r1, rec.code, step.split))
            parents.append(int(rec.meta["parent"]))
            syms.append(int(rec.meta["sym"]))
        report = LevelReport(step.label, step.op, track, classes=len(reps))
        for line in rep.read_text().splitlines():
            if line.startswith("#"):
                continue
            f = dict(tok.split("=", 1) for tok in line.split())
            report.parents.append(ParentReport(int(f["parent"]), int(f["found"]), int(f["classes"]), f["symcheck"] == "ok"))
        return Stage(step, reps, parents, syms, report)

    def save(self, track: str, index: int, stage: Stage) -> None:
        if self.root is None:
            return
        arc, rep = self._paths(track, index)
        arc.parent.mkdir(parents=True, exist_ok=True)
        tmp = rep.with_suffix(".tmp")
        tmp.write_text("".join(line + "\n" for line in stage.report.lines()))
        os.replace(tmp, rep)
        records = [Record(lc.words, k, {**lc.meta(), "parent": str(p), "sym": str(s)})
                   for k, (lc, p, s) in enumerate(zip(stage.reps, stage.parents, stage.sym))]
        tmp = arc.with_suffix(".tmp")
        write_archive(tmp, records)
        os.replace(tmp, arc)


# ------------------------------------------------------------------ tracks


@dataclass
class Track:
    name: str
    stages: list[Stage]
    # an r-local code whose class belongs to this track
    member: Callable[[Code], bool] = lambda code: True
    prune: Callable[[LocalCode], bool] | None = None


def _square_at_two(code: Code) -> bool:
    return is_square(code.truncate(2))


def _not_square(code: Code) -> bool:
    return not is_square(code)


def _run_steps(track: Track, steps: list[tuple[int, Step]], params: CRParams, strategy: Strategy,
               ckpt: Checkpoint, progress: Callable[[LevelReport], None] | None) -> None:
    for index, step in steps:
        stage = ckpt.load(track.name, index, step, params)
        if stage is None:
            prev = track.stages[-1]
            if step.op == "continue":
                stage = _run_continue(step, prev, strategy, track.name)
            elif step.op == "lift":
                stage = _run_lift(step, prev, track.name)
            else:
                stage = _run_reduce(step, prev, track.name)
            if track.prune is not None:
                keep = [k for k, lc in enumerate(stage.reps) if not track.prune(lc)]
                stage.report.pruned = len(stage.reps) - len(keep)
                stage.reps = [stage.reps[k] for k in keep]
                stage.parents = [stage.parents[k] for k in keep]
                stage.sym = [stage.sym[k] for k in keep]
            if not stage.report.ok:
                ckpt.save(track.name, index, stage)
                bad = next(p for p in stage.report.parents if not p.symcheck)
                raise ValidationError(
                    f"double counting fails at level {step.label} ({track.name}), parent {bad.parent}: "
                    f"found {bad.found}, expected {bad.expected}")
            ckpt.save(track.name, index, stage)
        track.stages.append(stage)
        if progress is not None:
            progress(stage.report)
        log.info("%s level %s: %d classes", track.name, step.label, len(stage.reps))


def _seed_stage(params: CRParams) -> Stage:
    s = seed(params)
    return Stage(Step("seed", 1, 1, False), [s], [-1], [sym_order(s)],
                 LevelReport("1", "seed", classes=1))


# ------------------------------------------------------------------ results


@dataclass
class ClassInfo:
    id: int
    code: Code
    key: bytes
    sym: int
    aut: int
    square: bool
    punctured_perfect: bool | None

    def manifest_line(self) -> str:
        pp = "-" if self.punctured_perfect is None else str(int(self.punctured_perfect))
        return (f"class={self.id} size={len(self.code)} sym={self.sym} aut={self.aut} "
                f"square={int(self.square)} punctured_perfect={pp} key={self.key.hex()}")


@dataclass
class FingerprintVerdict:
    depth: int
    ok: bool
    loc: int
    classified: int
    tracks: dict[str, tuple[int, int]] = field(default_factory=dict)

    def line(self) -> str:
        return (f"fingerprint depth={self.depth} loc={self.loc} classified={self.classified} "
                f"verdict={'ok' if self.ok else 'fail'}")


@dataclass
class Classification:
    params: CRParams
    strategy: Strategy
    classes: list[ClassInfo]
    reports: list[LevelReport]
    tracks: list[Track]
    fingerprint: FingerprintVerdict | None = None

    @property
    def codes(self) -> list[Code]:
        return [ci.code for ci in self.classes]

    @property
    def keys(self) -> list[bytes]:
        return [ci.key for ci in self.classes]

    def total_labeled(self) -> int:
        return sum(2**self.params.n * factorial(self.params.n) // ci.aut for ci in self.classes)

    def report_lines(self) -> list[str]:
        lines = []
        for rep in self.reports:
            prefix = f"track={rep.track} " if len(self.tracks) > 1 else ""
            lines.extend(prefix + line for line in rep.lines())
        if self.fingerprint is not None:
            lines.append(self.fingerprint.line())
        return lines

    def manifest_lines(self) -> list[str]:
        p = self.params
        head = f"# OA({p.N},{p.n},2,{p.t}) {{{p.n};{p.c}}}-codes classes={len(self.classes)} labeled={self.total_labeled()}"
        return [head] + [ci.manifest_line() for ci in self.classes]


# ------------------------------------------------------------------ fingerprint


def loc_keys(code: Code, r: int, member: Callable[[Code], bool] = lambda c: True) -> set[bytes]:
    """Plain keys of the weight <= r parts of all translates v + C, v not in C."""
    S = code.wordset
    out = set()
    for v in range(2**code.n):
        if v in S:
            continue
        local = Code(code.n, tuple(sorted(x ^ v for x in code.words if bin(x ^ v).count("1") <= r)))
        if member(local):
            out.add(canonical.canonical_key(local, canonical.PERM))
    return out


def _continuable_keys(track: Track, r: int) -> set[bytes]:
    """Plain keys of the level-r classes of ``track`` with a descendant at the last stage."""
    stages = track.stages
    alive = set(range(len(stages[-1].reps)))
    target = None
    for k in range(len(stages) - 1, -1, -1):
        st = stages[k]
        if st.step.full_level == r:
            target = k
            break
        alive = {st.parents[i] for i in alive}
    if target is None:
        raise ValidationError(f"no stage at level {r}")
    return {canonical.canonical_key(stages[target].reps[i].words, canonical.PERM) for i in alive}


def fingerprint_validate(tracks: Sequence[Track], finals: dict[str, list[Code]], r: int) -> FingerprintVerdict:
    """Compare the union of Loc_r over the final codes with the continuable r-level classes, per track."""
    ok = True
    per: dict[str, tuple[int, int]] = {}
    loc_total, cls_total = 0, 0
    for track in tracks:
        loc: set[bytes] = set()
        for code in finals.get(track.name, []):
            loc |= loc_keys(code, r, track.member)
        cls = _continuable_keys(track, r)
        per[track.name] = (len(loc), len(cls))
        loc_total += len(loc)
        cls_total += len(cls)
        ok = ok and loc == cls
    return FingerprintVerdict(r, ok, loc_total, cls_total, per)


# ------------------------------------------------------------------ driver


def classify(params: CRParams, strategy: Strategy | None = None,
             progress: Callable[[LevelReport], None] | None = None,
             stop_after: str | None = None) -> Classification:
    """Classify all {n; c}-codes up to full equivalence.

    With ``stop_after`` (a step label such as "(2,3)") the run ends after
    that step; the result then has stages and reports but no classes.
    """
    strategy = (strategy or Strategy()).resolve(params)
    n = params.n
    steps = list(enumerate(plan(n, strategy.split_levels), start=1))
    if stop_after is not None:
        labels = [st.label for _, st in steps]
        if stop_after not in labels:
            raise StrategyError(f"no step {stop_after!r} in this run; steps are {', '.join(labels)}")
        steps = steps[: labels.index(stop_after) + 1]
    ckpt = Checkpoint(strategy.checkpoint_dir, params, strategy)
    root = Track("all", [_seed_stage(params)])
    tracks = [root]
    routes = [k for k, (_, st) in enumerate(steps) if st.full_level == 2]
    if strategy.square_split and routes:
        route = max(routes)
        _run_steps(root, steps[: route + 1], params, strategy, ckpt, progress)
        last = root.stages[-1]
        sq = Track("square", [], member=_square_at_two)
        sf = Track("squarefree", [], member=_not_square, prune=lambda lc: is_square(lc.words))
        for track, want in ((sq, True), (sf, False)):
            idx = [i for i, lc in enumerate(last.reps) if is_square(lc.words) == want]
            report = LevelReport(last.step.label, "route", track.name, classes=len(idx))
            track.stages = root.stages[:-1] + [Stage(last.step, [last.reps[i] for i in idx], [last.parents[i] for i in idx],
                                                     [last.sym[i] for i in idx], report)]
            _run_steps(track, steps[route + 1:], params, strategy, ckpt, progress)
        tracks = [sq, sf]
    else:
        _run_steps(root, steps, params, strategy, ckpt, progress)

    reports = [st.report for st in root.stages[1:]]
    if len(tracks) > 1:
        for track in tracks:
            reports += [st.report for st in track.stages[len(root.stages):]]

    finals: dict[str, list[Code]] = {}
    merged: dict[bytes, Code] = {}
    if len(steps) < len(plan(n, strategy.split_levels)):
        return Classification(params, strategy, [], reports, tracks)
    for track in tracks:
        for lc in track.stages[-1].reps:
            try:
                code = finalize(lc)
            except LocalCodeError as exc:
                raise ValidationError(str(exc)) from exc
            key = canonical.canonical_key(code, canonical.FULL)
            if key not in merged:
                merged[key] = code
                finals.setdefault(track.name, []).append(code)

    classes = []
    for k, key in enumerate(sorted(merged)):
        code = merged[key]
        classes.append(ClassInfo(
            id=k, code=code, key=key,
            sym=sym_order(code, canonical.PERM),
            aut=sym_order(code, canonical.FULL),
            square=is_square(code),
            punctured_perfect=_punctured_perfect(code) if params.c == 2 else None,
        ))
    result = Classification(params, strategy, classes, reports, tracks)
    if strategy.fingerprint_depth:
        result.fingerprint = fingerprint_validate(tracks, finals, strategy.fingerprint_depth)
    return result


def _punctured_perfect(code: Code) -> bool:
    from .derived import min_dist_stats

    return min_dist_stats(code).bipartite


def classify_square_routed(params: CRParams, strategy: Strategy | None = None) -> Classification:
    if params.c != 2:
        raise StrategyError("square routing needs c = 2")
    return classify(params, replace(strategy or Strategy(), square_split=True))
