"""Command-line interface: ``oaclass <subcommand> ...``.

Exit status: 0 success, 1 verification or validation failure, 2 usage
error, 3 input/output error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from . import canonical
from .core import (
    Code,
    CRParams,
    IntersectionArray,
    friedman_bound,
    intersection_array,
    intersection_array_for,
    params_from_c,
    puncture,
    strength,
)
from .derived import (
    DerivationError,
    almost_oa_check,
    default_generators,
    derive_gdd,
    even_odd_crc,
    format_gdd,
    gdd_census,
    min_dist_stats,
    parse_generators,
    propelinear_generate,
    shorten_classify,
)
from .formats import FormatError, Record, read_archive, read_code, write_archive, write_code
from .localcode import LocalCode, LocalCodeError, build_continuation, check_local, enumerate_continuations
from .pipeline import (
    Strategy,
    StrategyError,
    ValidationError,
    classify,
    count_labeled,
    reject_isomorphs,
    sym_order,
    validate_level,
)

OK, FAIL, USAGE, IOERR = 0, 1, 2, 3

log = logging.getLogger("oaclass")


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ helpers


def _params(args) -> CRParams:
    if args.n is None:
        raise UsageError("--n is required")
    if (args.t is None) == (args.c is None):
        raise UsageError("give exactly one of --t and --c")
    try:
        if args.t is not None:
            return intersection_array_for(args.n, args.t)
        return params_from_c(args.n, args.c)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _levels(text: str | None) -> frozenset[int] | None:
    if text is None:
        return None
    if text.strip().lower() in ("", "none"):
        return frozenset()
    out = set()
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.update(range(int(lo), int(hi) + 1))
        else:
            out.add(int(part))
    return frozenset(out)


def _write_lines(path: Path, lines: Sequence[str]) -> None:
    path.write_text("".join(line + "\n" for line in lines))


def _local_from_record(rec: Record) -> LocalCode:
    meta = rec.meta
    try:
        c = int(meta["c"])
        params = params_from_c(rec.code.n, c)
        if meta.get("kind", "plain") == "split":
            return LocalCode(params, int(meta["r0"]), int(meta["r1"]), rec.code, True)
        return LocalCode(params, int(meta["r"]), int(meta["r"]), rec.code, False)
    except (KeyError, ValueError) as exc:
        raise FormatError(f"record {rec.id}: local-code header needs kind, r or r0/r1, and c ({exc})") from exc


# ------------------------------------------------------------------ subcommands


def cmd_classify(args) -> int:
    params = _params(args)
    ckpt = args.checkpoint_dir or os.environ.get("CRC_CHECKPOINT_DIR") or None
    strategy = Strategy(
        split_levels=_levels(args.split_levels),
        square_split=args.square_split,
        jobs=args.jobs,
        checkpoint_dir=Path(ckpt) if ckpt else None,
        symmetry_pruning=not args.no_symmetry_pruning,
        fingerprint_depth=args.fingerprint_depth,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(rep):
        log.info("level %s (%s): found %d, classes %d, %.2fs", rep.label, rep.track, rep.found, rep.classes, rep.seconds)

    try:
        result = classify(params, strategy, progress=progress, stop_after=args.stop_after)
    except StrategyError as exc:
        raise UsageError(str(exc)) from exc
    _write_lines(out / "report.txt", result.report_lines())
    if args.stop_after is not None:
        records = []
        for track in result.tracks:
            for k, lc in enumerate(track.stages[-1].reps):
                records.append(Record(lc.words, len(records), {**lc.meta(), "track": track.name}))
        write_archive(out / "local.arc", records)
        print(f"stopped after {args.stop_after}: {len(records)} local classes")
        return OK
    write_archive(out / "classes.arc", [Record(ci.code, ci.id) for ci in result.classes])
    _write_lines(out / "manifest.txt", result.manifest_lines())
    print(f"{params}: {len(result.classes)} classes, {result.total_labeled()} codes in total")
    if result.fingerprint is not None:
        print(result.fingerprint.line())
        if not result.fingerprint.ok:
            return FAIL
    return OK


def cmd_continue(args) -> int:
    records = read_archive(args.archive)
    out_records: list[Record] = []
    lines = []
    ok = True
    for idx, rec in enumerate(records):
        parent = _local_from_record(rec)
        bad = check_local(parent)
        if bad is not None:
            print(f"record {rec.id}: not a valid local code: {bad}", file=sys.stderr)
            return FAIL
        children: list[tuple[LocalCode, int]] = []
        cont = build_continuation(parent)

        def visit(sol, w, cont=cont):
            children.append((cont.child(sol), w))

        total = enumerate_continuations(parent, visit, symmetric=not args.no_symmetry_pruning)
        weights: dict[bytes, list] = {}
        for child, w in children:
            key = child.key()
            weights.setdefault(key, [child, 0])[1] += w
        psym = sym_order(parent)
        good, _ = validate_level(psym, total, [(w, sym_order(ch)) for ch, w in weights.values()])
        ok = ok and good
        label = children[0][0].label if children else "-"
        lines.append(f"level={label} parent={rec.id if rec.id is not None else idx} found={total} "
                     f"classes={len(weights)} symcheck={'ok' if good else 'fail'}")
        for key in sorted(weights):
            ch = weights[key][0]
            out_records.append(Record(ch.words, len(out_records), {**ch.meta(), "parent": str(idx)}))
    write_archive(args.out, out_records)
    for line in lines:
        print(line)
    return OK if ok else FAIL


def cmd_verify(args) -> int:
    code = read_code(args.code)
    s = strength(code, verify=True)
    print(f"n={code.n} size={len(code)} strength={s}")
    status = OK
    if s >= 1:
        bound, integral = friedman_bound(code.n, s) if s < code.n else (len(code), True)
        on = integral and len(code) == bound
        print(f"friedman bound for t={s}: {bound}{'' if integral else ' (not integral)'} attained={'yes' if on else 'no'}")
        if args.expect_bound and not on:
            status = FAIL
    elif args.expect_bound:
        status = FAIL
    ia = intersection_array(code) if code.n <= 24 else None
    if ia is None:
        print("intersection array: skipped (n > 24)")
    elif isinstance(ia, IntersectionArray):
        print(f"completely regular: {ia}")
    else:
        print(f"not completely regular: vertex {ia.vertex:x} at distance {ia.distance}: {ia.reason}")
    if args.expect_array is not None and str(ia) != args.expect_array.replace(" ", ""):
        status = FAIL
    if args.almost_oa is not None:
        if not 1 <= args.almost_oa <= code.n:
            raise UsageError(f"--almost-oa needs 1 <= T <= n, got {args.almost_oa}")
        # T names the almost level: strength T-1 with T-fixings off by at most one
        res = almost_oa_check(code, args.almost_oa - 1)
        hist = " ".join(f"{k}:{v}" for k, v in res.histogram.items())
        print(f"almost-OA level {args.almost_oa}: {'true' if res.ok else 'false'} histogram {hist}")
        if not res.ok:
            status = FAIL
    return status


def cmd_canon(args) -> int:
    mode = args.mode
    if args.archive:
        records = read_archive(args.archive)
        classes = reject_isomorphs([r.code for r in records], mode)
        print(f"{len(records)} codes, {len(classes)} classes under {mode}")
        for code, mult, key in classes:
            print(f"mult={mult} size={len(code)} key={key.hex()}")
        return OK
    code = read_code(args.code)
    key = canonical.canonical_key(code, mode)
    grp = canonical.symmetry_group(code, mode)
    print(f"key={key.hex()}")
    print(f"order={grp.order}")
    for g in grp.cycles():
        print(f"gen {g}")
    if args.out:
        write_code(args.out, canonical.key_code(key))
    return OK


def cmd_derive(args) -> int:
    what = args.what
    if what == "shorten":
        reps = [r.code for r in read_archive(args.archive)]
        classes = shorten_classify(reps)
        if args.out:
            write_archive(args.out, [Record(c, k, {"mult": str(m)}) for k, (c, m) in enumerate(classes)])
        print(f"{len(classes)} classes of length-{reps[0].n - 1 if reps else '?'} codes")
        return OK
    if what == "puncture":
        code = read_code(args.code)
        out, merged = puncture(code, args.coord)
        if args.out:
            write_code(args.out, out)
        print(f"punctured at {args.coord}: size {len(out)}{' (words merged)' if merged else ''}")
        return OK
    if what == "evenodd":
        code = read_code(args.code)
        sibling = read_code(args.sibling) if args.sibling else None
        pair = even_odd_crc(code, sibling)
        print(f"first: {pair.first_array}")
        print(f"second: {pair.second_array}")
        print(f"equivalent: {'yes' if pair.equivalent else 'no'}")
        if args.out:
            write_archive(args.out, [Record(pair.first, 0), Record(pair.second, 1)])
        return OK
    if what == "gdd":
        code = read_code(args.code)
        if args.census:
            census = gdd_census(code)
            print(f"{len(census)} nonisomorphic derived designs")
            for design, mult in census:
                print(f"mult={mult} {format_gdd(design)}")
            return OK
        if not 0 <= args.codeword_index < len(code):
            raise UsageError(f"codeword index must lie in 0..{len(code) - 1}")
        design = derive_gdd(code, code.words[args.codeword_index])
        sizes = {len(g) for g in design.groups}
        print(f"groups={len(design.groups)} size={','.join(map(str, sorted(sizes)))} blocks={len(design.blocks)}")
        print(format_gdd(design))
        return OK
    if what == "mindist":
        code = read_code(args.code)
        st = min_dist_stats(code)
        print(f"distance={st.distance} components={len(st.components)} bipartite={'yes' if st.bipartite else 'no'} "
              f"antipodal={'yes' if st.antipodal else 'no'}")
        for c in st.components:
            print(f"size={c.size} even={c.even} odd={c.odd} bipartite={int(c.bipartite)} girth={c.girth} "
                  f"odd_girth={c.odd_girth} antipodal={int(c.antipodal)}")
        return OK
    if what == "propelinear":
        gens = parse_generators(Path(args.gens).read_text()) if args.gens else default_generators()
        res = propelinear_generate(gens, cap=args.cap)
        print(f"orbit={len(res.code)} group={res.group_order} regular={'yes' if res.regular else 'no'}")
        if args.out:
            write_code(args.out, res.code)
        return OK if res.regular else FAIL
    raise UsageError(f"unknown derive mode {what}")


def cmd_validate(args) -> int:
    records = read_archive(args.archive)
    codes = [r.code for r in records]
    if not codes:
        print("empty archive")
        return OK
    n = codes[0].n
    status = OK
    want = None
    if args.c is not None or args.t is not None:
        args.n = n
        p = _params(args)
        want = f"{{{n};{p.c}}}"
    for r in records:
        ia = intersection_array(r.code)
        verdict = isinstance(ia, IntersectionArray) and (want is None or str(ia) == want)
        print(f"id={r.id} size={len(r.code)} array={ia if isinstance(ia, IntersectionArray) else 'not CR'} "
              f"{'ok' if verdict else 'fail'}")
        if not verdict:
            status = FAIL
    classes = reject_isomorphs(codes, canonical.FULL)
    distinct = len(classes) == len(codes)
    print(f"pairwise inequivalent: {'yes' if distinct else 'no'} ({len(classes)} classes)")
    if not distinct:
        status = FAIL
    else:
        print(f"labeled total: {count_labeled(codes)}")
    return status


def cmd_stats(args) -> int:
    from . import plots

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = read_archive(args.archive)
    rows = [plots.code_stats(r.code, r.id if r.id is not None else k) for k, r in enumerate(records)]
    plots.write_tsv(out / "stats.tsv", rows)
    written = ["stats.tsv"]
    if rows:
        plots.plot_aut(out / "aut_orders.png", rows)
        plots.plot_weights(out / "weights.png", rows)
        plots.plot_components(out / "components.png", rows)
        written += ["aut_orders.png", "weights.png", "components.png"]
    if args.report:
        levels = plots.levels_from_report(Path(args.report).read_text().splitlines())
        if levels:
            plots.plot_levels(out / "levels.png", levels)
            written.append("levels.png")
    for name in written:
        print(out / name)
    return OK


# ------------------------------------------------------------------ parser


def _add_params(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--n", type=int, required=required, help="code length")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--t", type=int, help="strength of the orthogonal array")
    g.add_argument("--c", type=int, help="c = 2(t+1) - n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oaclass", description="Classify binary orthogonal arrays on the Friedman bound.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("classify", help="classify all codes for given n and t (or c)")
    _add_params(p)
    p.add_argument("--split-levels", help="levels run in split mode, e.g. '3' or '2-4' or 'none'")
    sq = p.add_mutually_exclusive_group()
    sq.add_argument("--square-split", dest="square_split", action="store_true", default=None,
                    help="route square and square-free codes separately (c = 2 only)")
    sq.add_argument("--no-square-split", dest="square_split", action="store_false")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--checkpoint-dir", help="resume directory (default: $CRC_CHECKPOINT_DIR)")
    p.add_argument("--out", default=".", help="output directory for classes.arc, manifest.txt, report.txt")
    p.add_argument("--no-symmetry-pruning", action="store_true", help="enumerate every labeled continuation")
    p.add_argument("--fingerprint-depth", type=int, help="Loc_r depth; 0 disables the check")
    p.add_argument("--stop-after", help="stop after this step label, e.g. '(2,3)'; writes local.arc")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("continue", help="continue every local code of an archive by one level")
    p.add_argument("--archive", required=True, help="local-code archive")
    p.add_argument("--out", required=True, help="archive of the child classes")
    p.add_argument("--no-symmetry-pruning", action="store_true")
    p.set_defaults(func=cmd_continue)

    p = sub.add_parser("verify", help="strength, bound status and intersection array of a code")
    p.add_argument("code", help="code file")
    p.add_argument("--almost-oa", type=int, metavar="T", help="also test for an almost-OA of level T (strength T-1, T-fixings off by at most one)")
    p.add_argument("--expect-bound", action="store_true", help="fail unless the Friedman bound is attained")
    p.add_argument("--expect-array", metavar="ARRAY", help="fail unless the intersection array equals e.g. '{14;2}'")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("canon", help="canonical key and symmetry group")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("code", nargs="?", help="code file")
    src.add_argument("--archive", help="archive: report the classes instead")
    p.add_argument("--mode", choices=canonical.MODES, default=canonical.FULL)
    p.add_argument("--out", help="write the canonical representative here")
    p.set_defaults(func=cmd_canon)

    p = sub.add_parser("derive", help="derived objects")
    dsub = p.add_subparsers(dest="what", required=True)
    d = dsub.add_parser("shorten", help="classify the shortenings of an archive")
    d.add_argument("--archive", required=True)
    d.add_argument("--out")
    d = dsub.add_parser("puncture", help="delete one coordinate")
    d.add_argument("--code", required=True)
    d.add_argument("--coord", type=int, required=True, help="1-based coordinate")
    d.add_argument("--out")
    d = dsub.add_parser("evenodd", help="even/odd completely regular pair of a shortened array")
    d.add_argument("--code", required=True, help="shortened array (bit 0)")
    d.add_argument("--sibling", help="shortening with bit 1 (default: complement of --code)")
    d.add_argument("--out")
    d = dsub.add_parser("gdd", help="derived group divisible design")
    d.add_argument("--code", required=True)
    d.add_argument("--codeword-index", type=int, default=0)
    d.add_argument("--census", action="store_true", help="all nonisomorphic derived designs")
    d = dsub.add_parser("mindist", help="minimum-distance graph statistics")
    d.add_argument("--code", required=True)
    d = dsub.add_parser("propelinear", help="orbit of the zero word under generators")
    d.add_argument("--gens", help="generator file (default: bundled table)")
    d.add_argument("--cap", type=int, default=1 << 16, help="orbit size limit")
    d.add_argument("--out")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("validate", help="check an archive of final codes")
    p.add_argument("--archive", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--t", type=int, help="expected strength")
    g.add_argument("--c", type=int, help="expected c")
    p.set_defaults(func=cmd_validate, n=None)

    p = sub.add_parser("stats", help="TSV table and PNG figures for an archive")
    p.add_argument("--archive", required=True)
    p.add_argument("--report", help="report.txt of a classify run, for the per-level figure")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"oaclass: {exc}", file=sys.stderr)
        return USAGE
    except FormatError as exc:
        print(f"oaclass: malformed input: {exc}", file=sys.stderr)
        return IOERR
    except OSError as exc:
        print(f"oaclass: {exc}", file=sys.stderr)
        return IOERR
    except (ValidationError, DerivationError, LocalCodeError) as exc:
        print(f"oaclass: verification failed: {exc}", file=sys.stderr)
        return FAIL


if __name__ == "__main__":
    sys.exit(main())
