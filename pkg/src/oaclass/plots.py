"""Figures and TSV tables for the ``stats`` subcommand."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import canonical  # noqa: E402
from .core import Code, intersection_array, strength  # noqa: E402
from .derived import min_dist_stats  # noqa: E402
from .localcode import is_square  # noqa: E402


@dataclass
class CodeStats:
    id: int
    n: int
    size: int
    strength: int
    array: str
    sym: int
    aut: int
    square: bool
    min_distance: int
    bipartite: bool
    components: tuple[int, ...]
    girth: str
    odd_girth: str
    antipodal: bool
    weights: tuple[int, ...]


def _fmt(x: float) -> str:
    return "inf" if x == float("inf") else str(int(x))


def code_stats(code: Code, ident: int) -> CodeStats:
    md = min_dist_stats(code)
    return CodeStats(
        id=ident, n=code.n, size=len(code), strength=strength(code),
        array=str(intersection_array(code)),
        sym=canonical.symmetry_group(code, canonical.PERM).order,
        aut=canonical.symmetry_group(code, canonical.FULL).order,
        square=is_square(code), min_distance=md.distance, bipartite=md.bipartite,
        components=tuple(md.sizes),
        girth=",".join(_fmt(c.girth) for c in md.components),
        odd_girth=",".join(_fmt(c.odd_girth) for c in md.components),
        antipodal=md.antipodal,
        weights=tuple(code.weight_distribution()),
    )


COLUMNS = ["id", "n", "size", "strength", "array", "sym", "aut", "square", "min_distance",
           "bipartite", "components", "girth", "odd_girth", "antipodal", "weights"]


def write_tsv(path: Path, rows: Sequence[CodeStats]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([
                r.id, r.n, r.size, r.strength, r.array, r.sym, r.aut, int(r.square), r.min_distance,
                int(r.bipartite), ",".join(map(str, r.components)), r.girth, r.odd_girth,
                int(r.antipodal), ",".join(map(str, r.weights)),
            ])


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    # fixed metadata keeps the files byte-identical across runs
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def plot_aut(path: Path, rows: Sequence[CodeStats]) -> None:
    counts = Counter(r.aut for r in rows)
    orders = sorted(counts)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(range(len(orders)), [counts[o] for o in orders], color="#4a7ab5")
    ax.set_xticks(range(len(orders)), [str(o) for o in orders], rotation=45, ha="right", fontsize=7)
    ax.set_xlabel("|Aut| (full equivalence)")
    ax.set_ylabel("classes")
    _save(fig, path)


def plot_weights(path: Path, rows: Sequence[CodeStats]) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for r in rows:
        ax.plot(range(len(r.weights)), r.weights, marker="o", ms=3, lw=1, label=f"class {r.id}")
    ax.set_xlabel("weight")
    ax.set_ylabel("codewords")
    if len(rows) <= 10:
        ax.legend(fontsize=7)
    _save(fig, path)


def plot_components(path: Path, rows: Sequence[CodeStats]) -> None:
    pattern = Counter(":".join(map(str, r.components)) for r in rows)
    keys = sorted(pattern)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.barh(range(len(keys)), [pattern[k] for k in keys], color="#b5674a")
    ax.set_yticks(range(len(keys)), keys, fontsize=7)
    ax.set_xlabel("classes")
    ax.set_ylabel("min-distance component sizes")
    _save(fig, path)


def plot_levels(path: Path, levels: Sequence[tuple[str, int]]) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(range(len(levels)), [max(k, 1) for _, k in levels], marker="s")
    ax.set_yscale("log")
    ax.set_xticks(range(len(levels)), [lab for lab, _ in levels], rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("classes")
    ax.set_xlabel("level")
    _save(fig, path)


def levels_from_report(lines: Sequence[str]) -> list[tuple[str, int]]:
    """Classes per level label, summed over parents and tracks, in order of appearance."""
    order: list[str] = []
    total: Counter[str] = Counter()
    for line in lines:
        fields = dict(tok.split("=", 1) for tok in line.split() if "=" in tok)
        if "level" not in fields or "classes" not in fields:
            continue
        lab = fields["level"]
        if lab not in total:
            order.append(lab)
        total[lab] += int(fields["classes"])
    return [(lab, total[lab]) for lab in order]
