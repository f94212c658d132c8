"""Objects derived from classified codes.

Shortening to even strength, the even/odd completely regular pairs, the
almost-OA test, the propelinear extended perfect code, minimum-distance graph
statistics and the group divisible designs sitting at each codeword.
"""

from __future__ import annotations

import itertools
from collections import Counter, deque
from dataclasses import dataclass, field
from importlib import resources
from math import comb, inf
from typing import Iterable, Sequence

import numpy as np

from . import canonical
from .core import (
    Code,
    IntersectionArray,
    NotCompletelyRegular,
    even_part,
    intersection_array,
    odd_part,
    popcount,
    shorten,
    strength,
    word_from_str,
)


class DerivationError(ValueError):
    pass


# ------------------------------------------------------------------ shortening


def shorten_all(code: Code) -> list[Code]:
    """Shortenings at every coordinate with bit 0.

    Bit 1 gives the shortening of a translate, which full equivalence absorbs.
    """
    return [shorten(code, i, 0) for i in range(1, code.n + 1)]


def shorten_classify(reps: Iterable[Code]) -> list[tuple[Code, int]]:
    """Classes of the shortened codes under full equivalence, sorted by key.

    Each entry carries how many (parent, coordinate) shortenings fell into it.
    """
    seen: dict[bytes, list] = {}
    for code in reps:
        for child in shorten_all(code):
            key = canonical.canonical_key(child, canonical.FULL)
            if key in seen:
                seen[key][1] += 1
            else:
                seen[key] = [child, 1]
    return [(code, mult) for _, (code, mult) in sorted(seen.items())]


@dataclass
class EvenOddPair:
    first: Code
    second: Code
    first_array: IntersectionArray | NotCompletelyRegular
    second_array: IntersectionArray | NotCompletelyRegular
    equivalent: bool

    @property
    def ok(self) -> bool:
        return isinstance(self.first_array, IntersectionArray) and isinstance(self.second_array, IntersectionArray)


def even_odd_crc(code: Code, sibling: Code | None = None) -> EvenOddPair:
    """even(A) + odd(B) and odd(A) + even(B), with their intersection arrays.

    A is a shortened array and B its sibling, the shortening of the same
    parent at the same coordinate with the other bit.  B defaults to A + 1,
    which is the sibling whenever the parent is closed under complement.
    """
    ones = (1 << code.n) - 1
    if sibling is None:
        sibling = Code(code.n, tuple(x ^ ones for x in code.words))
    if sibling.n != code.n:
        raise DerivationError("sibling has a different length")
    a = Code(code.n, even_part(code).words + odd_part(sibling).words)
    b = Code(code.n, odd_part(code).words + even_part(sibling).words)
    if len(a) + len(b) != len(code) + len(sibling):
        raise DerivationError("the two shortenings overlap")
    eq = canonical.canonical_key(a, canonical.FULL) == canonical.canonical_key(b, canonical.FULL)
    pair = EvenOddPair(a, b, intersection_array(a), intersection_array(b), eq)
    if not pair.ok:
        bad = pair.first_array if not isinstance(pair.first_array, IntersectionArray) else pair.second_array
        raise DerivationError(f"even/odd code is not completely regular: {bad}")
    return pair


def even_odd_from_parent(parent: Code, i: int) -> EvenOddPair:
    """The pair built from the two shortenings of ``parent`` at coordinate ``i``."""
    return even_odd_crc(shorten(parent, i, 0), shorten(parent, i, 1))


# ------------------------------------------------------------------ almost-OA


@dataclass
class AlmostOAResult:
    ok: bool
    strength_ok: bool
    expected: float
    histogram: dict[int, int]

    def __bool__(self) -> bool:
        return self.ok


def subcube_histogram(code: Code, k: int) -> dict[int, int]:
    """Histogram of codeword counts over all subcubes fixing ``k`` coordinates."""
    arr = code.array()
    hist: Counter[int] = Counter()
    for coords in itertools.combinations(range(code.n), k):
        idx = np.zeros(len(arr), dtype=np.int64)
        for j, c in enumerate(coords):
            idx |= ((arr >> c) & 1) << j
        counts = np.bincount(idx, minlength=1 << k)
        for value, mult in zip(*np.unique(counts, return_counts=True)):
            hist[int(value)] += int(mult)
    return dict(sorted(hist.items()))


def almost_oa_check(code: Code, t: int) -> AlmostOAResult:
    """Is the code an OA of strength t whose (t+1)-fixings hold m-1, m or m+1 words?

    Here m = |C| / 2^(t+1).
    """
    if not 0 <= t < code.n:
        raise ValueError(f"need 0 <= t < n, got t={t}")
    hist = subcube_histogram(code, t + 1)
    total = sum(hist.values())
    if total != comb(code.n, t + 1) << (t + 1):
        raise AssertionError("subcube histogram is incomplete")
    m = len(code) / 2 ** (t + 1)
    near = all(abs(v - m) <= 1 for v in hist)
    s_ok = strength(code) >= t
    return AlmostOAResult(near and s_ok and m == int(m), s_ok, m, hist)


# ------------------------------------------------------------------ propelinear


@dataclass(frozen=True)
class PropelinearGenerator:
    """The map x -> v + pi(x); ``perm[i]`` is the 0-based target of coordinate i."""

    translation: int
    perm: tuple[int, ...]

    def __call__(self, x: int) -> int:
        y = 0
        i = 0
        while x:
            if x & 1:
                y |= 1 << self.perm[i]
            x >>= 1
            i += 1
        return self.translation ^ y

    def compose(self, other: "PropelinearGenerator") -> "PropelinearGenerator":
        """self after other."""
        return PropelinearGenerator(self(other.translation), tuple(self.perm[j] for j in other.perm))


def _parse_cycles(text: str, n: int, lineno: int) -> tuple[int, ...]:
    perm = list(range(n))
    if text == "id":
        return tuple(perm)
    if not (text.startswith("(") and text.endswith(")")):
        raise DerivationError(f"line {lineno}: bad permutation {text!r}")
    seen = set()
    for cyc in text[1:-1].split(")("):
        try:
            pts = [int(ch, 16) for ch in cyc]
        except ValueError as exc:
            raise DerivationError(f"line {lineno}: bad cycle ({cyc})") from exc
        if any(p >= n for p in pts) or seen & set(pts) or len(set(pts)) != len(pts):
            raise DerivationError(f"line {lineno}: cycle ({cyc}) is not disjoint or out of range")
        seen |= set(pts)
        for a, b in zip(pts, pts[1:] + pts[:1]):
            perm[a] = b
    return tuple(perm)


def parse_generators(text: str, n: int = 16) -> list[PropelinearGenerator]:
    """Lines ``v=<n binary digits> perm=<hex cycles>|id``; '#' starts a comment.

    Digit k (from the left, 0-based) of v is hex coordinate k.
    """
    gens = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = dict(tok.split("=", 1) for tok in line.split() if "=" in tok)
        if set(fields) != {"v", "perm"}:
            raise DerivationError(f"line {lineno}: expected 'v=... perm=...', got {raw!r}")
        v = fields["v"]
        if len(v) != n or set(v) - {"0", "1"}:
            raise DerivationError(f"line {lineno}: v must be {n} binary digits")
        gens.append(PropelinearGenerator(word_from_str(v), _parse_cycles(fields["perm"], n, lineno)))
    return gens


def default_generators() -> list[PropelinearGenerator]:
    text = resources.files("oaclass").joinpath("data/propelinear_gens.txt").read_text()
    return parse_generators(text)


@dataclass
class PropelinearResult:
    code: Code
    group_order: int

    @property
    def regular(self) -> bool:
        return self.group_order == len(self.code)


def propelinear_generate(gens: Sequence[PropelinearGenerator], n: int = 16, cap: int = 1 << 16) -> PropelinearResult:
    """Orbit of the zero word, and the order of the generated group."""
    identity = PropelinearGenerator(0, tuple(range(n)))
    if not gens:
        return PropelinearResult(Code(n, (0,)), 1)
    orbit = {0}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = g(x)
            if y not in orbit:
                orbit.add(y)
                if len(orbit) > cap:
                    raise DerivationError(f"orbit exceeds {cap} words")
                queue.append(y)
    group = {identity}
    queue = deque([identity])
    while queue:
        h = queue.popleft()
        for g in gens:
            k = g.compose(h)
            if k not in group:
                group.add(k)
                if len(group) > cap:
                    raise DerivationError(f"group exceeds {cap} elements")
                queue.append(k)
    return PropelinearResult(Code(n, tuple(sorted(orbit))), len(group))


# ------------------------------------------------------------------ min-distance graph


@dataclass
class ComponentStats:
    size: int
    even: int
    odd: int
    bipartite: bool
    girth: float
    odd_girth: float
    antipodal: bool


@dataclass
class MinDistGraphStats:
    distance: int
    components: list[ComponentStats] = field(default_factory=list)

    @property
    def bipartite(self) -> bool:
        return all(c.bipartite for c in self.components)

    @property
    def sizes(self) -> list[int]:
        return [c.size for c in self.components]

    @property
    def antipodal(self) -> bool:
        return all(c.antipodal for c in self.components)


def min_distance_graph(code: Code) -> tuple[int, list[list[int]]]:
    arr = code.array()
    if len(arr) < 2:
        raise ValueError("need at least two codewords")
    dist = np.bitwise_count(arr[:, None] ^ arr[None, :]).astype(np.int64)
    np.fill_diagonal(dist, code.n + 1)
    d = int(dist.min())
    adj = [list(map(int, np.flatnonzero(row == d))) for row in dist]
    return d, adj


def _short_cycles(adj: list[list[int]], comp: list[int], bipartite: bool) -> tuple[float, float]:
    """Girth and odd girth of one component, by BFS from every vertex.

    A cycle closed while scanning depth ``du`` is at least 2*du+1 long, so a
    search stops once that bound cannot beat the best lengths found.
    """
    girth, odd = inf, inf
    for root in comp:
        depth = {root: 0}
        parent = {root: -1}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            du = depth[u]
            bound = girth if bipartite else max(girth, odd)
            if 2 * du + 1 >= bound:
                break
            for w in adj[u]:
                if w not in depth:
                    depth[w] = du + 1
                    parent[w] = u
                    queue.append(w)
                elif parent[u] != w:
                    length = du + depth[w] + 1
                    girth = min(girth, length)
                    if depth[w] == du:
                        odd = min(odd, length)
    return girth, inf if bipartite else odd


def min_dist_stats(code: Code) -> MinDistGraphStats:
    d, adj = min_distance_graph(code)
    words = code.words
    index = {x: k for k, x in enumerate(words)}
    ones = (1 << code.n) - 1
    seen = [False] * len(words)
    stats = MinDistGraphStats(d)
    for start in range(len(words)):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        colour = {start: 0}
        bip = True
        for u in comp:
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    colour[w] = colour[u] ^ 1
                    comp.append(w)
                elif colour[w] == colour[u]:
                    bip = False
        members = set(comp)
        girth, odd = _short_cycles(adj, comp, bip)
        ev = sum(1 for k in comp if popcount(words[k]) % 2 == 0)
        anti = all(index.get(words[k] ^ ones, -1) in members for k in comp)
        stats.components.append(ComponentStats(len(comp), ev, len(comp) - ev, bip, girth, odd, anti))
    stats.components.sort(key=lambda c: (-c.size, c.even))
    return stats


# ------------------------------------------------------------------ GDDs


def derive_gdd(code: Code, codeword: int) -> canonical.GDD:
    """The design of weight-2 (groups) and weight-3 (blocks) supports in codeword + C."""
    if codeword not in code:
        raise DerivationError(f"{codeword:#x} is not a codeword")
    n = code.n
    shifted = [x ^ codeword for x in code.words]
    pairs = [frozenset(_support(x)) for x in shifted if popcount(x) == 2]
    triples = [frozenset(_support(x)) for x in shifted if popcount(x) == 3]
    design = canonical.GDD(n, tuple(sorted(pairs, key=sorted)), tuple(sorted(triples, key=sorted)))
    check_gdd(design, k=3, lam=2)
    return design


def _support(x: int) -> list[int]:
    return [i + 1 for i in range(x.bit_length()) if x >> i & 1]


def check_gdd(design: canonical.GDD, k: int, lam: int) -> None:
    """Raise DerivationError unless ``design`` is a (k, lam)-GDD."""
    v = design.v
    covered = [p for g in design.groups for p in g]
    if sorted(covered) != list(range(1, v + 1)):
        raise DerivationError("groups do not partition the points")
    if len({len(g) for g in design.groups}) > 1:
        raise DerivationError("groups have different sizes")
    group_of = {p: i for i, g in enumerate(design.groups) for p in g}
    together: Counter[tuple[int, int]] = Counter()
    for blk in design.blocks:
        if len(blk) != k:
            raise DerivationError(f"block {sorted(blk)} does not have size {k}")
        for a, b in itertools.combinations(sorted(blk), 2):
            together[a, b] += 1
    for a, b in itertools.combinations(range(1, v + 1), 2):
        want = 0 if group_of[a] == group_of[b] else lam
        if together[a, b] != want:
            raise DerivationError(f"points {a}, {b} share {together[a, b]} blocks, expected {want}")


def format_gdd(design: canonical.GDD) -> str:
    def sets(ss):
        return "{" + ", ".join("{" + ",".join(map(str, sorted(s))) + "}" for s in ss) + "}"

    return f"groups: {sets(design.groups)} blocks: {sets(design.blocks)}"


def gdd_census(code: Code) -> list[tuple[canonical.GDD, int]]:
    """Nonisomorphic derived designs with the number of codewords giving each."""
    seen: dict[bytes, list] = {}
    for x in code.words:
        design = derive_gdd(code, x)
        key = canonical.canon_gdd(design)
        if key in seen:
            seen[key][1] += 1
        else:
            seen[key] = [design, 1]
    return [(d, m) for _, (d, m) in sorted(seen.items())]
