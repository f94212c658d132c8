"""Local codes and their continuation by exact covering.

An r-local code is the weight-at-most-r part of a (translated) {n; c}-code
avoiding the zero word.  A split (r0, r1)-local code caps the weight at r0 for
words starting with 0 and at r1 for words starting with 1, and always
contains the first unit vector; its equivalence fixes coordinate 1.

A continuation adds the next layer of words.  The layer is found as an exact
cover problem: every frontier word (one weight below the layer, not in the
code) needs exactly ``c - (#code neighbours)`` new neighbours, and every other
word may end up with at most ``c`` code neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from . import canonical
from .core import Code, CRParams, IntersectionArray, intersection_array, popcount, unit, words_of_weight
from .exactcover import CoverProblem, Solver, check_solution


class LocalCodeError(ValueError):
    pass


@dataclass(frozen=True)
class LocalCode:
    """A local code; ``split`` selects the (r0, r1) variant."""

    params: CRParams
    r0: int
    r1: int
    words: Code
    split: bool = False

    @classmethod
    def plain(cls, params: CRParams, r: int, words: Iterable[int]) -> "LocalCode":
        return cls(params, r, r, Code(params.n, tuple(words)), False)

    @classmethod
    def split_code(cls, params: CRParams, r0: int, r1: int, words: Iterable[int]) -> "LocalCode":
        if r1 not in (r0, r0 + 1):
            raise LocalCodeError(f"split local codes need r1 in {{r0, r0+1}}, got ({r0},{r1})")
        return cls(params, r0, r1, Code(params.n, tuple(words)), True)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def c(self) -> int:
        return self.params.c

    @property
    def r(self) -> int:
        return self.r0

    @property
    def label(self) -> str:
        return f"({self.r0},{self.r1})" if self.split else str(self.r0)

    @property
    def mode(self) -> str:
        return canonical.PERM0 if self.split else canonical.PERM

    def cap(self, x: int) -> int:
        return self.r1 if self.split and x & 1 else self.r0

    def meta(self) -> dict[str, str]:
        if self.split:
            return {"kind": "split", "r0": str(self.r0), "r1": str(self.r1), "c": str(self.c)}
        return {"kind": "plain", "r": str(self.r0), "c": str(self.c)}

    def is_complete(self) -> bool:
        return not self.split and self.r0 == self.n

    def key(self) -> bytes:
        return canonical.canonical_key(self.words, self.mode)


@dataclass(frozen=True)
class Violation:
    condition: str
    vertex: int
    detail: str = ""

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        return f"condition ({self.condition}) fails at vertex {self.vertex:#x}: {self.detail}"


def neighbor_counts(words: Iterable[int], n: int) -> dict[int, int]:
    """Number of neighbours in ``words`` for every vertex that has one."""
    cnt: dict[int, int] = {}
    for x in words:
        for i in range(n):
            y = x ^ (1 << i)
            cnt[y] = cnt.get(y, 0) + 1
    return cnt


def check_local(lc: LocalCode) -> Violation | None:
    """None when every locality condition holds, else the first violation."""
    n, c = lc.n, lc.c
    P = lc.words.wordset
    if lc.split and lc.r1 not in (lc.r0, lc.r0 + 1):
        return Violation("0", 0, f"r1={lc.r1} not in {{r0, r0+1}}")
    for x in lc.words:
        if popcount(x) > lc.cap(x):
            return Violation("I", x, f"weight {popcount(x)} above {lc.cap(x)}")
    if 0 in P:
        return Violation("II", 0, "zero word in code")
    if lc.split and 1 not in P:
        return Violation("II", 1, "first unit vector missing")
    cnt = neighbor_counts(lc.words, n)
    top = max(lc.r0, lc.r1)
    for w in range(top):
        for v in words_of_weight(n, w):
            if w >= lc.cap(v):
                continue
            k = cnt.get(v, 0)
            if v in P and k:
                return Violation("III", v, f"codeword with {k} code neighbours")
            if v not in P and k != c:
                return Violation("III", v, f"{k} code neighbours instead of {c}")
    for v, k in sorted(cnt.items()):
        if k > c:
            return Violation("IV", v, f"{k} code neighbours exceed {c}")
    return None


def seed(params: CRParams, split: bool = False) -> LocalCode:
    """The unique 1-local code up to equivalence: c weight-1 words."""
    n, c = params.n, params.c
    if c > n:
        raise LocalCodeError(f"c={c} exceeds n={n}")
    words = [unit(1)] + [unit(i) for i in range(n - c + 2, n + 1)]
    if split:
        return LocalCode.split_code(params, 1, 1, words)
    return LocalCode.plain(params, 1, words)


def next_locality(lc: LocalCode) -> tuple[int, int]:
    if not lc.split:
        return lc.r0 + 1, lc.r0 + 1
    if lc.r1 == lc.r0:
        return lc.r0, lc.r0 + 1
    return lc.r1, lc.r1


@dataclass
class Continuation:
    """The exact cover instance that extends ``parent`` by one layer."""

    parent: LocalCode
    r0: int
    r1: int
    problem: CoverProblem
    frontier: dict[int, int] = field(default_factory=dict)
    candidates: list[int] = field(default_factory=list)

    def child(self, new_words: Iterable[int]) -> LocalCode:
        words = self.parent.words.words + tuple(new_words)
        return LocalCode(self.parent.params, self.r0, self.r1,
                         Code(self.parent.n, words), self.parent.split)


def _layer(n: int, weight: int, first: int | None) -> list[int]:
    out = list(words_of_weight(n, weight))
    if first is not None:
        out = [x for x in out if x & 1 == first]
    return out


def build_continuation(lc: LocalCode) -> Continuation:
    """Exact cover instance for the next layer of ``lc``.

    Plain r goes to r+1; split (r, r) adds first-symbol-1 words of weight
    r+1; split (r, r+1) adds the first-symbol-0 words of weight r+1.
    """
    n, c = lc.n, lc.c
    r0, r1 = next_locality(lc)
    if not lc.split:
        weight, first = r0, None
    elif r1 > r0:
        weight, first = r1, 1
    else:
        weight, first = r0, 0
    if weight > n:
        # nothing above the top layer: the only continuation is the code itself
        if lc.split:
            raise LocalCodeError(f"{lc.label}-local code in Q_{n} cannot be continued")
        return Continuation(lc, n, n, CoverProblem([], [], []))
    P = lc.words.wordset
    cnt = neighbor_counts(P, n)
    frontier: dict[int, int] = {}
    for x in _layer(n, weight - 1, first):
        if x in P:
            continue
        delta = c - cnt.get(x, 0)
        if delta < 0:
            raise LocalCodeError(f"malformed local code: {x:#x} has {cnt[x]} code neighbours")
        frontier[x] = delta
    candidates = []
    for y in _layer(n, weight, first):
        if cnt.get(y, 0):
            continue
        # a neighbour already saturated by P would be pushed over c
        if any(cnt.get(y ^ (1 << i), 0) >= c for i in range(n)):
            continue
        candidates.append(y)
    demand = {x: d for x, d in frontier.items() if d > 0}
    touching: dict[int, int] = {}
    for y in candidates:
        for i in range(n):
            w = y ^ (1 << i)
            if w not in demand:
                touching[w] = touching.get(w, 0) + 1
    capacity = {w: c - cnt.get(w, 0) for w, k in touching.items() if k > c - cnt.get(w, 0)}
    options = []
    for y in candidates:
        items = frozenset(w for w in (y ^ (1 << i) for i in range(n)) if w in demand or w in capacity)
        # every lower neighbour of y is a frontier word, so y meets demand
        # unless one of them is saturated, which rejected y above
        if not any(w in demand for w in items):
            raise LocalCodeError(f"candidate {y:#x} touches no frontier word")
        options.append((y, items))
    problem = CoverProblem(
        demand_items=sorted(demand.items()),
        capacity_items=sorted(capacity.items()),
        options=options,
    )
    return Continuation(lc, r0, r1, problem, frontier, candidates)


def symmetry_oracle(lc: LocalCode):
    """Orbit oracle for the exact cover search, acting by ``Sym(lc)``.

    At each node the stabilizer of the parent, the words chosen so far and
    the branching frontier word is computed; the candidate completions of that
    word are split into its orbits.
    """
    n = lc.n
    base = list(lc.words.words)

    def oracle(chosen: tuple, item, subsets: list[tuple]):
        gens, order = canonical.stabilizer(n, [base, list(chosen), [item]], fix_first=lc.split)
        if order == 1:
            return None
        return subset_orbits(subsets, gens)

    return oracle


def _perm_word(x: int, img: Sequence[int]) -> int:
    y = 0
    i = 0
    while x:
        if x & 1:
            y |= 1 << img[i]
        x >>= 1
        i += 1
    return y


def subset_orbits(subsets: list[tuple], gens: Sequence[Sequence[int]]) -> list[tuple[tuple, int]]:
    """One representative (first in list order) per orbit, with orbit size."""
    index = {frozenset(s): k for k, s in enumerate(subsets)}
    seen = [False] * len(subsets)
    out = []
    for k, s in enumerate(subsets):
        if seen[k]:
            continue
        seen[k] = True
        orbit = [frozenset(s)]
        for cur in orbit:
            for g in gens:
                img = frozenset(_perm_word(x, g) for x in cur)
                j = index.get(img)
                if j is None:
                    raise LocalCodeError("candidate set is not invariant under the stabilizer")
                if not seen[j]:
                    seen[j] = True
                    orbit.append(img)
        out.append((s, len(orbit)))
    return out


def enumerate_continuations(
    lc: LocalCode,
    visitor: Callable[[tuple, int], object],
    symmetric: bool = True,
) -> int:
    """Feed each continuation layer (as a word tuple) and its weight to ``visitor``.

    With ``symmetric`` the search visits one solution per orbit of the
    parent's symmetry group, weighted by the orbit size; otherwise every
    solution is visited with weight 1.  Returns the total weight, which is
    the number of continuations either way.
    """
    cont = build_continuation(lc)
    total = 0

    def emit(sol: tuple, w: int) -> None:
        nonlocal total
        total += w
        visitor(sol, w)

    Solver(cont.problem).run(emit, symmetry_oracle(lc) if symmetric else None)
    return total


def continuations(lc: LocalCode, verify: bool = True) -> list[LocalCode]:
    """Every continuation of ``lc`` by one layer, each re-checked."""
    cont = build_continuation(lc)
    out: list[LocalCode] = []

    def visit(sol: tuple, _w: int) -> None:
        if verify and not check_solution(cont.problem, sol):
            raise LocalCodeError("solver returned an invalid cover")
        child = cont.child(sol)
        if verify:
            bad = check_local(child)
            if bad is not None:
                raise LocalCodeError(f"continuation fails verification: {bad}")
        out.append(child)

    Solver(cont.problem).run(visit)
    return out


def has_continuation(lc: LocalCode) -> bool:
    from .exactcover import solve_exists

    return solve_exists(build_continuation(lc).problem)


def is_square(code: Code | LocalCode) -> bool:
    """Whether the code holds x, x+a, x+b, x+a+b with a, b disjoint pairs.

    Such a quadruple is equivalent to {0011, 0101, 1010, 1100}.
    """
    if isinstance(code, LocalCode):
        code = code.words
    if len(code) < 4:
        return False
    S = code.wordset
    n = code.n
    pairs = [(1 << i) | (1 << j) for i in range(n) for j in range(i + 1, n)]
    for x in code.words:
        near = [a for a in pairs if x ^ a in S]
        for k, a in enumerate(near):
            for b in near[k + 1:]:
                if not a & b and x ^ a ^ b in S:
                    return True
    return False


def cycle_type(lc: LocalCode | Code) -> tuple[int, ...]:
    """Cycle lengths of the weight-2 words of a 2-local code with c = 2.

    The weight-2 codewords, read as edges on the coordinates outside the
    weight-1 codewords, form a 2-regular graph.
    """
    code = lc.words if isinstance(lc, LocalCode) else lc
    ones = {x for x in code.words if popcount(x) == 1}
    edges = [x for x in code.words if popcount(x) == 2]
    adj: dict[int, list[int]] = {}
    for x in edges:
        a, b = [i for i in range(code.n) if x >> i & 1]
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    if any(len(v) != 2 for v in adj.values()) or any(1 << i in ones for i in adj):
        raise LocalCodeError("weight-2 words do not form a 2-regular graph off the weight-1 codewords")
    seen: set[int] = set()
    lengths = []
    for start in sorted(adj):
        if start in seen:
            continue
        k, prev, cur = 0, -1, start
        while cur not in seen:
            seen.add(cur)
            k += 1
            nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
            prev, cur = cur, nxt
        lengths.append(k)
    return tuple(sorted(lengths))


def finalize(lc: LocalCode) -> Code:
    """Return the words of a complete local code after checking it is a {n; c}-code."""
    if not lc.is_complete():
        raise LocalCodeError(f"{lc.label}-local code is not complete (n={lc.n})")
    ia = intersection_array(lc.words)
    if not isinstance(ia, IntersectionArray) or ia.b != (lc.n,) or ia.c != (lc.c,):
        raise LocalCodeError(f"not a {{{lc.n};{lc.c}}}-code: {ia}")
    return lc.words


def swap_first(code: Code, i: int) -> Code:
    """Exchange coordinates 1 and ``i``."""
    perm = list(range(1, code.n + 1))
    perm[0], perm[i - 1] = i, 1
    from .core import permute

    return permute(code, perm)


def lift_to_split(lc: LocalCode) -> list[LocalCode]:
    """The (r, r)-local codes obtained by moving each weight-1 codeword to coordinate 1."""
    if lc.split:
        raise LocalCodeError("already split")
    out = []
    for x in lc.words:
        if popcount(x) == 1:
            i = x.bit_length()
            out.append(LocalCode(lc.params, lc.r0, lc.r0, swap_first(lc.words, i), True))
    return out


def unsplit(lc: LocalCode) -> LocalCode:
    if not lc.split or lc.r0 != lc.r1:
        raise LocalCodeError(f"only (r,r)-local codes become plain, got {lc.label}")
    return LocalCode(lc.params, lc.r0, lc.r0, lc.words, False)
