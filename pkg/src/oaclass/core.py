"""Hypercube arithmetic, code containers and orthogonal-array checks.

Words are plain Python ints used as n-bit masks.  Coordinate ``i`` (1-based)
is bit ``i - 1``, so coordinate 1 is the least significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Sequence

import numpy as np

MAX_N = 32
# Above this length the Walsh transform of the indicator vector is too big.
_WHT_MAX_N = 20


def popcount(x: int) -> int:
    return bin(x).count("1")


def unit(i: int) -> int:
    """The weight-1 word with a one in coordinate ``i`` (1-based)."""
    return 1 << (i - 1)


def words_of_weight(n: int, w: int) -> Iterator[int]:
    """All words of length ``n`` and weight ``w`` in increasing numeric order."""
    if w < 0 or w > n:
        return
    out = []
    for pos in combinations(range(n), w):
        x = 0
        for p in pos:
            x |= 1 << p
        out.append(x)
    out.sort()
    yield from out


def neighbors(x: int, n: int) -> list[int]:
    return [x ^ (1 << i) for i in range(n)]


def support(x: int) -> tuple[int, ...]:
    """1-based coordinates where ``x`` has a one."""
    out = []
    i = 1
    while x:
        if x & 1:
            out.append(i)
        x >>= 1
        i += 1
    return tuple(out)


def word_to_str(x: int, n: int) -> str:
    """Human-readable bit string, coordinate 1 first."""
    return "".join("1" if x >> i & 1 else "0" for i in range(n))


def word_from_str(s: str) -> int:
    """Inverse of :func:`word_to_str`."""
    x = 0
    for i, ch in enumerate(s):
        if ch == "1":
            x |= 1 << i
        elif ch != "0":
            raise ValueError(f"not a binary string: {s!r}")
    return x


@dataclass(frozen=True, order=True)
class Code:
    """A set of words of the n-cube, stored sorted."""

    n: int
    words: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not 1 <= self.n <= MAX_N:
            raise ValueError(f"length n={self.n} outside 1..{MAX_N}")
        words = tuple(sorted(set(self.words)))
        limit = 1 << self.n
        if words and (words[0] < 0 or words[-1] >= limit):
            raise ValueError(f"word does not fit in {self.n} bits")
        object.__setattr__(self, "words", words)

    @classmethod
    def from_iter(cls, n: int, words: Iterable[int]) -> "Code":
        return cls(n, tuple(words))

    @classmethod
    def full_space(cls, n: int) -> "Code":
        return cls(n, tuple(range(1 << n)))

    @classmethod
    def even_weight(cls, n: int) -> "Code":
        return cls(n, tuple(x for x in range(1 << n) if popcount(x) % 2 == 0))

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self) -> Iterator[int]:
        return iter(self.words)

    def __contains__(self, x: object) -> bool:
        return x in self.wordset

    @property
    def wordset(self) -> frozenset[int]:
        cached = self.__dict__.get("_wordset")
        if cached is None:
            cached = frozenset(self.words)
            object.__setattr__(self, "_wordset", cached)
        return cached

    def weight_distribution(self) -> list[int]:
        dist = [0] * (self.n + 1)
        for x in self.words:
            dist[popcount(x)] += 1
        return dist

    def truncate(self, r: int) -> "Code":
        """Codewords of weight at most ``r``."""
        return Code(self.n, tuple(x for x in self.words if popcount(x) <= r))

    def array(self) -> np.ndarray:
        return np.fromiter(self.words, dtype=np.int64, count=len(self.words))


@dataclass(frozen=True)
class CRParams:
    """Parameters of a bound-attaining array, equivalently of an {n; c}-code."""

    n: int
    t: int
    c: int
    N: int

    def __str__(self) -> str:
        return f"OA({self.N},{self.n},2,{self.t}) = {{{self.n};{self.c}}}-code"


@dataclass(frozen=True)
class IntersectionArray:
    b: tuple[int, ...]
    c: tuple[int, ...]

    @property
    def rho(self) -> int:
        return len(self.b)

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.b)) + ";" + ",".join(map(str, self.c)) + "}"


@dataclass(frozen=True)
class NotCompletelyRegular:
    """Witness that a code is not completely regular."""

    vertex: int
    distance: int
    reason: str

    def __bool__(self) -> bool:
        return False


def friedman_bound(n: int, t: int) -> tuple[int, bool]:
    """Ceiling of 2^n (1 - n / (2(t+1))) and whether the value is an integer."""
    if not 1 <= t < n:
        raise ValueError(f"need 1 <= t < n, got n={n}, t={t}")
    exact = Fraction(2**n) * (1 - Fraction(n, 2 * (t + 1)))
    integral = exact.denominator == 1
    value = -((-exact.numerator) // exact.denominator)
    return value, integral


def intersection_array_for(n: int, t: int) -> CRParams:
    N, integral = friedman_bound(n, t)
    c = 2 * (t + 1) - n
    if not integral or c < 1 or N <= 0:
        raise ValueError(f"OA(N,{n},2,{t}) does not attain the Friedman bound with integral N")
    return CRParams(n=n, t=t, c=c, N=N)


def params_from_c(n: int, c: int) -> CRParams:
    if (n + c) % 2:
        raise ValueError(f"n + c must be even (c = 2(t+1) - n), got n={n}, c={c}")
    return intersection_array_for(n, (n + c) // 2 - 1)


# ---------------------------------------------------------------- strength


def _walsh(code: Code) -> np.ndarray:
    f = np.zeros(1 << code.n, dtype=np.int64)
    f[code.array()] = 1
    h = 1
    while h < f.size:
        f = f.reshape(-1, 2, h)
        a = f[:, 0, :].copy()
        b = f[:, 1, :]
        f[:, 0, :] = a + b
        f[:, 1, :] = a - b
        f = f.reshape(-1)
        h *= 2
    return f


def strength_by_characters(code: Code) -> int:
    """Largest t with sum_{x in C} (-1)^<a,x> = 0 for all 1 <= wt(a) <= t."""
    if not code.words:
        raise ValueError("empty code")
    n = code.n
    if n <= _WHT_MAX_N:
        spectrum = _walsh(code)
        weights = np.bitwise_count(np.arange(1 << n))
        bad = weights[(spectrum != 0) & (weights > 0)]
        return int(bad.min()) - 1 if bad.size else n
    arr = code.array()
    for w in range(1, n + 1):
        for a in words_of_weight(n, w):
            par = np.bitwise_count(arr & a) & 1
            if int(arr.size - 2 * par.sum()) != 0:
                return w - 1
    return n


def _project(arr: np.ndarray, coords: Sequence[int]) -> np.ndarray:
    idx = np.zeros_like(arr)
    for k, i in enumerate(coords):
        idx |= ((arr >> (i - 1)) & 1) << k
    return idx


def strength_by_subcubes(code: Code) -> int:
    """Largest t such that every t-coordinate pattern occurs |C|/2^t times."""
    if not code.words:
        raise ValueError("empty code")
    n, size = code.n, len(code)
    arr = code.array()
    for t in range(1, n + 1):
        if size % (1 << t):
            return t - 1
        want = size >> t
        for coords in combinations(range(1, n + 1), t):
            counts = np.bincount(_project(arr, coords), minlength=1 << t)
            if (counts != want).any():
                return t - 1
    return n


def strength(code: Code, verify: bool = False) -> int:
    """Maximal strength of the code as an orthogonal array.

    With ``verify=True`` both criteria are evaluated and must agree.
    """
    t = strength_by_characters(code)
    if verify:
        t2 = strength_by_subcubes(code)
        if t != t2:
            raise AssertionError(f"strength mismatch: characters {t}, subcubes {t2}")
    return t


# ---------------------------------------------------- complete regularity


def distance_partition(code: Code) -> np.ndarray:
    """Distance from every vertex of Q_n to the code (BFS over the cube)."""
    n = code.n
    if n > 24:
        raise ValueError("distance partition needs n <= 24")
    dist = np.full(1 << n, -1, dtype=np.int32)
    frontier = code.array()
    dist[frontier] = 0
    d = 0
    while frontier.size:
        d += 1
        nxt = np.concatenate([frontier ^ (1 << i) for i in range(n)])
        nxt = np.unique(nxt)
        nxt = nxt[dist[nxt] < 0]
        dist[nxt] = d
        frontier = nxt
    return dist


def intersection_array(code: Code) -> IntersectionArray | NotCompletelyRegular:
    """Intersection array of the distance partition, or a witness vertex."""
    n = code.n
    if not code.words:
        raise ValueError("empty code")
    if len(code) == 1 << n:
        raise ValueError("the full vertex set has no distance partition")
    dist = distance_partition(code)
    rho = int(dist.max())
    verts = np.arange(1 << n)
    up = np.zeros(1 << n, dtype=np.int32)
    down = np.zeros(1 << n, dtype=np.int32)
    for i in range(n):
        nd = dist[verts ^ (1 << i)]
        up += nd == dist + 1
        down += nd == dist - 1
    b, c = [], []
    for d in range(rho + 1):
        cell = np.flatnonzero(dist == d)
        for arr, out, name in ((up, b, "b"), (down, c, "c")):
            vals = arr[cell]
            if (vals != vals[0]).any():
                v = int(cell[np.flatnonzero(vals != vals[0])[0]])
                return NotCompletelyRegular(v, d, f"{name}_{d} not constant")
            out.append(int(vals[0]))
    return IntersectionArray(tuple(b[:rho]), tuple(c[1:]))


def is_crc(code: Code, b: Sequence[int], c: Sequence[int]) -> bool:
    ia = intersection_array(code)
    return bool(ia) and ia.b == tuple(b) and ia.c == tuple(c)


def minimum_distance(code: Code) -> int:
    arr = code.array()
    if arr.size < 2:
        raise ValueError("minimum distance needs at least two words")
    best = code.n
    for x in arr[:-1]:
        d = np.bitwise_count(arr[arr > x] ^ x)
        best = min(best, int(d.min()))
    return best


def distance_distribution(code: Code) -> list[int]:
    """Number of ordered pairs of codewords at each distance."""
    arr = code.array()
    dist = np.zeros(code.n + 1, dtype=np.int64)
    for x in arr:
        dist += np.bincount(np.bitwise_count(arr ^ x), minlength=code.n + 1)
    return [int(v) for v in dist]


# ---------------------------------------------------------- code surgery


def _delete_coordinate(x: int, i: int) -> int:
    low = x & ((1 << (i - 1)) - 1)
    return low | ((x >> i) << (i - 1))


def puncture(code: Code, i: int) -> tuple[Code, bool]:
    """Delete coordinate ``i``; the flag reports whether two words merged."""
    if not 1 <= i <= code.n:
        raise ValueError(f"coordinate {i} outside 1..{code.n}")
    image = [_delete_coordinate(x, i) for x in code.words]
    out = Code(code.n - 1, tuple(image))
    return out, len(out) < len(code)


def shorten(code: Code, i: int, bit: int = 0) -> Code:
    """Keep codewords with ``bit`` at coordinate ``i``, then delete it."""
    if not 1 <= i <= code.n:
        raise ValueError(f"coordinate {i} outside 1..{code.n}")
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    m = 1 << (i - 1)
    want = m if bit else 0
    return Code(code.n - 1, tuple(_delete_coordinate(x, i) for x in code.words if x & m == want))


def even_part(code: Code) -> Code:
    return Code(code.n, tuple(x for x in code.words if popcount(x) % 2 == 0))


def odd_part(code: Code) -> Code:
    return Code(code.n, tuple(x for x in code.words if popcount(x) % 2 == 1))


def translate(code: Code, v: int) -> Code:
    return Code(code.n, tuple(x ^ v for x in code.words))


def apply_perm_word(x: int, perm: Sequence[int]) -> int:
    """Move coordinate ``i`` to ``perm[i-1]`` (both 1-based)."""
    y = 0
    i = 0
    while x:
        if x & 1:
            y |= 1 << (perm[i] - 1)
        x >>= 1
        i += 1
    return y


def permute(code: Code, perm: Sequence[int]) -> Code:
    """Image of the code under a coordinate permutation (1-based images)."""
    if sorted(perm) != list(range(1, code.n + 1)):
        raise ValueError("not a permutation of 1..n")
    return Code(code.n, tuple(apply_perm_word(x, perm) for x in code.words))


def invert_perm(perm: Sequence[int]) -> list[int]:
    inv = [0] * len(perm)
    for i, p in enumerate(perm, start=1):
        inv[p - 1] = i
    return inv


def is_oa_on_bound(code: Code, params: CRParams) -> bool:
    return len(code) == params.N and code.n == params.n and strength(code) >= params.t
