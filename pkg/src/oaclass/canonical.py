"""Canonical forms and symmetry groups of codes and derived designs.

Codes become vertex-coloured graphs which nauty (through pynauty) labels
canonically:

* coordinate mode: one vertex per coordinate, one per codeword (coloured by
  weight), a codeword joined to the coordinates where it has a one;
* full mode: two "literal" vertices per coordinate joined by an edge, a
  codeword joined to the literal of each of its symbols, so that graph
  automorphisms are exactly the cube automorphisms fixing the code.

The key of a code is its image under the coordinate part of the canonical
labelling, serialised to bytes.  That image is equivalent to the input and
depends only on the canonical graph, so keys are equal exactly when the codes
are equivalent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import pynauty

from .core import Code, popcount

PERM = "perm"
PERM0 = "perm0"
FULL = "full"
MODES = (PERM, PERM0, FULL)


@dataclass(frozen=True)
class SymGroup:
    """A group of coordinate permutations, optionally with translations.

    Permutations are 1-based image tuples: coordinate ``i`` goes to
    ``perm[i-1]``.  In full mode ``translations[k]`` is the translation part
    of generator ``k``, acting as ``x -> translations[k] + perm(x)``.
    """

    order: int
    generators: tuple[tuple[int, ...], ...] = ()
    translations: tuple[int, ...] | None = None

    def cycles(self) -> list[str]:
        out = []
        for k, g in enumerate(self.generators):
            text = cycle_notation(g)
            if self.translations is not None:
                text = f"[{self.translations[k]:x}] {text}"
            out.append(text)
        return out


def cycle_notation(perm: Sequence[int]) -> str:
    seen = set()
    parts = []
    for start in range(1, len(perm) + 1):
        if start in seen or perm[start - 1] == start:
            continue
        cyc = [start]
        seen.add(start)
        j = perm[start - 1]
        while j != start:
            cyc.append(j)
            seen.add(j)
            j = perm[j - 1]
        parts.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(parts) or "()"


# ------------------------------------------------------------ group order


def _compose(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    """a after b."""
    return tuple(a[x] for x in b)


def _inverse(a: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(a)
    for i, x in enumerate(a):
        inv[x] = i
    return tuple(inv)


class StabilizerChain:
    """Deterministic Schreier-Sims on points 0..degree-1."""

    def __init__(self, degree: int):
        self.degree = degree
        self.identity = tuple(range(degree))
        self.base: list[int] = []
        self.gens: list[list[tuple[int, ...]]] = []
        self.transversal: list[dict[int, tuple[int, ...]]] = []

    def _strip(self, g: tuple[int, ...], start: int) -> tuple[tuple[int, ...], int]:
        for i in range(start, len(self.base)):
            y = g[self.base[i]]
            u = self.transversal[i].get(y)
            if u is None:
                return g, i
            g = _compose(_inverse(u), g)
        return g, len(self.base)

    def _strong(self, i: int) -> list[tuple[int, ...]]:
        return [s for j in range(i, len(self.base)) for s in self.gens[j]]

    def _orbit(self, i: int) -> None:
        b = self.base[i]
        trans = {b: self.identity}
        queue = [b]
        strong = self._strong(i)
        for y in queue:
            for s in strong:
                z = s[y]
                if z not in trans:
                    trans[z] = _compose(s, trans[y])
                    queue.append(z)
        self.transversal[i] = trans

    def _place(self, h: tuple[int, ...], j: int) -> None:
        if j == len(self.base):
            self.base.append(next(x for x in range(self.degree) if h[x] != x))
            self.gens.append([])
            self.transversal.append({})
        self.gens[j].append(h)
        for k in range(j + 1):
            self._orbit(k)

    def _first_failure(self) -> tuple[tuple[int, ...], int] | None:
        # deepest level first, so residues land where they are missing
        for i in reversed(range(len(self.base))):
            trans = self.transversal[i]
            for y, uy in trans.items():
                for s in self._strong(i):
                    h = _compose(_inverse(trans[s[y]]), _compose(s, uy))
                    if h == self.identity:
                        continue
                    h, j = self._strip(h, i + 1)
                    if h != self.identity:
                        return h, j
        return None

    def extend(self, g: Sequence[int]) -> None:
        h, j = self._strip(tuple(g), 0)
        if h == self.identity:
            return
        self._place(h, j)
        while (fail := self._first_failure()) is not None:
            self._place(*fail)

    def order(self) -> int:
        out = 1
        for t in self.transversal:
            out *= len(t)
        return out

    def contains(self, g: Sequence[int]) -> bool:
        h, _ = self._strip(tuple(g), 0)
        return h == self.identity


def group_order(generators: Iterable[Sequence[int]], degree: int) -> int:
    """Order of the permutation group on 0..degree-1 spanned by ``generators``."""
    chain = StabilizerChain(degree)
    for g in generators:
        chain.extend(g)
    return chain.order()


def _exact_order(grpsize1: float, grpsize2: int, gens: list[tuple[int, ...]], degree: int) -> int:
    if grpsize2 == 0 and grpsize1 < 2**53:
        return int(round(grpsize1))
    return group_order(gens, degree)


# ------------------------------------------------------- graph encodings


def _coordinate_graph(n: int, classes: Sequence[Iterable[int]], fix_first: bool):
    """Incidence graph of coordinates and words; one colour block per class."""
    adjacency: dict[int, list[int]] = {}
    coloring: list[set[int]] = [{0}, set(range(1, n))] if fix_first else [set(range(n))]
    v = n
    for words in classes:
        by_weight: dict[int, set[int]] = {}
        for x in words:
            adjacency[v] = [i for i in range(n) if x >> i & 1]
            by_weight.setdefault(popcount(x), set()).add(v)
            v += 1
        for w in sorted(by_weight):
            coloring.append(by_weight[w])
    coloring = [cell for cell in coloring if cell]
    return pynauty.Graph(v, adjacency_dict=adjacency, vertex_coloring=coloring)


def _literal_graph(n: int, words: Sequence[int]):
    adjacency: dict[int, list[int]] = {2 * i: [2 * i + 1] for i in range(n)}
    v = 2 * n
    for x in words:
        adjacency[v] = [2 * i + (x >> i & 1) for i in range(n)]
        v += 1
    # words before literals: refinement on literals alone stalls on
    # high-strength arrays, while fixing one word splits the rest by distance
    coloring = [set(range(2 * n, v)), set(range(2 * n))]
    coloring = [cell for cell in coloring if cell]
    return pynauty.Graph(v, adjacency_dict=adjacency, vertex_coloring=coloring)


def _graph(code: Code, mode: str):
    if mode == FULL:
        return _literal_graph(code.n, code.words)
    return _coordinate_graph(code.n, [code.words], fix_first=(mode == PERM0))


def _serialize(mode: str, n: int, words: Iterable[int]) -> bytes:
    words = sorted(words)
    width = (n + 7) // 8
    head = bytes([MODES.index(mode), n]) + len(words).to_bytes(4, "big")
    return head + b"".join(x.to_bytes(width, "big") for x in words)


def _image_from_labels(code: Code, mode: str, lab: Sequence[int]) -> list[int]:
    n = code.n
    if mode == FULL:
        pos = {v: k for k, v in enumerate(lab) if v < 2 * n}
        firsts = sorted((min(pos[2 * i], pos[2 * i + 1]), i) for i in range(n))
        target = {i: rank for rank, (_, i) in enumerate(firsts)}
        flip = sum(1 << i for i in range(n) if pos[2 * i + 1] < pos[2 * i])
        out = []
        for x in code.words:
            y = 0
            z = x ^ flip
            for i in range(n):
                if z >> i & 1:
                    y |= 1 << target[i]
            out.append(y)
        return out
    pos = [0] * n
    for k in range(n):
        pos[lab[k]] = k
    out = []
    for x in code.words:
        y = 0
        for i in range(n):
            if x >> i & 1:
                y |= 1 << pos[i]
        out.append(y)
    return out


def canonical_image(code: Code, mode: str = PERM) -> Code:
    """The canonical representative of the equivalence class of ``code``."""
    lab = pynauty.canon_label(_graph(code, mode))
    return Code(code.n, tuple(_image_from_labels(code, mode, lab)))


def canonical_key(code: Code, mode: str = PERM) -> bytes:
    """Byte key; equal keys iff the codes are equivalent under ``mode``."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if not code.words:
        return _serialize(mode, code.n, ())
    lab = pynauty.canon_label(_graph(code, mode))
    return _serialize(mode, code.n, _image_from_labels(code, mode, lab))


def key_code(key: bytes) -> Code:
    """Decode the canonical code stored in a key."""
    n = key[1]
    size = int.from_bytes(key[2:6], "big")
    width = (n + 7) // 8
    body = key[6:]
    return Code(n, tuple(int.from_bytes(body[k * width:(k + 1) * width], "big") for k in range(size)))


def symmetry_group(code: Code, mode: str = PERM) -> SymGroup:
    n = code.n
    if not code.words:
        raise ValueError("empty code")
    gens, size1, size2, _, _ = pynauty.autgrp(_graph(code, mode))
    if mode == FULL:
        perms, trans, lit_gens = [], [], []
        for g in gens:
            perm = [0] * n
            v = 0
            for i in range(n):
                img = g[2 * i]
                perm[i] = img // 2 + 1
                if img & 1:
                    v |= 1 << (img // 2)
            perms.append(tuple(perm))
            trans.append(v)
            lit_gens.append(tuple(g[: 2 * n]))
        order = _exact_order(size1, size2, lit_gens, 2 * n)
        return SymGroup(order, tuple(perms), tuple(trans))
    coord = [tuple(g[:n]) for g in gens]
    order = _exact_order(size1, size2, coord, n)
    return SymGroup(order, tuple(tuple(x + 1 for x in g) for g in coord))


def canon_perm(code: Code) -> tuple[bytes, SymGroup]:
    return canonical_key(code, PERM), symmetry_group(code, PERM)


def canon_perm_fixing_first(code: Code) -> tuple[bytes, SymGroup]:
    return canonical_key(code, PERM0), symmetry_group(code, PERM0)


def canon_full(code: Code) -> tuple[bytes, SymGroup]:
    return canonical_key(code, FULL), symmetry_group(code, FULL)


def stabilizer(n: int, classes: Sequence[Iterable[int]], fix_first: bool = False) -> tuple[list[tuple[int, ...]], int]:
    """Coordinate permutations fixing every word set in ``classes`` setwise.

    Returns 0-based generator image tuples and the group order.
    """
    classes = [list(c) for c in classes]
    g = _coordinate_graph(n, classes, fix_first)
    gens, size1, size2, _, _ = pynauty.autgrp(g)
    coord = [tuple(p[:n]) for p in gens]
    return coord, _exact_order(size1, size2, coord, n)


# ------------------------------------------------------------------ GDDs


@dataclass(frozen=True)
class GDD:
    """Group divisible design on points 1..v; ``blocks`` is a multiset."""

    v: int
    groups: tuple[frozenset[int], ...]
    blocks: tuple[frozenset[int], ...] = field(default=())


def _gdd_graph(design: GDD):
    v = design.v
    adjacency: dict[int, list[int]] = {}
    idx = v
    gcell, bcell = set(), set()
    for grp in design.groups:
        adjacency[idx] = [p - 1 for p in grp]
        gcell.add(idx)
        idx += 1
    for blk in design.blocks:
        adjacency[idx] = [p - 1 for p in blk]
        bcell.add(idx)
        idx += 1
    coloring = [cell for cell in (set(range(v)), gcell, bcell) if cell]
    return pynauty.Graph(idx, adjacency_dict=adjacency, vertex_coloring=coloring)


def canon_gdd(design: GDD) -> bytes:
    """Isomorphism-invariant key of a design (point bijections)."""
    lab = pynauty.canon_label(_gdd_graph(design))
    pos = {p: k for k, p in enumerate(lab[: design.v])}

    def relabel(sets):
        return sorted(tuple(sorted(pos[p - 1] for p in s)) for s in sets)

    groups = relabel(design.groups)
    blocks = relabel(design.blocks)
    text = f"v={design.v};g={groups};b={blocks}"
    return text.encode()
