"""Exact cover with multiplicities and at-most capacity items.

A *demand* item must be touched by exactly ``delta`` chosen options, a
*capacity* item by at most ``kappa``.  The search is Algorithm X over an
array-backed dancing-links state: an item leaves the active set only when its
remaining demand reaches zero, at which point every other option touching it
is detached.  Capacity items never drive branching; when one is saturated the
options still touching it are detached.

Branching picks the open demand item with the smallest slack (live options
minus remaining demand), ties broken by position in ``demand_items``.  The
options of that item are tried in the order they appear in ``options``; an
option that has been tried is excluded for its later siblings, so every
solution is produced exactly once and in a fixed order.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable

Visitor = Callable[[tuple], object]
WeightedVisitor = Callable[[tuple, int], object]
# (chosen option ids, branching item id, candidate option-id subsets)
#   -> [(subset, orbit size), ...] or None once the symmetry group is trivial
OrbitOracle = Callable[[tuple, Hashable, list[tuple]], "list[tuple[tuple, int]] | None"]


@dataclass
class CoverProblem:
    demand_items: list[tuple[Hashable, int]]
    capacity_items: list[tuple[Hashable, int]]
    options: list[tuple[Hashable, frozenset]]

    def __post_init__(self):
        ids = [i for i, _ in self.demand_items] + [i for i, _ in self.capacity_items]
        if len(set(ids)) != len(ids):
            raise ValueError("item ids must be unique across demand and capacity items")
        if any(d < 1 for _, d in self.demand_items):
            raise ValueError("demands must be >= 1")
        if any(k < 0 for _, k in self.capacity_items):
            raise ValueError("capacities must be >= 0")
        known = set(ids)
        seen = set()
        for oid, touched in self.options:
            if oid in seen:
                raise ValueError(f"duplicate option id {oid!r}")
            seen.add(oid)
            if not touched:
                raise ValueError(f"option {oid!r} touches no item")
            unknown = set(touched) - known
            if unknown:
                raise ValueError(f"option {oid!r} touches unknown items {sorted(map(str, unknown))}")

    def to_text(self) -> str:
        lines = [f"item {i} demand {d}" for i, d in self.demand_items]
        lines += [f"item {i} capacity {k}" for i, k in self.capacity_items]
        for oid, touched in self.options:
            lines.append(f"option {oid}: " + " ".join(str(i) for i in sorted(touched, key=str)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CoverProblem":
        """Parse the debug dump; ids are kept as strings."""
        demand, capacity, options = [], [], []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("option "):
                head, _, rest = line[len("option "):].partition(":")
                options.append((head.strip(), frozenset(rest.split())))
                continue
            parts = line.split()
            if len(parts) != 4 or parts[0] != "item" or parts[2] not in ("demand", "capacity"):
                raise ValueError(f"line {lineno}: cannot parse {raw!r}")
            (demand if parts[2] == "demand" else capacity).append((parts[1], int(parts[3])))
        return cls(demand, capacity, options)


def check_solution(problem: CoverProblem, chosen: Iterable[Hashable]) -> bool:
    """Independent check of demand exactness and capacity bounds."""
    touched = {oid: items for oid, items in problem.options}
    count: dict[Hashable, int] = {}
    chosen = list(chosen)
    if len(set(chosen)) != len(chosen):
        return False
    for oid in chosen:
        if oid not in touched:
            return False
        for item in touched[oid]:
            count[item] = count.get(item, 0) + 1
    if any(count.get(i, 0) != d for i, d in problem.demand_items):
        return False
    return all(count.get(i, 0) <= k for i, k in problem.capacity_items)


class Solver:
    """Single-use search state for one :class:`CoverProblem`."""

    def __init__(self, problem: CoverProblem):
        self.problem = problem
        dindex = {iid: k for k, (iid, _) in enumerate(problem.demand_items)}
        cindex = {iid: k for k, (iid, _) in enumerate(problem.capacity_items)}
        nd, nc, no = len(dindex), len(cindex), len(problem.options)
        self.option_ids = [oid for oid, _ in problem.options]
        self.option_index = {oid: k for k, oid in enumerate(self.option_ids)}
        self.item_ids = [iid for iid, _ in problem.demand_items]
        self.o_items: list[list[int]] = [[] for _ in range(no)]
        self.o_caps: list[list[int]] = [[] for _ in range(no)]
        self.i_opts: list[list[int]] = [[] for _ in range(nd)]
        self.c_opts: list[list[int]] = [[] for _ in range(nc)]
        for o, (_, touched) in enumerate(problem.options):
            for item in touched:
                if item in dindex:
                    self.o_items[o].append(dindex[item])
                    self.i_opts[dindex[item]].append(o)
                else:
                    self.o_caps[o].append(cindex[item])
                    self.c_opts[cindex[item]].append(o)
        self.need = [d for _, d in problem.demand_items]
        self.cap = [k for _, k in problem.capacity_items]
        self.slack = [len(self.i_opts[i]) - self.need[i] for i in range(nd)]
        self.bad = sum(1 for s in self.slack if s < 0)
        self.live = [True] * no
        self.trail: list[int] = []
        self.chosen: list[int] = []
        self.nodes = 0
        self._stop = False
        for j in range(nc):
            if self.cap[j] == 0:
                for o in self.c_opts[j]:
                    if self.live[o]:
                        self._kill(o)
        self.trail.clear()

    # -- dancing-links primitives -------------------------------------------

    def _kill(self, o: int) -> None:
        self.live[o] = False
        slack = self.slack
        for i in self.o_items[o]:
            slack[i] -= 1
            if slack[i] == -1:
                self.bad += 1
        self.trail.append(o)

    def _revive_to(self, mark: int) -> None:
        trail, slack, live = self.trail, self.slack, self.live
        while len(trail) > mark:
            o = trail.pop()
            live[o] = True
            for i in self.o_items[o]:
                if slack[i] == -1:
                    self.bad -= 1
                slack[i] += 1

    def _select(self, o: int) -> int:
        mark = len(self.trail)
        live = self.live
        live[o] = False
        need, cap = self.need, self.cap
        for i in self.o_items[o]:
            need[i] -= 1
        for j in self.o_caps[o]:
            cap[j] -= 1
        for i in self.o_items[o]:
            if need[i] == 0:
                for o2 in self.i_opts[i]:
                    if live[o2]:
                        self._kill(o2)
        for j in self.o_caps[o]:
            if cap[j] == 0:
                for o2 in self.c_opts[j]:
                    if live[o2]:
                        self._kill(o2)
        self.chosen.append(o)
        return mark

    def _unselect(self, o: int, mark: int) -> None:
        self.chosen.pop()
        self._revive_to(mark)
        for i in self.o_items[o]:
            self.need[i] += 1
        for j in self.o_caps[o]:
            self.cap[j] += 1
        self.live[o] = True

    def _choose_item(self) -> int | None:
        best, best_slack = None, None
        need, slack = self.need, self.slack
        for i in range(len(need)):
            if need[i] and (best_slack is None or slack[i] < best_slack):
                best, best_slack = i, slack[i]
                if best_slack <= 0:
                    break
        return best

    # -- searches --------------------------------------------------------------

    def _emit(self, emit: Callable[[tuple, int], object], weight: int) -> None:
        free = [o for o in range(len(self.live)) if self.live[o]]
        if not free:
            emit(tuple(self.option_ids[o] for o in sorted(self.chosen)), weight)
            return
        # only capacity-touching options remain; each may be taken or not
        self._free(free, 0, emit, weight)

    def _free(self, free: list[int], k: int, emit, weight: int) -> None:
        if self._stop:
            return
        if k == len(free):
            emit(tuple(self.option_ids[o] for o in sorted(self.chosen)), weight)
            return
        o = free[k]
        if self.live[o]:
            mark = self._select(o)
            self._free(free, k + 1, emit, weight)
            self._unselect(o, mark)
        self._free(free, k + 1, emit, weight)

    def _search(self, emit, weight: int) -> None:
        self.nodes += 1
        if self.bad or self._stop:
            return
        x = self._choose_item()
        if x is None:
            self._emit(emit, weight)
            return
        mark0 = len(self.trail)
        for o in self.i_opts[x]:
            if not self.live[o]:
                continue
            mark = self._select(o)
            self._search(emit, weight)
            self._unselect(o, mark)
            if self._stop:
                break
            self._kill(o)
            if self.bad:
                break
        self._revive_to(mark0)

    def _subsets(self, x: int) -> list[tuple[int, ...]]:
        """All option sets that satisfy item ``x`` completely from here."""
        out: list[tuple[int, ...]] = []
        opts = self.i_opts[x]
        picked: list[int] = []

        def rec(start: int) -> None:
            if self.need[x] == 0:
                if not self.bad:
                    out.append(tuple(picked))
                return
            for k in range(start, len(opts)):
                o = opts[k]
                if not self.live[o]:
                    continue
                mark = self._select(o)
                picked.append(o)
                if not self.bad:
                    rec(k + 1)
                picked.pop()
                self._unselect(o, mark)

        rec(0)
        return out

    def _search_sym(self, emit, weight: int, oracle: OrbitOracle) -> None:
        self.nodes += 1
        if self.bad or self._stop:
            return
        x = self._choose_item()
        if x is None:
            self._emit(emit, weight)
            return
        subsets = self._subsets(x)
        if not subsets:
            return
        ids = self.option_ids
        chosen_ids = tuple(ids[o] for o in sorted(self.chosen))
        reps = oracle(chosen_ids, self.item_ids[x], [tuple(ids[o] for o in s) for s in subsets])
        if reps is None:
            self._search(emit, weight)
            return
        index = self.option_index
        for subset, factor in reps:
            marks = []
            for oid in subset:
                o = index[oid]
                marks.append((o, self._select(o)))
            self._search_sym(emit, weight * factor, oracle)
            for o, mark in reversed(marks):
                self._unselect(o, mark)
            if self._stop:
                break

    def run(self, emit: Callable[[tuple, int], object], oracle: OrbitOracle | None = None) -> None:
        limit = sys.getrecursionlimit()
        depth = 4 * (len(self.live) + len(self.need)) + 100
        if depth > limit:
            sys.setrecursionlimit(depth)
        if oracle is None:
            self._search(emit, 1)
        else:
            # leftover capacity-only options would be enumerated outside
            # the oracle's view and break the orbit weights
            if any(not items for items in self.o_items):
                raise ValueError("weighted search needs every option to touch a demand item")
            self._search_sym(emit, 1, oracle)

    def stop(self) -> None:
        self._stop = True


def solve_all(problem: CoverProblem, visitor: Visitor | None = None) -> int:
    """Enumerate every solution; ``visitor`` gets each as a tuple of option ids."""
    count = 0

    def emit(sol: tuple, _w: int) -> None:
        nonlocal count
        count += 1
        if visitor is not None:
            visitor(sol)

    Solver(problem).run(emit)
    return count


def solve_exists(problem: CoverProblem) -> bool:
    """True iff a solution exists; the search stops at the first one."""
    solver = Solver(problem)
    found = False

    def emit(_sol: tuple, _w: int) -> None:
        nonlocal found
        found = True
        solver.stop()

    solver.run(emit)
    return found


def solve_weighted(problem: CoverProblem, visitor: WeightedVisitor, oracle: OrbitOracle) -> int:
    """Enumerate one solution per symmetry orbit, weighted by orbit size.

    ``oracle`` is consulted at each branching node with the chosen options,
    the branching item and every way of completing that item.  It returns one
    representative per orbit of the current stabilizer together with the
    orbit size, or ``None`` when the stabilizer is trivial, after which the
    subtree is enumerated without pruning.  The returned total equals the
    number of solutions :func:`solve_all` would report.
    """
    total = 0

    def emit(sol: tuple, w: int) -> None:
        nonlocal total
        total += w
        visitor(sol, w)

    Solver(problem).run(emit, oracle)
    return total
