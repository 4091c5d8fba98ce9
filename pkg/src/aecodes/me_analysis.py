"""Exhaustive search for minimal erasure patterns ME(x).

An erasure pattern is a set of data and parity blocks.  It is unrecoverable
when the fixpoint decoder leaves some of its data blocks missing, and minimal
when dropping any single member lets the decoder recover everything.  Minimal
patterns are exactly the inclusion-minimal sets the decoder cannot shrink
(stopping sets): every lost node has a lost neighbour parity on each of its
strands, and lost parities form runs along a strand that end at lost nodes on
both sides.

The search therefore builds the node set first and then picks, per strand,
which gaps between consecutive lost nodes are erased.  Each candidate is
checked against the decoder rules; patterns are reported translated so their
first node lies in ``1..s`` (the lattice repeats every ``s`` nodes).
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .codec import BlockStore, repair_all
from .lattice import BlockId, CodeParams, Edge, Node, block_key, input_edge, output_edge, strand_step

DEFAULT_MAX_SIZE = 20
DEFAULT_STATE_BUDGET = 2_000_000
CSV_COLUMNS = ("params", "x", "min_size", "pattern_count", "example_pattern", "complete_flag")


class BudgetExceeded(RuntimeError):
    """The search visited more node sets than allowed; ``patterns`` is partial."""

    def __init__(self, msg: str, patterns: list):
        super().__init__(msg)
        self.patterns = patterns


@dataclass(frozen=True)
class ErasurePattern:
    params: CodeParams
    blocks: frozenset

    @property
    def x(self) -> int:
        return sum(1 for b in self.blocks if isinstance(b, Node))

    @property
    def y(self) -> int:
        return len(self.blocks)

    @property
    def nodes(self) -> list[int]:
        return sorted(b.i for b in self.blocks if isinstance(b, Node))

    def keys(self) -> list[str]:
        return [block_key(b, self.params) for b in sorted(self.blocks, key=_sort_key)]

    def shifted(self, delta: int) -> "ErasurePattern":
        """Translate by ``delta`` nodes; ``delta`` should be a multiple of s."""
        moved = frozenset(Node(b.i + delta) if isinstance(b, Node) else
                          Edge(b.i + delta, b.j + delta, b.cls) for b in self.blocks)
        return ErasurePattern(self.params, moved)

    def span(self) -> tuple[int, int]:
        lo = min(b.i for b in self.blocks)
        hi = max(b.j if isinstance(b, Edge) else b.i for b in self.blocks)
        return lo, hi

    def __len__(self):
        return len(self.blocks)

    def __str__(self):
        return "{" + ", ".join(self.keys()) + "}"


def _sort_key(b):
    if isinstance(b, Node):
        return (b.i, 0, 0, "")
    return (b.i, 1, b.j, b.cls.value)


# -- decoder checks -------------------------------------------------------------

def _window_bounds(window, blocks) -> tuple[int, int]:
    if window is None:
        lo = min(b.i for b in blocks) if blocks else 1
        hi = max((b.j if isinstance(b, Edge) else b.i) for b in blocks) if blocks else 1
        return lo, hi
    if isinstance(window, int):
        return 1, window
    first, last = window
    return first, last


def is_recoverable(pattern, window=None, params: CodeParams | None = None) -> bool:
    """Erase ``pattern`` inside ``window`` and run the decoder to its fixpoint.

    ``window`` is a node range ``(first, last)``, a node count (``1..n``) or
    ``None`` for the pattern's own span.  Blocks outside the window count as
    available, and so do the neighbours of the window's last node.
    True iff every erased data block comes back.
    """
    if isinstance(pattern, ErasurePattern):
        params = params or pattern.params
        blocks = pattern.blocks
    else:
        blocks = frozenset(pattern)
    if params is None:
        raise ValueError("params required for a bare block set")
    first, last = _window_bounds(window, blocks)
    for b in blocks:
        if not first <= b.i <= last:
            raise ValueError(f"{block_key(b, params)} lies outside window {first}..{last}")
    # a far-away counter: no node in or right of the window is past the lattice end
    store = BlockStore.window(params, first, last, counter=last + 10 * (params.s * params.p + 1) + 10)
    store.erase(blocks)
    report = repair_all(store, params, max_rounds=len(blocks) + 2)
    return not any(isinstance(b, Node) for b in report.unrecovered)


def _residue(blocks: set, params: CodeParams) -> set:
    """Blocks of ``blocks`` the decoder cannot restore; the rest of the lattice is live."""
    left = set(blocks)
    changed = True
    while changed:
        changed = False
        for b in list(left):
            if isinstance(b, Node):
                ok = any(input_edge(b.i, c, params) not in left and output_edge(b.i, c, params) not in left
                         for c in params.classes)
            else:
                ok = ((Node(b.i) not in left and input_edge(b.i, b.cls, params) not in left) or
                      (Node(b.j) not in left and output_edge(b.j, b.cls, params) not in left))
            if ok:
                left.discard(b)
                changed = True
    return left


def is_minimal(blocks: set, params: CodeParams) -> bool:
    """Unrecoverable, and recoverable again after removing any one member."""
    blocks = set(blocks)
    if _residue(blocks, params) != blocks or not any(isinstance(b, Node) for b in blocks):
        return False
    return all(not _residue(blocks - {b}, params) for b in blocks)


# -- search ---------------------------------------------------------------------

class _Walker:
    """Cached strand walks from a node, ``limit`` steps each way."""

    def __init__(self, params: CodeParams, limit: int, floor: int):
        self.params = params
        self.limit = limit
        self.floor = floor
        self.cache: dict = {}

    def path(self, node: int, cls, forward: bool) -> list[int]:
        key = (node, cls, forward)
        got = self.cache.get(key)
        if got is None:
            got, cur = [], node
            for _ in range(self.limit):
                cur = strand_step(cur, cls, self.params, forward)
                if cur < self.floor:
                    break
                got.append(cur)
            self.cache[key] = got
        return got


def _gaps(X: frozenset, cls, walker: _Walker) -> list[tuple[int, int, int]]:
    """``(a, b, length)`` for consecutive members of X on ``cls`` strands."""
    out = []
    for a in X:
        for k, b in enumerate(walker.path(a, cls, True), 1):
            if b in X:
                out.append((a, b, k))
                break
    return out


def _chains(X: frozenset, cls, walker: _Walker) -> list[tuple[list[int], list[int]]]:
    """Split X along ``cls`` into chains ``(nodes, gap lengths)``."""
    nxt = {a: (b, k) for a, b, k in _gaps(X, cls, walker)}
    has_prev = {b for b, _ in nxt.values()}
    chains = []
    for a in sorted(X):
        if a in has_prev:
            continue
        nodes, lengths = [a], []
        while nodes[-1] in nxt:
            b, k = nxt[nodes[-1]]
            nodes.append(b)
            lengths.append(k)
        chains.append((nodes, lengths))
    return chains


def _chain_lb(lengths: list[int]) -> int:
    """Cheapest way to touch every node of a chain if lone nodes cost 1.

    Only a gap of length 1 serves two nodes for the price of one, so the
    bound is the node count minus a maximum matching of such gaps (greedy is
    optimal on a path).
    """
    saved, i = 0, 0
    while i < len(lengths):
        if lengths[i] == 1:
            saved += 1
            i += 2
        else:
            i += 1
    return len(lengths) + 1 - saved


def _chain_covers(lengths: list[int], budget: int) -> list[tuple[int, tuple[int, ...]]]:
    """Gap subsets touching every node of the chain, with their cost."""
    m = len(lengths)
    out = []
    for picks in itertools.product((0, 1), repeat=m):
        cost = sum(l for l, q in zip(lengths, picks) if q)
        if cost > budget:
            continue
        ok = all((i > 0 and picks[i - 1]) or (i < m and picks[i]) for i in range(m + 1))
        if ok:
            out.append((cost, picks))
    out.sort()
    return out


def _edge_lower_bound(X: frozenset, x: int, params: CodeParams, walker: _Walker) -> int:
    per_strand = sum(_chain_lb(lengths) for cls in params.classes
                     for _, lengths in _chains(X, cls, walker))
    return max(math.ceil(params.alpha * x / 2), per_strand)


def _unsatisfied(X: frozenset, params: CodeParams, walker: _Walker):
    for n in sorted(X):
        for cls in params.classes:
            if not any(m in X for fwd in (True, False) for m in walker.path(n, cls, fwd)):
                return n, cls
    return None


def _patterns_for(X: frozenset, params: CodeParams, walker: _Walker, budget: int) -> list[frozenset]:
    """Minimal patterns with node set exactly X and at most ``budget`` parities."""
    per_chain = []  # (cls, nodes, covers)
    for cls in params.classes:
        for nodes, lengths in _chains(X, cls, walker):
            if not lengths:
                return []
            covers = _chain_covers(lengths, budget)
            if not covers:
                return []
            per_chain.append((cls, nodes, covers))
    floor = sum(c[0][0] for _, _, c in per_chain)
    if floor > budget:
        return []
    found = []
    for combo in itertools.product(*(c for _, _, c in per_chain)):
        if sum(cost for cost, _ in combo) > budget:
            continue
        blocks = {Node(n) for n in X}
        for (cls, nodes, _), (_, picks) in zip(per_chain, combo):
            for a, q in zip(nodes, picks):
                if not q:
                    continue
                cur = a
                while True:
                    e = output_edge(cur, cls, params)
                    blocks.add(e)
                    cur = e.j
                    if cur in X:
                        break
        if is_minimal(blocks, params):
            found.append(frozenset(blocks))
    return found


def _search_from(start: int, params: CodeParams, x: int, max_size: int, window: int | None,
                 walker: _Walker, budget: list) -> list[frozenset]:
    edges_floor = math.ceil(params.alpha * x / 2)
    visited: set = set()
    found: list[frozenset] = []
    stack = [frozenset([start])]
    while stack:
        X = stack.pop()
        if X in visited:
            continue
        visited.add(X)
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceeded("state budget exhausted", found)
        lb = _edge_lower_bound(X, x, params, walker)
        if x + lb > max_size:
            continue
        pair = _unsatisfied(X, params, walker)
        if len(X) == x:
            if pair is None:
                found.extend(_patterns_for(X, params, walker, max_size - x))
            continue
        if pair is not None:
            n, cls = pair
            sources = [(n, cls)]
        else:
            sources = [(n, c) for n in sorted(X) for c in params.classes]
        reach = max_size - x - edges_floor + 1
        for n, cls in sources:
            for fwd in (True, False):
                for m in walker.path(n, cls, fwd)[:reach]:
                    if m < start or m in X:
                        continue
                    if window is not None and m - start >= window:
                        continue
                    stack.append(X | {m})
    return found


def enumerate_me(params: CodeParams, window: int | None = None, max_size: int = DEFAULT_MAX_SIZE,
                 x: int = 2, state_budget: int = DEFAULT_STATE_BUDGET) -> list[ErasurePattern]:
    """Every minimal erasure with ``x`` data blocks and at most ``max_size`` blocks.

    ``window`` caps how many consecutive node positions a pattern may cover
    (``None``: no cap beyond what ``max_size`` allows).  Patterns are listed
    once per translation class, smallest first.  Raises
    :class:`BudgetExceeded` with the patterns found so far when the search
    visits more than ``state_budget`` node sets.
    """
    if x < 1:
        raise ValueError("x must be at least 1")
    if max_size < 1:
        raise ValueError("max_size must be positive")
    s, p = params.s, params.p
    reach = max(1, max_size - x - math.ceil(params.alpha * x / 2) + 1)
    # start far enough from the lattice head that backward walks never hit it
    base = s * (max_size + 2) * (p + 2) * 2 + 1
    walker = _Walker(params, reach, 1)
    budget = [state_budget]
    found: list[ErasurePattern] = []
    try:
        for r in range(s):
            for blocks in _search_from(base + r, params, x, max_size, window, walker, budget):
                found.append(ErasurePattern(params, blocks).shifted(-(base - 1)))
    except BudgetExceeded as exc:
        partial = found + [ErasurePattern(params, b).shifted(-(base - 1)) for b in exc.patterns]
        raise BudgetExceeded(str(exc), _dedup(partial)) from None
    return _dedup(found)


def _dedup(patterns: Iterable[ErasurePattern]) -> list[ErasurePattern]:
    seen, out = set(), []
    for pat in patterns:
        if pat.blocks not in seen:
            seen.add(pat.blocks)
            out.append(pat)
    out.sort(key=lambda q: (q.y, [_sort_key(b) for b in sorted(q.blocks, key=_sort_key)]))
    return out


def min_me_size(params: CodeParams, x: int, max_size: int = DEFAULT_MAX_SIZE,
                state_budget: int = DEFAULT_STATE_BUDGET, window: int | None = None) -> int | None:
    """Size of the smallest ME(x), or None when none exists up to ``max_size``.

    Deepens the size bound one step at a time from ``x + ceil(alpha*x/2)``, so
    the first non-empty enumeration is the answer.
    """
    return min_me(params, x, max_size, state_budget, window)[0]


def min_me(params: CodeParams, x: int, max_size: int = DEFAULT_MAX_SIZE,
           state_budget: int = DEFAULT_STATE_BUDGET, window: int | None = None):
    """``(size, patterns of that size)``; ``(None, [])`` when nothing fits."""
    lo = x + math.ceil(params.alpha * x / 2)
    for size in range(lo, max_size + 1):
        pats = enumerate_me(params, window, size, x, state_budget)
        if pats:
            return size, [q for q in pats if q.y == size]
    return None, []


# -- reporting ------------------------------------------------------------------

@dataclass
class MeRow:
    params: CodeParams
    x: int
    min_size: int | None
    pattern_count: int
    example: ErasurePattern | None
    complete: bool

    def row(self) -> dict:
        return {
            "params": str(self.params),
            "x": self.x,
            "min_size": "" if self.min_size is None else self.min_size,
            "pattern_count": self.pattern_count,
            "example_pattern": " ".join(self.example.keys()) if self.example else "",
            "complete_flag": int(self.complete),
        }


def analyze(grid: Sequence[tuple[CodeParams, int]], max_size: int = DEFAULT_MAX_SIZE,
            state_budget: int = DEFAULT_STATE_BUDGET) -> list[MeRow]:
    rows = []
    for params, x in grid:
        try:
            size, pats = min_me(params, x, max_size, state_budget)
            rows.append(MeRow(params, x, size, len(pats), pats[0] if pats else None, True))
        except BudgetExceeded as exc:
            pats = exc.patterns
            size = min((q.y for q in pats), default=None)
            best = [q for q in pats if q.y == size]
            rows.append(MeRow(params, x, size, len(best), best[0] if best else None, False))
    return rows


def to_csv(rows: Iterable[MeRow], out=None) -> str:
    buf = io.StringIO() if out is None else out
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.row())
    return buf.getvalue() if out is None else ""
