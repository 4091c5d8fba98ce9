"""Index arithmetic for the helical lattice built by AE(alpha, s, p).

Nodes are data blocks ``d_i`` (1-based), edges are parity blocks ``p_{i,j}``.
Every edge belongs to exactly one strand; a strand of class ``H``, ``RH`` or
``LH`` alternates data and parity blocks.  Nothing in this module touches
payloads.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np


class ParameterError(ValueError):
    """Base class for invalid code settings."""


class InvalidAlpha(ParameterError):
    pass


class DeformedLattice(ParameterError):
    pass


class BadSingle(ParameterError):
    pass


class OutOfLattice(LookupError):
    """Raised when an input parity would precede the head of its strand."""


class StrandClass(enum.Enum):
    H = "h"
    RH = "rh"
    LH = "lh"

    def __repr__(self):
        return self.name


class NodeCategory(enum.Enum):
    TOP = "top"
    CENTRAL = "central"
    BOTTOM = "bottom"


CLASS_ORDER = (StrandClass.H, StrandClass.RH, StrandClass.LH)


@dataclass(frozen=True)
class CodeParams:
    alpha: int
    s: int
    p: int

    def __post_init__(self):
        _check(self.alpha, self.s, self.p)

    @property
    def strand_count(self) -> int:
        return self.s + (self.alpha - 1) * self.p

    @property
    def classes(self) -> tuple[StrandClass, ...]:
        return CLASS_ORDER[: self.alpha]

    @property
    def coincident_helices(self) -> bool:
        # with one row, RH and LH strands join the same pair of nodes
        return self.alpha == 3 and self.s == 1

    def __str__(self):
        if self.alpha == 1:
            return "AE(1,-,-)"
        return f"AE({self.alpha},{self.s},{self.p})"


def validate_params(alpha: int, s: int, p: int) -> CodeParams:
    """Check a code setting; return a :class:`CodeParams` or raise a
    :class:`ParameterError` naming the violated rule."""
    return CodeParams(alpha, s, p)


def _check(alpha, s, p):
    if isinstance(alpha, bool) or alpha not in (1, 2, 3):
        raise InvalidAlpha(f"alpha must be 1, 2 or 3 (got {alpha!r})")
    if alpha == 1:
        if s != 1 or p != 0:
            raise BadSingle(f"single entanglement requires s=1 and p=0 (got s={s}, p={p})")
    elif s < 1 or p < s:
        raise DeformedLattice(f"p < s deforms the lattice (got s={s}, p={p})")


class Node(NamedTuple):
    i: int

    def __str__(self):
        return f"d{self.i}"


class Edge(NamedTuple):
    """Parity ``p_{i,j}``.  ``cls`` is the strand class that produced it."""

    i: int
    j: int
    cls: StrandClass

    def __str__(self):
        return f"p{self.i}-{self.j}"


BlockId = Union[Node, Edge]


def block_key(block: BlockId, params: CodeParams) -> str:
    """Canonical string id: ``d<i>`` or ``p<i>-<j>``.

    When two strand classes join the same pair of nodes (e.g. s=1 with
    alpha=3, or s=p) both parities get a class suffix, ``p<i>-<j>.<cls>``,
    so they stay distinct.
    """
    if isinstance(block, Node):
        return f"d{block.i}"
    if shares_endpoints(block, params):
        return f"p{block.i}-{block.j}.{block.cls.value}"
    return f"p{block.i}-{block.j}"


def shares_endpoints(edge: "Edge", params: CodeParams) -> bool:
    return any(c is not edge.cls and output_parity_index(edge.i, c, params) == edge.j
               for c in params.classes)


def parse_key(key: str, params: CodeParams) -> BlockId:
    if key.startswith("d"):
        return Node(int(key[1:]))
    if not key.startswith("p"):
        raise ValueError(f"bad block key {key!r}")
    body, _, suffix = key[1:].partition(".")
    i, j = (int(v) for v in body.split("-"))
    if suffix:
        e = Edge(i, j, StrandClass(suffix))
        if e.cls not in params.classes or output_parity_index(i, e.cls, params) != j:
            raise ValueError(f"{key!r} is not an edge of {params}")
        return e
    for c in params.classes:
        if output_parity_index(i, c, params) == j:
            return Edge(i, j, c)
    raise ValueError(f"{key!r} is not an edge of {params}")


def node_category(i: int, params: CodeParams) -> NodeCategory:
    """Top iff i = 1 (mod s), bottom iff i = 0 (mod s).

    With s=1 every node is both top and bottom; the rule functions handle that
    case directly and this returns BOTTOM.
    """
    r = i % params.s
    if params.s > 1 and r == 1:
        return NodeCategory.TOP
    if r == 0:
        return NodeCategory.BOTTOM
    return NodeCategory.CENTRAL


def _is_top(i, s):
    return i % s == 1 % s


def _is_bottom(i, s):
    return i % s == 0


def _input_index(i, cls, s, p):
    if cls is StrandClass.H:
        return i - s
    if cls is StrandClass.RH:
        if _is_top(i, s):
            return i - s * p + (s * s - 1)
        return i - (s + 1)
    # LH
    if _is_bottom(i, s):
        return i - s * p + (s - 1) ** 2
    return i - (s - 1)


def _output_index(i, cls, s, p):
    if cls is StrandClass.H:
        return i + s
    if cls is StrandClass.RH:
        if _is_bottom(i, s):
            return i + s * p - (s * s - 1)
        return i + s + 1
    # LH
    if _is_top(i, s):
        return i + s * p - (s - 1) ** 2
    return i + s - 1


def input_parity_index(i: int, cls: StrandClass, params: CodeParams) -> int:
    """Index h such that d_i is tangled with p_{h,i} on a strand of ``cls``.

    Raises :class:`OutOfLattice` when d_i starts its strand.
    """
    h = _input_index(i, cls, params.s, params.p)
    if h < 1:
        raise OutOfLattice(f"d{i} heads its {cls.name} strand")
    return h


def output_parity_index(i: int, cls: StrandClass, params: CodeParams) -> int:
    """Index j such that entangling d_i creates p_{i,j}."""
    return _output_index(i, cls, params.s, params.p)


def input_edge(i: int, cls: StrandClass, params: CodeParams) -> Edge | None:
    """The parity feeding d_i on ``cls``, or None at a strand head."""
    h = _input_index(i, cls, params.s, params.p)
    if h < 1:
        return None
    return Edge(h, i, cls)


def output_edge(i: int, cls: StrandClass, params: CodeParams) -> Edge:
    return Edge(i, _output_index(i, cls, params.s, params.p), cls)


class Tuple(NamedTuple):
    """The two parities adjacent to a node on one strand (a pp-tuple)."""

    cls: StrandClass
    inp: Edge | None
    out: Edge

    @property
    def is_head(self) -> bool:
        return self.inp is None


def incident_tuples(i: int, params: CodeParams) -> dict[StrandClass, Tuple]:
    return {
        c: Tuple(c, input_edge(i, c, params), output_edge(i, c, params))
        for c in params.classes
    }


def strand_id_of(i: int, cls: StrandClass, params: CodeParams) -> int:
    """1-based index of the strand of ``cls`` through d_i.

    H strands are numbered by row.  Helical strands are numbered by the
    column (mod p) where they cross the top row (RH) or bottom row (LH).
    """
    s, p = params.s, params.p
    if cls is StrandClass.H:
        return (i - 1) % s + 1
    on_row = _is_top if cls is StrandClass.RH else _is_bottom
    node = i
    while not on_row(node, s):
        node = _output_index(node, cls, s, p)
    col = (node - 1) // s
    return col % p + 1


def strand_nodes(start: int, cls: StrandClass, params: CodeParams, stop: int) -> list[int]:
    """Nodes met walking the strand of ``cls`` forward from d_start up to d_stop."""
    out = []
    node = start
    while node <= stop:
        out.append(node)
        node = _output_index(node, cls, params.s, params.p)
    return out


def strand_step(node: int, cls: StrandClass, params: CodeParams, forward: bool = True) -> int:
    """Neighbour of d_node along ``cls``; may return < 1 walking backward."""
    if forward:
        return _output_index(node, cls, params.s, params.p)
    return _input_index(node, cls, params.s, params.p)


def index_tables(params: CodeParams, n: int):
    """Vectorised input/output indices for nodes 1..n.

    Returns ``(inp, out)``, each an ``(alpha, n + 1)`` int64 array indexed by
    class position and node (column 0 unused).  Input indices below 1 mark
    strand heads.
    """
    s, p = params.s, params.p
    i = np.arange(n + 1, dtype=np.int64)
    top = i % s == 1 % s
    bottom = i % s == 0
    inp = np.empty((params.alpha, n + 1), dtype=np.int64)
    out = np.empty_like(inp)
    inp[0] = i - s
    out[0] = i + s
    if params.alpha >= 2:
        inp[1] = np.where(top, i - s * p + (s * s - 1), i - (s + 1))
        out[1] = np.where(bottom, i + s * p - (s * s - 1), i + s + 1)
    if params.alpha >= 3:
        inp[2] = np.where(bottom, i - s * p + (s - 1) ** 2, i - (s - 1))
        out[2] = np.where(top, i + s * p - (s - 1) ** 2, i + s - 1)
    return inp, out
