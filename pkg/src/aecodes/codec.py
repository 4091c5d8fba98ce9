"""Streaming entangler, single-block repair and round-based global repair.

Payloads are ``bytes`` of one fixed length per lattice.  A block store may
also run without payloads (``None``) when only availability matters, which is
how the minimal-erasure oracle uses it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .lattice import (
    BlockId,
    CodeParams,
    Edge,
    Node,
    StrandClass,
    block_key,
    input_edge,
    output_edge,
    strand_id_of,
)

log = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 4096
FULL = "full"
MINIMAL = "minimal"
SNAPSHOT = "snapshot"
SWEEP = "sweep"


class Unrecoverable(Exception):
    """No complete tuple is available for the block this round."""


def xor(a: bytes, b: bytes) -> bytes:
    return np.bitwise_xor(
        np.frombuffer(a, dtype=np.uint8), np.frombuffer(b, dtype=np.uint8)
    ).tobytes()


@dataclass
class LatticeState:
    block_size: int = DEFAULT_BLOCK_SIZE
    counter: int = 0
    heads: dict = field(default_factory=dict)  # (StrandClass, strand id) -> bytes

    def copy(self) -> "LatticeState":
        return LatticeState(self.block_size, self.counter, dict(self.heads))


def entangle(data: bytes, state: LatticeState, params: CodeParams):
    """Entangle the next data block.

    Returns ``(node, parities, new_state)`` where ``parities`` lists the
    ``alpha`` new ``(Edge, payload)`` pairs.  A strand without a previous
    parity starts from an all-zero block, so its first parity equals the data.
    """
    if len(data) != state.block_size:
        raise ValueError(f"payload is {len(data)} bytes, lattice uses {state.block_size}")
    new = state.copy()
    new.counter += 1
    i = new.counter
    parities = []
    for c in params.classes:
        key = (c, strand_id_of(i, c, params))
        prev = new.heads.get(key)
        parity = data if prev is None else xor(data, prev)
        new.heads[key] = parity
        parities.append((output_edge(i, c, params), parity))
    return Node(i), parities, new


@dataclass
class Record:
    payload: Optional[bytes]
    available: bool = True
    repaired: bool = False
    location: int = -1


class BlockStore:
    """Payloads, availability and repair flags keyed by :data:`BlockId`.

    ``counter`` is the number of entangled data blocks: nodes above it and the
    parities they would have fed do not exist.  With ``pin_outside`` set,
    blocks missing from the table count as available (used for bounded
    windows cut out of a longer lattice).
    """

    def __init__(self, params: CodeParams, counter: int = 0,
                 block_size: int = DEFAULT_BLOCK_SIZE, pin_outside: bool = False):
        self.params = params
        self.counter = counter
        self.block_size = block_size
        self.pin_outside = pin_outside
        self.records: dict[BlockId, Record] = {}

    def __len__(self):
        return len(self.records)

    def __contains__(self, block):
        return block in self.records

    def __getitem__(self, block) -> Record:
        return self.records[block]

    def put(self, block: BlockId, payload: Optional[bytes], location: int = -1):
        self.records[block] = Record(payload, True, False, location)

    def exists(self, block: BlockId) -> bool:
        # p_{i,j} is written together with d_i
        return block.i <= self.counter

    def available(self, block: Optional[BlockId]) -> bool:
        """``None`` stands for the virtual zero parity at a strand head."""
        if block is None:
            return True
        rec = self.records.get(block)
        if rec is not None:
            return rec.available
        return self.pin_outside and self.exists(block)

    def payload(self, block: Optional[BlockId]) -> Optional[bytes]:
        if block is None:
            return bytes(self.block_size)
        rec = self.records.get(block)
        return None if rec is None else rec.payload

    def erase(self, blocks: Iterable[BlockId]):
        for b in blocks:
            rec = self.records.get(b)
            if rec is None:
                rec = self.records[b] = Record(None)
            rec.available = False
            rec.repaired = False
            if rec.payload is not None:
                rec.payload = None

    def missing(self) -> list[BlockId]:
        return [b for b, r in self.records.items() if not r.available]

    def keys(self):
        return (block_key(b, self.params) for b in self.records)

    @classmethod
    def from_stream(cls, blocks: Iterable[bytes], params: CodeParams,
                    block_size: int = DEFAULT_BLOCK_SIZE):
        """Entangle ``blocks`` in order and store every data and parity block."""
        store = cls(params, 0, block_size)
        state = LatticeState(block_size)
        for data in blocks:
            node, parities, state = entangle(data, state, params)
            store.put(node, data)
            for edge, payload in parities:
                store.put(edge, payload)
        store.counter = state.counter
        return store, state

    @classmethod
    def window(cls, params: CodeParams, first: int, last: int, counter: int | None = None):
        """Payload-free store holding nodes ``first..last`` and their output edges."""
        store = cls(params, counter if counter is not None else last, 0, pin_outside=True)
        for i in range(first, last + 1):
            store.put(Node(i), None)
            for c in params.classes:
                store.put(output_edge(i, c, params), None)
        return store


class Repair(NamedTuple):
    block: BlockId
    payload: Optional[bytes]
    sources: tuple  # blocks read; the virtual zero head is not a read


def _combine(store, a, b):
    pa, pb = store.payload(a), store.payload(b)
    if pa is None or pb is None:
        return None
    return xor(pa, pb)


def repair_node(i: int, store: BlockStore, params: CodeParams, snapshot=None) -> Repair:
    """Rebuild d_i from the first complete pp-tuple, trying H, RH, LH in order."""
    avail = store.available if snapshot is None else snapshot
    for c in params.classes:
        inp = input_edge(i, c, params)
        out = output_edge(i, c, params)
        if avail(inp) and avail(out):
            sources = (out,) if inp is None else (inp, out)
            return Repair(Node(i), _combine(store, inp, out), sources)
    raise Unrecoverable(f"d{i}")


def repair_edge(edge: Edge, store: BlockStore, params: CodeParams, snapshot=None) -> Repair:
    """Rebuild p_{i,j} from d_i and its input parity, else from d_j and its output."""
    avail = store.available if snapshot is None else snapshot
    i, j, c = edge
    left_node, left_edge = Node(i), input_edge(i, c, params)
    if avail(left_node) and avail(left_edge):
        sources = (left_node,) if left_edge is None else (left_node, left_edge)
        return Repair(edge, _combine(store, left_node, left_edge), sources)
    right_node, right_edge = Node(j), output_edge(j, c, params)
    if avail(right_node) and avail(right_edge):
        return Repair(edge, _combine(store, right_node, right_edge), (right_node, right_edge))
    raise Unrecoverable(str(edge))


def repair_block(block: BlockId, store: BlockStore, params: CodeParams, snapshot=None) -> Repair:
    if isinstance(block, Node):
        return repair_node(block.i, store, params, snapshot)
    return repair_edge(block, store, params, snapshot)


@dataclass
class RepairReport:
    rounds: list  # blocks repaired per round, ending with the round that repaired none
    data_rounds: list  # data blocks repaired per round
    reads: dict  # blocks read -> number of repairs
    unrecovered: list

    @property
    def round_count(self) -> int:
        """Rounds that repaired at least one block."""
        return sum(1 for n in self.rounds if n)


def needed_parities(store: BlockStore, params: CodeParams, missing) -> set:
    """Missing parities that some missing data block depends on.

    Seeds are missing parities with a missing node at either end; a needed
    parity also needs the missing parities next to it on its strand.
    """
    missing_set = set(missing)
    nodes = {b.i for b in missing if isinstance(b, Node)}
    need = {b for b in missing if isinstance(b, Edge) and (b.i in nodes or b.j in nodes)}
    todo = list(need)
    while todo:
        e = todo.pop()
        for nb in (input_edge(e.i, e.cls, params), output_edge(e.j, e.cls, params)):
            if nb is not None and nb in missing_set and nb not in need:
                need.add(nb)
                todo.append(nb)
    return need


def _lattice_order(block, params: CodeParams):
    if isinstance(block, Node):
        return (block.i, -1)
    return (block.i, params.classes.index(block.cls))


def repair_all(store: BlockStore, params: CodeParams, mode: str = FULL,
               max_rounds: int = 100, order: str = SNAPSHOT) -> RepairReport:
    """Repair rounds until a fixpoint or ``max_rounds``.

    With ``order="snapshot"`` a round reads only blocks that were available
    when it started and its repairs land together at the end.  With
    ``order="sweep"`` the round visits missing blocks in lattice order (d_i,
    then its output parities) and a block repaired early in the round can be
    read later in the same round.  In ``minimal`` mode a parity is attempted
    only while a missing data block depends on it (see
    :func:`needed_parities`).
    """
    if mode not in (FULL, MINIMAL):
        raise ValueError(f"unknown maintenance mode {mode!r}")
    if order not in (SNAPSHOT, SWEEP):
        raise ValueError(f"unknown round order {order!r}")
    rounds, data_rounds = [], []
    reads: dict[int, int] = {}

    def commit(rep):
        rec = store.records[rep.block]
        rec.payload = rep.payload
        rec.available = True
        rec.repaired = True
        n = len(rep.sources)
        reads[n] = reads.get(n, 0) + 1

    for _ in range(max_rounds):
        missing = sorted(store.missing(), key=lambda b: _lattice_order(b, params))
        missing_set = set(missing)
        needed = needed_parities(store, params, missing) if mode == MINIMAL else None

        def snapshot(b, _missing=missing_set):
            if b is None:
                return True
            if b in _missing:
                return False
            return store.available(b)

        done = []
        for block in missing:
            if needed is not None and isinstance(block, Edge) and block not in needed:
                continue
            try:
                rep = repair_block(block, store, params, snapshot if order == SNAPSHOT else None)
            except Unrecoverable:
                continue
            done.append(rep)
            if order == SWEEP:
                commit(rep)
        if order == SNAPSHOT:
            for rep in done:
                commit(rep)
        rounds.append(len(done))
        data_rounds.append(sum(1 for r in done if isinstance(r.block, Node)))
        if not done:
            break
    unrecovered = store.missing()
    log.debug("repair_all: rounds=%s unrecovered=%d", rounds, len(unrecovered))
    return RepairReport(rounds, data_rounds, reads, unrecovered)


def tamper_set(i: int, window_end: int, params: CodeParams) -> set[Edge]:
    """Parities an attacker must rewrite to change d_i undetected.

    For each strand through d_i: every parity from d_i's output up to the
    last node ``<= window_end`` on that strand.
    """
    if i > window_end:
        raise ValueError("i must not exceed window_end")
    out = set()
    for c in params.classes:
        node = i
        while node <= window_end:
            e = output_edge(node, c, params)
            out.add(e)
            node = e.j
    return out
