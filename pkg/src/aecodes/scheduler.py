"""Sealed-bucket write scheduling.

A bucket is a data block plus its ``alpha`` parities.  Blocks are written one
lattice column (``s`` blocks) at a time; the writer keeps in memory only the
parities produced by the previous column, so a full-write needs O(N) memory
for the N parities it computes.  When ``s == p`` every input a column needs was
produced by the column before it and all buckets seal immediately.  When
``p > s`` the helical wrap-around inputs are older than that and the writer
either fetches them (``policy="full"``) or writes the bucket partially and
seals it one batch later (``policy="partial"``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .lattice import CodeParams, input_edge


@dataclass
class Batch:
    index: int
    blocks: list
    sealed: list = field(default_factory=list)  # buckets sealed in this batch
    partial: list = field(default_factory=list)  # buckets written without all parities
    fetched: list = field(default_factory=list)  # input parities read back from storage


@dataclass
class Schedule:
    params: CodeParams
    policy: str
    batches: list
    sealed_at: dict  # node -> batch index where its bucket sealed
    computed_at: dict  # (node, class) -> batch index where that parity was computed
    memory_parities: int

    @property
    def fully_sealed_batches(self) -> int:
        return sum(1 for b in self.batches if not b.partial and not b.fetched)

    @property
    def deferred(self) -> list:
        return [n for b in self.batches for n in b.partial]


def write_scheduler(pending, params: CodeParams, start: int = 0, policy: str = "partial") -> Schedule:
    """Plan how the data blocks in ``pending`` become sealed buckets.

    ``pending`` is a sequence of blocks (only its length matters) or a block
    count; ``start`` is the lattice counter before the first of them.
    """
    if policy not in ("partial", "full"):
        raise ValueError(f"unknown policy {policy!r}")
    count = pending if isinstance(pending, int) else len(pending)
    nodes = list(range(start + 1, start + count + 1))
    s = params.s
    batches = []
    produced: dict = {}  # (node, class) -> batch index
    computed_at: dict = {}
    sealed_at: dict = {}
    carry: list = []  # partial buckets waiting for a fetched input

    # group by lattice column so a batch never straddles two columns
    groups: list[list[int]] = []
    for i in nodes:
        col = (i - 1) // s
        if groups and (groups[-1][0] - 1) // s == col:
            groups[-1].append(i)
        else:
            groups.append([i])

    for b, group in enumerate(groups):
        batch = Batch(b, group)
        for i, cls in carry:
            batch.fetched.append(input_edge(i, cls, params))
            computed_at[(i, cls)] = b
        for i in {i for i, _ in carry}:
            if all((i, c) in computed_at for c in params.classes):
                sealed_at[i] = b
                batch.sealed.append(i)
        carry = []
        for i in group:
            missing = []
            for c in params.classes:
                e = input_edge(i, c, params)
                in_memory = e is None or produced.get((e.i, c)) == b - 1
                if in_memory:
                    computed_at[(i, c)] = b
                elif policy == "full":
                    batch.fetched.append(e)
                    computed_at[(i, c)] = b
                else:
                    missing.append(c)
            if missing:
                batch.partial.append(i)
                carry.extend((i, c) for c in missing)
            else:
                sealed_at[i] = b
                batch.sealed.append(i)
        for i in group:
            for c in params.classes:
                produced[(i, c)] = b
        batches.append(batch)

    if carry:
        b = len(batches)
        batch = Batch(b, [])
        for i, cls in carry:
            batch.fetched.append(input_edge(i, cls, params))
            computed_at[(i, cls)] = b
        for i in sorted({i for i, _ in carry}):
            sealed_at[i] = b
            batch.sealed.append(i)
        batches.append(batch)

    return Schedule(params, policy, batches, sealed_at, computed_at, params.alpha * s)
