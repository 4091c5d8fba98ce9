"""Availability-level models of RS(k,m) stripes and n-way replication.

No finite-field arithmetic happens here: a stripe decodes iff at least ``k`` of
its ``k + m`` blocks are available, which is all the disaster metrics need.
Layouts are column arrays (one row per stripe / replica group) so a million
data blocks stay cheap.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

FULL = "full"
MINIMAL = "minimal"


class RsStripe(NamedTuple):
    stripe: int
    data: tuple  # global data block ids, -1 for padding
    parities: tuple  # global parity ids


@dataclass
class RsLayout:
    k: int
    m: int
    num_data_blocks: int

    def __post_init__(self):
        if self.k <= 0 or self.m < 0:
            raise ValueError(f"RS needs k > 0 and m >= 0 (got k={self.k}, m={self.m})")

    @property
    def num_stripes(self) -> int:
        return -(-self.num_data_blocks // self.k)

    @property
    def width(self) -> int:
        return self.k + self.m

    @property
    def num_parities(self) -> int:
        return self.num_stripes * self.m

    @property
    def padding(self) -> int:
        return self.num_stripes * self.k - self.num_data_blocks

    def real_mask(self) -> np.ndarray:
        """``(stripes, k+m)`` mask, False for zero padding in the last stripe."""
        mask = np.ones((self.num_stripes, self.width), dtype=bool)
        if self.padding:
            mask[-1, self.k - self.padding:self.k] = False
        return mask

    def __len__(self):
        return self.num_stripes

    def __getitem__(self, s) -> RsStripe:
        if not 0 <= s < self.num_stripes:
            raise IndexError(s)
        data = tuple(d if d < self.num_data_blocks else -1
                     for d in range(s * self.k, (s + 1) * self.k))
        par = tuple(range(s * self.m, (s + 1) * self.m))
        return RsStripe(s, data, par)

    @property
    def overhead(self) -> float:
        return 100.0 * self.m / self.k


def rs_layout(num_data_blocks: int, k: int, m: int) -> RsLayout:
    return RsLayout(k, m, num_data_blocks)


@dataclass
class Metrics:
    """Outcome of one scheme under one disaster."""

    data_blocks: int
    unavailable_data: int
    recovered: int
    data_loss: int
    vulnerable: int
    single_failures: int  # data blocks repaired by a single-failure repair
    rounds: list = field(default_factory=list)
    reads: dict = field(default_factory=dict)  # blocks read per repair -> count

    @property
    def single_failure_fraction(self) -> float:
        return self.single_failures / self.recovered if self.recovered else 0.0

    @property
    def round_count(self) -> int:
        """Rounds up to and including the last one that repaired data."""
        nz = [i for i, r in enumerate(self.rounds) if r]
        return nz[-1] + 1 if nz else 0


def rs_repair(layout: RsLayout, unavailable: np.ndarray, mode: str = FULL,
              writeback: bool = False) -> Metrics:
    """Repair every RS stripe of ``layout``.

    ``unavailable`` is a ``(stripes, k+m)`` bool array, data columns first.
    Padding is pinned available.  A stripe with more than ``m`` unavailable
    blocks is damaged: its unavailable data blocks are lost, its other data
    blocks are not.  Each recovered data block is charged ``k`` reads.

    Vulnerable data are surviving data blocks whose stripe has no spare block
    left after repair.  Under full maintenance every decodable stripe is
    rebuilt, so only survivors of damaged stripes qualify.  Under minimal
    maintenance nothing is written back by default: recovered data are
    served from a decode, and a stripe keeps only the blocks that survived
    at their locations.  With ``writeback`` a stripe that lost data is
    rebuilt whole, so only stripes that lost exactly their ``m`` parities
    stay exposed.
    """
    k, m = layout.k, layout.m
    down = unavailable & layout.real_mask()
    lost_per_stripe = down.sum(axis=1)
    data_down = down[:, :k].sum(axis=1)
    ok = lost_per_stripe <= m
    recovered = int(data_down[ok].sum())
    data_loss = int(data_down[~ok].sum())
    real_data = layout.real_mask()[:, :k].sum(axis=1)
    survivors = real_data - data_down
    if mode == FULL:
        vulnerable = int(survivors[~ok].sum())
    elif mode == MINIMAL:
        spare = layout.width - lost_per_stripe - k
        exposed = ok & (spare <= 0)
        if writeback:
            exposed &= data_down == 0
        vulnerable = int(real_data[exposed].sum() + survivors[~ok].sum())
    else:
        raise ValueError(f"unknown maintenance mode {mode!r}")
    single = int(data_down[ok & (lost_per_stripe == 1)].sum())
    return Metrics(
        data_blocks=layout.num_data_blocks,
        unavailable_data=int(data_down.sum()),
        recovered=recovered,
        data_loss=data_loss,
        vulnerable=vulnerable,
        single_failures=single,
        rounds=[recovered] if recovered else [],
        reads={k: recovered} if recovered else {},
    )


@dataclass
class ReplicaLayout:
    n: int
    num_data_blocks: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("replication needs n >= 1")

    @property
    def overhead(self) -> float:
        return 100.0 * (self.n - 1)


class ReplicaGroup(NamedTuple):
    data: int
    locations: tuple
    available: tuple


def replication_layout(num_data_blocks: int, n: int) -> ReplicaLayout:
    return ReplicaLayout(n, num_data_blocks)


def replication_repair(layout: ReplicaLayout, unavailable: np.ndarray, mode: str = FULL) -> Metrics:
    """``unavailable`` is ``(data blocks, n)``; column 0 is the primary copy.

    A block is lost iff every replica is down.  A lost primary is restored
    from any live replica with one read.  Under minimal maintenance no
    replica is re-created, so a block left with a single live copy is
    vulnerable.
    """
    live = (~unavailable).sum(axis=1)
    primary_down = unavailable[:, 0]
    lost = int((live == 0).sum())
    recovered = int((primary_down & (live > 0)).sum())
    if mode == FULL:
        vulnerable = 0 if layout.n > 1 else int((live > 0).sum())
    elif mode == MINIMAL:
        vulnerable = int((live == 1).sum())
    else:
        raise ValueError(f"unknown maintenance mode {mode!r}")
    return Metrics(
        data_blocks=layout.num_data_blocks,
        unavailable_data=int(primary_down.sum()),
        recovered=recovered,
        data_loss=lost,
        vulnerable=vulnerable,
        single_failures=recovered,
        rounds=[recovered] if recovered else [],
        reads={1: recovered} if recovered else {},
    )


def storage_overhead(scheme: str, **params) -> float:
    """Additional storage in percent: m/k, alpha or n-1 times 100%."""
    if scheme == "rs":
        return 100.0 * params["m"] / params["k"]
    if scheme == "ae":
        return 100.0 * params["alpha"]
    if scheme == "replication":
        return 100.0 * (params["n"] - 1)
    raise ValueError(f"unknown scheme {scheme!r}")
