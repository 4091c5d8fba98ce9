"""Disaster-recovery scenarios: random placement of every block over ``n``
locations, failure of a random subset of locations, scheme-specific repair,
and the resulting metrics.

Randomness comes from one ``numpy.random.SeedSequence`` per scenario, split
into two child streams: child 0 drives block placement, child 1 picks the
failed locations.  PCG64 streams are identical on every platform.
"""
from __future__ import annotations

import csv
import io
import logging
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import baselines
from .baselines import FULL, MINIMAL, Metrics
from .lattice import CodeParams, index_tables

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

log = logging.getLogger(__name__)

DESK_SCALE = 100_000
LARGE_SCALE = 1_000_000
DEFAULT_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5)
SNAPSHOT = "snapshot"
SWEEP = "sweep"

CSV_COLUMNS = ("scheme", "alpha", "s", "p", "k", "m", "n_locations", "fraction",
               "seed", "data_loss", "vulnerable", "sf_fraction", "rounds", "wall_time_ms")


class Scheme(NamedTuple):
    """``kind`` is ``"ae"``, ``"rs"`` or ``"replication"``."""

    kind: str
    alpha: int = 0
    s: int = 0
    p: int = 0
    k: int = 0
    m: int = 0
    n: int = 0

    @classmethod
    def ae(cls, alpha, s=1, p=0):
        CodeParams(alpha, s, p)
        return cls("ae", alpha=alpha, s=s, p=p)

    @classmethod
    def rs(cls, k, m):
        baselines.RsLayout(k, m, 0)
        return cls("rs", k=k, m=m)

    @classmethod
    def replication(cls, n):
        baselines.ReplicaLayout(n, 0)
        return cls("replication", n=n)

    @property
    def params(self) -> CodeParams:
        return CodeParams(self.alpha, self.s, self.p)

    @property
    def overhead(self) -> float:
        if self.kind == "ae":
            return baselines.storage_overhead("ae", alpha=self.alpha)
        if self.kind == "rs":
            return baselines.storage_overhead("rs", k=self.k, m=self.m)
        return baselines.storage_overhead("replication", n=self.n)

    def __str__(self):
        if self.kind == "ae":
            return str(self.params)
        if self.kind == "rs":
            return f"RS({self.k},{self.m})"
        return f"{self.n}-way replication"


DEFAULT_SCHEMES = (
    Scheme.rs(10, 4), Scheme.rs(8, 2), Scheme.rs(5, 5), Scheme.rs(4, 12),
    Scheme.ae(1), Scheme.ae(2, 2, 5), Scheme.ae(3, 2, 5),
    Scheme.replication(2), Scheme.replication(3), Scheme.replication(4),
)


# -- placement -----------------------------------------------------------------

@dataclass
class Placement:
    """Location of every block, one array per block family.

    For AE ``nodes`` has shape ``(N + 1,)`` and ``edges`` ``(alpha, N + 1)``
    (index 0 unused).  For RS ``stripes`` is ``(stripes, k + m)``; for
    replication ``replicas`` is ``(N, n)``.
    """

    n: int
    seed: int
    arrays: dict

    def counts(self) -> np.ndarray:
        """Blocks per location."""
        a = self.arrays
        if "nodes" in a:
            flat = [a["nodes"][1:], a["edges"][:, 1:]]
        elif "stripes" in a:
            flat = [a["stripes"][a["mask"]]]
        else:
            flat = [a["replicas"]]
        return sum(np.bincount(x.ravel(), minlength=self.n) for x in flat)

    def stripe_spread(self) -> dict:
        """Histogram: distinct locations per stripe -> number of stripes."""
        st = np.sort(self.arrays["stripes"], axis=1)
        distinct = 1 + (np.diff(st, axis=1) != 0).sum(axis=1)
        vals, cnt = np.unique(distinct, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, cnt)}


def _streams(seed: int):
    ss = np.random.SeedSequence(seed)
    place, disaster = ss.spawn(2)
    return np.random.Generator(np.random.PCG64(place)), np.random.Generator(np.random.PCG64(disaster))


def place(scheme: Scheme, num_data_blocks: int, n: int, seed: int) -> Placement:
    """Assign every block of ``scheme`` a uniform random location in ``[0, n)``."""
    if n < 2:
        raise ValueError("need at least 2 locations")
    rng, _ = _streams(seed)
    return _place(scheme, num_data_blocks, n, seed, rng)


def _place(scheme, num_data_blocks, n, seed, rng):
    if scheme.kind == "ae":
        N = num_data_blocks
        nodes = rng.integers(0, n, size=N + 1)
        edges = rng.integers(0, n, size=(scheme.alpha, N + 1))
        return Placement(n, seed, {"nodes": nodes, "edges": edges})
    if scheme.kind == "rs":
        layout = baselines.rs_layout(num_data_blocks, scheme.k, scheme.m)
        stripes = rng.integers(0, n, size=(layout.num_stripes, layout.width))
        return Placement(n, seed, {"stripes": stripes, "mask": layout.real_mask()})
    if scheme.kind == "replication":
        reps = rng.integers(0, n, size=(num_data_blocks, scheme.n))
        return Placement(n, seed, {"replicas": reps})
    raise ValueError(f"unknown scheme {scheme.kind!r}")


def disaster(n: int, fraction: float, rng) -> np.ndarray:
    """Boolean mask of failed locations, exactly ``round(fraction * n)`` of them."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    down = np.zeros(n, dtype=bool)
    count = int(round(fraction * n))
    down[rng.choice(n, size=count, replace=False)] = True
    return down


# -- AE availability engine ------------------------------------------------------

class AeLattice:
    """Availability-only lattice of ``N`` nodes for fast round-based repair.

    Mirrors :func:`aecodes.codec.repair_all` on boolean arrays: node ``i`` and
    edge ``(i, c)`` (the parity d_i emits on class ``c``) are indexed by ``i``.
    """

    def __init__(self, params: CodeParams, N: int):
        self.params = params
        self.N = N
        self.inp, self.out = index_tables(params, N)
        self.head = self.inp < 1
        self.inp_c = np.where(self.head, 0, self.inp)
        self.has_right = self.out <= N
        self.out_c = np.where(self.has_right, self.out, 0)

    def repair(self, node_up: np.ndarray, edge_up: np.ndarray, mode: str = FULL,
               max_rounds: int = 100, order: str = SWEEP):
        """Run repair rounds in place; returns a per-round report.

        ``order="snapshot"`` reads only blocks available at the start of a
        round.  ``order="sweep"`` visits blocks in lattice order and lets a
        repair feed later repairs of the same round.
        """
        if mode not in (FULL, MINIMAL):
            raise ValueError(f"unknown maintenance mode {mode!r}")
        if order not in (SNAPSHOT, SWEEP):
            raise ValueError(f"unknown round order {order!r}")
        node_up[0] = True
        edge_up[:, 0] = True
        rounds, data_rounds = [], []
        head_reads = 0
        for _ in range(max_rounds):
            allowed = self.needed_edges(node_up, edge_up) if mode == MINIMAL else ~edge_up
            if order == SNAPSHOT:
                nf, ef, hr = self._snapshot_round(node_up, edge_up, allowed)
            else:
                nf, ef, hr = _sweep_round(node_up, edge_up, allowed, self.inp_c, self.out_c,
                                          self.head, self.has_right)
            head_reads += hr
            rounds.append(nf + ef)
            data_rounds.append(nf)
            if nf + ef == 0:
                break
        total = sum(rounds)
        return {
            "rounds": rounds,
            "data_rounds": data_rounds,
            "first_round_data": data_rounds[0] if data_rounds else 0,
            "reads": {2: total - head_reads, 1: head_reads} if head_reads else {2: total},
        }

    def direct_repairable(self, node_up: np.ndarray, edge_up: np.ndarray) -> np.ndarray:
        """Unavailable nodes with a complete tuple, i.e. single failures."""
        ok = np.zeros_like(node_up)
        for c in range(self.params.alpha):
            ok |= (self.head[c] | edge_up[c][self.inp_c[c]]) & edge_up[c]
        return ~node_up & ok

    def _snapshot_round(self, node_up, edge_up, allowed):
        A = self.params.alpha
        na = node_up.copy()
        ea = edge_up.copy()
        in_ok = np.empty_like(ea)
        right_ok = np.empty_like(ea)
        for c in range(A):
            in_ok[c] = self.head[c] | ea[c][self.inp_c[c]]
            right_ok[c] = self.has_right[c] & na[self.out_c[c]] & ea[c][self.out_c[c]]
        tuple_ok = in_ok & ea
        fix_node = ~na & tuple_ok.any(axis=0)
        left_ok = na & in_ok
        fix_edge = allowed & ~ea & (left_ok | right_ok)
        # repairs that read the virtual zero head read one real block
        first = tuple_ok.argmax(axis=0)
        head_node = fix_node & np.take_along_axis(self.head, first[None], 0)[0]
        head_edge = fix_edge & left_ok & self.head
        node_up |= fix_node
        edge_up |= fix_edge
        return int(fix_node.sum()), int(fix_edge.sum()), int(head_node.sum() + head_edge.sum())

    def needed_edges(self, na: np.ndarray, ea: np.ndarray) -> np.ndarray:
        """Missing parities some missing data block depends on.

        Seeds are missing parities touching a missing node; dependence then
        runs along each strand through further missing parities.
        """
        A = self.params.alpha
        right_missing = self.has_right & ~na[self.out_c]
        need = ~ea & (~na | right_missing)
        need[:, 0] = False
        while True:
            grow = np.zeros_like(need)
            for c in range(A):
                # a needed parity pulls in its neighbours on the same strand
                src = np.flatnonzero(need[c])
                left = self.inp_c[c][src]
                grow[c][left[~self.head[c][src]]] = True
                right = self.out_c[c][src]
                grow[c][right[self.has_right[c][src]]] = True
            grow &= ~ea & ~need
            grow[:, 0] = False
            if not grow.any():
                return need
            need |= grow

    def vulnerable(self, node_up: np.ndarray, edge_up: np.ndarray) -> int:
        """Live data blocks with no live parity among their incident edges."""
        live_parity = np.zeros(self.N + 1, dtype=bool)
        for c in range(self.params.alpha):
            live_parity |= (~self.head[c]) & edge_up[c][self.inp_c[c]]
            live_parity |= edge_up[c]
        v = node_up & ~live_parity
        v[0] = False
        return int(v.sum())


def _sweep_round_py(node_up, edge_up, allowed, inp, out, head, has_right):
    A, n1 = edge_up.shape
    nf = ef = hr = 0
    for i in range(1, n1):
        if not node_up[i]:
            for c in range(A):
                if (head[c, i] or edge_up[c, inp[c, i]]) and edge_up[c, i]:
                    node_up[i] = True
                    nf += 1
                    if head[c, i]:
                        hr += 1
                    break
        for c in range(A):
            if edge_up[c, i] or not allowed[c, i]:
                continue
            if node_up[i] and (head[c, i] or edge_up[c, inp[c, i]]):
                edge_up[c, i] = True
                ef += 1
                if head[c, i]:
                    hr += 1
            elif has_right[c, i] and node_up[out[c, i]] and edge_up[c, out[c, i]]:
                edge_up[c, i] = True
                ef += 1
    return nf, ef, hr


_sweep_round = numba.njit(cache=True)(_sweep_round_py) if numba else _sweep_round_py


def ae_repair(params: CodeParams, node_down: np.ndarray, edge_down: np.ndarray,
              mode: str = FULL, max_rounds: int = 100, lattice: AeLattice | None = None,
              order: str = SWEEP) -> Metrics:
    N = len(node_down) - 1
    lat = lattice or AeLattice(params, N)
    node_up = ~node_down
    edge_up = ~edge_down
    node_up[0] = True
    edge_up[:, 0] = True
    unavailable = int((~node_up[1:]).sum())
    single = int(lat.direct_repairable(node_up, edge_up)[1:].sum())
    rep = lat.repair(node_up, edge_up, mode, max_rounds, order)
    loss = int((~node_up[1:]).sum())
    return Metrics(
        data_blocks=N,
        unavailable_data=unavailable,
        recovered=unavailable - loss,
        data_loss=loss,
        vulnerable=lat.vulnerable(node_up, edge_up),
        single_failures=single,
        rounds=rep["data_rounds"],
        reads=rep["reads"],
    )


# -- scenarios --------------------------------------------------------------------

class ScenarioMetrics(NamedTuple):
    scheme: Scheme
    n: int
    fraction: float
    seed: int
    mode: str
    metrics: Metrics
    wall_time_ms: float

    @property
    def data_loss(self):
        return self.metrics.data_loss

    @property
    def vulnerable_data(self):
        return self.metrics.vulnerable

    @property
    def single_failure_fraction(self):
        return self.metrics.single_failure_fraction

    @property
    def rounds(self):
        return self.metrics.rounds

    def row(self) -> dict:
        sc = self.scheme
        return {
            "scheme": sc.kind, "alpha": sc.alpha, "s": sc.s, "p": sc.p,
            "k": sc.k if sc.kind == "rs" else sc.n, "m": sc.m,
            "n_locations": self.n, "fraction": f"{self.fraction:.2f}", "seed": self.seed,
            "data_loss": self.metrics.data_loss, "vulnerable": self.metrics.vulnerable,
            "sf_fraction": f"{self.metrics.single_failure_fraction:.6f}",
            "rounds": self.metrics.round_count, "wall_time_ms": f"{self.wall_time_ms:.1f}",
        }


def run_scenario(scheme: Scheme, num_data_blocks: int = DESK_SCALE, n: int = 100,
                 fraction: float = 0.1, seed: int = 0, mode: str = FULL,
                 max_rounds: int = 100, order: str = SWEEP) -> ScenarioMetrics:
    """Place, fail ``round(fraction * n)`` locations, repair, measure."""
    t0 = time.perf_counter()
    rng_place, rng_disaster = _streams(seed)
    pl = _place(scheme, num_data_blocks, n, seed, rng_place)
    down = disaster(n, fraction, rng_disaster)
    if scheme.kind == "ae":
        node_down = down[pl.arrays["nodes"]]
        edge_down = down[pl.arrays["edges"]]
        metrics = ae_repair(scheme.params, node_down, edge_down, mode, max_rounds, order=order)
    elif scheme.kind == "rs":
        layout = baselines.rs_layout(num_data_blocks, scheme.k, scheme.m)
        metrics = baselines.rs_repair(layout, down[pl.arrays["stripes"]], mode)
    else:
        layout = baselines.replication_layout(num_data_blocks, scheme.n)
        metrics = baselines.replication_repair(layout, down[pl.arrays["replicas"]], mode)
    ms = 1000 * (time.perf_counter() - t0)
    return ScenarioMetrics(scheme, n, fraction, seed, mode, metrics, ms)


def _run(args):
    return run_scenario(*args)


def sweep(schemes: Iterable[Scheme], fractions: Sequence[float], seeds: Sequence[int],
          num_data_blocks: int = DESK_SCALE, n: int = 100, mode: str = FULL,
          jobs: int = 1, order: str = SWEEP) -> list[ScenarioMetrics]:
    """Every (scheme, fraction, seed) combination, in that nesting order."""
    tasks = [(sc, num_data_blocks, n, f, seed, mode, 100, order)
             for sc in schemes for f in fractions for seed in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_run, tasks))
    return [_run(t) for t in tasks]


class Summary(NamedTuple):
    scheme: Scheme
    fraction: float
    runs: int
    data_loss: float
    data_loss_sd: float
    vulnerable: float
    vulnerable_sd: float
    sf_fraction: float
    rounds: float
    rounds_sd: float


def summarize(results: Iterable[ScenarioMetrics]) -> list[Summary]:
    """Mean and standard deviation over seeds per (scheme, fraction)."""
    groups: dict = {}
    for r in results:
        groups.setdefault((r.scheme, r.fraction), []).append(r)
    out = []

    def sd(xs):
        return statistics.stdev(xs) if len(xs) > 1 else 0.0

    for (sc, f), rs in groups.items():
        loss = [r.metrics.data_loss for r in rs]
        vul = [r.metrics.vulnerable for r in rs]
        rnd = [r.metrics.round_count for r in rs]
        sff = [r.metrics.single_failure_fraction for r in rs]
        out.append(Summary(sc, f, len(rs), statistics.fmean(loss), sd(loss),
                           statistics.fmean(vul), sd(vul), statistics.fmean(sff),
                           statistics.fmean(rnd), sd(rnd)))
    return out


def to_csv(results: Iterable[ScenarioMetrics], fh=None) -> str:
    buf = fh or io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow(r.row())
    return buf.getvalue() if fh is None else ""
