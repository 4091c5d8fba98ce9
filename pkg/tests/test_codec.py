import random

import numpy as np
import pytest

from aecodes.codec import (
    BlockStore,
    LatticeState,
    Unrecoverable,
    entangle,
    needed_parities,
    repair_all,
    repair_edge,
    repair_node,
    tamper_set,
    xor,
)
from aecodes.failure_sim import AeLattice
from aecodes.lattice import CodeParams, Edge, Node, StrandClass, incident_tuples, input_edge, output_edge

from oracles import contains_data_stopping_set

H, RH, LH = StrandClass.H, StrandClass.RH, StrandClass.LH
PARAMS = [CodeParams(1, 1, 0), CodeParams(2, 2, 5), CodeParams(3, 2, 5), CodeParams(3, 1, 4),
          CodeParams(3, 5, 5), CodeParams(2, 1, 1)]


def random_blocks(n, size=64, seed=0):
    rng = np.random.default_rng(seed)
    return [rng.integers(0, 256, size, dtype=np.uint8).tobytes() for _ in range(n)]


def build(params, n=120, size=64, seed=0):
    blocks = random_blocks(n, size, seed)
    store, state = BlockStore.from_stream(blocks, params, size)
    truth = {b: r.payload for b, r in store.records.items()}
    return store, state, truth


def test_entangle_d26_ids():
    params = CodeParams(3, 5, 5)
    state = LatticeState(8, 25)
    node, parities, new = entangle(bytes(8), state, params)
    assert node == Node(26)
    assert [e for e, _ in parities] == [Edge(26, 31, H), Edge(26, 32, RH), Edge(26, 35, LH)]
    assert new.counter == 26 and state.counter == 25


def test_first_parity_is_data():
    params = CodeParams(1, 1, 0)
    a, b = random_blocks(2, 16)
    _, par, st = entangle(a, LatticeState(16), params)
    assert par == [(Edge(1, 2, H), a)]
    _, par, st = entangle(b, st, params)
    assert par[0][1] == xor(a, b)


def test_entangle_rejects_wrong_size():
    with pytest.raises(ValueError):
        entangle(b"abc", LatticeState(4), CodeParams(1, 1, 0))


def test_heads_bounded_by_strand_count():
    for params in PARAMS:
        _, state, _ = build(params, 80, 8)
        assert len(state.heads) == params.strand_count
        assert state.counter == 80


@pytest.mark.parametrize("params", PARAMS, ids=str)
def test_single_erasure_roundtrip(params):
    store, _, truth = build(params, 150, 32)
    for block in list(store.records):
        store.erase([block])
        report = repair_all(store, params)
        assert store[block].payload == truth[block]
        assert report.round_count == 1 and sum(report.rounds) == 1
        # two stored blocks, or one plus the virtual zero head
        reads, = report.reads
        assert reads in (1, 2)
        if reads == 1:
            assert block.i <= params.s * params.p + params.s + 1


def test_node_repair_options():
    params = CodeParams(3, 5, 5)
    store, _, truth = build(params, 60, 16)
    tuples = incident_tuples(26, params)
    store.erase([Node(26), tuples[H].inp, tuples[LH].out])
    rep = repair_node(26, store, params)
    assert rep.sources == (tuples[RH].inp, tuples[RH].out)
    assert rep.payload == truth[Node(26)]
    store.erase([tuples[RH].out])
    with pytest.raises(Unrecoverable):
        repair_node(26, store, params)


def test_node_repair_prefers_h():
    params = CodeParams(3, 5, 5)
    store, _, truth = build(params, 60, 16)
    store.erase([Node(26)])
    rep = repair_node(26, store, params)
    assert rep.sources == (Edge(21, 26, H), Edge(26, 31, H))
    assert rep.payload == xor(truth[Edge(21, 26, H)], truth[Edge(26, 31, H)])


@pytest.mark.parametrize("params", PARAMS, ids=str)
def test_alpha_redundancy(params):
    store, _, truth = build(params, 80, 16)
    rng = random.Random(1)
    for i in rng.sample(range(1, 70), 15):
        tuples = incident_tuples(i, params)
        for keep in params.classes:
            trial = BlockStore(params, store.counter, store.block_size)
            trial.records = {b: type(r)(r.payload, r.available, r.repaired) for b, r in store.records.items()}
            lost = [Node(i)]
            for c, t in tuples.items():
                if c is not keep:
                    lost += [e for e in (t.inp, t.out) if e is not None]
            lost = [b for b in lost if b not in (tuples[keep].inp, tuples[keep].out)]
            trial.erase(lost)
            assert repair_node(i, trial, params).payload == truth[Node(i)]


def test_edge_repair_sides():
    params = CodeParams(3, 5, 5)
    store, _, truth = build(params, 60, 16)
    e = Edge(21, 26, H)
    store.erase([e])
    rep = repair_edge(e, store, params)
    assert rep.sources == (Node(21), Edge(16, 21, H))
    assert rep.payload == truth[e]
    store.erase([Node(21)])
    rep = repair_edge(e, store, params)
    assert rep.sources == (Node(26), Edge(26, 31, H))
    assert rep.payload == truth[e]
    store.erase([Edge(26, 31, H)])
    with pytest.raises(Unrecoverable):
        repair_edge(e, store, params)


def test_head_parity_repair():
    params = CodeParams(1, 1, 0)
    store, _, truth = build(params, 5, 8)
    store.erase([Edge(1, 2, H)])
    rep = repair_edge(Edge(1, 2, H), store, params)
    assert rep.payload == truth[Node(1)] and rep.sources == (Node(1),)


def test_nothing_missing():
    params = CodeParams(3, 2, 5)
    store, _, truth = build(params, 30, 8)
    report = repair_all(store, params)
    assert report.rounds == [0] and report.round_count == 0
    assert all(store[b].payload == truth[b] for b in truth)


@pytest.mark.parametrize("order", ["snapshot", "sweep"])
@pytest.mark.parametrize("params", PARAMS, ids=str)
def test_conservative_and_monotone(params, order):
    store, _, truth = build(params, 200, 16, seed=3)
    rng = random.Random(7)
    blocks = sorted(store.records, key=lambda b: (b.i, isinstance(b, Edge)))
    lost = rng.sample(blocks, len(blocks) // 4)
    store.erase(lost)
    before = len(store.missing())
    report = repair_all(store, params, order=order, max_rounds=before + 1)
    for b, rec in store.records.items():
        if rec.available:
            assert rec.payload == truth[b]
        else:
            assert rec.payload is None
    assert report.rounds[-1] == 0
    assert sum(report.rounds) == before - len(store.missing())
    assert len(report.rounds) <= before + 1


@pytest.mark.parametrize("params", PARAMS, ids=str)
def test_orders_reach_same_fixpoint(params):
    a, _, _ = build(params, 150, 8, seed=5)
    b, _, _ = build(params, 150, 8, seed=5)
    rng = random.Random(11)
    lost = rng.sample(sorted(a.records, key=str), len(a.records) // 3)
    a.erase(lost)
    b.erase(lost)
    ra = repair_all(a, params, order="snapshot")
    rb = repair_all(b, params, order="sweep")
    assert set(ra.unrecovered) == set(rb.unrecovered)
    assert rb.round_count <= ra.round_count


def test_minimal_mode_skips_standalone_parities():
    params = CodeParams(3, 2, 5)
    store, _, truth = build(params, 60, 8)
    lone = output_edge(30, H, params)
    needed = [Node(40), output_edge(40, H, params), output_edge(40, RH, params), output_edge(40, LH, params)]
    store.erase([lone] + needed)
    report = repair_all(store, params, mode="minimal")
    assert store[Node(40)].available and store[Node(40)].payload == truth[Node(40)]
    assert not store[lone].available
    assert report.unrecovered == [lone]


def test_needed_parities_closure():
    params = CodeParams(1, 1, 0)
    store, _, _ = build(params, 20, 8)
    chain = [Edge(i, i + 1, H) for i in range(5, 9)]
    store.erase([Node(5), Node(9)] + chain + [Edge(14, 15, H)])
    need = needed_parities(store, params, store.missing())
    assert need == set(chain)


def _availability_copy(store, params):
    n = store.counter
    node_up = np.ones(n + 1, dtype=bool)
    edge_up = np.ones((params.alpha, n + 1), dtype=bool)
    for b in store.missing():
        if isinstance(b, Node):
            node_up[b.i] = False
        else:
            edge_up[params.classes.index(b.cls), b.i] = False
    return node_up, edge_up


@pytest.mark.parametrize("mode", ["full", "minimal"])
@pytest.mark.parametrize("order", ["snapshot", "sweep"])
def test_engines_agree(order, mode):
    rng = random.Random(13)
    for trial in range(60):
        params = PARAMS[trial % len(PARAMS)]
        store = BlockStore.window(params, 1, 60, counter=60)
        blocks = list(store.records)
        store.erase(rng.sample(blocks, int(len(blocks) * rng.uniform(0.2, 0.5))))
        node_up, edge_up = _availability_copy(store, params)
        report = repair_all(store, params, mode, order=order)
        fast = AeLattice(params, 60).repair(node_up, edge_up, mode, 100, order)
        assert report.rounds == fast["rounds"]
        assert report.data_rounds == fast["data_rounds"]
        lost = sorted(b.i for b in report.unrecovered if isinstance(b, Node))
        assert lost == [i for i in range(1, 61) if not node_up[i]]


@pytest.mark.parametrize("params", PARAMS, ids=str)
def test_recoverable_iff_no_stopping_set(params):
    # windows cut from a long lattice; neighbours outside stay available
    rng = random.Random(17)
    first = 3 * params.s * max(params.p, 1) + 1
    last = first + 14
    store = BlockStore.window(params, first, last, counter=10 ** 6)
    blocks = sorted(store.records, key=str)
    assert len(blocks) <= 60
    seen = {True: 0, False: 0}
    for _ in range(150):
        lost = set(rng.sample(blocks, rng.randint(2, 9)))
        trial = BlockStore.window(params, first, last, counter=10 ** 6)
        trial.erase(lost)
        report = repair_all(trial, params)
        ok = not any(isinstance(b, Node) for b in report.unrecovered)
        assert ok == (not contains_data_stopping_set(lost, params))
        seen[ok] += 1
    assert seen[True]


def test_tamper_d26():
    params = CodeParams(3, 5, 5)
    ts = tamper_set(26, 40, params)
    assert {Edge(26, 31, H), Edge(31, 36, H), Edge(36, 41, H)} <= ts
    assert {Edge(26, 32, RH), Edge(26, 35, LH)} <= ts
    assert all(e.i <= 40 for e in ts)


def test_tamper_same_position():
    for params in PARAMS:
        assert tamper_set(10, 10, params) == {output_edge(10, c, params) for c in params.classes}
    with pytest.raises(ValueError):
        tamper_set(5, 4, PARAMS[0])


def test_tamper_count_by_strand_walk():
    for params in PARAMS + [CodeParams(3, 3, 3)]:
        if params.s == params.p:
            assert len(tamper_set(30, 90, params)) == pytest.approx(
                params.alpha * 60 / params.s + params.alpha, abs=params.alpha)
        for i, end in [(20, 20), (20, 45), (33, 90)]:
            expected = 0
            for c in params.classes:
                node = i
                while node <= end:
                    expected += 1
                    node = output_edge(node, c, params).j
            assert len(tamper_set(i, end, params)) == expected
            # H strands visit every s-th node, helical ones every p-th
            rate = 1 / params.s + (params.alpha - 1) / max(params.p, 1)
            approx = (end - i) * rate + params.alpha
            assert abs(len(tamper_set(i, end, params)) - approx) <= params.alpha * (params.p + 2)


def test_tamper_detected_by_parity_check():
    params = CodeParams(2, 2, 5)
    blocks = random_blocks(40, 8, 2)
    store, _ = BlockStore.from_stream(blocks, params, 8)
    ts = tamper_set(12, 40, params)
    # changing d12 alone breaks every parity relation on its strands
    for c in params.classes:
        e_in, e_out = input_edge(12, c, params), output_edge(12, c, params)
        assert xor(store.payload(e_in), store.payload(e_out)) == blocks[11]
    assert all(e in store for e in ts)
