import itertools

import numpy as np
import pytest

from aecodes.baselines import (
    ReplicaLayout,
    RsLayout,
    replication_layout,
    replication_repair,
    rs_layout,
    rs_repair,
    storage_overhead,
)
from aecodes.failure_sim import Scheme, run_scenario

from oracles import replication_expected_loss


@pytest.mark.parametrize("k,m,stripes,parities", [(10, 4, 100_000, 400_000), (8, 2, 125_000, 250_000),
                                                  (5, 5, 200_000, 1_000_000)])
def test_layout_counts(k, m, stripes, parities):
    lay = rs_layout(1_000_000, k, m)
    assert lay.num_stripes == stripes and lay.num_parities == parities and lay.padding == 0


def test_padding_pinned_available():
    lay = rs_layout(23, 5, 2)
    assert lay.num_stripes == 5 and lay.padding == 2
    assert lay[4].data == (20, 21, 22, -1, -1)
    assert lay[0].parities == (0, 1)
    down = np.ones((5, 7), dtype=bool)
    res = rs_repair(lay, down)
    assert res.data_loss == 23 and res.unavailable_data == 23
    with pytest.raises(IndexError):
        lay[5]


@pytest.mark.parametrize("k,m", [(0, 1), (3, -1)])
def test_bad_rs(k, m):
    with pytest.raises(ValueError):
        RsLayout(k, m, 10)


def test_rs82_example():
    lay = rs_layout(8, 8, 2)
    down = np.zeros((1, 10), dtype=bool)
    down[0, [0, 8]] = True
    assert rs_repair(lay, down).data_loss == 0
    # one parity and two data blocks down: damaged, but only the two data blocks count
    down[0, 3] = True
    res = rs_repair(lay, down)
    assert res.data_loss == 2 and res.recovered == 0


def _stripe_oracle(k, m, down, mode, writeback):
    lost = sum(down)
    data_lost = sum(down[:k])
    if lost > m:
        return dict(loss=data_lost, rec=0, vul=k - data_lost)
    if mode == "full":
        return dict(loss=0, rec=data_lost, vul=0)
    after = k + m - lost if not (writeback and data_lost) else k + m
    return dict(loss=0, rec=data_lost, vul=k if after <= k else 0)


@pytest.mark.parametrize("writeback", [False, True])
@pytest.mark.parametrize("mode", ["full", "minimal"])
@pytest.mark.parametrize("k,m", [(5, 5), (8, 2), (4, 3)])
def test_every_single_stripe_pattern(k, m, mode, writeback):
    lay = rs_layout(k, k, m)
    for bits in itertools.product((False, True), repeat=k + m):
        down = np.array([bits])
        res = rs_repair(lay, down, mode, writeback)
        want = _stripe_oracle(k, m, bits, mode, writeback)
        assert (res.data_loss, res.recovered, res.vulnerable) == (want["loss"], want["rec"], want["vul"])
        assert res.recovered + res.data_loss == res.unavailable_data


def test_rs55_exactly_k_available():
    lay = rs_layout(5, 5, 5)
    down = np.array([[False] * 5 + [True] * 5])
    res = rs_repair(lay, down, "minimal")
    assert res.vulnerable == 5 and res.data_loss == 0
    assert rs_repair(lay, np.zeros((1, 10), dtype=bool), "minimal").vulnerable == 0


def test_rs_permutation_invariant():
    rng = np.random.default_rng(0)
    lay = rs_layout(600, 6, 3)
    down = rng.random((100, 9)) < 0.35
    base = rs_repair(lay, down, "minimal")
    perm = down[rng.permutation(100)]
    perm[:, :6] = perm[:, rng.permutation(6)]
    perm[:, 6:] = perm[:, 6 + rng.permutation(3)]
    other = rs_repair(lay, perm, "minimal")
    assert (base.data_loss, base.recovered, base.vulnerable) == (other.data_loss, other.recovered, other.vulnerable)


def test_rs_single_failures_and_reads():
    lay = rs_layout(20, 10, 4)
    down = np.zeros((2, 14), dtype=bool)
    down[0, 3] = True
    down[1, [1, 2]] = True
    res = rs_repair(lay, down)
    assert res.single_failures == 1 and res.recovered == 3
    assert res.reads == {10: 3}


def test_replication_cases():
    lay = replication_layout(4, 2)
    down = np.array([[True, True], [True, False], [False, True], [False, False]])
    res = replication_repair(lay, down, "minimal")
    assert res.data_loss == 1 and res.recovered == 1 and res.vulnerable == 2
    assert replication_repair(lay, down, "full").vulnerable == 0
    four = replication_repair(replication_layout(1, 4), np.array([[True, True, True, False]]), "minimal")
    assert four.recovered == 1 and four.vulnerable == 1 and four.reads == {1: 1}
    with pytest.raises(ValueError):
        ReplicaLayout(0, 3)


@pytest.mark.parametrize("copies", [2, 3])
@pytest.mark.parametrize("fraction", [0.3, 0.5])
def test_replication_matches_binomial(copies, fraction):
    N = 200_000
    runs = [run_scenario(Scheme.replication(copies), N, 100, fraction, seed).metrics.data_loss
            for seed in range(5)]
    expected = replication_expected_loss(N, copies, 100, round(fraction * 100))
    sd = np.sqrt(expected * (1 - expected / N) / len(runs))
    assert abs(np.mean(runs) - expected) < 5 * sd + 1


def test_boundaries():
    lay = rs_layout(100, 5, 5)
    assert rs_repair(lay, np.zeros((20, 10), dtype=bool)).data_loss == 0
    assert rs_repair(lay, np.ones((20, 10), dtype=bool)).data_loss == 100


@pytest.mark.parametrize("scheme,params,pct", [
    ("rs", dict(k=10, m=4), 40), ("rs", dict(k=8, m=2), 25), ("rs", dict(k=5, m=5), 100),
    ("rs", dict(k=4, m=12), 300), ("ae", dict(alpha=1), 100), ("ae", dict(alpha=2), 200),
    ("ae", dict(alpha=3), 300), ("replication", dict(n=3), 200),
])
def test_storage_overhead(scheme, params, pct):
    assert storage_overhead(scheme, **params) == pct
