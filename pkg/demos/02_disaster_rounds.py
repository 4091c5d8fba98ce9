"""Scatter a million blocks over 100 locations, knock out a share of them, count repair rounds.

Pass --quick to use 100k blocks.
"""
import statistics
import sys

from aecodes.failure_sim import Scheme, run_scenario

blocks = 100_000 if "--quick" in sys.argv else 1_000_000
scheme = Scheme.ae(3, 2, 5)
print(f"{scheme}, {blocks} data blocks, 100 locations, seeds 0-4")
print("failed   rounds (per seed)   mean   data loss")
for f in (0.1, 0.2, 0.3, 0.4, 0.5):
    runs = [run_scenario(scheme, blocks, 100, f, seed) for seed in range(5)]
    rounds = [r.metrics.round_count for r in runs]
    loss = statistics.fmean(r.data_loss for r in runs)
    print(f"{f:5.0%}    {str(rounds):18s}  {statistics.fmean(rounds):5.1f}   {loss:9.1f}")

# Blocks repaired early in a round are used again later in the same round, so a
# long damaged stretch of a strand can heal in one pass. The strict snapshot
# schedule needs more rounds to reach the same fixpoint.
snap = run_scenario(scheme, blocks, 100, 0.5, 0, order="snapshot").metrics
sweep = run_scenario(scheme, blocks, 100, 0.5, 0).metrics
print(f"50% seed 0: sweep {sweep.round_count} rounds, snapshot {snap.round_count} rounds, "
      f"same loss: {sweep.data_loss == snap.data_loss}")
