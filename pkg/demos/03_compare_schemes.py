"""Data loss and vulnerable data for codes with matching storage overhead."""
import statistics

from aecodes.failure_sim import MINIMAL, Scheme, run_scenario

BLOCKS = 100_000
FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5)


def mean(scheme, f, attr, mode="full"):
    return statistics.fmean(getattr(run_scenario(scheme, BLOCKS, 100, f, s, mode).metrics, attr)
                            for s in range(5))


def table(title, schemes, attr, mode="full"):
    print(f"\n{title}")
    print(f"{'scheme':20s}" + "".join(f"{f:>9.0%}" for f in FRACTIONS))
    for sc in schemes:
        print(f"{str(sc):20s}" + "".join(f"{mean(sc, f, attr, mode):9.1f}" for f in FRACTIONS))


# grouped by overhead: 100%, 200%, 300%
table("data blocks lost (mean of 5 seeds)",
      [Scheme.rs(5, 5), Scheme.replication(2), Scheme.ae(1),
       Scheme.replication(3), Scheme.ae(2, 2, 5),
       Scheme.rs(4, 12), Scheme.ae(3, 2, 5)], "data_loss")

# Minimal maintenance only rebuilds what data needs. Whatever is left with no
# live redundancy is one failure away from loss.
table("vulnerable data blocks after minimal maintenance",
      [Scheme.rs(5, 5), Scheme.ae(1), Scheme.replication(2)], "vulnerable", MINIMAL)
