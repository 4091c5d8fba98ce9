"""Entangle a short stream, lose some blocks, and watch the decoder bring them back."""
import random

from aecodes.codec import BlockStore, repair_all
from aecodes.lattice import CodeParams, Node, block_key

params = CodeParams(3, 2, 5)
data = [f"block {i:03d} ".encode().ljust(32, b".") for i in range(60)]
store, state = BlockStore.from_stream(data, params, 32)
print(f"{params}: {state.counter} data blocks, {len(store) - state.counter} parities")

# Every data block sits on three strands. Its two neighbours on any one strand
# are enough to rebuild it.
rng = random.Random(4)
lost = rng.sample(sorted(store.records, key=str), 40)
store.erase(lost)
print("erased", len(lost), "blocks, e.g.", ", ".join(block_key(b, params) for b in lost[:6]))

report = repair_all(store, params)
print("repaired per round:", report.rounds)
print("still missing:", [block_key(b, params) for b in report.unrecovered] or "nothing")
print("data intact:", all(store.payload(Node(i)) == data[i - 1] for i in range(1, 61)))
