"""Smallest erasure patterns that defeat the decoder, and how they grow with the parameters."""
from aecodes.lattice import CodeParams
from aecodes.me_analysis import is_recoverable, min_me

for args, x in [((1, 1, 0), 2), ((2, 2, 5), 4), ((3, 1, 4), 2), ((3, 2, 5), 2), ((3, 4, 4), 2)]:
    params = CodeParams(*args)
    size, patterns = min_me(params, x)
    print(f"{params}: losing {x} data blocks takes at least {size} erasures, e.g. {patterns[0]}")

# Take one block out of a minimal pattern and everything comes back.
params = CodeParams(3, 1, 4)
size, patterns = min_me(params, 2)
pattern = patterns[0]
print(f"\n{pattern} recoverable: {is_recoverable(pattern, params=params)}")
dropped = next(b for b in pattern.blocks if hasattr(b, "cls"))
smaller = type(pattern)(params, pattern.blocks - {dropped})
print(f"{smaller} recoverable: {is_recoverable(smaller, params=params)}")
