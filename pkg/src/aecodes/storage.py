"""On-disk block store: a ``manifest`` of ``key=value`` lines plus one file per
block under ``blocks/``, named by canonical id (``d12``, ``p12-17``).

A block whose file is absent is unavailable.
"""
from __future__ import annotations

import os
from pathlib import Path

from .codec import BlockStore
from .lattice import CodeParams, Node, block_key, output_edge, parse_key

MANIFEST = "manifest"
BLOCK_DIR = "blocks"


def write_manifest(path: Path, fields: dict):
    lines = [f"{k}={v}" for k, v in fields.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path: Path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        k, sep, v = line.partition("=")
        if not sep:
            raise ValueError(f"malformed manifest line {line!r}")
        out[k.strip()] = v.strip()
    return out


def save(store: BlockStore, root, extra: dict | None = None):
    """Write every available block of ``store`` under ``root``."""
    root = Path(root)
    bdir = root / BLOCK_DIR
    bdir.mkdir(parents=True, exist_ok=True)
    p = store.params
    fields = {"alpha": p.alpha, "s": p.s, "p": p.p,
              "block_size": store.block_size, "counter": store.counter}
    fields.update(extra or {})
    write_manifest(root / MANIFEST, fields)
    for block, rec in store.records.items():
        if rec.available and rec.payload is not None:
            (bdir / block_key(block, p)).write_bytes(rec.payload)


def expected_blocks(params: CodeParams, counter: int):
    for i in range(1, counter + 1):
        yield Node(i)
        for c in params.classes:
            yield output_edge(i, c, params)


def load(root) -> tuple[BlockStore, dict]:
    """Read a store; blocks without a file are recorded as unavailable."""
    root = Path(root)
    meta = read_manifest(root / MANIFEST)
    params = CodeParams(int(meta["alpha"]), int(meta["s"]), int(meta["p"]))
    store = BlockStore(params, int(meta["counter"]), int(meta["block_size"]))
    bdir = root / BLOCK_DIR
    present = set(os.listdir(bdir)) if bdir.exists() else set()
    for block in expected_blocks(params, store.counter):
        key = block_key(block, params)
        if key in present:
            data = (bdir / key).read_bytes()
            if len(data) != store.block_size:
                raise ValueError(f"{key}: {len(data)} bytes, expected {store.block_size}")
            store.put(block, data)
        else:
            store.erase([block])
    for key in present:
        parse_key(key, params)  # rejects stray files
    return store, meta
