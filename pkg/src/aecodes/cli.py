"""``aecode``: encode/repair a block store, run disaster sweeps, search for
minimal erasures and list tamper sets."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import failure_sim as fs
from . import me_analysis, storage
from .codec import BlockStore, DEFAULT_BLOCK_SIZE, FULL, MINIMAL, SNAPSHOT, SWEEP, repair_all, tamper_set
from .lattice import CodeParams, Node, ParameterError, block_key, parse_key, validate_params

log = logging.getLogger("aecode")


class CliError(Exception):
    pass


# -- argument helpers -------------------------------------------------------------

def _ints(text: str) -> list[int]:
    """``1,2,5`` or ranges such as ``0-4``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        if sep and lo:
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"no integers in {text!r}")
    return out


def _fractions(text: str) -> list[float]:
    vals = [float(v) for v in text.split(",") if v.strip()]
    out = [v / 100 if v > 1 else v for v in vals]
    if not out or any(not 0 <= v <= 1 for v in out):
        raise argparse.ArgumentTypeError(f"fractions must lie in 0..100 (got {text!r})")
    return out


def _pair(text: str) -> tuple[int, int]:
    try:
        k, m = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected k,m (got {text!r})") from None
    return k, m


def _triple(text: str) -> tuple[int, int, int]:
    vals = [int(v) for v in text.split(",")]
    if len(vals) == 1:
        vals += [1, 0]
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected alpha,s,p (got {text!r})")
    return tuple(vals)


def _default_seed() -> int:
    raw = os.environ.get("AECODE_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"AECODE_SEED must be an integer (got {raw!r})") from None


def _code_args(p: argparse.ArgumentParser, multi: bool = False):
    g = p.add_argument_group("code")
    g.add_argument("--alpha", type=int, help="AE strand classes (1-3)")
    g.add_argument("--s", type=int, help="AE horizontal strands")
    g.add_argument("--p", type=int, help="AE helical strands per class")
    if multi:
        g.add_argument("--ae", type=_triple, action="append", default=[], metavar="A,S,P",
                       help="add an AE scheme (repeatable)")
        g.add_argument("--rs", type=_pair, action="append", default=[], metavar="K,M",
                       help="add an RS(k,m) scheme (repeatable)")
        g.add_argument("--replicas", type=int, action="append", default=[], metavar="N",
                       help="add N-way replication (repeatable)")


def _params(args, required: bool = True) -> CodeParams | None:
    if args.alpha is None:
        if args.s is not None or args.p is not None:
            raise CliError("--s/--p need --alpha")
        if required:
            raise CliError("--alpha is required")
        return None
    if args.alpha == 1:
        s = 1 if args.s is None else args.s
        p = 0 if args.p is None else args.p
    else:
        if args.s is None or args.p is None:
            raise CliError("--alpha > 1 needs --s and --p")
        s, p = args.s, args.p
    return validate_params(args.alpha, s, p)


# -- subcommands ----------------------------------------------------------------

def cmd_encode(args) -> int:
    params = _params(args)
    bs = args.block_size
    if bs <= 0:
        raise CliError("--block-size must be positive")
    if (args.input is None) == (args.synthetic is None):
        raise CliError("give exactly one of --input or --synthetic")
    if args.input is not None:
        raw = Path(args.input).read_bytes()
    else:
        rng = np.random.default_rng(args.seed if args.seed is not None else _default_seed())
        raw = rng.integers(0, 256, args.synthetic * bs, dtype=np.uint8).tobytes()
    blocks = [raw[o:o + bs].ljust(bs, b"\0") for o in range(0, len(raw), bs)]
    store, state = BlockStore.from_stream(blocks, params, bs)
    storage.save(store, args.out, {"length": len(raw)})
    parities = state.counter * params.alpha
    print(f"code          {params}")
    print(f"data blocks   {state.counter}")
    print(f"parities      {parities}")
    print(f"block size    {bs}")
    print(f"overhead      {100.0 * params.alpha:.0f}%")
    print(f"store         {args.out}")
    return 0


def _reassemble(store: BlockStore, length: int) -> bytes:
    parts = []
    for i in range(1, store.counter + 1):
        payload = store.payload(Node(i))
        if payload is None:
            raise CliError(f"d{i} is unavailable; cannot rebuild the file")
        parts.append(payload)
    return b"".join(parts)[:length]


def cmd_repair(args) -> int:
    store, meta = storage.load(args.store)
    params = store.params
    erased = []
    if args.erase:
        for key in args.erase.split(","):
            erased.append(parse_key(key.strip(), params))
    if args.erase_fraction:
        rng = np.random.default_rng(args.seed if args.seed is not None else _default_seed())
        keys = sorted(store.records, key=lambda b: block_key(b, params))
        count = round(args.erase_fraction * len(keys))
        pick = rng.choice(len(keys), size=count, replace=False)
        erased.extend(keys[int(j)] for j in pick)
    store.erase(erased)
    if args.persist_erasures:
        for b in erased:
            (Path(args.store) / storage.BLOCK_DIR / block_key(b, params)).unlink(missing_ok=True)
    missing = len(store.missing())
    report = repair_all(store, params, args.maintenance, args.max_rounds, args.order)
    lost = [b for b in report.unrecovered if isinstance(b, Node)]
    print(f"code          {params}")
    print(f"missing       {missing}")
    print(f"repaired      {sum(report.rounds)}")
    print(f"rounds        {report.round_count}")
    print(f"reads/repair  {dict(sorted(report.reads.items()))}")
    print(f"data lost     {len(lost)}")
    if not args.dry_run:
        storage.save(store, args.store, {k: v for k, v in meta.items()
                                         if k not in ("alpha", "s", "p", "block_size", "counter")})
    if args.output or args.verify:
        data = _reassemble(store, int(meta.get("length", store.counter * store.block_size)))
        if args.output:
            Path(args.output).write_bytes(data)
        if args.verify:
            same = Path(args.verify).read_bytes() == data
            print(f"verify        {'ok' if same else 'MISMATCH'}")
            if not same:
                return 1
    return 1 if lost else 0


def _schemes(args) -> list:
    out = []
    params = _params(args, required=False)
    if params is not None:
        out.append(fs.Scheme.ae(params.alpha, params.s, params.p))
    for a, s, p in args.ae:
        validate_params(a, s, p)
        out.append(fs.Scheme.ae(a, s, p))
    for k, m in args.rs:
        out.append(fs.Scheme.rs(k, m))
    for n in args.replicas:
        out.append(fs.Scheme.replication(n))
    return out or list(fs.DEFAULT_SCHEMES)


def _table(title: str, summaries, fractions, value) -> str:
    lines = [title, "scheme".ljust(22) + "".join(f"{100 * f:>10.0f}%" for f in fractions)]
    for sc in dict.fromkeys(s.scheme for s in summaries):
        row = {s.fraction: s for s in summaries if s.scheme == sc}
        cells = "".join(f"{value(row[f]):>11}" if f in row else " " * 11 for f in fractions)
        lines.append(str(sc).ljust(22) + cells)
    return "\n".join(lines)


def _write_dat(directory: Path, summaries, fractions):
    """One whitespace-separated file per metric: fraction, then mean/sd per scheme."""
    directory.mkdir(parents=True, exist_ok=True)
    schemes = list(dict.fromkeys(s.scheme for s in summaries))
    metrics = {
        "data_loss": ("data_loss", "data_loss_sd"),
        "vulnerable": ("vulnerable", "vulnerable_sd"),
        "rounds": ("rounds", "rounds_sd"),
        "sf_fraction": ("sf_fraction", None),
    }
    for name, (mean_f, sd_f) in metrics.items():
        cols = ["fraction"]
        for sc in schemes:
            tag = str(sc).replace(" ", "_")
            cols += [tag] + ([f"{tag}_sd"] if sd_f else [])
        lines = ["# " + " ".join(cols)]
        for f in fractions:
            vals = [f"{f:.2f}"]
            for sc in schemes:
                hit = [s for s in summaries if s.scheme == sc and s.fraction == f]
                if not hit:
                    vals += ["nan"] * (2 if sd_f else 1)
                    continue
                vals.append(f"{getattr(hit[0], mean_f):.6g}")
                if sd_f:
                    vals.append(f"{getattr(hit[0], sd_f):.6g}")
            lines.append(" ".join(vals))
        (directory / f"{name}.dat").write_text("\n".join(lines) + "\n")


def cmd_simulate(args) -> int:
    schemes = _schemes(args)
    blocks = fs.LARGE_SCALE if args.paper_scale else (args.synthetic or args.blocks)
    seeds = args.seeds if args.seeds is not None else [_default_seed()]
    if args.jobs < 1:
        raise CliError("--jobs must be at least 1")
    results = fs.sweep(schemes, args.fractions, seeds, blocks, args.locations,
                       args.maintenance, args.jobs, args.order)
    if args.no_timing:
        results = [r._replace(wall_time_ms=0.0) for r in results]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fs.to_csv(results, fh)
    summaries = fs.summarize(results)
    print(f"{blocks} data blocks, {args.locations} locations, seeds {seeds}, "
          f"{args.maintenance} maintenance")
    print()
    print(_table("data loss (mean blocks)", summaries, args.fractions, lambda s: f"{s.data_loss:.1f}"))
    print()
    print(_table("vulnerable data (mean blocks)", summaries, args.fractions, lambda s: f"{s.vulnerable:.1f}"))
    print()
    print(_table("single-failure fraction", summaries, args.fractions, lambda s: f"{s.sf_fraction:.3f}"))
    print()
    print(_table("repair rounds (mean)", summaries, args.fractions, lambda s: f"{s.rounds:.1f}"))
    if args.dat:
        _write_dat(Path(args.dat), summaries, args.fractions)
    return 0


def cmd_analyze_me(args) -> int:
    grid_params = []
    params = _params(args, required=False)
    if params is not None:
        grid_params.append(params)
    for a, s, p in args.ae:
        grid_params.append(validate_params(a, s, p))
    if not grid_params:
        raise CliError("give --alpha/--s/--p or at least one --ae")
    grid = [(gp, x) for gp in grid_params for x in args.x]
    rows = me_analysis.analyze(grid, args.max_size, args.budget)
    text = me_analysis.to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_tamper(args) -> int:
    params = _params(args)
    window = args.window if args.window is not None else args.i
    edges = sorted(tamper_set(args.i, window, params), key=lambda e: (e.i, e.j, e.cls.value))
    for e in edges:
        print(block_key(e, params))
    print(f"count {len(edges)}")
    return 0


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aecode", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="split a file into blocks, entangle and store them")
    _code_args(p)
    p.add_argument("--input", help="file to encode")
    p.add_argument("--synthetic", type=int, metavar="N", help="encode N random blocks instead")
    p.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE, metavar="BYTES")
    p.add_argument("--seed", type=int, help="RNG seed for --synthetic (default $AECODE_SEED or 0)")
    p.add_argument("--out", required=True, metavar="PATH", help="store directory")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("repair", help="erase blocks of a store and run the decoder")
    p.add_argument("--store", required=True, metavar="PATH")
    p.add_argument("--erase", metavar="KEYS", help="comma-separated block ids to erase first")
    p.add_argument("--erase-fraction", type=float, default=0.0, metavar="F",
                   help="erase this fraction of all blocks at random")
    p.add_argument("--seed", type=int, help="RNG seed for --erase-fraction")
    p.add_argument("--persist-erasures", action="store_true", help="also delete erased block files")
    p.add_argument("--maintenance", choices=(FULL, MINIMAL), default=FULL)
    p.add_argument("--order", choices=(SNAPSHOT, SWEEP), default=SNAPSHOT,
                   help="round schedule (default %(default)s)")
    p.add_argument("--max-rounds", type=int, default=100)
    p.add_argument("--dry-run", action="store_true", help="do not write repaired blocks back")
    p.add_argument("--output", metavar="PATH", help="write the rebuilt file here")
    p.add_argument("--verify", metavar="PATH", help="compare the rebuilt file with this one")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("simulate", help="disaster sweep over schemes, fractions and seeds")
    _code_args(p, multi=True)
    p.add_argument("--blocks", type=int, default=fs.DESK_SCALE, metavar="N")
    p.add_argument("--synthetic", type=int, metavar="N", help="alias for --blocks")
    p.add_argument("--paper-scale", action="store_true", help=f"use {fs.LARGE_SCALE} data blocks")
    p.add_argument("--locations", type=int, default=100, metavar="N")
    p.add_argument("--fractions", type=_fractions, default=list(fs.DEFAULT_FRACTIONS),
                   help="percent list, e.g. 10,20,30,40,50")
    p.add_argument("--seeds", type=_ints, help="e.g. 0-4 or 1,7 (default $AECODE_SEED or 0)")
    p.add_argument("--maintenance", choices=(FULL, MINIMAL), default=FULL)
    p.add_argument("--order", choices=(SNAPSHOT, SWEEP), default=SWEEP,
                   help="AE round schedule (default %(default)s)")
    p.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes")
    p.add_argument("--out", metavar="PATH", help="CSV, one row per scenario")
    p.add_argument("--dat", metavar="DIR", help="also write per-metric plot data files")
    p.add_argument("--no-timing", action="store_true", help="write 0 for wall time (byte-stable CSV)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze-me", help="smallest minimal erasure per code and data loss x")
    _code_args(p, multi=True)
    p.add_argument("--x", type=_ints, default=[2], help="data-loss values, e.g. 2,4")
    p.add_argument("--max-size", type=int, default=me_analysis.DEFAULT_MAX_SIZE)
    p.add_argument("--budget", type=int, default=me_analysis.DEFAULT_STATE_BUDGET,
                   help="node sets visited before giving up")
    p.add_argument("--out", metavar="PATH", help="CSV output")
    p.set_defaults(func=cmd_analyze_me)

    p = sub.add_parser("tamper", help="parities to rewrite to alter d_i undetected")
    _code_args(p)
    p.add_argument("--i", type=int, required=True, help="data block index")
    p.add_argument("--window", type=int, help="last node written (default i)")
    p.set_defaults(func=cmd_tamper)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ParameterError, me_analysis.BudgetExceeded, ValueError, OSError, KeyError) as exc:
        print(f"aecode: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
