"""Command line entry point: ``pqcheck gen|check|falseaccept|bench``.

Exit status: 0 accept / success, 1 reject verdict, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import shutil
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import asdict
from typing import Optional, Sequence

from . import generators
from .fingerprint import is_prime
from .metrics import (derive_seeds, hashed_exponent_max, run_check, scaling_sweep,
                      soundness_census)
from .reverse import DuplicateInsertError
from .trace import TraceFile, TraceFormatError, parse_trace, serialize_trace

FORMAT_HELP = """\
trace file format (UTF-8 text, '\\n' line endings):
  lines starting with '#' are comments; the canonical header is '# N=<len> U=<bound>'
  every other line is 'i <value>' (insert) or 'e <value>' (extract),
  optionally followed by a space and a timestamp integer;
  values and timestamps are non-negative decimals; either every operation
  line carries a timestamp or none does.
"""

EXIT_OK, EXIT_REJECT, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


@contextmanager
def _input_path(path: Optional[str]):
    """Yield a seekable file path; stdin is spooled to a temporary file so it
    can be read backwards."""
    if path and path != "-":
        if not os.path.exists(path):
            raise UsageError(f"no such file: {path}")
        yield path
        return
    fd, tmp = tempfile.mkstemp(suffix=".trace")
    try:
        with os.fdopen(fd, "wb") as out:
            shutil.copyfileobj(sys.stdin.buffer, out)
        yield tmp
    finally:
        os.unlink(tmp)


def _write(data: bytes, path: Optional[str]) -> None:
    if path and path != "-":
        with open(path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _emit(report: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(report, sort_keys=True))
        return
    verdict = "accept" if report.get("accepted") else "reject"
    print(f"verdict: {verdict}")
    for key, val in report.items():
        if key != "accepted" and val is not None:
            print(f"{key}: {val}")


def _read_bits_file(path: str, m: int, n: int) -> list[list[int]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                rows.append([int(ch) for ch in line if ch in "01"])
    if len(rows) != m or any(len(r) != n for r in rows):
        raise UsageError(f"--x-file must hold {m} lines of {n} bits")
    return rows


def cmd_gen(args) -> int:
    if args.gen_kind == "rd":
        derived = derive_seeds(args.seed, 3)
        xs = args.x_seed if args.x_seed is not None else derived[0]
        ks = args.k_seed if args.k_seed is not None else derived[1]
        ds = args.d_seed if args.d_seed is not None else derived[2]
        m, n = args.m, args.n
        if n < 2 or m < 1:
            raise UsageError("need --m >= 1 and --n >= 2")
        if args.x_file:
            x = _read_bits_file(args.x_file, m, n)
        else:
            xr = random.Random(xs)
            x = [[xr.randrange(2) for _ in range(n)] for _ in range(m)]
        kr, dr = random.Random(ks), random.Random(ds)
        k = [kr.randint(2, n) for _ in range(m)]
        d = [dr.randrange(2) for _ in range(m)]
        if args.error_at is not None:
            i = args.error_at - 1
            if not 0 <= i < m:
                raise UsageError(f"--error-at must lie in 1..{m}")
            x[i][k[i] - 1] = 1
            d[i] = 0
        params = generators.RdParams(m, n, tuple(map(tuple, x)), tuple(k), tuple(d))
        t = generators.gen_rd(params, timestamped=args.timestamps)
        f = generators.rd_predicate(params)
        comments = [f"rd m={m} n={n} f={f} x_seed={xs} k_seed={ks} d_seed={ds}",
                    "k=" + ",".join(map(str, k)) + " d=" + "".join(map(str, d))]
    elif args.gen_kind == "valid":
        seed = args.seed if args.seed is not None else derive_seeds(None, 1)[0]
        u = args.u if args.u is not None else max(2 * args.len, 1)
        t = generators.gen_valid_pq(args.len, u, args.duplicates, seed)
        comments = [f"valid seed={seed}"]
    elif args.gen_kind == "valleys":
        seed = args.seed if args.seed is not None else derive_seeds(None, 1)[0]
        t = generators.gen_with_valleys(args.r, seed)
        comments = [f"valleys r={args.r} seed={seed}"]
    else:
        seed = args.seed if args.seed is not None else derive_seeds(None, 1)[0]
        with _input_path(args.input) as path:
            with open(path, encoding="utf-8") as fh:
                src = parse_trace(fh)
        t = generators.mutate(src, args.kind, seed)
        comments = [f"mutate kind={args.kind} seed={seed}"]
    _write(serialize_trace(t, comments), args.output)
    return EXIT_OK


def cmd_check(args) -> int:
    mode = args.mode
    if args.duplicates:
        if mode != "bidir":
            raise UsageError("--duplicates only applies to --mode bidir")
        mode = "bidir-dup"
    if args.prime_override is not None and not is_prime(args.prime_override):
        raise UsageError(f"--prime-override {args.prime_override} is not prime")
    with _input_path(args.input) as path:
        source = TraceFile(path)
        report = run_check(source, mode, seed=args.seed, c=args.soundness_c,
                           prime=args.prime_override, alpha=args.alpha)
    _emit(report.to_dict(), args.emit_stats)
    return EXIT_OK if report.accepted else EXIT_REJECT


def cmd_falseaccept(args) -> int:
    with _input_path(args.input) as path:
        t = TraceFile(path).load()
    mode = "bidir-dup" if args.duplicates else args.mode
    count, p = soundness_census(t, args.prime, mode)
    d_max = hashed_exponent_max(t, mode)
    bound = max(t.n_len, 1) * d_max
    out = {"mode": mode, "N": t.n_len, "U": t.u_bound, "prime": p, "false_accepts": count,
           "rate": count / p, "max_exponent": d_max, "bound": bound}
    _emit_plain(out, args.emit)
    return EXIT_OK if count <= bound else EXIT_REJECT


def _emit_plain(obj, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(obj, sort_keys=True))
    else:
        for key, val in obj.items():
            print(f"{key}: {val}")


def _parse_sizes(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = (int(x) for x in spec.split("..", 1))
        if lo < 1 or lo > hi:
            raise UsageError(f"bad size range {spec!r}")
        sizes = []
        n = 1 << (lo - 1).bit_length()
        while n <= hi:
            sizes.append(n)
            n *= 2
        return sizes
    return [int(x) for x in spec.split(",") if x]


def cmd_bench(args) -> int:
    sizes = _parse_sizes(args.sizes)
    seeds = derive_seeds(args.seed, args.seeds)
    mode = "bidir-dup" if args.duplicates else args.mode
    rows = scaling_sweep(mode, sizes, seeds, c=args.soundness_c)
    if args.emit == "json":
        print(json.dumps({"mode": mode, "seeds": seeds, "rows": [asdict(r) for r in rows]}))
    else:
        print(f"mode: {mode}  seeds: {seeds}")
        print(f"{'N':>8} {'mean_peak_bits':>15} {'max_peak':>9} {'bound':>6} ok")
        for r in rows:
            bound = "-" if r.bound is None else r.bound
            print(f"{r.N:>8} {r.mean_peak_bits:>15.1f} {r.max_peak_blocks:>9} {bound:>6} "
                  f"{'yes' if r.within_bound else 'NO'}")
    return EXIT_OK if all(r.within_bound for r in rows) else EXIT_REJECT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pqcheck",
        description="Streaming checkers for priority-queue operation histories.",
        epilog=FORMAT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate traces", epilog=FORMAT_HELP,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    gsub = gen.add_subparsers(dest="gen_kind", required=True)
    rd = gsub.add_parser("rd", help="hard instance RD(m, n)")
    rd.add_argument("--m", type=int, required=True)
    rd.add_argument("--n", type=int, required=True)
    rd.add_argument("--x-seed", type=int)
    rd.add_argument("--x-file")
    rd.add_argument("--k-seed", type=int)
    rd.add_argument("--d-seed", type=int)
    rd.add_argument("--error-at", type=int, help="force an error in motif i (1-based)")
    rd.add_argument("--timestamps", action="store_true")
    valid = gsub.add_parser("valid", help="random legal PQ trace")
    valid.add_argument("--len", type=int, required=True)
    valid.add_argument("--u", type=int)
    valid.add_argument("--duplicates", action="store_true")
    valleys = gsub.add_parser("valleys", help="legal trace with exactly r valleys")
    valleys.add_argument("--r", type=int, required=True)
    mut = gsub.add_parser("mutate", help="inject one fault into a trace")
    mut.add_argument("--kind", required=True, choices=[k.value for k in generators.MutationKind])
    mut.add_argument("input", nargs="?", default="-")
    for p in (rd, valid, valleys, mut):
        p.add_argument("--seed", type=int)
        p.add_argument("-o", "--output")
    gen.set_defaults(func=cmd_gen)

    chk = sub.add_parser("check", help="check a trace", epilog=FORMAT_HELP,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    chk.add_argument("--mode", required=True,
                     choices=["oracle-pq", "oracle-collection", "oracle-pqts", "reverse", "bidir"])
    chk.add_argument("--duplicates", action="store_true", help="bidir only: allow repeated values")
    chk.add_argument("--seed", type=int)
    chk.add_argument("--soundness-c", type=int, default=1)
    chk.add_argument("--prime-override", type=int)
    chk.add_argument("--alpha", type=int, help="pin the evaluation point")
    chk.add_argument("--emit-stats", choices=["json", "text"], default="text")
    chk.add_argument("input", nargs="?", default="-")
    chk.set_defaults(func=cmd_check)

    fa = sub.add_parser("falseaccept", help="exhaustive false-accept census over a small prime")
    fa.add_argument("--mode", required=True, choices=["reverse", "bidir"])
    fa.add_argument("--duplicates", action="store_true")
    fa.add_argument("--prime", type=int, required=True)
    fa.add_argument("--emit", choices=["json", "text"], default="text")
    fa.add_argument("input", nargs="?", default="-")
    fa.set_defaults(func=cmd_falseaccept)

    bench = sub.add_parser("bench", help="peak-memory scaling sweep")
    bench.add_argument("--mode", required=True, choices=["reverse", "bidir"])
    bench.add_argument("--duplicates", action="store_true")
    bench.add_argument("--sizes", default="64..65536", help="'lo..hi' powers of two or a comma list")
    bench.add_argument("--seeds", type=int, default=10)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--soundness-c", type=int, default=1)
    bench.add_argument("--emit", choices=["json", "text"], default="text")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    try:
        return args.func(args)
    except (UsageError, TraceFormatError, DuplicateInsertError,
            generators.MutationError, OSError, ValueError, OverflowError) as e:
        print(f"pqcheck: error: {e}", file=sys.stderr)
        return EXIT_ERROR


def run(argv: Optional[Sequence[str]] = None) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
