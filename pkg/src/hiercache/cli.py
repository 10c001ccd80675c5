"""Command-line front end: ``verify``, ``table``, ``trace`` and ``points``.

Exit status: 0 pass, 1 verification failure, 2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .errors import BudgetExceeded, HierCacheError, IntegrityError
from .harness import decode_all, deliver, place, sweep
from .model import SystemConfig, random_library, subpacketize, validate_demand
from .rates import formula_report, render
from .tables import CSV_FIELDS, DEFAULT_ROWS, POINT_FIELDS, default_demand, points, table_rows

CONFIG_KEYS = {"k1": int, "k2": int, "n": int, "l": int, "prime": int, "seed": int}
BYTE_PRIME = 257


class UsageError(HierCacheError):
    pass


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](value.strip("'\""))
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def _add_instance_flags(p: argparse.ArgumentParser, defaults: dict | None = None) -> None:
    defaults = defaults or {}
    p.add_argument("--config", help="flat key = value file (k1, k2, n, l, prime, seed)")
    p.add_argument("--k1", type=int, help=f"mirrors (default {defaults.get('k1', 'required')})")
    p.add_argument("--k2", type=int, help=f"users per mirror (default {defaults.get('k2', 'required')})")
    p.add_argument("--n", type=int, help=f"files (default {defaults.get('n', 'required')})")
    p.add_argument("--l", type=int, help="symbols per subfile (default 1)")
    p.add_argument("--prime", type=int, help="field modulus (default: smallest admissible)")
    p.add_argument("--seed", type=int, help="library/demand seed (default 0)")
    p.set_defaults(instance_defaults=defaults)


def _instance(args) -> tuple[dict, int]:
    merged = dict(args.instance_defaults)
    if args.config:
        merged.update(read_config(args.config))
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    missing = [k for k in ("k1", "k2", "n") if k not in merged]
    if missing:
        raise UsageError(f"missing instance parameters: {', '.join('--' + m for m in missing)}")
    return merged, merged.get("seed", 0)


def _config(merged: dict, **override) -> SystemConfig:
    kw = {"l": merged.get("l", 1), "p": merged.get("prime")}
    kw.update(override)
    return SystemConfig(merged["k1"], merged["k2"], merged["n"], **kw)


def _schemes(value: str) -> list[int]:
    return [1, 2] if value == "both" else [int(value)]


def _write(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(rows: list[dict], fields: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({f: row.get(f, "") for f in fields})
    return buf.getvalue()


def _ingest(paths: list[str], merged: dict):
    """Load raw files as byte symbols over GF(257), zero-padded to a whole number of subfiles."""
    blobs = [Path(p).read_bytes() for p in paths]
    prime = merged.get("prime", BYTE_PRIME)
    if prime <= 255:
        raise UsageError(f"byte symbols need a prime above 255, got {prime}")
    probe = _config(merged, p=prime)
    if len(blobs) != probe.n:
        raise UsageError(f"--files got {len(blobs)} files, but n = {probe.n}")
    T = probe.T
    longest = max(len(b) for b in blobs)
    l = max(1, -(-longest // T))
    cfg = _config(merged, p=prime, l=l)
    raws, records = [], []
    for path, blob in zip(paths, blobs):
        arr = np.zeros(cfg.F, dtype=np.int64)
        arr[: len(blob)] = np.frombuffer(blob, dtype=np.uint8)
        raws.append(arr)
        records.append({"path": path, "original_length": len(blob), "padded_length": cfg.F})
    return cfg, subpacketize(cfg, raws), records


def cmd_verify(args) -> int:
    merged, seed = _instance(args)
    inputs, library = None, None
    if args.files:
        cfg, library, inputs = _ingest(args.files, merged)
    else:
        cfg = _config(merged)
    report = {"config": cfg.as_dict(), "seed": seed, "mode": args.mode, "schemes": []}
    if inputs is not None:
        report["inputs"] = inputs
    ok = True
    for scheme in _schemes(args.scheme):
        try:
            rep = sweep(
                cfg, scheme, args.mode, seed=seed, trials=args.trials, budget=args.budget,
                oracle=not args.no_oracle, workers=args.workers,
                strict_parity=args.strict_parity, library=library,
            )
        except BudgetExceeded as exc:
            raise UsageError(str(exc)) from None
        ok = ok and rep.ok
        report["schemes"].append(rep.as_dict(timing=args.timings))
        meas = rep.measured
        print(
            f"scheme {scheme}: {rep.passed}/{rep.attempted} episodes decoded, "
            f"measured R1={meas[0] if meas else '?'} R2={meas[1] if meas else '?'}, "
            f"formula R2={rep.formula.r2}{' [' + ','.join(rep.formula.flags) + ']' if rep.formula.flags else ''}, "
            f"oracle disagreements={len(rep.oracle_disagreements)} -> {'PASS' if rep.ok else 'FAIL'}",
            file=sys.stderr,
        )
    report["ok"] = ok
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    elif args.json:
        sys.stdout.write(text)
    return 0 if ok else 1


def _parse_rows(spec: str) -> list[tuple[int, int, int]]:
    rows = []
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 3:
            raise UsageError(f"row {chunk!r}: expected N,K1,K2")
        try:
            rows.append(tuple(int(x) for x in parts))
        except ValueError:
            raise UsageError(f"row {chunk!r}: expected integers") from None
    return rows


def cmd_table(args) -> int:
    triples = _parse_rows(args.rows) if args.rows else DEFAULT_ROWS
    rows = table_rows(triples, _schemes(args.scheme), not args.no_measured, args.with_published_baselines)
    if args.format == "json":
        _write(json.dumps(rows, indent=2) + "\n", args.output)
    else:
        _write(_csv(rows, CSV_FIELDS), args.output)
    return 0


def cmd_points(args) -> int:
    merged, _ = _instance(args)
    rows = points(_config(merged))
    if args.format == "json":
        _write(json.dumps(rows, indent=2) + "\n", args.output)
    else:
        _write(_csv(rows, POINT_FIELDS), args.output)
    return 0


def cmd_trace(args) -> int:
    merged, seed = _instance(args)
    cfg = _config(merged)
    if args.demand:
        try:
            d = [int(x) for x in args.demand.split(",")]
        except ValueError:
            raise UsageError(f"bad demand {args.demand!r}") from None
    else:
        d = list(range(1, cfg.K + 1)) if cfg.n == cfg.K else list(default_demand(cfg))
    d = validate_demand(cfg, d)
    scheme = int(args.scheme)
    library = random_library(cfg, seed)
    placement = place(cfg, scheme, library)
    delivery = deliver(cfg, library, placement, d, args.strict_parity)
    results = decode_all(cfg, placement, delivery, d)
    rep = formula_report(cfg, scheme)
    mirrors = [args.mirror] if args.mirror else sorted(delivery.mirrors)

    out = [
        f"# scheme {scheme}: K1={cfg.k1} K2={cfg.k2} N={cfg.n} L={cfg.l} p={cfg.p}",
        f"# demand {tuple(d)}",
        "",
        "## placement",
    ]
    for m, cache in placement.mirrors.items():
        kinds = ", ".join(f"{cache.count(k)} {k}" for k in ("uncoded", "diff", "sum") if cache.count(k))
        out.append(f"mirror {m}: {kinds or 'empty'} -> {len(cache)}/{cfg.T} files")
    for k, cache in placement.users.items():
        kinds = ", ".join(f"{cache.count(x)} {x}" for x in ("uncoded", "diff", "sum") if cache.count(x))
        out.append(f"user {k}: {kinds} -> {len(cache)}/{cfg.T} files")
    out += ["", "## server -> mirrors"]
    out += [f"Y^{tx.tag[0]} = {tx.describe(cfg.p)}" for tx in delivery.server]
    for m in mirrors:
        out += ["", f"## mirror {m} -> users {cfg.users_of_mirror(m)}"]
        out += [f"{tx.phase}: {tx.describe(cfg.p)}" for tx in delivery.mirrors[m]]
    out += ["", "## decoding"]
    for k, res in sorted(results.items()):
        if cfg.mirror_of(k) not in mirrors:
            continue
        tally: dict[str, int] = {}
        for src in res.sources.values():
            tally[src] = tally.get(src, 0) + 1
        via = ", ".join(f"{n} from {s}" for s, n in sorted(tally.items()))
        correct = res.success and bool(np.array_equal(res.payload, library.file(res.file)))
        status = "ok" if correct else f"FAILED, missing {list(res.missing)}"
        out.append(f"user {k} wants W_{res.file}: {via} -> {status}")
    out += [
        "",
        f"# R1={rep.r1} ({render(rep.r1)}) R2={rep.r2} ({render(rep.r2)}) "
        f"Rbar={rep.rbar} ({render(rep.rbar)}) M1={rep.m1} M2={rep.m2}"
        + (f" flags={','.join(rep.flags)}" if rep.flags else ""),
    ]
    print("\n".join(out))
    return 0 if all(r.success for r in results.values()) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiercache", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="simulate demand sweeps and audit rates/memories")
    _add_instance_flags(p)
    p.add_argument("--scheme", choices=["1", "2", "both"], default="both")
    p.add_argument("--mode", choices=["exhaustive", "random"], default="exhaustive")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--budget", type=int, default=10**6, help="max demands in exhaustive mode")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-oracle", action="store_true", help="skip the rank-test oracle")
    p.add_argument("--strict-parity", action="store_true",
                   help="two parity classes in phase C even when they collide")
    p.add_argument("--files", nargs="+", help="raw files to use as the library (bytes over GF(257))")
    p.add_argument("--output", "-o", help="write the JSON report here")
    p.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    p.add_argument("--timings", action="store_true", help="include elapsed times in the report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table", help="memory/rate table rows (computed, measured, printed)")
    p.add_argument("--rows", help="';'-separated N,K1,K2 triples (default: the five table rows)")
    p.add_argument("--scheme", choices=["1", "2", "both"], default="both")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--with-published-baselines", action="store_true")
    p.add_argument("--no-measured", action="store_true", help="skip the simulated episode per row")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("trace", help="symbolic transcript of one episode")
    _add_instance_flags(p, {"k1": 3, "k2": 2, "n": 6})
    p.add_argument("--scheme", choices=["1", "2"], default="1")
    p.add_argument("--demand", help="comma-separated file indices, one per user")
    p.add_argument("--mirror", type=int, help="only show this mirror")
    p.add_argument("--strict-parity", action="store_true")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("points", help="corner and scheme (M1, M2, Rbar) points as CSV")
    _add_instance_flags(p)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_points)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IntegrityError as exc:
        print(f"hiercache {args.command}: internal inconsistency: {exc}", file=sys.stderr)
        return 1
    except (HierCacheError, OSError) as exc:
        print(f"hiercache {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
