"""``decspray`` command line.

Every subcommand accepts ``--config FILE`` with a JSON object whose keys are
the flag names (dashes or underscores); flags given on the command line win.
CSV outputs start with ``#`` comment lines recording the package version and
the fully resolved configuration, seed included.

Exit codes: 0 ok, 2 invalid arguments, 3 packet header mismatch,
4 singular system, 5 inconsistent system.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from decspray import __version__, seeding
from decspray.code import CodeParams, build_code, degree, encode, sufficient_c
from decspray.decode import SingularReport, rank_and_solve, submatrix_from_packets
from decspray.errors import DecsprayError, PacketFormatError
from decspray.field import FIELD_NAMES, get_field
from decspray.packet import (
    bytes_to_symbols,
    read_packet,
    symbols_to_bytes,
    write_packet,
)
from decspray.perimetric import PERIMETRIC_COLUMNS, perimetric_rows
from decspray.sim import (
    SIM_COLUMNS,
    TrialConfig,
    aggregate,
    converse_experiment,
    coupon_expectation,
    coverage_trial,
    exhaustive_subsets,
    max_load_trial,
    parallel_map,
    run_trials,
    sim_row,
    write_csv,
)

EXIT_USAGE = 2
EXIT_HEADER = 3
EXIT_SINGULAR = 4
EXIT_INCONSISTENT = 5

# defaults applied after flags and config file are merged
DEFAULTS = {
    "simulate": {"k": None, "n": None, "c": 10.0, "field": "gf65536", "trials": 1000, "seed": 0,
                 "payload_len": 2, "nonzero_coeffs": False, "raw": None, "exhaustive": False},
    "coverage": {"bins": 200, "beta": 2.0, "trials": 2000, "seed": 0},
    "maxload": {"balls": None, "bins": None, "k": 1000, "alpha": 2.0, "c": 10.0, "trials": 100, "seed": 0},
    "converse": {"k": 200, "n": 400, "d": 3, "trials": 500, "seed": 0, "field": "gf65536",
                 "contrast_c": None},
    "perimetric": {"sides": [20, 40, 80], "ratios": [0.10, 0.33], "trials": 50, "seed": 0,
                   "c": None, "field": "gf65536"},
    "minc": {"alpha": [2.0]},
    "encode": {"data": None, "out": None, "n": None, "c": 6.0, "field": "gf256", "seed": 0,
               "nonzero_coeffs": False},
    "decode": {"packets": None, "out": None, "manifest": None},
}  # fmt: skip


class CliExit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="decspray", description="Decentralized erasure code experiments.")
    p.add_argument("--version", action="version", version=f"decspray {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_, argument_default=None)
        sp.add_argument("--config", type=Path, help="JSON file mirroring the flags")
        return sp

    s = add("simulate", "decode failure rate of random codes")
    s.add_argument("--k", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--c", type=float)
    s.add_argument("--field", choices=sorted(FIELD_NAMES))
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--payload-len", type=int)
    s.add_argument("--nonzero-coeffs", action="store_const", const=True)
    s.add_argument("--raw", type=Path, help="also write one CSV row per trial here")
    s.add_argument("--exhaustive", action="store_const", const=True,
                   help="check every k-subset of each code (k <= 6)")
    s.add_argument("--out", type=Path)

    s = add("coverage", "draws needed to cover every bin")
    s.add_argument("--bins", type=int, help="number of storage nodes (alpha * k)")
    s.add_argument("--beta", type=float)
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", type=Path)

    s = add("maxload", "maximum bin load when spraying")
    s.add_argument("--balls", type=int)
    s.add_argument("--bins", type=int)
    s.add_argument("--k", type=int, help="derive balls = k*d(k), bins = alpha*k when balls/bins unset")
    s.add_argument("--alpha", type=float)
    s.add_argument("--c", type=float)
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", type=Path)

    s = add("converse", "failure rate at a constant per-node degree")
    s.add_argument("--k", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--d", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--field", choices=sorted(FIELD_NAMES))
    s.add_argument("--contrast-c", type=float, help="add a row with degree ceil(c ln k)")
    s.add_argument("--out", type=Path)

    s = add("perimetric", "grid scenario with storage on the perimeter")
    s.add_argument("--sides", type=int, nargs="+")
    s.add_argument("--ratios", type=float, nargs="+")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--c", type=float, help="degree constant (default 5 n/k)")
    s.add_argument("--field", choices=sorted(FIELD_NAMES))
    s.add_argument("--out", type=Path)

    s = add("minc", "sufficient degree constant for an expansion ratio")
    s.add_argument("--alpha", type=float, nargs="+")
    s.add_argument("--out", type=Path)

    s = add("encode", "encode k equal-length files into n packet files")
    s.add_argument("--data", type=Path, help="directory holding the k source files")
    s.add_argument("--out", type=Path, help="directory for packet files")
    s.add_argument("--n", type=int)
    s.add_argument("--c", type=float)
    s.add_argument("--field", choices=sorted(FIELD_NAMES))
    s.add_argument("--seed", type=int)
    s.add_argument("--nonzero-coeffs", action="store_const", const=True)

    s = add("decode", "recover source files from packet files")
    s.add_argument("--packets", type=Path, nargs="+")
    s.add_argument("--out", type=Path)
    s.add_argument("--manifest", type=Path, help="manifest.json written by encode (restores names)")
    return p


def _resolve(args: argparse.Namespace) -> dict:
    """Merge flags over config file over defaults."""
    cfg = dict(DEFAULTS[args.command])
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise CliExit(EXIT_USAGE, f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise CliExit(EXIT_USAGE, "config file must hold a JSON object")
        for key, val in loaded.items():
            key = key.replace("-", "_")
            if key not in cfg and key != "out":
                raise CliExit(EXIT_USAGE, f"unknown config key {key!r}")
            cfg[key] = val
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        cfg[key] = val
    return cfg


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _header(command: str, cfg: dict) -> list[str]:
    shown = {k: (str(v) if isinstance(v, Path) else v) for k, v in cfg.items() if k != "out"}
    return [f"decspray {__version__} {command}", "config " + json.dumps(shown, sort_keys=True, default=str)]


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise CliExit(EXIT_USAGE, "missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def cmd_simulate(cfg: dict) -> int:
    _require(cfg, "k", "n")
    if cfg["k"] >= cfg["n"]:
        raise CliExit(EXIT_USAGE, "k must be < n")
    tc = TrialConfig(
        k=cfg["k"], n=cfg["n"], c=cfg["c"], field=cfg["field"], trials=cfg["trials"],
        master_seed=cfg["seed"], payload_len=cfg["payload_len"], nonzero_coeffs=bool(cfg["nonzero_coeffs"]),
    )  # fmt: skip
    if cfg["exhaustive"]:
        rows = []
        for t in range(tc.trials):
            total, singular = exhaustive_subsets(tc, t)
            rows.append({"k": tc.k, "n": tc.n, "c": float(tc.c), "q": tc.field.order, "trial": t,
                         "subsets": total, "singular_subsets": singular, "seed": tc.trial_seed(t)})
        cols = ("k", "n", "c", "q", "trial", "subsets", "singular_subsets", "seed")
        _emit(write_csv(rows, cols, _header("simulate", cfg)), cfg.get("out"))
        return 0
    results = run_trials(tc)
    agg = aggregate(results)
    _emit(write_csv([sim_row(tc, agg)], SIM_COLUMNS, _header("simulate", cfg)), cfg.get("out"))
    if cfg["raw"]:
        cols = ("trial", "pm_exists", "full_rank", "decode_ok", "rank", "covered_storage_nodes", "max_load")
        raw_rows = [
            {"trial": t, "pm_exists": int(r.pm_exists), "full_rank": int(r.full_rank),
             "decode_ok": int(r.decode_ok), "rank": r.rank,
             "covered_storage_nodes": r.covered_storage_nodes, "max_load": r.max_load}
            for t, r in enumerate(results)
        ]  # fmt: skip
        Path(cfg["raw"]).write_text(write_csv(raw_rows, cols, _header("simulate", cfg)))
    return 0


def cmd_coverage(cfg: dict) -> int:
    bins, beta, trials, seed = cfg["bins"], cfg["beta"], cfg["trials"], cfg["seed"]
    if bins < 1 or trials < 1:
        raise CliExit(EXIT_USAGE, "--bins and --trials must be positive")
    counts = parallel_map(lambda t: coverage_trial(bins, seeding.stream(seed, seeding.TRIAL, t)), range(trials))
    threshold = beta * bins * math.log(bins) if bins > 1 else 0.0
    exceed = sum(c > threshold for c in counts)
    row = {
        "alpha_k": bins, "beta": float(beta), "trials": trials, "mean_C": float(np.mean(counts)),
        "expected_C": coupon_expectation(bins), "threshold": threshold, "exceed": exceed,
        "exceed_rate": exceed / trials, "bound": float(bins ** -(beta - 1)), "seed": seed,
    }  # fmt: skip
    cols = tuple(row)
    _emit(write_csv([row], cols, _header("coverage", cfg)), cfg.get("out"))
    return 0


def cmd_maxload(cfg: dict) -> int:
    balls, bins = cfg["balls"], cfg["bins"]
    if balls is None or bins is None:
        k = cfg["k"]
        balls = k * degree(k, cfg["c"]) if balls is None else balls
        bins = round(cfg["alpha"] * k) if bins is None else bins
    if bins < 1 or balls < 0:
        raise CliExit(EXIT_USAGE, "need bins >= 1 and balls >= 0")
    seed, trials = cfg["seed"], cfg["trials"]
    loads = parallel_map(lambda t: max_load_trial(balls, bins, seeding.stream(seed, seeding.TRIAL, t)), range(trials))
    mean = balls / bins
    row = {
        "balls": balls, "bins": bins, "trials": trials, "mean_load": mean,
        "mean_max": float(np.mean(loads)), "max_max": int(max(loads)),
        "within_3x_mean": sum(x <= 3 * mean for x in loads), "seed": seed,
    }  # fmt: skip
    _emit(write_csv([row], tuple(row), _header("maxload", cfg)), cfg.get("out"))
    return 0


def cmd_converse(cfg: dict) -> int:
    k, n = cfg["k"], cfg["n"]
    if k >= n:
        raise CliExit(EXIT_USAGE, "k must be < n")
    arms = [cfg["d"]]
    if cfg["contrast_c"] is not None:
        arms.append(degree(k, cfg["contrast_c"]))
    rows = []
    for d in arms:
        agg = converse_experiment(k, n, d, cfg["trials"], master_seed=cfg["seed"], field=cfg["field"])
        rows.append({
            "k": k, "n": n, "d": d, "q": get_field(cfg["field"]).order, "trials": agg.trials,
            "failures": agg.failures, "failure_rate": agg.failure_rate,
            "ci_low": agg.ci[0], "ci_high": agg.ci[1], "seed": cfg["seed"],
        })  # fmt: skip
    _emit(write_csv(rows, tuple(rows[0]), _header("converse", cfg)), cfg.get("out"))
    return 0


def cmd_perimetric(cfg: dict) -> int:
    rows = perimetric_rows(cfg["sides"], cfg["ratios"], cfg["trials"], master_seed=cfg["seed"],
                           c=cfg["c"], field=cfg["field"])  # fmt: skip
    _emit(write_csv(rows, PERIMETRIC_COLUMNS, _header("perimetric", cfg)), cfg.get("out"))
    return 0


def cmd_minc(cfg: dict) -> int:
    rows = [{"alpha": float(a), "sufficient_c": sufficient_c(a), "five_alpha": 5.0 * a} for a in cfg["alpha"]]
    _emit(write_csv(rows, ("alpha", "sufficient_c", "five_alpha"), _header("minc", cfg)), cfg.get("out"))
    return 0


def cmd_encode(cfg: dict) -> int:
    _require(cfg, "data", "out", "n")
    field = get_field(cfg["field"])
    files = sorted(p for p in Path(cfg["data"]).iterdir() if p.is_file())
    if not files:
        raise CliExit(EXIT_USAGE, f"no files in {cfg['data']}")
    blobs = [p.read_bytes() for p in files]
    if len({len(b) for b in blobs}) != 1:
        raise CliExit(EXIT_USAGE, "source files must all have the same length")
    if len(blobs[0]) % field.symbol_bytes:
        raise CliExit(EXIT_USAGE, f"file length must be a multiple of {field.symbol_bytes} bytes for {field.name}")
    k, n = len(files), cfg["n"]
    if k >= n:
        raise CliExit(EXIT_USAGE, "k must be < n")
    params = CodeParams(k=k, n=n, c=cfg["c"], field=field, seed=cfg["seed"],
                        nonzero_coeffs=bool(cfg["nonzero_coeffs"]))  # fmt: skip
    _, gen = build_code(params)
    packets = encode(gen, [bytes_to_symbols(b, field) for b in blobs])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    for pkt in packets:
        write_packet(out / f"packet_{pkt.storage_id:05d}.dec", pkt)
    manifest = {
        "version": __version__,
        "config": {k_: (str(v) if isinstance(v, Path) else v) for k_, v in cfg.items()},
        "k": k,
        "n": n,
        "d": params.d,
        "files": [p.name for p in files],
        "bytes": len(blobs[0]),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return 0


def cmd_decode(cfg: dict) -> int:
    _require(cfg, "packets", "out")
    try:
        packets = [read_packet(p) for p in cfg["packets"]]
    except PacketFormatError as exc:
        raise CliExit(EXIT_HEADER, f"bad packet header: {exc}") from None
    first = packets[0]
    for p in packets[1:]:
        if (p.k, p.n, p.field, len(p.payload)) != (first.k, first.n, first.field, len(first.payload)):
            raise CliExit(EXIT_HEADER, "packet headers disagree (k, n, field or payload length)")
    if len({p.storage_id for p in packets}) != len(packets):
        raise CliExit(EXIT_HEADER, "duplicate storage ids among packets")
    k = first.k
    if len(packets) < k:
        raise CliExit(EXIT_USAGE, f"need exactly k packets: k={k}, got {len(packets)}")
    chosen, extra = packets[:k], packets[k:]
    sub = submatrix_from_packets(chosen)
    result = rank_and_solve(sub, [p.payload for p in chosen])
    if isinstance(result, SingularReport):
        raise CliExit(EXIT_SINGULAR, f"singular system: rank {result.rank} < k={k}")
    field = first.field
    # redundant packets must agree with the decoded data
    for p in extra:
        expect = np.zeros_like(p.payload)
        for i, f in p.coeffs:
            expect ^= field.scale(result[i], f)
        if not np.array_equal(expect, p.payload):
            raise CliExit(EXIT_INCONSISTENT, f"inconsistent system: packet {p.storage_id} disagrees with decoded data")
    names = [f"source_{i:04d}.bin" for i in range(k)]
    if cfg.get("manifest"):
        names = json.loads(Path(cfg["manifest"]).read_text())["files"]
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    for name, row in zip(names, result):
        (out / name).write_bytes(symbols_to_bytes(row, field))
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "coverage": cmd_coverage,
    "maxload": cmd_maxload,
    "converse": cmd_converse,
    "perimetric": cmd_perimetric,
    "minc": cmd_minc,
    "encode": cmd_encode,
    "decode": cmd_decode,
}


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        return COMMANDS[args.command](cfg)
    except CliExit as exc:
        print(f"decspray {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except DecsprayError as exc:
        print(f"decspray {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
