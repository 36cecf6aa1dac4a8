"""Command-line interface: ``groupbound {calibrate,bound,cluster,simulate,replay}``.

Exit codes: 0 ok, 2 usage or parse error, 3 data inconsistency, 4 numerical failure.
Group indices in JSON files are 1-based; everything inside the library is 0-based.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .aggregation import DEFAULT_EPSILON, DEFAULT_SPLITS, SplitError, aggregate_bounds, average_linkage_tree, cluster_test
from .basis_pursuit import RegressionData
from .errors import (
    CalibrationDiverged,
    CalibrationMissing,
    DimensionMismatch,
    GroupBoundError,
    InvalidArgument,
    UnknownSetting,
)
from .noise import CalibrationCache, _as_seed, calibrate_m, default_cache_path
from .simulation import CSV_FIELDS, SETTINGS, SIGMA_GRID, build_setting, run_experiment, setting_record, write_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class ParseError(GroupBoundError):
    """Malformed input file; the message names the file, row and column."""


class DataError(GroupBoundError):
    """Well-formed input that is inconsistent (shapes, index ranges)."""


@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int
    calibration_cache: str | None
    argv: list
    started: str
    finished: str | None = None
    version: str = __version__
    backend: str = BACKEND
    extra: dict = field(default_factory=dict)

    def finish(self):
        self.finished = _now()
        return self

    def to_json(self) -> dict:
        return asdict(self)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---- input parsing ----------------------------------------------------------


def _parse_float(text, path, row, col):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{path}: row {row}, column {col}: cannot parse {text.strip()!r} as a number") from None
    if not math.isfinite(value):
        raise ParseError(f"{path}: row {row}, column {col}: non-finite value {text.strip()!r}")
    return value


def read_matrix(path, header: bool = False) -> np.ndarray:
    """Comma-separated numeric table; rows and columns in messages are 1-based file positions."""
    rows = []
    width = None
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    with fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not rec or all(not f.strip() for f in rec):
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise ParseError(f"{path}: row {lineno}: expected {width} columns, found {len(rec)}")
            rows.append([_parse_float(f, path, lineno, j + 1) for j, f in enumerate(rec)])
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def read_response(path, header: bool = False) -> np.ndarray:
    Y = read_matrix(path, header)
    if Y.shape[1] != 1:
        raise ParseError(f"{path}: expected one column, found {Y.shape[1]}")
    return Y[:, 0]


def load_data(x_path, y_path, header: bool = False) -> RegressionData:
    X = read_matrix(x_path, header)
    Y = read_response(y_path, header)
    if X.shape[0] != Y.size:
        raise DataError(f"{x_path} has {X.shape[0]} rows but {y_path} has {Y.size}")
    return RegressionData(X, Y)


def read_groups(path, p: int) -> list[tuple[str, tuple]]:
    """``[{"name": ..., "indices": [1-based ints]}]`` -> ``[(name, 0-based tuple)]``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, list):
        raise ParseError(f"{path}: expected a JSON array of groups")
    groups = []
    for i, item in enumerate(doc):
        where = f"{path}: group {i + 1}"
        if not isinstance(item, dict) or "indices" not in item:
            raise ParseError(f"{where}: expected an object with 'name' and 'indices'")
        name = item.get("name", f"G{i + 1}")
        if not isinstance(name, str):
            raise ParseError(f"{where}: name must be a string")
        idx = item["indices"]
        if not isinstance(idx, list) or not idx:
            raise ParseError(f"{where}: indices must be a non-empty array")
        if not all(isinstance(j, int) and not isinstance(j, bool) for j in idx):
            raise ParseError(f"{where}: indices must be integers")
        bad = [j for j in idx if not 1 <= j <= p]
        if bad:
            raise DataError(f"{where} ({name}): index {bad[0]} outside 1..{p}")
        groups.append((name, tuple(sorted({j - 1 for j in idx}))))
    return groups


def write_json(path, payload):
    text = json.dumps(payload, indent=2)
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text + "\n")


# ---- argument types ---------------------------------------------------------


def _unit_interval(name):
    def parse(text):
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not 0.0 < value < 1.0:
            raise argparse.ArgumentTypeError(f"{name} must lie strictly between 0 and 1, got {value}")
        return value

    return parse


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return value


def _add_pipeline_args(sp):
    sp.add_argument("--alpha", type=_unit_interval("alpha"), default=0.05)
    sp.add_argument("--splits", type=_positive_int, default=DEFAULT_SPLITS, help="number of random splits K")
    sp.add_argument("--epsilon", type=_unit_interval("epsilon"), default=DEFAULT_EPSILON)
    sp.add_argument("--s", type=_positive_int, default=None, help="projection dimension (default min(10, p, n/2))")
    sp.add_argument("--seed", type=_seed, default=None, help="master seed; drawn and recorded when omitted")
    sp.add_argument("--threads", type=_positive_int, default=None, help="worker threads (default: available cores)")
    sp.add_argument("--cache", default=None, help="calibration cache (default $GROUPBOUND_CACHE or ~/.cache)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupbound", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("calibrate", help="simulate the vertex count m for a hull dimension and level")
    sp.add_argument("--dim", type=_positive_int, required=True)
    sp.add_argument("--alpha", type=_unit_interval("alpha"), required=True)
    sp.add_argument("--reps", type=_positive_int, default=5000)
    sp.add_argument("--seed", type=_seed, default=None)
    sp.add_argument("--cache", default=None)
    sp.add_argument("--out", default=None, help="also write the entry and manifest as JSON")

    sp = sub.add_parser("bound", help="lower confidence bounds for groups of variables")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--groups", required=True, help='JSON array of {"name", "indices" (1-based)}')
    sp.add_argument("--header", action="store_true", help="skip the first line of both CSV files")
    _add_pipeline_args(sp)
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("cluster", help="top-down testing of the average-linkage correlation tree")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--header", action="store_true")
    _add_pipeline_args(sp)
    sp.add_argument("--bonferroni", action="store_true", help="test node G at level alpha*|G|/p")
    sp.add_argument("--no-prune", action="store_true", help="test every node")
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("simulate", help="rejection frequencies on a block-correlated design")
    sp.add_argument("--setting", choices=sorted(SETTINGS), required=True)
    sp.add_argument("--sims", type=_positive_int, default=100)
    sp.add_argument("--sigma", type=float, nargs="+", default=list(SIGMA_GRID))
    sp.add_argument("--scale-p", type=_positive_int, default=None)
    sp.add_argument("--scale-n", type=_positive_int, default=None)
    _add_pipeline_args(sp)
    sp.add_argument("--out", required=True, help="CSV path; the manifest goes to <out>.manifest.json")
    sp.add_argument("--quiet", action="store_true")

    sp = sub.add_parser("replay", help="re-run the command recorded in an output's manifest")
    sp.add_argument("manifest", help="JSON output or manifest file written by another subcommand")
    sp.add_argument("--out", default=None, help="override the output path")
    return parser


# ---- commands ---------------------------------------------------------------


PATH_FLAGS = ("--x", "--y", "--groups", "--cache", "--out")


def _resolved_argv(argv, seed):
    """The command line with file paths made absolute and the seed pinned."""
    argv = list(argv)
    for i, a in enumerate(argv):
        flag, eq, value = a.partition("=")
        if flag in PATH_FLAGS:
            if eq and value != "-":
                argv[i] = f"{flag}={os.path.abspath(value)}"
            elif not eq and i + 1 < len(argv) and argv[i + 1] != "-":
                argv[i + 1] = os.path.abspath(argv[i + 1])
    if "--seed" not in argv and not any(a.startswith("--seed=") for a in argv):
        argv += ["--seed", str(seed)]
    return argv


def _manifest(args, argv, seed, cache_path, params=None):
    params = params if params is not None else {
        k: v for k, v in vars(args).items() if k not in ("command", "func")
    }
    params["seed"] = seed
    return RunManifest(args.command, params, seed, str(cache_path) if cache_path else None,
                       _resolved_argv(argv, seed), _now())


def _cache(args, **kw) -> tuple[CalibrationCache, Path]:
    path = Path(args.cache) if args.cache else default_cache_path()
    return CalibrationCache(path, autosave=True, **kw), path


def _threads(args) -> int:
    return args.threads or os.cpu_count() or 1


def cmd_calibrate(args, argv) -> int:
    seed = args.seed if args.seed is not None else _as_seed(None)
    cache, path = _cache(args)
    manifest = _manifest(args, argv, seed, path)
    entry = calibrate_m(args.dim, args.alpha, args.reps, seed)
    existing = cache.get(args.dim, args.alpha)
    if existing != entry:
        cache.add(entry)
        cache.save()
    print(f"dim={entry.dim} alpha={entry.alpha:g} m={entry.m} m/dim={entry.m / entry.dim:.3f} "
          f"coverage={entry.achieved_coverage:.4f}")
    if args.out:
        write_json(args.out, {"entry": entry.to_json(), "manifest": manifest.finish().to_json()})
    return EXIT_OK


def cmd_bound(args, argv) -> int:
    seed = args.seed if args.seed is not None else _as_seed(None)
    data = load_data(args.x, args.y, args.header)
    groups = read_groups(args.groups, data.p)
    cache, path = _cache(args)
    manifest = _manifest(args, argv, seed, path)
    bounds = aggregate_bounds(
        data, [g for _, g in groups], args.splits, args.epsilon, args.alpha, args.s, seed,
        calibration=cache, threads=_threads(args),
    )
    results = [
        {
            "name": name,
            "indices": [j + 1 for j in idx],
            "lower_bound": b.lower_bound,
            "rejected": b.rejected,
            "per_split_bounds": list(b.per_split_bounds),
        }
        for (name, idx), b in zip(groups, bounds)
    ]
    write_json(args.out, {"results": results, "manifest": manifest.finish().to_json()})
    return EXIT_OK


def cmd_cluster(args, argv) -> int:
    seed = args.seed if args.seed is not None else _as_seed(None)
    data = load_data(args.x, args.y, args.header)
    if data.p < 2:
        raise DataError("clustering needs at least two columns")
    cache, path = _cache(args)
    manifest = _manifest(args, argv, seed, path)
    tree = cluster_test(
        data, average_linkage_tree(data.X), args.alpha, args.splits, args.epsilon, args.s, seed,
        calibration=cache, prune=not args.no_prune, multiplicity="bonferroni" if args.bonferroni else None,
        threads=_threads(args),
    )
    write_json(args.out, {"tree": tree.to_json(index_base=1), "manifest": manifest.finish().to_json()})
    return EXIT_OK


def cmd_simulate(args, argv) -> int:
    seed = args.seed if args.seed is not None else _as_seed(None)
    if any(not (s >= 0 and math.isfinite(s)) for s in args.sigma):
        raise InvalidArgument("sigma values must be finite and non-negative")
    cache, path = _cache(args)
    manifest = _manifest(args, argv, seed, path)
    results = []
    for i, sigma in enumerate(args.sigma):
        setting = build_setting(args.setting, sigma).scaled(args.scale_p, args.scale_n)
        progress = None
        if not args.quiet:
            def progress(done, total, sigma=sigma):
                print(f"\rsigma={sigma:g}: {done}/{total}", end="" if done < total else "\n", file=sys.stderr)
        # Each noise level gets its own stream so adding levels leaves earlier ones unchanged.
        level_seed = int(np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(1, np.uint64)[0] >> 1)
        results.append(run_experiment(
            setting, sims=args.sims, alpha=args.alpha, K=args.splits, epsilon=args.epsilon, s=args.s,
            rng=level_seed, calibration=cache, threads=_threads(args), progress=progress,
        ))
    manifest.extra = {"settings": [setting_record(r.setting) for r in results], "csv_fields": CSV_FIELDS}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        write_csv(results, fh)
    write_json(f"{out}.manifest.json", manifest.finish().to_json())
    return EXIT_OK


def cmd_replay(args, argv) -> int:
    try:
        with open(args.manifest) as fh:
            record = json.load(fh)
    except OSError as exc:
        raise ParseError(f"{args.manifest}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.manifest}: line {exc.lineno}: {exc.msg}") from None
    manifest = record.get("manifest", record) if isinstance(record, dict) else None
    if not isinstance(manifest, dict) or not isinstance(manifest.get("argv"), list):
        raise ParseError(f"{args.manifest}: no manifest with a recorded command line")
    replay_argv = list(manifest["argv"])
    if replay_argv and replay_argv[0] == "replay":
        raise ParseError(f"{args.manifest}: refusing to replay a replay")
    if args.out is not None:
        if "--out" in replay_argv:
            replay_argv[replay_argv.index("--out") + 1] = args.out
        else:
            replay_argv += ["--out", args.out]
    if manifest.get("calibration_cache") and "--cache" not in replay_argv:
        replay_argv += ["--cache", manifest["calibration_cache"]]
    return main(replay_argv)


COMMANDS = {
    "calibrate": cmd_calibrate,
    "bound": cmd_bound,
    "cluster": cmd_cluster,
    "simulate": cmd_simulate,
    "replay": cmd_replay,
}


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, SplitError):
        exc = exc.cause
    if isinstance(exc, (ParseError, InvalidArgument, CalibrationDiverged, UnknownSetting)):
        return EXIT_USAGE
    if isinstance(exc, (DataError, DimensionMismatch)):
        return EXIT_DATA
    if isinstance(exc, CalibrationMissing):
        return EXIT_DATA
    return EXIT_NUMERIC


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, argv)
    except GroupBoundError as exc:
        print(f"groupbound {args.command}: error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"groupbound {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
