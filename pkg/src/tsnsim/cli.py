"""
Command-line front end.

Exit codes: 0 ok, 1 usage, 2 config or validation, 3 runtime, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from . import chan38901 as ch
from .chan38901 import InfProfile
from .config import ConfigError, dumps, load_config
from .engine import BatchError, BuildError, SimulationError, build, iter_batch
from .metrics import BIN_ORDER
from .mobility import RING_CENTERS
from .phy import RadioConfig
from .scenario import ScenarioError, defaults, to_sections

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3, 4

SWEEP_PROFILES = (InfProfile.SL, InfProfile.DL, InfProfile.SH, InfProfile.DH)
CHANNEL_EVAL_GRID = (1.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0)
AGGREGATE_COLUMNS = ("sweep", "cell", "seed", "profile", "kind", "name", "stat", "value")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def parse_seeds(text: str) -> list[int]:
    """``7``, ``1,2,5`` or an inclusive range ``1..10``."""
    out = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = (int(x) for x in part.split("..", 1))
                if hi < lo:
                    raise ValueError
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not out or any(s < 0 for s in out):
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tsnsim", description="5G-TSN indoor-factory discrete-event simulator")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, need_config=True):
        sp.add_argument("--config", required=need_config, help="scenario file")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted config key, repeatable")

    run = sub.add_parser("run", help="one simulation run")
    common(run)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, help="overrides sim.seed")
    run.add_argument("--progress", action="store_true", help="simulated time to stderr")

    sw = sub.add_parser("sweep", help="grid of runs with an aggregate CSV")
    common(sw)
    sw.add_argument("--out", required=True)
    sw.add_argument("--sweep-dim", required=True, choices=("test-cases", "profiles", "distances"))
    sw.add_argument("--seeds", type=parse_seeds, default=None,
                    help="e.g. 1..10 or 1,2,3 (default: sim.seed)")
    sw.add_argument("--distances", type=_floats, default=None,
                    help="extra ring radii in m for the distances sweep")
    sw.add_argument("--jobs", type=int, default=1, help="worker processes")
    sw.add_argument("--progress", action="store_true")

    ce = sub.add_parser("channel-eval", help="deterministic path-loss / LOS-probability dump")
    ce.add_argument("--profiles", default="SL,DL,SH,DH,HH")
    ce.add_argument("--distances", type=_floats, default=list(CHANNEL_EVAL_GRID),
                    help="2D distances in m")
    ce.add_argument("--fc", type=float, default=RadioConfig().carrier, help="carrier in GHz")
    ce.add_argument("--h-bs", type=float, default=None, help="gNB height (default per profile)")
    ce.add_argument("--h-ut", type=float, default=ch.H_UT_DEFAULT)
    ce.add_argument("--lenient-range", action="store_true",
                    help="clamp out-of-range distances instead of failing")
    ce.add_argument("--out", default=None, help="CSV path (default: stdout)")

    va = sub.add_parser("validate", help="check a config and print the resolved values")
    common(va, need_config=False)
    return p


def _progress_printer(label: str, duration: float):
    def report(t: float):
        print(f"{label}t={t:.0f}/{duration:g} s", file=sys.stderr, flush=True)
    return report


def _load(args):
    if args.config is not None and not Path(args.config).is_file():
        raise FileNotFoundError(f"config file not found: {args.config}")
    return load_config(args.config, args.override)


def cmd_run(args) -> int:
    scn = _load(args)
    if args.seed is not None:
        scn = replace(scn, seed=args.seed)
    progress = _progress_printer("", scn.duration) if args.progress else None
    store = build(scn, progress=progress).run()
    store.export(args.out)
    return EXIT_OK


def sweep_cells(scn, dim: str, extra_distances=()):
    """``[(cell name, scenario)]`` for one sweep dimension."""
    if dim == "test-cases":
        return [(f"tc{i}", scn.with_test_case(i)) for i in range(1, 8)]
    if dim == "profiles":
        return [(p.label, scn.with_profile(p)) for p in SWEEP_PROFILES]
    radii = [(b.value, RING_CENTERS[b.value]) for b in BIN_ORDER[:3]]
    radii += [(f"{d:g}m", d) for d in extra_distances]
    return [(f"{p.label}_{tag}", scn.with_profile(p).with_ring(d))
            for p in SWEEP_PROFILES for tag, d in radii]


def aggregate_rows(dim: str, cell: str, seed: int, summary: dict):
    prof = summary["scenario"]["channel"]["profile"]
    for name, f in sorted(summary["flows"].items()):
        base = (dim, cell, seed, prof, "latency_ms", name)
        box = f.get("latency_ms")
        if box:
            for stat in ("count", "min", "q1", "median", "q3", "max", "iqr"):
                yield (*base, stat, box[stat])
        for stat in ("generated", "delivered", "dropped"):
            yield (dim, cell, seed, prof, "flow", name, stat, f[stat])
    for h in summary["harq"]:
        for stat in ("total_tx", "failed_tx", "attempt_rate", "pdu_total", "pdu_failed",
                     "residual_rate"):
            yield (dim, cell, seed, prof, "harq", h["bin"], stat, h[stat])
    for s in summary["sinr"]:
        for stat in ("mean", "p5", "p50", "p95", "count"):
            yield (dim, cell, seed, prof, "sinr", "dl", stat, s[stat])


def _cell_value(v):
    if v is None:
        return "NA"
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def cmd_sweep(args) -> int:
    scn = _load(args)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    seeds = args.seeds or [scn.seed]
    extra = args.distances or ()
    if extra and args.sweep_dim != "distances":
        raise UsageError("--distances only applies to --sweep-dim distances")
    cells = sweep_cells(scn, args.sweep_dim, extra)
    work = [(cell, replace(c, seed=s)) for cell, c in cells for s in seeds]
    for _, w in work:
        w.validate()
    root = Path(args.out) / args.sweep_dim
    rows = []
    for i, ((cell, w), store) in enumerate(zip(work, iter_batch([w for _, w in work],
                                                                 jobs=args.jobs))):
        out = root / cell / str(w.seed)
        store.export(out)
        rows.extend(aggregate_rows(args.sweep_dim, cell, w.seed, store.summary()))
        if args.progress:
            print(f"[{i + 1}/{len(work)}] {cell} seed {w.seed} done", file=sys.stderr,
                  flush=True)
    with open(root / "aggregate.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(AGGREGATE_COLUMNS)
        for r in rows:
            wr.writerow([_cell_value(v) for v in r])
    return EXIT_OK


def cmd_channel_eval(args) -> int:
    try:
        profiles = [InfProfile.parse(p) for p in args.profiles.split(",") if p.strip()]
        rows = ch.channel_eval_rows(profiles, args.distances, args.fc, h_bs=args.h_bs,
                                    h_ut=args.h_ut, lenient=args.lenient_range)
    except ch.ChannelError as e:
        raise ConfigError(str(e)) from None
    if args.out is None:
        wr = csv.writer(sys.stdout, lineterminator="\n")
        wr.writerow(ch.CHANNEL_EVAL_COLUMNS)
        wr.writerows(rows)
        return EXIT_OK
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(ch.CHANNEL_EVAL_COLUMNS)
        wr.writerows(rows)
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.config is None:
        if args.override:
            from .config import loads
            sections = to_sections(loads("", args.override))
        else:
            sections = defaults()
    else:
        sections = to_sections(_load(args))
    sys.stdout.write(dumps(sections))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "channel-eval": cmd_channel_eval,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        return COMMANDS[args.command](args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"tsnsim: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, BuildError, ScenarioError) as e:
        print(f"tsnsim: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BatchError as e:
        if isinstance(e.__cause__, OSError):
            print(f"tsnsim: I/O error: {e}", file=sys.stderr)
            return EXIT_IO
        print(f"tsnsim: runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"tsnsim: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except SimulationError as e:
        print(f"tsnsim: runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001
        print(f"tsnsim: runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
