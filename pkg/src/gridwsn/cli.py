"""Command-line entry point: ``gridwsn {run,topology,analyze,compare-sched}``.

Settings are resolved as defaults < ``--config`` file < ``GRIDWSN_OUT_DIR``
(output directory only) < command-line flags.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import analysis
from .config import build_config, load_config_file
from .errors import ConfigurationError, WSNError
from .sim import run as run_simulation
from .topology import GridConfig, neighbors_of, render_grid

OUT_DIR_ENV = "GRIDWSN_OUT_DIR"

_SIM_FLAGS = {
    # flag: (config key, type, help)
    "--width": ("width", int, "grid columns (default 4)"),
    "--height": ("height", int, "grid rows (default 5)"),
    "--iterations": ("iterations", int, "iterations to run, -1 runs until 'stop' (default 100)"),
    "--interval": ("interval", float, "seconds between iterations (default 1)"),
    "--max-random": ("max_random", int, "random values are drawn from 0..N-1 (default 12)"),
    "--packsize": ("packsize", int, "frame size in bytes (default 256)"),
    "--sched": ("sched", str, "serial, static:N or dynamic:N (default dynamic:4)"),
    "--seed": ("seed", int, "master seed (default 0)"),
    "--clock": ("clock", str, "real or virtual (default real)"),
    "--backend": ("backend", str, "memory or tcp (default memory)"),
    "--base-port": ("base_port", int, "first TCP port; rank r listens on base+r"),
    "--rounds": ("rounds", int, "cipher rounds per chunk (default 1000)"),
    "--out-dir": ("out_dir", str, "output directory"),
    "--key-file": ("key_file", str, "40-byte file: AES-192 key then 16-byte IV"),
}


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value configuration file")
    for flag, (key, typ, text) in _SIM_FLAGS.items():
        p.add_argument(flag, dest=key, type=typ, default=None, help=text)


def _resolve(args, parser: argparse.ArgumentParser):
    items = {}
    try:
        if args.config is not None:
            items.update(load_config_file(args.config))
        if os.environ.get(OUT_DIR_ENV):
            items["out_dir"] = os.environ[OUT_DIR_ENV]
        for key, _, _ in _SIM_FLAGS.values():
            value = getattr(args, key)
            if value is not None:
                items[key] = value
        return build_config(items)
    except (ConfigurationError, OSError) as exc:
        parser.error(str(exc))


def _cmd_run(args, parser) -> int:
    config = _resolve(args, parser)
    if args.stdin_stop and not config.unbounded:
        logging.getLogger(__name__).warning("--stdin-stop with bounded iterations: stop ends the run early")
    summary = run_simulation(config, sys.stdin if args.stdin_stop else None)
    print(summary.to_text())
    return 0


def _cmd_topology(args, parser) -> int:
    try:
        grid = GridConfig(args.width, args.height)
    except ConfigurationError as exc:
        parser.error(str(exc))
    print(f"{grid.width} x {grid.height} grid, {grid.process_count} processes (rank 0 = base station)")
    print(render_grid(grid))
    print()
    for rank in grid.sensor_ranks():
        nb = neighbors_of(rank, grid)
        cells = " ".join(f"{name}={'-' if r is None else r}" for name, r in zip(nb._fields, nb))
        print(f"rank {rank}: {cells}")
    return 0


def _cmd_analyze(args, parser) -> int:
    result = analysis.analyze(args.out_dir)
    messages = result["messages"]
    peak = max(messages, key=lambda p: p.value, default=None)
    print(f"events: {result['summary'].total_events}")
    if peak is not None:
        print(f"peak messages per iteration: {int(peak.value)} at iteration {peak.iteration}")
    if result["trend"] is not None:
        slope, intercept = result["trend"]
        print(f"comm time trend: slope {slope:.9f} s/iteration, intercept {intercept:.9f} s")
    print("activation grid:")
    for row in result["activation_grid"]:
        print("  " + " ".join(f"{n:3d}" for n in row))
    if "at_encryption" in result:
        print(f"average encryption time (s): {result['at_encryption']:.9f}")
        print(f"average decryption time (s): {result['at_decryption']:.9f}")
    return 0


def _cmd_compare(args, parser) -> int:
    config = _resolve(args, parser)
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    reports = analysis.compare_schedules(config, args.workers)
    print(f"{'mode':<12} {'SP enc':>9} {'SP dec':>9} {'SP total':>9}")
    for r in reports:
        print(f"{r.mode:<12} {r.sp_encryption:9.3f} {r.sp_decryption:9.3f} {r.sp_total:9.3f}")
    print(f"report written to {config.out_dir / 'speedup_report.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridwsn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one simulation and print its summary")
    _add_sim_flags(p)
    p.add_argument("--stdin-stop", action="store_true",
                   help="stop all nodes when the line 'stop' is read from stdin")
    p.set_defaults(func=_cmd_run, parser=p)

    p = sub.add_parser("topology", help="print the grid and every rank's neighbours")
    p.add_argument("--width", type=int, default=4)
    p.add_argument("--height", type=int, default=5)
    p.set_defaults(func=_cmd_topology, parser=p)

    p = sub.add_parser("analyze", help="compute series and grids for an output directory")
    p.add_argument("out_dir", type=Path)
    p.set_defaults(func=_cmd_analyze, parser=p)

    p = sub.add_parser("compare-sched", help="serial vs static vs dynamic speedup")
    _add_sim_flags(p)
    p.add_argument("--workers", type=int, default=4)
    p.set_defaults(func=_cmd_compare, parser=p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, args.parser)
    except (WSNError, OSError) as exc:
        print(f"gridwsn: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
