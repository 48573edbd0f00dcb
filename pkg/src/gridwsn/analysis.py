"""Post-run metrics over the CSV files a run leaves in its output directory."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .base import EVENT_COLUMNS, RunSummary
from .config import SimConfig, build_config, load_config_file
from .crypto import Operation, SchedulingMode, TimingSample
from .errors import AnalysisError
from .topology import GridConfig, rank_at


class SeriesPoint(NamedTuple):
    iteration: int
    value: float


@dataclass(frozen=True)
class SpeedupReport:
    mode: str
    at_enc_serial: float
    at_enc_parallel: float
    at_dec_serial: float
    at_dec_parallel: float
    at_total_serial: float
    at_total_parallel: float
    sp_encryption: float
    sp_decryption: float
    sp_total: float

    @classmethod
    def from_averages(cls, mode: str, enc_serial: float, enc_parallel: float,
                      dec_serial: float, dec_parallel: float) -> "SpeedupReport":
        total_serial = combined_average(enc_serial, dec_serial)
        total_parallel = combined_average(enc_parallel, dec_parallel)
        return cls(
            mode, enc_serial, enc_parallel, dec_serial, dec_parallel,
            total_serial, total_parallel,
            speedup(enc_serial, enc_parallel),
            speedup(dec_serial, dec_parallel),
            speedup(total_serial, total_parallel),
        )


# ---- timing and speedup ----------------------------------------------------

def average_time(samples: Iterable[TimingSample], op_kind: Operation) -> float:
    durations = [s.duration for s in samples if s.operation == op_kind]
    if not durations:
        raise AnalysisError(f"no {Operation(op_kind).value} samples to average")
    return float(np.mean(durations))


def speedup(serial_avg: float, parallel_avg: float) -> float:
    if serial_avg <= 0 or parallel_avg <= 0:
        raise AnalysisError(f"speedup needs positive times, got {serial_avg}, {parallel_avg}")
    return serial_avg / parallel_avg


def combined_average(at_enc: float, at_dec: float) -> float:
    if at_enc <= 0 or at_dec <= 0:
        raise AnalysisError(f"averages must be positive, got {at_enc}, {at_dec}")
    return (at_enc + at_dec) / 2


def read_timing_csv(path) -> list[TimingSample]:
    samples = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader, 2):
            try:
                samples.append(TimingSample(int(row["rank"]), int(row["iteration"]),
                                            Operation(row["operation"]), float(row["duration_s"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise AnalysisError(f"{path}:{lineno}: malformed timing row: {exc}") from exc
    return samples


def node_timing_samples(out_dir) -> list[TimingSample]:
    files = sorted(Path(out_dir).glob("node_*_timing.csv"))
    if not files:
        raise AnalysisError(f"no node timing files in {out_dir}")
    return [s for f in files for s in read_timing_csv(f)]


def base_timing_samples(out_dir) -> list[TimingSample]:
    return read_timing_csv(Path(out_dir) / "decrypt_timing.csv")


def run_averages(out_dir) -> tuple[float, float]:
    """Mean node encryption time and mean base decryption time of one run."""
    enc = average_time(node_timing_samples(out_dir), Operation.ENCRYPT)
    dec = average_time(base_timing_samples(out_dir), Operation.DECRYPT)
    return enc, dec


# ---- event series ----------------------------------------------------------

def read_events(events_csv) -> list[dict]:
    rows = []
    with open(events_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EVENT_COLUMNS:
            raise AnalysisError(f"{events_csv}: unexpected header {reader.fieldnames}")
        for lineno, row in enumerate(reader, 2):
            try:
                rows.append({
                    "iteration": int(row["iteration"]),
                    "activated_rank": int(row["activated_rank"]),
                    "match_count": int(row["match_count"]),
                    "comm_time_s": float(row["comm_time_s"]),
                    "decrypt_time_s": float(row["decrypt_time_s"]),
                })
            except (TypeError, ValueError) as exc:
                raise AnalysisError(f"{events_csv}:{lineno}: malformed row: {exc}") from exc
    return rows


def messages_per_iteration(events_csv, iterations: Optional[int] = None) -> list[SeriesPoint]:
    """Event reports per iteration, zero-filled over ``1..iterations``."""
    rows = read_events(events_csv)
    last = max((r["iteration"] for r in rows), default=0)
    n = last if iterations is None or iterations < 0 else max(iterations, last)
    counts = np.zeros(n + 1, dtype=int)
    for r in rows:
        counts[r["iteration"]] += 1
    return [SeriesPoint(i, float(counts[i])) for i in range(1, n + 1)]


def comm_time_series(events_csv) -> list[SeriesPoint]:
    """Mean communication time per iteration, for iterations that had events."""
    by_iter: dict[int, list[float]] = {}
    for r in read_events(events_csv):
        by_iter.setdefault(r["iteration"], []).append(r["comm_time_s"])
    return [SeriesPoint(i, float(np.mean(v))) for i, v in sorted(by_iter.items())]


def comm_time_trend(series: Sequence[SeriesPoint]) -> tuple[float, float]:
    """Least-squares line through the series; returns ``(slope, intercept)``."""
    if len(series) < 2:
        raise AnalysisError("a trend needs at least two points")
    x = np.array([p.iteration for p in series], dtype=float)
    y = np.array([p.value for p in series], dtype=float)
    dx = x - x.mean()
    sxx = dx @ dx
    if sxx == 0:
        raise AnalysisError("a trend needs at least two distinct iterations")
    slope = (dx @ (y - y.mean())) / sxx
    return float(slope), float(y.mean() - slope * x.mean())


def activation_grid(summary: RunSummary, config: GridConfig) -> np.ndarray:
    grid = np.zeros((config.height, config.width), dtype=int)
    for row in range(config.height):
        for col in range(config.width):
            rank = rank_at(row, col, config)
            if rank not in summary.activations:
                raise AnalysisError(f"summary has no activation count for rank {rank}")
            grid[row, col] = summary.activations[rank]
    return grid


# ---- whole-directory drivers -------------------------------------------------

def load_run_config(out_dir) -> SimConfig:
    path = Path(out_dir) / "config.txt"
    if not path.exists():
        raise AnalysisError(f"{out_dir} has no config.txt")
    return build_config(load_config_file(path))


def _write_series(path: Path, header: list[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def analyze(out_dir) -> dict:
    """Write series_messages.csv, series_commtime.csv and activation_grid.csv."""
    out = Path(out_dir)
    cfg = load_run_config(out)
    events = out / "events.csv"
    summary = RunSummary.read_csv(out / "summary.csv")

    messages = messages_per_iteration(events, cfg.iterations)
    _write_series(out / "series_messages.csv", ["iteration", "messages"],
                  [(p.iteration, int(p.value)) for p in messages])

    comm = comm_time_series(events)
    trend = comm_time_trend(comm) if len({p.iteration for p in comm}) >= 2 else None
    _write_series(
        out / "series_commtime.csv", ["iteration", "mean_comm_time_s", "trend_comm_time_s"],
        [(p.iteration, f"{p.value:.9f}",
          "" if trend is None else f"{trend[0] * p.iteration + trend[1]:.9f}") for p in comm],
    )

    grid = activation_grid(summary, cfg.grid)
    _write_series(out / "activation_grid.csv", [f"col_{c}" for c in range(cfg.width)],
                  grid.tolist())

    result = {
        "messages": messages,
        "comm_time": comm,
        "trend": trend,
        "activation_grid": grid,
        "summary": summary,
    }
    try:
        result["at_encryption"], result["at_decryption"] = run_averages(out)
    except AnalysisError:
        pass
    return result


def _comparable(cfg: SimConfig) -> dict:
    items = cfg.to_items()
    for key in ("sched", "out_dir"):
        items.pop(key)
    return items


def speedup_reports(serial_dir, parallel_dirs: dict[str, Path]) -> list[SpeedupReport]:
    """One report per parallel run, all against the same serial baseline."""
    base_cfg = load_run_config(serial_dir)
    if base_cfg.sched.kind != "serial":
        raise AnalysisError(f"{serial_dir} is not a serial run ({base_cfg.sched.label})")
    enc_s, dec_s = run_averages(serial_dir)
    reports = []
    for label, path in parallel_dirs.items():
        cfg = load_run_config(path)
        if _comparable(cfg) != _comparable(base_cfg):
            diff = {k for k, v in _comparable(cfg).items() if _comparable(base_cfg)[k] != v}
            raise AnalysisError(f"{path} differs from the serial run in {sorted(diff)}")
        enc_p, dec_p = run_averages(path)
        reports.append(SpeedupReport.from_averages(label, enc_s, enc_p, dec_s, dec_p))
    return reports


def write_speedup_report(reports: Sequence[SpeedupReport], path) -> None:
    fields = list(asdict(reports[0]).keys()) if reports else []
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in reports:
            w.writerow({k: (f"{v:.9f}" if isinstance(v, float) else v) for k, v in asdict(r).items()})


def compare_schedules(config: SimConfig, workers: int = 4, out_dir=None) -> list[SpeedupReport]:
    """Run serial, static and dynamic scheduling with one seed and compare.

    Every run shares the seed and all other parameters, so the event
    traffic and thus the encryption workload is identical across the three.
    """
    from .sim import run

    root = Path(out_dir if out_dir is not None else config.out_dir)
    modes = {
        "serial": SchedulingMode.serial(),
        "static": SchedulingMode.static(workers),
        "dynamic": SchedulingMode.dynamic(workers),
    }
    dirs = {}
    for name, mode in modes.items():
        dirs[name] = root / name
        run(config.replace(sched=mode, out_dir=dirs[name]))
    reports = speedup_reports(dirs["serial"], {modes[k].label: dirs[k] for k in ("static", "dynamic")})
    write_speedup_report(reports, root / "speedup_report.csv")
    return reports
