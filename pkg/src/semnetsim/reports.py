"""CSV and manifest emission, plus the matching reader for round-trips.

One rectangular table per file: task (or frame) rows first, a trailing
summary row per run with the aggregate columns filled in. Floats are written
with repr so a rewrite of the same report is byte-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

from . import __version__
from .engine import RunReport
from .errors import ValidationError
from .video import VideoReport

RUN_COLUMNS = [
    "row",
    "param_value",
    "epoch",
    "time_s",
    "device_id",
    "task_id",
    "symbols_per_word",
    "mode",
    "server_id",
    "cpu_freq_hz",
    "tx_power_dbm",
    "energy_j",
    "latency_s",
    "feasible",
    "bits_sent",
    "semantic_rate_sps",
    "qoe",
    "total_energy_j",
    "mean_latency_s",
    "feasibility_rate",
    "mean_qoe",
    "optimizer",
    "decisions",
    "iterations",
    "converged",
    "max_deviation_gain_j",
    "oracle_energy_j",
    "price_of_anarchy",
]

VIDEO_COLUMNS = [
    "row",
    "keyframe_interval",
    "frame",
    "is_keyframe",
    "is_redundant",
    "psnr_db",
    "ssim",
    "n_frames",
    "n_keyframes",
    "n_redundant",
    "bpp",
    "mean_psnr_db",
    "mean_ssim",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(value: str, kind):
    if value == "":
        return None
    if kind is bool:
        if value not in ("true", "false"):
            raise ValidationError(f"expected a boolean cell, got {value!r}")
        return value == "true"
    return kind(value)


_RUN_TYPES = {
    "param_value": float,
    "epoch": int,
    "time_s": float,
    "symbols_per_word": int,
    "cpu_freq_hz": float,
    "tx_power_dbm": float,
    "energy_j": float,
    "latency_s": float,
    "feasible": bool,
    "bits_sent": int,
    "semantic_rate_sps": float,
    "qoe": float,
    "total_energy_j": float,
    "mean_latency_s": float,
    "feasibility_rate": float,
    "mean_qoe": float,
    "decisions": int,
    "iterations": int,
    "converged": bool,
    "max_deviation_gain_j": float,
    "oracle_energy_j": float,
    "price_of_anarchy": float,
}

_VIDEO_TYPES = {
    "keyframe_interval": int,
    "frame": int,
    "is_keyframe": bool,
    "is_redundant": bool,
    "psnr_db": float,
    "ssim": float,
    "n_frames": int,
    "n_keyframes": int,
    "n_redundant": int,
    "bpp": float,
    "mean_psnr_db": float,
    "mean_ssim": float,
}


def write_run_csv(path: str | Path, reports: Sequence[RunReport], param_values: Sequence | None = None) -> None:
    """One row per task plus a trailing summary row per report.

    ``param_values`` labels each report in a sweep; omit it for single runs.
    """
    if param_values is not None and len(param_values) != len(reports):
        raise ValidationError("param_values must match the number of reports")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUN_COLUMNS)
        for index, report in enumerate(reports):
            param = param_values[index] if param_values is not None else None
            for r in report.records:
                writer.writerow(
                    [
                        "task",
                        _fmt(param),
                        r.epoch,
                        _fmt(r.time_s),
                        r.device_id,
                        r.task_id,
                        r.symbols_per_word,
                        r.mode,
                        _fmt(r.server_id),
                        _fmt(r.cpu_freq_hz),
                        _fmt(r.tx_power_dbm),
                        _fmt(r.energy_j),
                        _fmt(r.latency_s),
                        _fmt(r.feasible),
                        r.bits_sent,
                        _fmt(r.semantic_rate_sps),
                        _fmt(r.qoe),
                    ]
                    + [""] * 11
                )
            t = report.totals
            d = report.diagnostics
            writer.writerow(
                ["summary", _fmt(param)]
                + [""] * 15
                + [
                    _fmt(t.total_energy_j),
                    _fmt(t.mean_latency_s),
                    _fmt(t.feasibility_rate),
                    _fmt(t.mean_qoe),
                    d.optimizer,
                    d.decisions,
                    _fmt(d.iterations),
                    _fmt(d.converged),
                    _fmt(d.max_deviation_gain_j),
                    _fmt(d.oracle_energy_j),
                    _fmt(d.price_of_anarchy),
                ]
            )


def write_video_csv(path: str | Path, reports: Sequence[VideoReport], intervals: Sequence[int | None]) -> None:
    """One row per frame plus a trailing summary row per pipeline run."""
    if len(intervals) != len(reports):
        raise ValidationError("intervals must match the number of reports")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(VIDEO_COLUMNS)
        for interval, report in zip(intervals, reports):
            for q in report.frames:
                writer.writerow(
                    [
                        "frame",
                        _fmt(interval),
                        q.index,
                        _fmt(q.is_keyframe),
                        _fmt(q.is_redundant),
                        _fmt(q.psnr_db),
                        _fmt(q.ssim),
                    ]
                    + [""] * 6
                )
            writer.writerow(
                ["summary", _fmt(interval)]
                + [""] * 5
                + [
                    len(report.frames),
                    len(report.plan.keyframe_indices),
                    sum(report.plan.redundant_mask),
                    _fmt(report.bpp),
                    _fmt(report.mean_psnr_db),
                    _fmt(report.mean_ssim),
                ]
            )


def _read_table(path: str | Path, columns: list[str], types: dict) -> tuple[list[dict], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != columns:
            raise ValidationError(f"{path}: unexpected header {header!r}")
        rows = []
        summaries = []
        for raw in reader:
            if len(raw) != len(columns):
                raise ValidationError(f"{path}: row width {len(raw)} does not match header")
            parsed = {}
            for key, cell in zip(columns, raw):
                if key in types:
                    parsed[key] = _parse(cell, types[key])
                else:
                    parsed[key] = cell if cell != "" else None
            (summaries if parsed["row"] == "summary" else rows).append(parsed)
    return rows, summaries


def read_run_csv(path: str | Path) -> tuple[list[dict], list[dict]]:
    """Parse a run CSV back into (task_rows, summary_rows) with typed cells."""
    return _read_table(path, RUN_COLUMNS, _RUN_TYPES)


def read_video_csv(path: str | Path) -> tuple[list[dict], list[dict]]:
    return _read_table(path, VIDEO_COLUMNS, _VIDEO_TYPES)


def write_manifest(path: str | Path, *, command: str, args: dict, config: dict, seed: int | None) -> None:
    """Everything needed to reproduce the run bit-exactly."""
    manifest = {
        "tool": "semnetsim",
        "version": __version__,
        "command": command,
        "args": args,
        "seed": seed,
        "resolved_config": config,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def manifest_path(out_path: str | Path) -> Path:
    out = Path(out_path)
    return out.with_name(out.stem + ".manifest.json")
