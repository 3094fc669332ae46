"""Figure rendering for the CLI report path.

Figures land next to the delimited output; the CSV stays the machine
contract, the PNGs are for eyeballs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .engine import RunReport
from .video import VideoReport

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
}


def save_run_figure(report: RunReport, path: str | Path) -> Path:
    """Per-device energy bars for a single run."""
    path = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        devices = sorted({r.device_id for r in report.records})
        energies = [
            sum(r.energy_j for r in report.records if r.device_id == d) for d in devices
        ]
        colors = ["tab:orange" if any(not r.feasible and r.device_id == d for r in report.records) else "tab:blue" for d in devices]
        ax.bar(devices, energies, color=colors)
        ax.set_xlabel("device")
        ax.set_ylabel("energy [J]")
        ax.set_title(f"{report.diagnostics.optimizer}: total {report.totals.total_energy_j:.4g} J")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def save_sweep_figure(param_name: str, values: Sequence, reports: Sequence[RunReport], path: str | Path) -> Path:
    """Total energy against the swept parameter, with the oracle line when available."""
    path = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        totals = [r.totals.total_energy_j for r in reports]
        label = reports[0].diagnostics.optimizer if reports else "optimizer"
        ax.plot(values, totals, marker="o", label=label)
        oracle = [r.diagnostics.oracle_energy_j for r in reports]
        if all(v is not None for v in oracle) and label != "oracle":
            ax.plot(values, oracle, marker="s", linestyle="--", label="oracle")
        ax.set_xlabel(param_name)
        ax.set_ylabel("total energy [J]")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def save_video_figure(reports: Sequence[VideoReport], intervals: Sequence[int | None], path: str | Path) -> Path:
    """Quality-vs-bitrate curves for several runs, or per-frame quality for one."""
    path = Path(path)
    with plt.rc_context(_STYLE):
        if len(reports) > 1:
            fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.6, 4.0))
            bpps = [r.bpp for r in reports]
            ax1.plot(bpps, [r.mean_psnr_db for r in reports], marker="o")
            ax2.plot(bpps, [r.mean_ssim for r in reports], marker="o")
            for ax, ylabel in ((ax1, "PSNR [dB]"), (ax2, "SSIM")):
                ax.set_xlabel("bpp")
                ax.set_ylabel(ylabel)
            for bpp, r, interval in zip(bpps, reports, intervals):
                if interval is not None:
                    ax1.annotate(str(interval), (bpp, r.mean_psnr_db), textcoords="offset points", xytext=(4, 4))
        else:
            report = reports[0]
            fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 5.0))
            frames = [q.index for q in report.frames]
            ax1.plot(frames, [q.psnr_db for q in report.frames])
            ax2.plot(frames, [q.ssim for q in report.frames])
            keyframes = [q.index for q in report.frames if q.is_keyframe]
            for ax in (ax1, ax2):
                for kf in keyframes:
                    ax.axvline(kf, color="tab:green", alpha=0.25, linewidth=1)
            ax1.set_ylabel("PSNR [dB]")
            ax2.set_ylabel("SSIM")
            ax2.set_xlabel("frame")
            ax1.set_title(f"bpp {report.bpp:.4g}")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
