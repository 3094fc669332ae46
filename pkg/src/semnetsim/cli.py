"""Command-line interface: simulate, sweep, and video.

Exit codes: 0 success, 2 configuration or validation error, 3 the run
finished but the result is infeasible. Set SEMNETSIM_LOG=debug (or info,
warning) for logging verbosity.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from . import __version__, engine
from .config import ConfigFile, VideoSettings, load_config, scenario_to_dict
from .errors import SearchCapExceeded, ValidationError
from .reports import manifest_path, write_manifest, write_run_csv, write_video_csv
from .scenario import OPTIMIZERS
from .video import read_frames, run_pipeline, synthetic_sequence, write_frames, write_pgm_sequence

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semnetsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario and write a report CSV")
    sim.add_argument("--scenario", required=True, help="path to a config JSON")
    sim.add_argument("--optimizer", choices=OPTIMIZERS, help="override the scenario's optimizer")
    sim.add_argument("--seed", type=int, help="override the scenario's seed")
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--workers", type=int, default=1, help="worker threads for grid evaluation")
    sim.add_argument("--no-plot", action="store_true", help="skip the figure next to the CSV")

    sweep = sub.add_parser("sweep", help="run the scenario once per value of a swept parameter")
    sweep.add_argument("--scenario", required=True)
    sweep.add_argument("--param", required=True, help="dotted path into the scenario config, * fans out over lists")
    sweep.add_argument("--values", required=True, help="comma-separated numbers")
    sweep.add_argument("--optimizer", choices=OPTIMIZERS)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--no-plot", action="store_true")

    video = sub.add_parser("video", help="run the sampling pipeline and write per-frame quality")
    video.add_argument("--frames", default=None, help="frame file, or synthetic:moving_rect / synthetic:ramp")
    video.add_argument("--keyframe", default=None, help="fixed:N[,N2,...] or content:BUDGET")
    video.add_argument("--factor", type=int, default=None, help="downsampling factor")
    video.add_argument("--out", required=True)
    video.add_argument("--config", default=None, help="config JSON whose video section supplies defaults")
    video.add_argument("--n-frames", type=int, default=None)
    video.add_argument("--size", default=None, help="HxW of synthetic content, e.g. 64x64")
    video.add_argument("--fps", type=float, default=None)
    video.add_argument("--seed", type=int, default=None)
    video.add_argument("--keep-ratio", type=float, default=None)
    video.add_argument("--tau-frame", type=float, default=None)
    video.add_argument("--tau-motion", type=float, default=None)
    video.add_argument("--motion-delta", type=int, default=None)
    video.add_argument("--rate-lr", type=float, default=None, help="coded bits per LR pixel")
    video.add_argument("--rate-hr", type=float, default=None, help="coded bits per HR pixel")
    video.add_argument("--dump-frames", default=None, help="directory for reconstructed PGM frames")
    video.add_argument("--no-plot", action="store_true")
    return parser


def _parse_values(raw: str) -> list:
    values = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            raise ValidationError("empty entry in --values")
        try:
            values.append(int(chunk))
        except ValueError:
            try:
                values.append(float(chunk))
            except ValueError:
                raise ValidationError(f"cannot parse value {chunk!r}") from None
    return values


def _load_scenario(args) -> ConfigFile:
    cfg = load_config(args.scenario)
    scenario = cfg.scenario
    overrides = {}
    if getattr(args, "optimizer", None):
        overrides["optimizer"] = args.optimizer
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if overrides:
        scenario = dataclasses.replace(scenario, **overrides)
        source = dict(scenario.source or {})
        source.update(overrides)
        scenario = dataclasses.replace(scenario, source=source)
    return dataclasses.replace(cfg, scenario=scenario)


def cmd_simulate(args) -> int:
    cfg = _load_scenario(args)
    report = engine.run(cfg.scenario, workers=args.workers)
    out = Path(args.out)
    write_run_csv(out, [report])
    write_manifest(
        manifest_path(out),
        command="simulate",
        args={"optimizer": cfg.scenario.optimizer, "workers": args.workers},
        config=scenario_to_dict(cfg.scenario),
        seed=cfg.scenario.seed,
    )
    if not args.no_plot:
        from .plotting import save_run_figure

        save_run_figure(report, out.with_suffix(".png"))
    if report.totals.feasibility_rate < 1.0:
        infeasible = [r.device_id for r in report.records if not r.feasible]
        print(f"infeasible result: deadline missed for {sorted(set(infeasible))}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_scenario(args)
    values = _parse_values(args.values)
    reports = engine.sweep(cfg.scenario, args.param, values, workers=args.workers)
    out = Path(args.out)
    write_run_csv(out, reports, param_values=values)
    write_manifest(
        manifest_path(out),
        command="sweep",
        args={"param": args.param, "values": values, "workers": args.workers},
        config=scenario_to_dict(cfg.scenario),
        seed=cfg.scenario.seed,
    )
    if not args.no_plot:
        from .plotting import save_sweep_figure

        save_sweep_figure(args.param, values, reports, out.with_suffix(".png"))
    if any(r.totals.feasibility_rate < 1.0 for r in reports):
        print("infeasible result in at least one sweep point", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _video_settings(args) -> VideoSettings:
    settings = VideoSettings()
    if args.config is not None:
        cfg = load_config(args.config)
        if cfg.video is not None:
            settings = cfg.video
    updates = {}
    if args.frames is not None:
        updates["source"] = args.frames
    for attr, value in (
        ("n_frames", args.n_frames),
        ("fps", args.fps),
        ("seed", args.seed),
        ("downsample_factor", args.factor),
        ("keep_ratio", args.keep_ratio),
        ("tau_frame", args.tau_frame),
        ("tau_motion", args.tau_motion),
        ("motion_delta", args.motion_delta),
    ):
        if value is not None:
            updates[attr] = value
    if args.size is not None:
        try:
            h, w = (int(v) for v in args.size.lower().split("x"))
        except ValueError:
            raise ValidationError(f"cannot parse --size {args.size!r}, expected HxW") from None
        updates["height"] = h
        updates["width"] = w
    if args.rate_lr is not None or args.rate_hr is not None:
        updates["rates"] = dataclasses.replace(
            settings.rates,
            **{
                k: v
                for k, v in (
                    ("lr_bits_per_pixel", args.rate_lr),
                    ("hr_bits_per_pixel", args.rate_hr),
                )
                if v is not None
            },
        )
    return dataclasses.replace(settings, **updates) if updates else settings


def _parse_keyframe_spec(raw: str | None, settings: VideoSettings):
    """Returns (intervals, budget): a list of fixed intervals or a content budget."""
    if raw is None:
        if settings.keyframe_mode == "content":
            return None, settings.keyframe_budget
        return [settings.keyframe_interval], None
    kind, _, value = raw.partition(":")
    if kind == "fixed" and value:
        return [int(v) for v in value.split(",")], None
    if kind == "content" and value:
        return None, int(value)
    raise ValidationError(f"cannot parse --keyframe {raw!r}, expected fixed:N[,N2,...] or content:BUDGET")


def cmd_video(args) -> int:
    settings = _video_settings(args)
    intervals, budget = _parse_keyframe_spec(args.keyframe, settings)
    if settings.source.startswith("synthetic:"):
        name = settings.source.split(":", 1)[1]
        seq = synthetic_sequence(
            name, n_frames=settings.n_frames, height=settings.height, width=settings.width,
            seed=settings.seed, fps=settings.fps,
        )
    else:
        seq = read_frames(settings.source)
    common = dict(
        factor=settings.downsample_factor,
        tau_frame=settings.tau_frame,
        tau_motion=settings.tau_motion,
        motion_delta=settings.motion_delta,
        keep_ratio=settings.keep_ratio,
        sensing_seed=settings.seed,
        rates=settings.rates,
        keep_frames=args.dump_frames is not None,
    )
    if budget is not None:
        reports = [run_pipeline(seq, keyframe_budget=budget, **common)]
        labels = [None]
    else:
        reports = [run_pipeline(seq, keyframe_interval=i, **common) for i in intervals]
        labels = list(intervals)
    out = Path(args.out)
    write_video_csv(out, reports, labels)
    write_manifest(
        manifest_path(out),
        command="video",
        args={
            "source": settings.source,
            "keyframe": args.keyframe or f"{settings.keyframe_mode} defaults",
            "factor": settings.downsample_factor,
        },
        config={
            "video": {
                "source": settings.source,
                "n_frames": settings.n_frames,
                "height": settings.height,
                "width": settings.width,
                "fps": settings.fps,
                "seed": settings.seed,
                "downsample_factor": settings.downsample_factor,
                "keep_ratio": settings.keep_ratio,
                "redundancy": {
                    "tau_frame": settings.tau_frame,
                    "tau_motion": settings.tau_motion,
                    "motion_delta": settings.motion_delta,
                },
                "rates": {
                    "lr_bits_per_pixel": settings.rates.lr_bits_per_pixel,
                    "hr_bits_per_pixel": settings.rates.hr_bits_per_pixel,
                },
                "keyframe_intervals": labels if budget is None else None,
                "keyframe_budget": budget,
            }
        },
        seed=settings.seed,
    )
    if args.dump_frames is not None:
        dump_dir = Path(args.dump_frames)
        dump_dir.mkdir(parents=True, exist_ok=True)
        for label, report in zip(labels, reports):
            suffix = f"_{label}" if label is not None else ""
            write_frames(dump_dir / f"reconstruction{suffix}.fsq", report.reconstruction)
            write_pgm_sequence(dump_dir / f"reconstruction{suffix}", report.reconstruction)
    if not args.no_plot:
        from .plotting import save_video_figure

        save_video_figure(reports, labels, out.with_suffix(".png"))
    return EXIT_OK


def main(argv=None) -> int:
    level = os.environ.get("SEMNETSIM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"simulate": cmd_simulate, "sweep": cmd_sweep, "video": cmd_video}
    try:
        return handlers[args.command](args)
    except (ValidationError, SearchCapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main_entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    main_entry()
