"""Strict JSON configuration: loading, validation, and round-trip serialization.

Unknown keys are rejected and every error message carries the path of the
offending entry (and the line/column for syntax errors), so a bad config
fails before any simulation work starts.
"""

from __future__ import annotations

import dataclasses
import json
from importlib import resources
from pathlib import Path
from typing import Any

from .costs import QoeWeights, ReferenceScales
from .errors import ConfigError
from .model import ComputeNode, SemanticTask, Tier, WirelessLink
from .scenario import OPTIMIZERS, ArrivalProcess, MarlConfig, Scenario
from .video import CodedRates

SCHEMA_VERSION = 1

BUNDLED = {
    "edge4": "edge4.json",
}


def bundled_config_path(name: str = "edge4") -> Path:
    if name not in BUNDLED:
        raise ConfigError(name, f"unknown bundled config, available: {sorted(BUNDLED)}")
    return Path(str(resources.files("semnetsim.data").joinpath(BUNDLED[name])))


class _Section:
    """A dict wrapper that tracks its path and complains about unknown keys."""

    def __init__(self, data: Any, location: str):
        if not isinstance(data, dict):
            raise ConfigError(location, f"expected an object, got {type(data).__name__}")
        self.data = data
        self.location = location
        self.seen: set[str] = set()

    def child(self, key: str) -> str:
        return f"{self.location}.{key}" if self.location else key

    def get(self, key: str, kind, required=True, default=None):
        if key not in self.data:
            if required:
                raise ConfigError(self.child(key), "missing required key")
            return default
        self.seen.add(key)
        value = self.data[key]
        if value is None and not required:
            return default
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(self.child(key), f"expected a number, got {value!r}")
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(self.child(key), f"expected an integer, got {value!r}")
            return value
        if kind is bool:
            if not isinstance(value, bool):
                raise ConfigError(self.child(key), f"expected a boolean, got {value!r}")
            return value
        if kind is str:
            if not isinstance(value, str):
                raise ConfigError(self.child(key), f"expected a string, got {value!r}")
            return value
        if kind is list:
            if not isinstance(value, list):
                raise ConfigError(self.child(key), f"expected a list, got {value!r}")
            return value
        if kind is dict:
            if not isinstance(value, dict):
                raise ConfigError(self.child(key), f"expected an object, got {value!r}")
            return value
        raise AssertionError(kind)

    def section(self, key: str, required=True) -> "_Section | None":
        data = self.get(key, dict, required=required)
        if data is None:
            return None
        return _Section(data, self.child(key))

    def pair(self, key: str, required=True, default=None):
        value = self.get(key, list, required=required)
        if value is None:
            return default
        if len(value) != 2 or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            raise ConfigError(self.child(key), f"expected a [low, high] pair, got {value!r}")
        return (value[0], value[1])

    def finish(self):
        unknown = set(self.data) - self.seen
        if unknown:
            raise ConfigError(self.location or "<root>", f"unknown keys: {sorted(unknown)}")


def _wrap(location: str):
    def decorate(build):
        try:
            return build()
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(location, str(exc)) from exc

    return decorate


def _node_from(section: _Section) -> ComputeNode:
    tier = section.get("tier", str)
    if tier not in (t.value for t in Tier):
        raise ConfigError(section.child("tier"), f"expected one of cloud/edge/end, got {tier!r}")
    kwargs = dict(
        id=section.get("id", str),
        tier=Tier(tier),
        clock_hz=section.get("clock_hz", float),
        cores=section.get("cores", int),
        flops_per_cycle=section.get("flops_per_cycle", int),
    )
    if tier == "end":
        kwargs["freq_range_hz"] = section.pair("freq_range_hz")
        kwargs["kappa"] = section.get("kappa", float)
    else:
        kwargs["capacity_flops"] = section.get("capacity_flops", float)
        kwargs["current_load_flops"] = section.get("current_load_flops", float, required=False, default=0.0)
    section.finish()
    return _wrap(section.location)(lambda: ComputeNode(**kwargs))


def _link_from(section: _Section) -> WirelessLink:
    kwargs = dict(
        end_id=section.get("end_id", str),
        server_id=section.get("server_id", str),
        bandwidth_hz=section.get("bandwidth_hz", float),
        channel_gain=section.get("channel_gain", float),
        noise_psd=section.get("noise_psd", float),
        power_range_dbm=section.pair("power_range_dbm"),
    )
    section.finish()
    return _wrap(section.location)(lambda: WirelessLink(**kwargs))


def _task_from(section: _Section) -> tuple[str, SemanticTask]:
    device_id = section.get("device_id", str)
    kwargs = dict(
        id=section.get("id", str),
        source_words=section.get("source_words", int),
        symbols_per_word=section.get("symbols_per_word", int),
        bits_per_symbol=section.get("bits_per_symbol", int),
        enc_cycles_fixed=section.get("enc_cycles_fixed", float),
        enc_cycles_per_symbol=section.get("enc_cycles_per_symbol", float),
        dec_cycles_per_word=section.get("dec_cycles_per_word", float),
        deadline_s=section.get("deadline_s", float),
        perf_scale=section.get("perf_scale", float, required=False, default=4.0),
    )
    section.finish()
    return device_id, _wrap(section.location)(lambda: SemanticTask(**kwargs))


def _levels_from(section: _Section, key: str, default: int):
    if key not in section.data:
        return default
    value = section.data[key]
    if isinstance(value, list):
        section.seen.add(key)
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            raise ConfigError(section.child(key), f"expected numbers, got {value!r}")
        return tuple(float(v) for v in value)
    return section.get(key, int)


def scenario_from_dict(data: dict, location: str = "scenario") -> Scenario:
    section = _Section(data, location)
    nodes = tuple(_node_from(_Section(n, f"{location}.nodes[{i}]")) for i, n in enumerate(section.get("nodes", list)))
    links = tuple(_link_from(_Section(l, f"{location}.links[{i}]")) for i, l in enumerate(section.get("links", list)))
    tasks = {}
    for i, raw in enumerate(section.get("tasks", list)):
        device_id, task = _task_from(_Section(raw, f"{location}.tasks[{i}]"))
        if device_id in tasks:
            raise ConfigError(f"{location}.tasks[{i}]", f"device {device_id!r} already has a task")
        tasks[device_id] = task

    grid = section.section("grid", required=False)
    freq_levels: Any = 5
    power_levels: Any = 4
    if grid is not None:
        freq_levels = _levels_from(grid, "freq_levels", 5)
        power_levels = _levels_from(grid, "power_levels", 4)
        grid.finish()

    weights = QoeWeights()
    qoe_section = section.section("qoe_weights", required=False)
    if qoe_section is not None:
        weights = _wrap(qoe_section.location)(
            lambda: QoeWeights(
                bits=qoe_section.get("bits", float, required=False, default=0.0),
                compute=qoe_section.get("compute", float, required=False, default=0.0),
                latency=qoe_section.get("latency", float, required=False, default=0.0),
                energy=qoe_section.get("energy", float, required=False, default=0.0),
                performance=qoe_section.get("performance", float, required=False, default=0.0),
            )
        )
        qoe_section.finish()

    scales = None
    scales_section = section.section("reference_scales", required=False)
    if scales_section is not None:
        scales = _wrap(scales_section.location)(
            lambda: ReferenceScales(
                bits=scales_section.get("bits", float),
                compute_cycles=scales_section.get("compute_cycles", float),
                latency_s=scales_section.get("latency_s", float),
                energy_j=scales_section.get("energy_j", float),
            )
        )
        scales_section.finish()
    if scales is None and any(
        getattr(weights, f) > 0 for f in ("bits", "compute", "latency", "energy", "performance")
    ):
        raise ConfigError(f"{location}.reference_scales", "required when any QoE weight is nonzero")

    arrivals = None
    arrivals_section = section.section("arrivals", required=False)
    if arrivals_section is not None:
        arrivals = _wrap(arrivals_section.location)(
            lambda: ArrivalProcess(
                rate_per_device_hz=arrivals_section.get("rate_per_device_hz", float),
                horizon_s=arrivals_section.get("horizon_s", float),
            )
        )
        arrivals_section.finish()

    marl = MarlConfig()
    marl_section = section.section("marl", required=False)
    if marl_section is not None:
        marl = _wrap(marl_section.location)(
            lambda: MarlConfig(
                episodes=marl_section.get("episodes", int, required=False, default=8000),
                learning_rate=marl_section.get("learning_rate", float, required=False, default=0.08),
                baseline_decay=marl_section.get("baseline_decay", float, required=False, default=0.9),
                entropy_coef=marl_section.get("entropy_coef", float, required=False, default=0.1),
                violation_penalty_j=marl_section.get("violation_penalty_j", float, required=False),
            )
        )
        marl_section.finish()

    adapt = section.pair("adapt_symbol_range", required=False)
    if adapt is not None:
        adapt = (int(adapt[0]), int(adapt[1]))

    optimizer = section.get("optimizer", str, required=False, default="gne")
    if optimizer not in OPTIMIZERS:
        raise ConfigError(section.child("optimizer"), f"expected one of {OPTIMIZERS}, got {optimizer!r}")

    kwargs = dict(
        nodes=nodes,
        links=links,
        tasks=tasks,
        optimizer=optimizer,
        seed=section.get("seed", int, required=False, default=0),
        grid_freq_levels=freq_levels,
        grid_power_levels=power_levels,
        qoe_weights=weights,
        reference_scales=scales,
        arrivals=arrivals,
        epoch_window_s=section.get("epoch_window_s", float, required=False),
        adapt_symbol_range=adapt,
        search_cap=section.get("search_cap", int, required=False, default=10_000_000),
        gne_max_rounds=section.get("gne_max_rounds", int, required=False, default=100),
        gne_eps=section.get("gne_eps", float, required=False, default=1e-9),
        marl=marl,
        report_poa=section.get("report_poa", bool, required=False, default=True),
    )
    section.finish()
    scenario = _wrap(location)(lambda: Scenario(**kwargs))
    return dataclasses.replace(scenario, source=_deep_copy_jsonable(data))


def _deep_copy_jsonable(data):
    return json.loads(json.dumps(data))


def scenario_to_dict(scenario: Scenario) -> dict:
    """Serialize a scenario back to its config form; round-trips through scenario_from_dict."""
    out: dict[str, Any] = {
        "nodes": [],
        "links": [],
        "tasks": [],
        "optimizer": scenario.optimizer,
        "seed": scenario.seed,
        "grid": {
            "freq_levels": list(scenario.grid_freq_levels) if not isinstance(scenario.grid_freq_levels, int) else scenario.grid_freq_levels,
            "power_levels": list(scenario.grid_power_levels) if not isinstance(scenario.grid_power_levels, int) else scenario.grid_power_levels,
        },
        "search_cap": scenario.search_cap,
        "gne_max_rounds": scenario.gne_max_rounds,
        "gne_eps": scenario.gne_eps,
        "report_poa": scenario.report_poa,
    }
    for node in scenario.nodes:
        entry: dict[str, Any] = {
            "id": node.id,
            "tier": node.tier.value,
            "clock_hz": node.clock_hz,
            "cores": node.cores,
            "flops_per_cycle": node.flops_per_cycle,
        }
        if node.tier is Tier.END:
            entry["freq_range_hz"] = list(node.freq_range_hz)
            entry["kappa"] = node.kappa
        else:
            entry["capacity_flops"] = node.capacity_flops
            entry["current_load_flops"] = node.current_load_flops
        out["nodes"].append(entry)
    for link in scenario.links:
        out["links"].append(
            {
                "end_id": link.end_id,
                "server_id": link.server_id,
                "bandwidth_hz": link.bandwidth_hz,
                "channel_gain": link.channel_gain,
                "noise_psd": link.noise_psd,
                "power_range_dbm": list(link.power_range_dbm),
            }
        )
    for device_id in sorted(scenario.tasks):
        task = scenario.tasks[device_id]
        out["tasks"].append(
            {
                "device_id": device_id,
                "id": task.id,
                "source_words": task.source_words,
                "symbols_per_word": task.symbols_per_word,
                "bits_per_symbol": task.bits_per_symbol,
                "enc_cycles_fixed": task.enc_cycles_fixed,
                "enc_cycles_per_symbol": task.enc_cycles_per_symbol,
                "dec_cycles_per_word": task.dec_cycles_per_word,
                "deadline_s": task.deadline_s,
                "perf_scale": task.perf_scale,
            }
        )
    weights = scenario.qoe_weights
    out["qoe_weights"] = {
        "bits": weights.bits,
        "compute": weights.compute,
        "latency": weights.latency,
        "energy": weights.energy,
        "performance": weights.performance,
    }
    if scenario.reference_scales is not None:
        scales = scenario.reference_scales
        out["reference_scales"] = {
            "bits": scales.bits,
            "compute_cycles": scales.compute_cycles,
            "latency_s": scales.latency_s,
            "energy_j": scales.energy_j,
        }
    if scenario.arrivals is not None:
        out["arrivals"] = {
            "rate_per_device_hz": scenario.arrivals.rate_per_device_hz,
            "horizon_s": scenario.arrivals.horizon_s,
        }
    if scenario.epoch_window_s is not None:
        out["epoch_window_s"] = scenario.epoch_window_s
    if scenario.adapt_symbol_range is not None:
        out["adapt_symbol_range"] = list(scenario.adapt_symbol_range)
    out["marl"] = {
        "episodes": scenario.marl.episodes,
        "learning_rate": scenario.marl.learning_rate,
        "baseline_decay": scenario.marl.baseline_decay,
        "entropy_coef": scenario.marl.entropy_coef,
        "violation_penalty_j": scenario.marl.violation_penalty_j,
    }
    return out


@dataclasses.dataclass(frozen=True)
class VideoSettings:
    """Pipeline settings for the video commands."""

    source: str = "synthetic:moving_rect"
    n_frames: int = 100
    height: int = 64
    width: int = 64
    fps: float = 30.0
    seed: int = 7
    keyframe_mode: str = "fixed"
    keyframe_interval: int = 25
    keyframe_budget: int = 8
    downsample_factor: int = 4
    keep_ratio: float = 1.0
    tau_frame: float = 1.0
    tau_motion: float = 1.0
    motion_delta: int = 10
    rates: CodedRates = dataclasses.field(default_factory=CodedRates)


def video_from_dict(data: dict, location: str = "video") -> VideoSettings:
    section = _Section(data, location)
    keyframe = section.section("keyframe", required=False)
    mode, interval, budget = "fixed", 25, 8
    if keyframe is not None:
        mode = keyframe.get("mode", str)
        if mode == "fixed":
            interval = keyframe.get("interval", int)
        elif mode == "content":
            budget = keyframe.get("budget", int)
        else:
            raise ConfigError(keyframe.child("mode"), f"expected 'fixed' or 'content', got {mode!r}")
        keyframe.finish()
    rates = CodedRates()
    rates_section = section.section("rates", required=False)
    if rates_section is not None:
        rates = _wrap(rates_section.location)(
            lambda: CodedRates(
                lr_bits_per_pixel=rates_section.get("lr_bits_per_pixel", float, required=False, default=8.0),
                hr_bits_per_pixel=rates_section.get("hr_bits_per_pixel", float, required=False, default=8.0),
            )
        )
        rates_section.finish()
    redundancy = section.section("redundancy", required=False)
    tau_frame, tau_motion, motion_delta = 1.0, 1.0, 10
    if redundancy is not None:
        tau_frame = redundancy.get("tau_frame", float, required=False, default=1.0)
        tau_motion = redundancy.get("tau_motion", float, required=False, default=1.0)
        motion_delta = redundancy.get("motion_delta", int, required=False, default=10)
        redundancy.finish()
    settings = VideoSettings(
        source=section.get("source", str, required=False, default="synthetic:moving_rect"),
        n_frames=section.get("n_frames", int, required=False, default=100),
        height=section.get("height", int, required=False, default=64),
        width=section.get("width", int, required=False, default=64),
        fps=section.get("fps", float, required=False, default=30.0),
        seed=section.get("seed", int, required=False, default=7),
        keyframe_mode=mode,
        keyframe_interval=interval,
        keyframe_budget=budget,
        downsample_factor=section.get("downsample_factor", int, required=False, default=4),
        keep_ratio=section.get("keep_ratio", float, required=False, default=1.0),
        tau_frame=tau_frame,
        tau_motion=tau_motion,
        motion_delta=motion_delta,
        rates=rates,
    )
    section.finish()
    return settings


@dataclasses.dataclass(frozen=True)
class ConfigFile:
    scenario: Scenario
    video: VideoSettings | None
    raw: dict


def parse_config(data: dict, name: str = "<config>") -> ConfigFile:
    root = _Section(data, "")
    version = root.get("schema_version", int)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version}")
    scenario = scenario_from_dict(root.get("scenario", dict), "scenario")
    video = None
    if "video" in root.data:
        video = video_from_dict(root.get("video", dict), "video")
    root.finish()
    return ConfigFile(scenario=scenario, video=video, raw=_deep_copy_jsonable(data))


def load_config(path: str | Path) -> ConfigFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}", exc.msg) from exc
    if not isinstance(data, dict):
        raise ConfigError(str(path), "top level must be an object")
    return parse_config(data, name=str(path))


def load_bundled_config(name: str = "edge4") -> ConfigFile:
    return load_config(bundled_config_path(name))
