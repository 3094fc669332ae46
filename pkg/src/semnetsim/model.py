"""Domain types and unit helpers shared by every other module.

All types are immutable values: construction validates every invariant and
raises :class:`ValidationError` on violation instead of clamping. Identifiers
are opaque strings; wherever a deterministic order is needed it is
lexicographic by id.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Mapping

from .errors import ValidationError


class Tier(str, enum.Enum):
    CLOUD = "cloud"
    EDGE = "edge"
    END = "end"


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


def _finite(x: float) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def dbm_to_watts(p_dbm: float) -> float:
    """Convert a power level in dBm to watts: 10^((p - 30) / 10)."""
    _require(_finite(p_dbm), f"power must be finite, got {p_dbm!r}")
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ComputeNode:
    """A cloud, edge, or end computing node.

    End nodes select an operating frequency from ``freq_range_hz`` and spend
    dynamic energy ``kappa * f^2`` joules per cycle. Edge and cloud nodes
    expose an admission capacity in FLOP/s; ``current_load_flops`` tracks the
    share already reserved.
    """

    id: str
    tier: Tier
    clock_hz: float
    cores: int
    flops_per_cycle: int
    freq_range_hz: tuple[float, float] | None = None
    kappa: float | None = None
    capacity_flops: float | None = None
    current_load_flops: float = 0.0

    def __post_init__(self):
        _require(isinstance(self.id, str) and self.id != "", "node id must be a non-empty string")
        if not isinstance(self.tier, Tier):
            object.__setattr__(self, "tier", Tier(self.tier))
        _require(_finite(self.clock_hz) and self.clock_hz > 0, f"clock_hz must be > 0, got {self.clock_hz!r}")
        _require(isinstance(self.cores, int) and self.cores >= 1, f"cores must be a positive integer, got {self.cores!r}")
        _require(
            isinstance(self.flops_per_cycle, int) and self.flops_per_cycle >= 1,
            f"flops_per_cycle must be a positive integer, got {self.flops_per_cycle!r}",
        )
        if self.tier is Tier.END:
            _require(self.freq_range_hz is not None, f"end node {self.id!r} needs freq_range_hz")
            _require(self.kappa is not None, f"end node {self.id!r} needs kappa")
            f_min, f_max = self.freq_range_hz
            _require(_finite(f_min) and _finite(f_max) and 0 < f_min <= f_max, f"invalid freq_range_hz {self.freq_range_hz!r}")
            object.__setattr__(self, "freq_range_hz", (float(f_min), float(f_max)))
            _require(_finite(self.kappa) and self.kappa > 0, f"kappa must be > 0, got {self.kappa!r}")
            _require(self.capacity_flops is None, f"end node {self.id!r} has no admission capacity")
            _require(self.current_load_flops == 0, f"end node {self.id!r} carries no admitted load")
        else:
            _require(self.freq_range_hz is None, f"freq_range_hz applies to end nodes only ({self.id!r})")
            _require(self.kappa is None, f"kappa applies to end nodes only ({self.id!r})")
            _require(
                self.capacity_flops is not None and _finite(self.capacity_flops) and self.capacity_flops > 0,
                f"{self.tier.value} node {self.id!r} needs capacity_flops > 0",
            )
            _require(
                _finite(self.current_load_flops) and 0 <= self.current_load_flops <= self.capacity_flops,
                f"current_load_flops must lie in [0, capacity] for node {self.id!r}",
            )

    def with_load(self, load_flops: float) -> "ComputeNode":
        return dataclasses.replace(self, current_load_flops=load_flops)


def node_flops(node: ComputeNode) -> float:
    """Computing power of a node in FLOP/s, from its clock, cores, and issue width."""
    return float(node.clock_hz) * node.cores * node.flops_per_cycle


@dataclass(frozen=True)
class WirelessLink:
    """Uplink between an end node and a server."""

    end_id: str
    server_id: str
    bandwidth_hz: float
    channel_gain: float
    noise_psd: float
    power_range_dbm: tuple[float, float]

    def __post_init__(self):
        _require(isinstance(self.end_id, str) and self.end_id != "", "link end_id must be a non-empty string")
        _require(isinstance(self.server_id, str) and self.server_id != "", "link server_id must be a non-empty string")
        _require(_finite(self.bandwidth_hz) and self.bandwidth_hz > 0, f"bandwidth_hz must be > 0, got {self.bandwidth_hz!r}")
        _require(_finite(self.channel_gain) and 0 < self.channel_gain <= 1, f"channel_gain must be in (0, 1], got {self.channel_gain!r}")
        _require(_finite(self.noise_psd) and self.noise_psd > 0, f"noise_psd must be > 0, got {self.noise_psd!r}")
        p_min, p_max = self.power_range_dbm
        _require(_finite(p_min) and _finite(p_max) and p_min <= p_max, f"invalid power_range_dbm {self.power_range_dbm!r}")
        object.__setattr__(self, "power_range_dbm", (float(p_min), float(p_max)))

    @property
    def key(self) -> tuple[str, str]:
        return (self.end_id, self.server_id)


@dataclass(frozen=True)
class SemanticTask:
    """A workload measured in source words.

    Encoding a word into ``symbols_per_word`` semantic symbols costs
    ``enc_cycles_fixed + enc_cycles_per_symbol * k`` cycles; decoding costs
    ``dec_cycles_per_word`` cycles per word. Each symbol is quantized to
    ``bits_per_symbol`` bits on the air interface. Task performance grows
    with k as ``1 - exp(-k / perf_scale)``.
    """

    id: str
    source_words: int
    symbols_per_word: int
    bits_per_symbol: int
    enc_cycles_fixed: float
    enc_cycles_per_symbol: float
    dec_cycles_per_word: float
    deadline_s: float
    perf_scale: float = 4.0

    def __post_init__(self):
        _require(isinstance(self.id, str) and self.id != "", "task id must be a non-empty string")
        _require(isinstance(self.source_words, int) and self.source_words >= 0, f"source_words must be >= 0, got {self.source_words!r}")
        _require(isinstance(self.symbols_per_word, int) and self.symbols_per_word >= 1, f"symbols_per_word must be >= 1, got {self.symbols_per_word!r}")
        _require(isinstance(self.bits_per_symbol, int) and self.bits_per_symbol >= 1, f"bits_per_symbol must be >= 1, got {self.bits_per_symbol!r}")
        for name in ("enc_cycles_fixed", "enc_cycles_per_symbol", "dec_cycles_per_word"):
            v = getattr(self, name)
            _require(_finite(v) and v >= 0, f"{name} must be >= 0, got {v!r}")
        _require(_finite(self.deadline_s) and self.deadline_s > 0, f"deadline_s must be > 0, got {self.deadline_s!r}")
        _require(_finite(self.perf_scale) and self.perf_scale > 0, f"perf_scale must be > 0, got {self.perf_scale!r}")

    def enc_cycles_per_word(self, k: int | None = None) -> float:
        k = self.symbols_per_word if k is None else k
        return self.enc_cycles_fixed + self.enc_cycles_per_symbol * k

    def total_cycles(self, k: int | None = None) -> float:
        return self.source_words * (self.enc_cycles_per_word(k) + self.dec_cycles_per_word)

    def perf_score(self, k: int | None = None) -> float:
        """Task performance in [0, 1], non-decreasing in the symbol dimension."""
        k = self.symbols_per_word if k is None else k
        return 1.0 - math.exp(-k / self.perf_scale)

    def with_symbols(self, k: int) -> "SemanticTask":
        return dataclasses.replace(self, symbols_per_word=k)


LOCAL = "local"
OFFLOAD = "offload"


@dataclass(frozen=True)
class OffloadAction:
    """Per-device decision: where to run, at which frequency, at which power."""

    mode: str
    cpu_freq_hz: float
    server_id: str | None = None
    tx_power_dbm: float | None = None

    def __post_init__(self):
        _require(self.mode in (LOCAL, OFFLOAD), f"mode must be 'local' or 'offload', got {self.mode!r}")
        _require(_finite(self.cpu_freq_hz) and self.cpu_freq_hz > 0, f"cpu_freq_hz must be > 0, got {self.cpu_freq_hz!r}")
        if self.mode == LOCAL:
            _require(self.server_id is None, "local action carries no server_id")
            _require(self.tx_power_dbm is None, "local action carries no tx_power_dbm")
        else:
            _require(isinstance(self.server_id, str) and self.server_id != "", "offload action needs a server_id")
            _require(self.tx_power_dbm is not None and _finite(self.tx_power_dbm), "offload action needs a finite tx_power_dbm")

    @classmethod
    def local(cls, cpu_freq_hz: float) -> "OffloadAction":
        return cls(mode=LOCAL, cpu_freq_hz=cpu_freq_hz)

    @classmethod
    def offload(cls, server_id: str, cpu_freq_hz: float, tx_power_dbm: float) -> "OffloadAction":
        return cls(mode=OFFLOAD, cpu_freq_hz=cpu_freq_hz, server_id=server_id, tx_power_dbm=tx_power_dbm)


@dataclass(frozen=True)
class Outcome:
    """What a decision cost the end user. Infinity marks degenerate (infeasible) cases."""

    energy_j: float
    latency_s: float
    feasible: bool
    bits_sent: int
    semantic_rate_sps: float

    def __post_init__(self):
        _require(not math.isnan(self.energy_j) and self.energy_j >= 0, f"energy_j must be >= 0, got {self.energy_j!r}")
        _require(not math.isnan(self.latency_s) and self.latency_s >= 0, f"latency_s must be >= 0, got {self.latency_s!r}")
        _require(isinstance(self.bits_sent, int) and self.bits_sent >= 0, f"bits_sent must be >= 0, got {self.bits_sent!r}")
        _require(not math.isnan(self.semantic_rate_sps) and self.semantic_rate_sps >= 0, f"semantic_rate_sps must be >= 0, got {self.semantic_rate_sps!r}")


@dataclass(frozen=True)
class NetworkStatus:
    """Perception snapshot of the computing network at a point in time."""

    congestion_level: float
    node_load_flops: Mapping[str, float]
    link_utilization: Mapping[str, float]
    timestamp_s: float

    def __post_init__(self):
        _require(_finite(self.congestion_level) and 0 <= self.congestion_level <= 1, f"congestion_level must be in [0, 1], got {self.congestion_level!r}")
        _require(_finite(self.timestamp_s), "timestamp_s must be finite")
        object.__setattr__(self, "node_load_flops", dict(self.node_load_flops))
        object.__setattr__(self, "link_utilization", dict(self.link_utilization))
        for nid, load in self.node_load_flops.items():
            _require(_finite(load) and load >= 0, f"load of node {nid!r} must be >= 0")
        for key, util in self.link_utilization.items():
            _require(_finite(util) and 0 <= util <= 1, f"utilization of link {key!r} must be in [0, 1]")
