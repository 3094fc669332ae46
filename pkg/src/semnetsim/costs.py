"""Channel rate, energy, and latency models for local execution and offloading.

Local execution runs encoder and decoder on the end device at a chosen DVFS
frequency f, spending kappa * f^2 joules per cycle. Offloading encodes
locally, transmits the quantized symbols over the uplink, and decodes on the
server; only encode and transmit energy are billed to the end user (servers
are mains powered). When several devices offload in the same decision epoch
the spectrum is split evenly: each uplink sees bandwidth_hz / m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError
from .model import (
    ComputeNode,
    Outcome,
    SemanticTask,
    Tier,
    WirelessLink,
    dbm_to_watts,
    node_flops,
)


@dataclass(frozen=True)
class CostBreakdown:
    """Stage-by-stage split of an outcome. Local fills decode fields, offload transmit/server fields."""

    e_encode_j: float
    e_decode_j: float
    e_transmit_j: float
    t_encode_s: float
    t_transmit_s: float
    t_server_s: float
    t_decode_s: float

    def __post_init__(self):
        for name in ("e_encode_j", "e_decode_j", "e_transmit_j", "t_encode_s", "t_transmit_s", "t_server_s", "t_decode_s"):
            v = getattr(self, name)
            if math.isnan(v) or v < 0:
                raise ValidationError(f"{name} must be >= 0, got {v!r}")
        if self.e_decode_j > 0 and self.e_transmit_j > 0:
            raise ValidationError("a task either decodes locally or transmits, never both")


@dataclass(frozen=True)
class QoeWeights:
    """Non-negative weights of the scalar quality-of-experience indicator."""

    bits: float = 0.0
    compute: float = 0.0
    latency: float = 0.0
    energy: float = 0.0
    performance: float = 0.0

    def __post_init__(self):
        for name in ("bits", "compute", "latency", "energy", "performance"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"QoE weight {name} must be >= 0, got {v!r}")


@dataclass(frozen=True)
class ReferenceScales:
    """Scenario-declared normalization scales for the QoE terms. Never inferred."""

    bits: float
    compute_cycles: float
    latency_s: float
    energy_j: float

    def __post_init__(self):
        for name in ("bits", "compute_cycles", "latency_s", "energy_j"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"reference scale {name} must be > 0, got {v!r}")


def shannon_rate(link: WirelessLink, p_dbm: float, *, sharing: int = 1) -> float:
    """Achievable uplink rate in bits/s at transmit power p_dbm.

    ``sharing`` is the number of devices splitting the band; the effective
    bandwidth is bandwidth_hz / sharing and the noise floor scales with it.
    """
    p_min, p_max = link.power_range_dbm
    if not (p_min <= p_dbm <= p_max):
        raise ValidationError(f"tx power {p_dbm} dBm outside link range [{p_min}, {p_max}] dBm")
    if not (isinstance(sharing, int) and sharing >= 1):
        raise ValidationError(f"sharing must be a positive integer, got {sharing!r}")
    b_eff = link.bandwidth_hz / sharing
    snr = dbm_to_watts(p_dbm) * link.channel_gain / (link.noise_psd * b_eff)
    return b_eff * math.log2(1.0 + snr)


def semantic_payload_bits(task: SemanticTask) -> int:
    """Bits on the air after semantic extraction: words x symbols/word x bits/symbol."""
    return task.source_words * task.symbols_per_word * task.bits_per_symbol


def _check_end_freq(end: ComputeNode, f_hz: float) -> None:
    if end.tier is not Tier.END:
        raise ValidationError(f"node {end.id!r} is {end.tier.value}, expected an end node")
    f_min, f_max = end.freq_range_hz
    if not (f_min <= f_hz <= f_max):
        raise ValidationError(f"cpu frequency {f_hz} Hz outside [{f_min}, {f_max}] Hz of node {end.id!r}")


def server_cycle_rate(server: ComputeNode) -> float:
    """Effective decode cycle rate of a server: available FLOP/s over its issue width."""
    available = max(0.0, node_flops(server) - server.current_load_flops)
    return available / server.flops_per_cycle


def _offload_times(
    task: SemanticTask,
    f_hz: float,
    link: WirelessLink,
    p_dbm: float,
    server: ComputeNode,
    sharing: int,
) -> tuple[float, float, float, float, int]:
    """Shared timing kernel for offloading: (t_encode, t_transmit, t_server, rate, bits).

    Used by both the cost model and the capability estimator so that
    prediction and realized outcome agree bit for bit.
    """
    rate = shannon_rate(link, p_dbm, sharing=sharing)
    enc_cycles = task.source_words * task.enc_cycles_per_word()
    t_encode = enc_cycles / f_hz
    bits = semantic_payload_bits(task)
    if bits == 0:
        t_transmit = 0.0
    elif rate > 0:
        t_transmit = bits / rate
    else:
        t_transmit = math.inf
    dec_cycles = task.source_words * task.dec_cycles_per_word
    if dec_cycles == 0:
        t_server = 0.0
    else:
        cycle_rate = server_cycle_rate(server)
        t_server = dec_cycles / cycle_rate if cycle_rate > 0 else math.inf
    return t_encode, t_transmit, t_server, rate, bits


def local_outcome(task: SemanticTask, node: ComputeNode, f_hz: float) -> tuple[Outcome, CostBreakdown]:
    """Run encoder and decoder on the end device at frequency f_hz."""
    _check_end_freq(node, f_hz)
    enc_cycles = task.source_words * task.enc_cycles_per_word()
    dec_cycles = task.source_words * task.dec_cycles_per_word
    joules_per_cycle = node.kappa * f_hz * f_hz
    e_encode = joules_per_cycle * enc_cycles
    e_decode = joules_per_cycle * dec_cycles
    t_encode = enc_cycles / f_hz
    t_decode = dec_cycles / f_hz
    latency = t_encode + t_decode
    outcome = Outcome(
        energy_j=e_encode + e_decode,
        latency_s=latency,
        feasible=latency <= task.deadline_s,
        bits_sent=0,
        semantic_rate_sps=0.0,
    )
    breakdown = CostBreakdown(
        e_encode_j=e_encode,
        e_decode_j=e_decode,
        e_transmit_j=0.0,
        t_encode_s=t_encode,
        t_transmit_s=0.0,
        t_server_s=0.0,
        t_decode_s=t_decode,
    )
    return outcome, breakdown


def offload_outcome(
    task: SemanticTask,
    end: ComputeNode,
    f_hz: float,
    link: WirelessLink,
    p_dbm: float,
    server: ComputeNode,
    *,
    sharing: int = 1,
) -> tuple[Outcome, CostBreakdown]:
    """Encode on the end device, transmit the symbols, decode on the server.

    End-user energy is encode + transmit only. A degenerate link or a
    saturated server yields an infinite-latency infeasible outcome rather
    than an error.
    """
    _check_end_freq(end, f_hz)
    if server.tier is Tier.END:
        raise ValidationError(f"cannot offload to end node {server.id!r}")
    if link.end_id != end.id or link.server_id != server.id:
        raise ValidationError(f"link {link.key} does not connect {end.id!r} to {server.id!r}")
    t_encode, t_transmit, t_server, _rate, bits = _offload_times(task, f_hz, link, p_dbm, server, sharing)
    e_encode = end.kappa * f_hz * f_hz * (task.source_words * task.enc_cycles_per_word())
    e_transmit = dbm_to_watts(p_dbm) * t_transmit if t_transmit > 0 else 0.0
    latency = t_encode + t_transmit + t_server
    symbols = task.source_words * task.symbols_per_word
    semantic_rate = symbols / t_transmit if 0 < t_transmit < math.inf else 0.0
    outcome = Outcome(
        energy_j=e_encode + e_transmit,
        latency_s=latency,
        feasible=latency <= task.deadline_s,
        bits_sent=bits,
        semantic_rate_sps=semantic_rate,
    )
    breakdown = CostBreakdown(
        e_encode_j=e_encode,
        e_decode_j=0.0,
        e_transmit_j=e_transmit,
        t_encode_s=t_encode,
        t_transmit_s=t_transmit,
        t_server_s=t_server,
        t_decode_s=0.0,
    )
    return outcome, breakdown


def qoe(outcome: Outcome, task: SemanticTask, weights: QoeWeights, scales: ReferenceScales | None) -> float:
    """Scalar QoE: penalizes transmitted bits, compute cycles, delay, and energy; rewards task performance.

    Each cost term is normalized by the scenario-declared reference scale.
    Terms with zero weight are skipped, so degenerate outcomes with infinite
    cost do not poison an indicator that ignores them.
    """
    if scales is None:
        raise ValidationError("QoE requires scenario-declared reference scales")
    value = 0.0
    if weights.bits > 0:
        value -= weights.bits * (outcome.bits_sent / scales.bits)
    if weights.compute > 0:
        value -= weights.compute * (task.total_cycles() / scales.compute_cycles)
    if weights.latency > 0:
        value -= weights.latency * (outcome.latency_s / scales.latency_s)
    if weights.energy > 0:
        value -= weights.energy * (outcome.energy_j / scales.energy_j)
    if weights.performance > 0:
        value += weights.performance * task.perf_score()
    return value
