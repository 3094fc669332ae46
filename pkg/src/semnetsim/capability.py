"""Computing power measurement, perception, admission, and coding adaptation.

Measurement quantifies what a node can deliver, perception estimates what an
offloading decision would cost before committing to it, admission keeps the
aggregate server load within capacity, and the adaptive coding hook shrinks
the symbol dimension when the network is congested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .costs import _offload_times
from .errors import ValidationError
from .model import (
    OFFLOAD,
    ComputeNode,
    NetworkStatus,
    OffloadAction,
    SemanticTask,
    WirelessLink,
    node_flops,
)


@dataclass(frozen=True)
class CapabilityReport:
    """Measured and currently available computing power of one node."""

    node_id: str
    measured_flops: float
    available_flops: float
    timestamp_s: float

    def __post_init__(self):
        if not (0 <= self.available_flops <= self.measured_flops):
            raise ValidationError(
                f"available_flops must lie in [0, measured_flops], got {self.available_flops!r} of {self.measured_flops!r}"
            )


def measure(node: ComputeNode, at_s: float) -> CapabilityReport:
    """Snapshot a node's computing power. Transient oversubscription clamps available to 0."""
    measured = node_flops(node)
    available = max(0.0, measured - node.current_load_flops)
    return CapabilityReport(node_id=node.id, measured_flops=measured, available_flops=available, timestamp_s=at_s)


def estimate_end_to_end(
    task: SemanticTask,
    action: OffloadAction,
    link: WirelessLink,
    server: ComputeNode,
    *,
    sharing: int = 1,
) -> tuple[float, float]:
    """Predict (latency_s, rate_bps) for an offloading action without committing it.

    Uses the same timing kernel as the cost model, so the prediction equals
    the realized offload latency exactly whenever the server snapshot matches
    the state at execution. A saturated server or dead link shows up as an
    infinite latency, not an exception.
    """
    if action.mode != OFFLOAD or action.server_id != server.id:
        raise ValidationError(f"action must offload to server {server.id!r}")
    t_encode, t_transmit, t_server, rate, _bits = _offload_times(
        task, action.cpu_freq_hz, link, action.tx_power_dbm, server, sharing
    )
    return t_encode + t_transmit + t_server, rate


def admit(server: ComputeNode, demand_flops: float) -> bool:
    """Admission check: accept iff current load plus demand stays within capacity (inclusive)."""
    if not (demand_flops >= 0):
        raise ValidationError(f"demand_flops must be >= 0, got {demand_flops!r}")
    return server.current_load_flops + demand_flops <= server.capacity_flops


def apply_admission(server: ComputeNode, demand_flops: float) -> ComputeNode:
    """Return the server with the demand added to its load. Caller must check admit() first."""
    if not admit(server, demand_flops):
        raise ValidationError(f"demand {demand_flops} FLOP/s exceeds remaining capacity of {server.id!r}")
    return server.with_load(server.current_load_flops + demand_flops)


def adapt_symbol_dimension(status: NetworkStatus, k_range: tuple[int, int]) -> int:
    """Pick the coding dimension k from the congestion level: full fidelity when idle,
    maximally conservative when saturated. Round half up, clamp into the range."""
    k_min, k_max = k_range
    if not (isinstance(k_min, int) and isinstance(k_max, int) and 1 <= k_min <= k_max):
        raise ValidationError(f"invalid symbol range {k_range!r}")
    raw = k_max - status.congestion_level * (k_max - k_min)
    k = int(math.floor(raw + 0.5))
    return min(max(k, k_min), k_max)
