"""Scenario description: topology, workload, optimizer choice, and run options."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .costs import QoeWeights, ReferenceScales
from .errors import ValidationError
from .model import ComputeNode, SemanticTask, Tier, WirelessLink

OPTIMIZERS = ("oracle", "greedy-local", "greedy-offload", "gne", "marl")


@dataclass(frozen=True)
class ArrivalProcess:
    """Seeded uniform task arrivals: round(rate * horizon) tasks per device, times uniform in [0, horizon)."""

    rate_per_device_hz: float
    horizon_s: float

    def __post_init__(self):
        if not (math.isfinite(self.rate_per_device_hz) and self.rate_per_device_hz > 0):
            raise ValidationError(f"rate_per_device_hz must be > 0, got {self.rate_per_device_hz!r}")
        if not (math.isfinite(self.horizon_s) and self.horizon_s > 0):
            raise ValidationError(f"horizon_s must be > 0, got {self.horizon_s!r}")


@dataclass(frozen=True)
class MarlConfig:
    """Hyperparameters of the tabular multi-agent policy-gradient learner.

    The entropy bonus anneals linearly to zero over the first half of
    training; advantages are normalized by a running scale so learning rates
    transfer across energy magnitudes.
    """

    episodes: int = 8000
    learning_rate: float = 0.08
    baseline_decay: float = 0.9
    entropy_coef: float = 0.1
    violation_penalty_j: float | None = None

    def __post_init__(self):
        if not (isinstance(self.episodes, int) and self.episodes >= 1):
            raise ValidationError(f"episodes must be >= 1, got {self.episodes!r}")
        if not (0 < self.learning_rate < 10):
            raise ValidationError(f"learning_rate out of range: {self.learning_rate!r}")
        if not (0 <= self.baseline_decay < 1):
            raise ValidationError(f"baseline_decay must be in [0, 1), got {self.baseline_decay!r}")
        if not (0 <= self.entropy_coef < 10):
            raise ValidationError(f"entropy_coef out of range: {self.entropy_coef!r}")
        if self.violation_penalty_j is not None and not (math.isfinite(self.violation_penalty_j) and self.violation_penalty_j > 0):
            raise ValidationError(f"violation_penalty_j must be > 0, got {self.violation_penalty_j!r}")


@dataclass(frozen=True)
class Scenario:
    """One simulated deployment: nodes, uplinks, one task template per device, and run options.

    ``grid_freq_levels`` / ``grid_power_levels`` are either a level count
    (levels evenly span each declared range) or explicit values applied to
    every device or link.
    """

    nodes: tuple[ComputeNode, ...]
    links: tuple[WirelessLink, ...]
    tasks: Mapping[str, SemanticTask]
    optimizer: str = "gne"
    seed: int = 0
    grid_freq_levels: int | tuple[float, ...] = 5
    grid_power_levels: int | tuple[float, ...] = 4
    qoe_weights: QoeWeights = field(default_factory=QoeWeights)
    reference_scales: ReferenceScales | None = None
    arrivals: ArrivalProcess | None = None
    epoch_window_s: float | None = None
    adapt_symbol_range: tuple[int, int] | None = None
    search_cap: int = 10_000_000
    gne_max_rounds: int = 100
    gne_eps: float = 1e-9
    marl: MarlConfig = field(default_factory=MarlConfig)
    report_poa: bool = True
    source: dict | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate node ids")
        by_id = {n.id: n for n in self.nodes}
        seen = set()
        for link in self.links:
            if link.key in seen:
                raise ValidationError(f"duplicate link {link.key}: one link per (end, server) pair")
            seen.add(link.key)
            end = by_id.get(link.end_id)
            server = by_id.get(link.server_id)
            if end is None or server is None:
                raise ValidationError(f"link {link.key} references an unknown node")
            if end.tier is not Tier.END:
                raise ValidationError(f"link {link.key} must start at an end node")
            if server.tier is Tier.END:
                raise ValidationError(f"link {link.key} must terminate at an edge or cloud node")
        for device_id in self.tasks:
            node = by_id.get(device_id)
            if node is None:
                raise ValidationError(f"task assigned to unknown device {device_id!r}")
            if node.tier is not Tier.END:
                raise ValidationError(f"tasks run on end devices, {device_id!r} is {node.tier.value}")
        if self.optimizer not in OPTIMIZERS:
            raise ValidationError(f"unknown optimizer {self.optimizer!r}, expected one of {OPTIMIZERS}")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not (isinstance(self.search_cap, int) and self.search_cap >= 1):
            raise ValidationError(f"search_cap must be >= 1, got {self.search_cap!r}")
        if self.epoch_window_s is not None and not (math.isfinite(self.epoch_window_s) and self.epoch_window_s > 0):
            raise ValidationError(f"epoch_window_s must be > 0, got {self.epoch_window_s!r}")
        if self.adapt_symbol_range is not None:
            k_min, k_max = self.adapt_symbol_range
            if not (isinstance(k_min, int) and isinstance(k_max, int) and 1 <= k_min <= k_max):
                raise ValidationError(f"invalid adapt_symbol_range {self.adapt_symbol_range!r}")
        object.__setattr__(self, "tasks", dict(self.tasks))

    def node(self, node_id: str) -> ComputeNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    @property
    def end_nodes(self) -> tuple[ComputeNode, ...]:
        return tuple(n for n in self.nodes if n.tier is Tier.END)

    @property
    def servers(self) -> tuple[ComputeNode, ...]:
        return tuple(n for n in self.nodes if n.tier is not Tier.END)

    def links_from(self, end_id: str) -> tuple[WirelessLink, ...]:
        return tuple(sorted((l for l in self.links if l.end_id == end_id), key=lambda l: l.server_id))

    def link(self, end_id: str, server_id: str) -> WirelessLink:
        for l in self.links:
            if l.key == (end_id, server_id):
                return l
        raise KeyError((end_id, server_id))
