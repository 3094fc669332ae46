"""Seeded scenario execution: arrivals, perception, optimization, admission, aggregation.

A run processes decision epochs in time order. Within an epoch the engine
snapshots the network, optionally adapts the coding dimension to the
congestion level, invokes the configured optimizer on the batch of pending
tasks (one per device per wave), applies admission control in device-id
order, and records outcomes. Identical (scenario, seed) pairs produce
identical reports regardless of worker counts.
"""

from __future__ import annotations

import copy
import dataclasses
import heapq
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import costs
from .capability import adapt_symbol_dimension, admit
from .errors import SearchCapExceeded, ValidationError
from .model import LOCAL, NetworkStatus, OffloadAction, Outcome, SemanticTask
from .optimizers import (
    ActionGrid,
    best_response_gne,
    deviation_gain,
    greedy_local,
    greedy_offload,
    marl_solution,
    marl_train,
    oracle_search,
)
from .scenario import ArrivalProcess, Scenario

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TaskRecord:
    """One optimized task: the decision taken and what it cost."""

    epoch: int
    time_s: float
    device_id: str
    task_id: str
    symbols_per_word: int
    mode: str
    server_id: str | None
    cpu_freq_hz: float
    tx_power_dbm: float | None
    energy_j: float
    latency_s: float
    feasible: bool
    bits_sent: int
    semantic_rate_sps: float
    qoe: float | None


@dataclass(frozen=True)
class Totals:
    total_energy_j: float
    mean_latency_s: float
    feasibility_rate: float
    mean_qoe: float | None


@dataclass(frozen=True)
class Diagnostics:
    optimizer: str
    decisions: int
    iterations: int | None
    converged: bool | None
    max_deviation_gain_j: float | None
    oracle_energy_j: float | None
    price_of_anarchy: float | None


@dataclass(frozen=True)
class RunReport:
    records: tuple[TaskRecord, ...]
    totals: Totals
    diagnostics: Diagnostics

    def __post_init__(self):
        total = math.fsum(r.energy_j for r in self.records)
        if math.isfinite(total) and not math.isclose(total, self.totals.total_energy_j, rel_tol=1e-12, abs_tol=1e-12):
            raise ValidationError("totals do not aggregate the per-task records")


def _arrival_schedule(scenario: Scenario) -> list[tuple[float, str, SemanticTask]]:
    """(time, device, task) triples sorted by (time, device id)."""
    entries: list[tuple[float, str, SemanticTask]] = []
    if scenario.arrivals is None:
        for device_id in sorted(scenario.tasks):
            entries.append((0.0, device_id, scenario.tasks[device_id]))
        return entries
    proc: ArrivalProcess = scenario.arrivals
    count = max(1, int(math.floor(proc.rate_per_device_hz * proc.horizon_s + 0.5)))
    root = np.random.SeedSequence(scenario.seed)
    for device_id, child in zip(sorted(scenario.tasks), root.spawn(len(scenario.tasks))):
        rng = np.random.default_rng(child)
        times = np.sort(rng.uniform(0.0, proc.horizon_s, size=count))
        template = scenario.tasks[device_id]
        for j, t in enumerate(times):
            task = dataclasses.replace(template, id=f"{template.id}-{j}")
            entries.append((float(t), device_id, task))
    entries.sort(key=lambda e: (e[0], e[1]))
    return entries


def _epochs(scenario: Scenario, schedule):
    """Group arrivals into decision epochs; the default is one batch at t=0."""
    if scenario.epoch_window_s is None:
        return [(0, 0.0, schedule)] if schedule else []
    window = scenario.epoch_window_s
    buckets: dict[int, list] = {}
    for entry in schedule:
        buckets.setdefault(int(entry[0] // window), []).append(entry)
    return [(b, b * window, buckets[b]) for b in sorted(buckets)]


def _snapshot(scenario: Scenario, loads: dict[str, float], offloading_share: float, t: float) -> NetworkStatus:
    capacity = sum(s.capacity_flops for s in scenario.servers)
    used = sum(loads.get(s.id, 0.0) for s in scenario.servers)
    congestion = min(used / capacity, 1.0) if capacity > 0 else 0.0
    return NetworkStatus(
        congestion_level=congestion,
        node_load_flops=dict(loads),
        link_utilization={f"{l.end_id}->{l.server_id}": offloading_share for l in scenario.links},
        timestamp_s=t,
    )


def _decision_view(scenario: Scenario, tasks: dict[str, SemanticTask], loads: dict[str, float]) -> Scenario:
    nodes = tuple(n.with_load(loads.get(n.id, 0.0)) if n.capacity_flops is not None else n for n in scenario.nodes)
    return dataclasses.replace(scenario, nodes=nodes, tasks=tasks, arrivals=None, source=None)


def _solve(view: Scenario, grid: ActionGrid, workers: int):
    """Dispatch to the configured optimizer; returns (solution, iterations, converged, gain)."""
    name = view.optimizer
    if name == "oracle":
        return oracle_search(view, grid, workers=workers), None, None, None
    if name == "greedy-local":
        return greedy_local(view, grid), None, None, None
    if name == "greedy-offload":
        return greedy_offload(view, grid), None, None, None
    if name == "gne":
        solution, rounds, converged = best_response_gne(view, grid, max_iters=view.gne_max_rounds, eps=view.gne_eps)
        gain = deviation_gain(view, solution, grid) if converged else None
        return solution, rounds, converged, gain
    if name == "marl":
        policy = marl_train(view, grid, seed=view.seed, config=view.marl)
        return marl_solution(policy, view, grid), view.marl.episodes, None, None
    raise ValidationError(f"unknown optimizer {name!r}")


def _admission_demand(task: SemanticTask, server) -> float:
    """Reserved decode rate: the FLOPs of the decode spread over the deadline."""
    return task.source_words * task.dec_cycles_per_word * server.flops_per_cycle / task.deadline_s


def run(scenario: Scenario, *, workers: int = 1) -> RunReport:
    """Execute one scenario deterministically and aggregate the results."""
    grid = ActionGrid.from_scenario(scenario)
    schedule = _arrival_schedule(scenario)
    epochs = _epochs(scenario, schedule)
    loads: dict[str, float] = {s.id: s.current_load_flops for s in scenario.servers}
    releases: list[tuple[float, str, float]] = []
    nodes = {n.id: n for n in scenario.nodes}
    records: list[TaskRecord] = []
    offloading_share = 0.0
    iterations_total = 0
    iterations_seen = False
    converged_all: bool | None = None
    worst_gain: float | None = None
    oracle_energy: float | None = None
    decisions = 0

    for epoch_index, epoch_time, entries in epochs:
        while releases and releases[0][0] <= epoch_time:
            _, server_id, demand = heapq.heappop(releases)
            loads[server_id] = max(0.0, loads[server_id] - demand)
        # split an epoch with several tasks for one device into sequential waves
        per_device: dict[str, list] = {}
        for entry in entries:
            per_device.setdefault(entry[1], []).append(entry)
        n_waves = max(len(v) for v in per_device.values())
        for wave in range(n_waves):
            wave_entries = {dev: items[wave] for dev, items in per_device.items() if wave < len(items)}
            status = _snapshot(scenario, loads, offloading_share, epoch_time)
            tasks: dict[str, SemanticTask] = {}
            for dev, (_, _, task) in sorted(wave_entries.items()):
                if scenario.adapt_symbol_range is not None:
                    task = task.with_symbols(adapt_symbol_dimension(status, scenario.adapt_symbol_range))
                tasks[dev] = task
            view = _decision_view(scenario, tasks, loads)
            solution, iterations, converged, gain = _solve(view, grid, workers)
            decisions += 1
            if iterations is not None:
                iterations_total += iterations
                iterations_seen = True
            if converged is not None:
                converged_all = converged if converged_all is None else (converged_all and converged)
            if gain is not None:
                worst_gain = gain if worst_gain is None else max(worst_gain, gain)
            if scenario.optimizer == "gne" and scenario.report_poa and oracle_energy is None:
                try:
                    oracle_energy = oracle_search(view, grid, workers=workers).total_energy_j
                except SearchCapExceeded:
                    oracle_energy = None
            elif scenario.optimizer == "oracle" and oracle_energy is None:
                oracle_energy = solution.total_energy_j

            # admission in device-id order; rejected offloads fall back to local
            outcomes: dict[str, Outcome] = dict(solution.outcomes)
            actions: dict[str, OffloadAction] = dict(solution.actions)
            for dev in sorted(actions):
                action = actions[dev]
                if action.mode == LOCAL:
                    continue
                server = nodes[action.server_id].with_load(loads[action.server_id])
                demand = _admission_demand(tasks[dev], server)
                if admit(server, demand):
                    loads[action.server_id] += demand
                    done = epoch_time + outcomes[dev].latency_s
                    if math.isfinite(done):
                        heapq.heappush(releases, (done, action.server_id, demand))
                else:
                    log.debug("admission rejected %s on %s, falling back to local", dev, action.server_id)
                    fallback = greedy_local(
                        dataclasses.replace(view, tasks={dev: tasks[dev]}, source=None), grid
                    )
                    actions[dev] = fallback.actions[dev]
                    outcomes[dev] = fallback.outcomes[dev]
            offloading_share = (
                sum(1 for a in actions.values() if a.mode != LOCAL) / len(actions) if actions else 0.0
            )
            for dev in sorted(tasks):
                action = actions[dev]
                outcome = outcomes[dev]
                task = tasks[dev]
                value = (
                    costs.qoe(outcome, task, scenario.qoe_weights, scenario.reference_scales)
                    if scenario.reference_scales is not None
                    else None
                )
                records.append(
                    TaskRecord(
                        epoch=epoch_index,
                        time_s=wave_entries[dev][0],
                        device_id=dev,
                        task_id=task.id,
                        symbols_per_word=task.symbols_per_word,
                        mode=action.mode,
                        server_id=action.server_id,
                        cpu_freq_hz=action.cpu_freq_hz,
                        tx_power_dbm=action.tx_power_dbm,
                        energy_j=outcome.energy_j,
                        latency_s=outcome.latency_s,
                        feasible=outcome.feasible,
                        bits_sent=outcome.bits_sent,
                        semantic_rate_sps=outcome.semantic_rate_sps,
                        qoe=value,
                    )
                )

    total_energy = math.fsum(r.energy_j for r in records)
    n = len(records)
    qoe_values = [r.qoe for r in records if r.qoe is not None]
    totals = Totals(
        total_energy_j=total_energy,
        mean_latency_s=math.fsum(r.latency_s for r in records) / n if n else 0.0,
        feasibility_rate=sum(1 for r in records if r.feasible) / n if n else 1.0,
        mean_qoe=math.fsum(qoe_values) / len(qoe_values) if qoe_values else None,
    )
    poa = None
    if oracle_energy is not None and oracle_energy > 0 and math.isfinite(total_energy) and decisions == 1:
        poa = total_energy / oracle_energy
    diagnostics = Diagnostics(
        optimizer=scenario.optimizer,
        decisions=decisions,
        iterations=iterations_total if iterations_seen else None,
        converged=converged_all,
        max_deviation_gain_j=worst_gain,
        oracle_energy_j=oracle_energy if decisions == 1 else None,
        price_of_anarchy=poa,
    )
    log.info(
        "run done: optimizer=%s tasks=%d energy=%.6g J feasible=%.0f%%",
        scenario.optimizer, n, total_energy, 100 * totals.feasibility_rate,
    )
    return RunReport(records=tuple(records), totals=totals, diagnostics=diagnostics)


def set_by_path(config: dict, path: str, value) -> None:
    """Assign a scalar inside a nested config dict. '*' fans out over a list."""
    parts = path.split(".")

    def descend(obj, idx: int, trail: str):
        part = parts[idx]
        last = idx == len(parts) - 1
        where = f"{trail}.{part}" if trail else part
        if part == "*":
            if not isinstance(obj, list):
                raise ValidationError(f"sweep path {path!r}: {trail or '<root>'} is not a list")
            if last:
                raise ValidationError(f"sweep path {path!r} must end on a scalar field")
            for entry in obj:
                descend(entry, idx + 1, where)
            return
        if not isinstance(obj, dict) or part not in obj:
            raise ValidationError(f"sweep path {path!r}: no entry {where!r}")
        if last:
            if isinstance(obj[part], (dict, list)):
                raise ValidationError(f"sweep path {path!r} addresses a non-scalar")
            obj[part] = value
        else:
            descend(obj[part], idx + 1, where)

    descend(config, 0, "")


def sweep(scenario: Scenario, param_path: str, values, *, workers: int = 1) -> list[RunReport]:
    """Independent runs of the scenario with one scalar swept; same seed, order preserved."""
    from .config import scenario_from_dict, scenario_to_dict

    base = scenario.source if scenario.source is not None else scenario_to_dict(scenario)
    variants = []
    for value in values:
        cfg = copy.deepcopy(base)
        set_by_path(cfg, param_path, value)
        variants.append(scenario_from_dict(cfg, location="scenario"))
    if workers > 1 and len(variants) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda s: run(s, workers=1), variants))
    return [run(s, workers=workers) for s in variants]
