"""Optimizers for the joint offloading / frequency / power problem.

All optimizers work on a per-device discrete action grid. A device either
runs locally at one of its frequency levels or offloads to a reachable
server at a (frequency, power) pair. Devices are coupled only through
bandwidth sharing: a device's energy depends on its own action and on m,
the number of devices offloading simultaneously. Every optimizer therefore
evaluates from a precomputed (action, m) energy table built on one scenario
snapshot, which keeps the exhaustive oracle cheap and all searches
deterministic.

Action order is canonical and doubles as the tie-break: local actions by
ascending frequency first, then per server (ascending id) all (frequency,
power) pairs with frequency major. "Lexicographically smallest action
vector" always refers to this order with device ids ascending.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import costs
from .errors import SearchCapExceeded, ValidationError
from .model import LOCAL, OFFLOAD, ComputeNode, OffloadAction, Outcome
from .scenario import MarlConfig, Scenario

_CHUNK = 1 << 18


def _levels(spec: int | Sequence[float], lo: float, hi: float, what: str) -> tuple[float, ...]:
    if isinstance(spec, int):
        if spec < 1:
            raise ValidationError(f"{what}: need at least one level")
        if spec == 1 or lo == hi:
            return (lo,)
        return tuple(np.linspace(lo, hi, spec).tolist())
    values = tuple(float(v) for v in spec)
    if not values:
        raise ValidationError(f"{what}: need at least one level")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValidationError(f"{what}: levels must be strictly increasing")
    if values[0] < lo or values[-1] > hi:
        raise ValidationError(f"{what}: levels outside declared range [{lo}, {hi}]")
    return values


@dataclass(frozen=True)
class ActionGrid:
    """Discrete decision grid: frequency levels per end node, power levels per link."""

    freq_levels: Mapping[str, tuple[float, ...]]
    power_levels: Mapping[tuple[str, str], tuple[float, ...]]

    def __post_init__(self):
        object.__setattr__(self, "freq_levels", dict(self.freq_levels))
        object.__setattr__(self, "power_levels", dict(self.power_levels))
        for key, levels in list(self.freq_levels.items()) + list(self.power_levels.items()):
            if not levels:
                raise ValidationError(f"grid for {key!r} is empty")
            if any(b <= a for a, b in zip(levels, levels[1:])):
                raise ValidationError(f"grid for {key!r} must be strictly increasing")

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "ActionGrid":
        freq = {
            n.id: _levels(scenario.grid_freq_levels, n.freq_range_hz[0], n.freq_range_hz[1], f"freq levels of {n.id!r}")
            for n in scenario.end_nodes
        }
        power = {
            l.key: _levels(scenario.grid_power_levels, l.power_range_dbm[0], l.power_range_dbm[1], f"power levels of {l.key!r}")
            for l in scenario.links
        }
        return cls(freq_levels=freq, power_levels=power)


@dataclass(frozen=True)
class JointSolution:
    """A joint decision with its realized outcomes under true bandwidth sharing."""

    actions: Mapping[str, OffloadAction]
    outcomes: Mapping[str, Outcome]
    total_energy_j: float
    feasible: bool

    def __post_init__(self):
        object.__setattr__(self, "actions", dict(self.actions))
        object.__setattr__(self, "outcomes", dict(self.outcomes))
        total = math.fsum(o.energy_j for o in self.outcomes.values())
        if math.isfinite(total) and not math.isclose(total, self.total_energy_j, rel_tol=1e-12, abs_tol=1e-12):
            raise ValidationError("total_energy_j does not match the sum of per-device energies")
        if self.feasible != all(o.feasible for o in self.outcomes.values()):
            raise ValidationError("feasible flag does not match per-device outcomes")


class _Problem:
    """Per-decision tables: each device's actions with energy/feasibility as a function of m."""

    def __init__(self, scenario: Scenario, grid: ActionGrid):
        self.scenario = scenario
        self.grid = grid
        self.device_ids: list[str] = sorted(scenario.tasks)
        self.n = len(self.device_ids)
        nodes = {n.id: n for n in scenario.nodes}
        self.actions: list[list[OffloadAction]] = []
        self.offload_flags: list[np.ndarray] = []
        self.energy: list[np.ndarray] = []
        self.feasible: list[np.ndarray] = []
        for dev in self.device_ids:
            end = nodes[dev]
            task = scenario.tasks[dev]
            if dev not in grid.freq_levels:
                raise ValidationError(f"grid has no frequency levels for device {dev!r}")
            acts: list[OffloadAction] = [OffloadAction.local(f) for f in grid.freq_levels[dev]]
            for link in scenario.links_from(dev):
                if link.key not in grid.power_levels:
                    raise ValidationError(f"grid has no power levels for link {link.key!r}")
                for f in grid.freq_levels[dev]:
                    for p in grid.power_levels[link.key]:
                        acts.append(OffloadAction.offload(link.server_id, f, p))
            n_m = self.n + 1
            e = np.full((len(acts), n_m), np.inf)
            ok = np.zeros((len(acts), n_m), dtype=bool)
            for a_idx, action in enumerate(acts):
                if action.mode == LOCAL:
                    outcome, _ = costs.local_outcome(task, end, action.cpu_freq_hz)
                    e[a_idx, :] = outcome.energy_j
                    ok[a_idx, :] = outcome.feasible
                else:
                    link = scenario.link(dev, action.server_id)
                    server = nodes[action.server_id]
                    for m in range(1, n_m):
                        outcome, _ = costs.offload_outcome(
                            task, end, action.cpu_freq_hz, link, action.tx_power_dbm, server, sharing=m
                        )
                        e[a_idx, m] = outcome.energy_j
                        ok[a_idx, m] = outcome.feasible
            self.actions.append(acts)
            self.offload_flags.append(np.array([a.mode == OFFLOAD for a in acts], dtype=bool))
            self.energy.append(e)
            self.feasible.append(ok)
        self.sizes = [len(a) for a in self.actions]

    def outcome(self, i: int, a_idx: int, m: int) -> Outcome:
        """Recompute the full outcome of device i's action under sharing m."""
        dev = self.device_ids[i]
        nodes = {n.id: n for n in self.scenario.nodes}
        task = self.scenario.tasks[dev]
        action = self.actions[i][a_idx]
        if action.mode == LOCAL:
            return costs.local_outcome(task, nodes[dev], action.cpu_freq_hz)[0]
        link = self.scenario.link(dev, action.server_id)
        outcome, _ = costs.offload_outcome(
            task, nodes[dev], action.cpu_freq_hz, link, action.tx_power_dbm, nodes[action.server_id], sharing=m
        )
        return outcome

    def solution(self, profile: Sequence[int]) -> JointSolution:
        m = int(sum(self.offload_flags[i][profile[i]] for i in range(self.n)))
        outcomes = {self.device_ids[i]: self.outcome(i, profile[i], max(m, 1)) for i in range(self.n)}
        actions = {self.device_ids[i]: self.actions[i][profile[i]] for i in range(self.n)}
        return JointSolution(
            actions=actions,
            outcomes=outcomes,
            total_energy_j=math.fsum(o.energy_j for o in outcomes.values()),
            feasible=all(o.feasible for o in outcomes.values()),
        )


def _empty_solution() -> JointSolution:
    return JointSolution(actions={}, outcomes={}, total_energy_j=0.0, feasible=True)


def _scan_chunk(problem: _Problem, strides: list[int], start: int, stop: int):
    """Evaluate joint action indices [start, stop): best feasible and best raw (energy, index)."""
    idx = np.arange(start, stop, dtype=np.int64)
    m = np.zeros(idx.shape, dtype=np.int64)
    digits = []
    for i in range(problem.n):
        d = (idx // strides[i]) % problem.sizes[i]
        digits.append(d)
        m += problem.offload_flags[i][d]
    energy = np.zeros(idx.shape)
    ok = np.ones(idx.shape, dtype=bool)
    for i in range(problem.n):
        energy = energy + problem.energy[i][digits[i], m]
        ok &= problem.feasible[i][digits[i], m]
    raw_pos = int(np.argmin(energy))
    best_raw = (float(energy[raw_pos]), start + raw_pos)
    masked = np.where(ok, energy, np.inf)
    feas_pos = int(np.argmin(masked))
    best_feas = (float(masked[feas_pos]), start + feas_pos)
    return best_feas, best_raw


def _decode(index: int, strides: list[int], sizes: list[int]) -> list[int]:
    return [(index // strides[i]) % sizes[i] for i in range(len(sizes))]


def oracle_search(
    scenario: Scenario,
    grid: ActionGrid | None = None,
    *,
    cap: int | None = None,
    workers: int = 1,
) -> JointSolution:
    """Exhaustive search over the joint action grid for the minimum total end-user energy.

    Ties break toward the lexicographically smallest action vector. When no
    joint action is feasible, the returned solution carries the raw
    minimum-energy profile with ``feasible=False``. A search space larger
    than ``cap`` raises :class:`SearchCapExceeded`.
    """
    grid = grid or ActionGrid.from_scenario(scenario)
    problem = _Problem(scenario, grid)
    if problem.n == 0:
        return _empty_solution()
    total = math.prod(problem.sizes)
    cap = scenario.search_cap if cap is None else cap
    if total > cap:
        raise SearchCapExceeded(f"{total} joint actions exceed the cap of {cap}")
    # Device 0 is the most significant digit so ascending index order is
    # lexicographic action-vector order; argmin then lands on the smallest.
    strides = [1] * problem.n
    for i in range(problem.n - 2, -1, -1):
        strides[i] = strides[i + 1] * problem.sizes[i + 1]
    ranges = [(s, min(s + _CHUNK, total)) for s in range(0, total, _CHUNK)]
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: _scan_chunk(problem, strides, *r), ranges))
    else:
        results = [_scan_chunk(problem, strides, *r) for r in ranges]
    best_feas = min(r[0] for r in results)
    best_raw = min(r[1] for r in results)
    chosen = best_feas if math.isfinite(best_feas[0]) else best_raw
    return problem.solution(_decode(chosen[1], strides, problem.sizes))


def _best_local_index(problem: _Problem, i: int) -> int:
    """Min-energy feasible local action; falls back to the first local action."""
    flags = problem.offload_flags[i]
    best = None
    for a_idx in range(problem.sizes[i]):
        if flags[a_idx]:
            continue
        cost = problem.energy[i][a_idx, 0] if problem.feasible[i][a_idx, 0] else math.inf
        if best is None or cost < best[0]:
            best = (cost, a_idx)
    if best is None:
        raise ValidationError(f"device {problem.device_ids[i]!r} has no local action in the grid")
    return best[1]


def greedy_local(scenario: Scenario, grid: ActionGrid | None = None) -> JointSolution:
    """Every device computes locally at its own min-energy feasible frequency."""
    grid = grid or ActionGrid.from_scenario(scenario)
    problem = _Problem(scenario, grid)
    if problem.n == 0:
        return _empty_solution()
    return problem.solution([_best_local_index(problem, i) for i in range(problem.n)])


def greedy_offload(scenario: Scenario, grid: ActionGrid | None = None) -> JointSolution:
    """Every device offloads to the least-loaded reachable server, choosing the
    min-energy (f, p) under full bandwidth; outcomes are then re-evaluated under
    true sharing. Devices without any uplink fall back to local execution."""
    grid = grid or ActionGrid.from_scenario(scenario)
    problem = _Problem(scenario, grid)
    if problem.n == 0:
        return _empty_solution()
    nodes = {n.id: n for n in scenario.nodes}
    profile = []
    for i, dev in enumerate(problem.device_ids):
        links = scenario.links_from(dev)
        if not links:
            profile.append(_best_local_index(problem, i))
            continue
        target = min(links, key=lambda l: (nodes[l.server_id].current_load_flops, l.server_id)).server_id
        best = None
        for a_idx, action in enumerate(problem.actions[i]):
            if action.mode != OFFLOAD or action.server_id != target:
                continue
            cost = problem.energy[i][a_idx, 1] if problem.feasible[i][a_idx, 1] else math.inf
            if best is None or cost < best[0]:
                best = (cost, a_idx)
        profile.append(best[1])
    return problem.solution(profile)


def best_response_gne(
    scenario: Scenario,
    grid: ActionGrid | None = None,
    max_iters: int = 100,
    eps: float = 1e-9,
) -> tuple[JointSolution, int, bool]:
    """Round-robin best response over devices in ascending id order.

    Each device exhaustively minimizes its own energy given the others'
    current actions and switches only for an improvement larger than eps, so
    a quiescent round certifies an eps-Nash profile. Returns (solution,
    rounds executed, converged); non-convergence is reported, never raised.
    """
    if max_iters < 1:
        raise ValidationError(f"max_iters must be >= 1, got {max_iters!r}")
    grid = grid or ActionGrid.from_scenario(scenario)
    problem = _Problem(scenario, grid)
    if problem.n == 0:
        return _empty_solution(), 0, True
    profile = [0] * problem.n
    converged = False
    rounds = 0
    for rounds in range(1, max_iters + 1):
        changed = False
        for i in range(problem.n):
            m_others = int(sum(problem.offload_flags[j][profile[j]] for j in range(problem.n) if j != i))
            off = problem.offload_flags[i]
            m_per_action = m_others + off.astype(np.int64)
            cost = np.where(
                problem.feasible[i][np.arange(problem.sizes[i]), m_per_action],
                problem.energy[i][np.arange(problem.sizes[i]), m_per_action],
                np.inf,
            )
            best_idx = int(np.argmin(cost))
            if cost[best_idx] < cost[profile[i]] - eps:
                profile[i] = best_idx
                changed = True
        if not changed:
            converged = True
            break
    return problem.solution(profile), rounds, converged


def deviation_gain(
    scenario: Scenario,
    solution: JointSolution,
    grid: ActionGrid | None = None,
) -> float:
    """Largest energy saving any single device could get by deviating unilaterally.

    Zero (or negative, clipped to zero) certifies a Nash profile of the
    bandwidth-sharing game.
    """
    grid = grid or ActionGrid.from_scenario(scenario)
    problem = _Problem(scenario, grid)
    profile = []
    for i, dev in enumerate(problem.device_ids):
        action = solution.actions[dev]
        profile.append(problem.actions[i].index(action))
    worst = 0.0
    for i in range(problem.n):
        m_others = int(sum(problem.offload_flags[j][profile[j]] for j in range(problem.n) if j != i))
        off = problem.offload_flags[i]
        m_per_action = m_others + off.astype(np.int64)
        cost = np.where(
            problem.feasible[i][np.arange(problem.sizes[i]), m_per_action],
            problem.energy[i][np.arange(problem.sizes[i]), m_per_action],
            np.inf,
        )
        current = cost[profile[i]]
        best = float(np.min(cost))
        if math.isfinite(current) and best < current:
            worst = max(worst, current - best)
        elif math.isinf(current) and math.isfinite(best):
            return math.inf
    return worst


def partition_divisible(
    demands: Sequence[float],
    servers: Sequence[ComputeNode],
    max_iters: int = 100,
    eps: float = 1e-9,
) -> np.ndarray:
    """Split each device's divisible FLOP/s demand across servers via best response.

    A server's completion time is its allocated demand over its capacity;
    each device water-fills its own demand to minimize its makespan given the
    others. Zero-capacity servers are excluded. Returns an allocation matrix
    with row sums equal to the demands, deviation-proof within eps.
    """
    demands = [float(d) for d in demands]
    if any(not (math.isfinite(d) and d >= 0) for d in demands):
        raise ValidationError("demands must be finite and >= 0")
    caps = np.array([s.capacity_flops if s.capacity_flops else 0.0 for s in servers], dtype=float)
    active = caps > 0
    alloc = np.zeros((len(demands), len(servers)))
    if not active.any() or not demands:
        if any(d > 0 for d in demands):
            raise ValidationError("no server with positive capacity")
        return alloc
    c = caps[active]

    def waterfill(demand: float, load: np.ndarray) -> np.ndarray:
        # Raise a common completion-time level t over the cheapest servers
        # until the demand is absorbed: x_j = max(0, t * c_j - load_j).
        x = np.zeros_like(load)
        if demand == 0:
            return x
        order = np.argsort(load / c, kind="stable")
        base = (load / c)[order]
        cum_c = np.cumsum(c[order])
        cum_l = np.cumsum(load[order])
        t = None
        for j in range(len(order)):
            t_j = (demand + cum_l[j]) / cum_c[j]
            boundary = base[j + 1] if j + 1 < len(order) else math.inf
            if t_j <= boundary:
                t = t_j
                break
        x = np.maximum(0.0, t * c - load)
        total = x.sum()
        if total > 0:
            x *= demand / total
        return x

    sub = alloc[:, active]
    for _ in range(max_iters):
        worst_gain = 0.0
        for i in range(len(demands)):
            others = sub.sum(axis=0) - sub[i]
            current_mk = float(np.max((others + sub[i]) / c)) if sub[i].sum() > 0 else math.inf
            best = waterfill(demands[i], others)
            best_mk = float(np.max((others + best) / c)) if demands[i] > 0 else 0.0
            if demands[i] == 0:
                best_mk = 0.0
                current_mk = 0.0
            worst_gain = max(worst_gain, current_mk - best_mk)
            sub[i] = best
        if worst_gain <= eps:
            break
    alloc[:, active] = sub
    return alloc


@dataclass(frozen=True)
class PolicyTable:
    """Per-agent softmax policies over the discrete action grid."""

    device_ids: tuple[str, ...]
    logits: tuple[np.ndarray, ...]

    def __post_init__(self):
        for arr in self.logits:
            arr.setflags(write=False)

    def greedy_profile(self) -> list[int]:
        return [int(np.argmax(l)) for l in self.logits]


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z))
    return e / e.sum()


def _default_penalty(problem: _Problem) -> float:
    # 10x the largest observed feasible per-decision energy, summed over devices.
    total = 0.0
    for i in range(problem.n):
        finite = problem.energy[i][np.isfinite(problem.energy[i])]
        total += float(finite.max()) if finite.size else 1.0
    return 10.0 * max(total, 1e-12)


def marl_train(
    scenario: Scenario,
    grid: ActionGrid | None = None,
    episodes: int | None = None,
    seed: int = 0,
    config: MarlConfig | None = None,
) -> PolicyTable:
    """Train per-agent softmax policies with a shared-reward policy gradient.

    The reward of an episode is minus the total energy minus a large penalty
    per deadline violation. Deterministic given the seed.
    """
    grid = grid or ActionGrid.from_scenario(scenario)
    config = config or scenario.marl
    episodes = config.episodes if episodes is None else episodes
    if episodes < 1:
        raise ValidationError(f"episodes must be >= 1, got {episodes!r}")
    problem = _Problem(scenario, grid)
    if problem.n == 0:
        return PolicyTable(device_ids=(), logits=())
    penalty = config.violation_penalty_j if config.violation_penalty_j is not None else _default_penalty(problem)
    energies = [np.where(np.isfinite(e), e, 0.0) for e in problem.energy]
    violations = [~ok for ok in problem.feasible]
    rng = np.random.default_rng(seed)
    logits = [np.zeros(problem.sizes[i]) for i in range(problem.n)]
    baseline = None
    scale = None
    decay = config.baseline_decay
    lr = config.learning_rate
    for ep in range(episodes):
        beta = config.entropy_coef * max(0.0, 1.0 - ep / (0.5 * episodes))
        probs = [_softmax(l) for l in logits]
        chosen = [int(rng.choice(problem.sizes[i], p=probs[i])) for i in range(problem.n)]
        m = int(sum(problem.offload_flags[i][chosen[i]] for i in range(problem.n)))
        cost = 0.0
        for i in range(problem.n):
            cost += energies[i][chosen[i], m]
            if violations[i][chosen[i], m]:
                cost += penalty
        reward = -cost
        baseline = reward if baseline is None else decay * baseline + (1 - decay) * reward
        advantage = reward - baseline
        scale = abs(advantage) if scale is None else decay * scale + (1 - decay) * abs(advantage)
        advantage = advantage / max(scale, 1e-12)
        for i in range(problem.n):
            grad = -probs[i]
            grad[chosen[i]] += 1.0
            step = lr * advantage * grad
            if beta > 0:
                p = probs[i]
                logp = np.log(np.maximum(p, 1e-300))
                entropy = -(p * logp).sum()
                step += lr * beta * (-(p * (logp + entropy)))
            logits[i] += step
            if not np.all(np.isfinite(logits[i])):
                raise RuntimeError(
                    f"policy gradient diverged at episode {ep} for device {problem.device_ids[i]!r}: "
                    f"advantage={advantage!r}, lr={lr!r}"
                )
    return PolicyTable(device_ids=tuple(problem.device_ids), logits=tuple(logits))


def marl_solution(policy: PolicyTable, scenario: Scenario, grid: ActionGrid | None = None) -> JointSolution:
    """Evaluate the greedy (argmax) policy as a joint decision."""
    grid = grid or ActionGrid.from_scenario(scenario)
    problem = _Problem(scenario, grid)
    if tuple(problem.device_ids) != policy.device_ids:
        raise ValidationError("policy was trained for a different device set")
    for i in range(problem.n):
        if len(policy.logits[i]) != problem.sizes[i]:
            raise ValidationError(f"policy action space mismatch for device {problem.device_ids[i]!r}")
    return problem.solution(policy.greedy_profile())


def marl_evaluate(
    policy: PolicyTable,
    scenario: Scenario,
    grid: ActionGrid | None = None,
    episodes: int = 1,
    seed: int = 0,
) -> float:
    """Mean total energy of the greedy policy over evaluation episodes.

    The scenario is static, so episodes are identical; the parameters keep
    the evaluation contract explicit and seedable.
    """
    if episodes < 1:
        raise ValidationError(f"episodes must be >= 1, got {episodes!r}")
    solution = marl_solution(policy, scenario, grid)
    return math.fsum(solution.total_energy_j for _ in range(episodes)) / episodes
