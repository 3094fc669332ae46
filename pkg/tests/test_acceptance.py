"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
happen; without -s they appear in pytest's captured output.
"""

import dataclasses
import json
import math
from pathlib import Path

import numpy as np
import pytest

from semnetsim.cli import main
from semnetsim.config import bundled_config_path, load_bundled_config
from semnetsim.model import dbm_to_watts
from semnetsim.optimizers import (
    ActionGrid,
    best_response_gne,
    deviation_gain,
    greedy_local,
    marl_evaluate,
    marl_train,
    oracle_search,
    partition_divisible,
)
from semnetsim.video import downsample, psnr, run_pipeline, synthetic_sequence, upsample

from conftest import make_edge
from reference import naive_enumerate, random_4dev_scenario, random_small_scenario, scalar_resize_2d
from test_optimizers import profile_of

GOLDEN = json.loads((Path(__file__).parent / "golden_bicubic_ramp.json").read_text())
K_SWEEP = (1, 2, 4, 8, 12, 16)
INTERVALS = (50, 41, 33, 25, 15)


def _verdict(criterion: str):
    class _Reporter:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            status = "PASS" if exc_type is None else "FAIL"
            print(f"[acceptance] {criterion}: {status}")
            return False

    return _Reporter()


def scenario_at_k(scenario, k):
    tasks = {dev: task.with_symbols(k) for dev, task in scenario.tasks.items()}
    return dataclasses.replace(scenario, tasks=tasks, source=None)


class TestAcceptance:
    def test_criterion_1_energy_over_symbol_dimension(self):
        """Bundled 4-device scenario, declared power/frequency ranges, k sweep."""
        with _verdict("criterion 1 (4-device energy vs symbol dimension)"):
            scenario = load_bundled_config().scenario
            assert len(scenario.end_nodes) == 4
            for node in scenario.end_nodes:
                assert node.freq_range_hz == (0.96e9, 1.72e9)
            for link in scenario.links:
                assert link.power_range_dbm == (15.0, 24.0)
            oracle_energy = {}
            greedy_energy = {}
            for k in K_SWEEP:
                view = scenario_at_k(scenario, k)
                grid = ActionGrid.from_scenario(view)
                oracle_energy[k] = oracle_search(view, grid).total_energy_j
                greedy_energy[k] = greedy_local(view, grid).total_energy_j
            # (a) oracle energy non-decreasing in k
            energies = [oracle_energy[k] for k in K_SWEEP]
            assert all(b >= a for a, b in zip(energies, energies[1:]))
            # (b) and (c) for every k over 5 seeds
            for k in K_SWEEP:
                view = scenario_at_k(scenario, k)
                grid = ActionGrid.from_scenario(view)
                for seed in range(5):
                    policy = marl_train(view, grid, seed=seed, config=scenario.marl)
                    energy = marl_evaluate(policy, view, grid, episodes=1, seed=seed)
                    assert energy <= greedy_energy[k] + 1e-12
                    assert energy <= oracle_energy[k] * 1.15

    def test_criterion_2_oracle_against_naive_enumerator(self):
        """50 random small scenarios: exact agreement with an independent brute force."""
        with _verdict("criterion 2 (oracle equals naive enumerator)"):
            rng = np.random.default_rng(20240911)
            for _ in range(50):
                scenario = random_small_scenario(rng)
                grid = ActionGrid.from_scenario(scenario)
                total = math.prod(
                    len(grid.freq_levels[d]) * (1 + len(grid.power_levels[(d, "edge0")]))
                    for d in sorted(scenario.tasks)
                )
                assert total <= 64
                expected_energy, expected_profile, expected_feasible = naive_enumerate(scenario, grid)
                solution = oracle_search(scenario, grid)
                assert solution.feasible == expected_feasible
                if math.isfinite(expected_energy):
                    assert solution.total_energy_j == pytest.approx(expected_energy, rel=1e-12)
                assert profile_of(scenario, grid, solution) == expected_profile

    def test_criterion_3_equilibrium_certificate(self):
        """100 random 4-device games: convergence rate and deviation-proofness."""
        with _verdict("criterion 3 (best-response equilibrium certificate)"):
            rng = np.random.default_rng(2024)
            converged_count = 0
            poas = []
            for _ in range(100):
                scenario = random_4dev_scenario(rng)
                grid = ActionGrid.from_scenario(scenario)
                solution, rounds, converged = best_response_gne(scenario, grid, max_iters=100, eps=1e-9)
                if not converged:
                    continue
                converged_count += 1
                assert rounds <= 100
                assert deviation_gain(scenario, solution, grid) <= 1e-9
                oracle = oracle_search(scenario, grid)
                if solution.feasible and oracle.feasible and oracle.total_energy_j > 0:
                    poas.append(solution.total_energy_j / oracle.total_energy_j)
            assert converged_count >= 95
            print(
                f"[acceptance]   price of anarchy over {len(poas)} feasible equilibria: "
                f"mean {np.mean(poas):.6f}, max {np.max(poas):.6f} (reported, not bounded)"
            )

    def test_criterion_4_divisible_partitioning(self):
        """Symmetric split is exact; the asymmetric game matches a fine-grid search."""
        with _verdict("criterion 4 (divisible-task partitioning)"):
            equal = [make_edge("s0"), make_edge("s1")]
            alloc = partition_divisible([6e9], equal)
            assert alloc[0, 0] == alloc[0, 1]

            servers = [
                make_edge("s0", clock_hz=2e9, cores=1, flops_per_cycle=1),
                make_edge("s1", clock_hz=1e9, cores=1, flops_per_cycle=1),
            ]
            demands = [3e9, 1.5e9]
            caps = np.array([2e9, 1e9])
            ours = partition_divisible(demands, servers)
            grid_points = np.linspace(0.0, 1.0, 501)
            fractions = [0.0, 0.0]
            for _ in range(50):
                changed = False
                for i in range(2):
                    other = 1 - i
                    other_load = np.array(
                        [demands[other] * fractions[other], demands[other] * (1 - fractions[other])]
                    )
                    best = None
                    for frac in grid_points:
                        mine = np.array([demands[i] * frac, demands[i] * (1 - frac)])
                        makespan = np.max((other_load + mine) / caps)
                        if best is None or makespan < best[0] - 1e-15:
                            best = (makespan, frac)
                    if abs(best[1] - fractions[i]) > 1e-12:
                        fractions[i] = best[1]
                        changed = True
                if not changed:
                    break
            brute = np.array(
                [
                    [demands[0] * fractions[0], demands[0] * (1 - fractions[0])],
                    [demands[1] * fractions[1], demands[1] * (1 - fractions[1])],
                ]
            )
            brute_makespan = np.max(brute.sum(axis=0) / caps)
            ours_makespan = np.max(ours.sum(axis=0) / caps)
            assert abs(ours_makespan - brute_makespan) <= 0.01 * brute_makespan

    def test_criterion_5_video_pipeline_trends(self):
        """Seeded 100-frame sequence: bpp grows and quality never drops as keyframes densify."""
        with _verdict("criterion 5 (video pipeline trends)"):
            video = load_bundled_config().video
            seq = synthetic_sequence(
                "moving_rect", n_frames=video.n_frames, height=video.height,
                width=video.width, seed=video.seed, fps=video.fps,
            )
            assert len(seq) == 100
            reports = [
                run_pipeline(
                    seq,
                    keyframe_interval=interval,
                    factor=video.downsample_factor,
                    tau_frame=video.tau_frame,
                    tau_motion=video.tau_motion,
                    motion_delta=video.motion_delta,
                    rates=video.rates,
                )
                for interval in INTERVALS
            ]
            bpps = [r.bpp for r in reports]
            psnrs = [r.mean_psnr_db for r in reports]
            ssims = [r.mean_ssim for r in reports]
            assert all(b > a for a, b in zip(bpps, bpps[1:]))
            assert all(b >= a for a, b in zip(psnrs, psnrs[1:]))
            assert all(b >= a for a, b in zip(ssims, ssims[1:]))
            lossless = run_pipeline(seq, keyframe_interval=1, factor=video.downsample_factor)
            assert all(q.psnr_db == 100.0 for q in lossless.frames)

    def test_criterion_6_numeric_anchors(self):
        """Unit conversions, the PSNR anchor, and the frozen bicubic golden file."""
        with _verdict("criterion 6 (numeric anchors)"):
            assert dbm_to_watts(30.0) == 1.0
            a = np.zeros((2, 2), dtype=np.uint8)
            b = a.copy()
            b[0, 0] = 51  # MSE = 51^2 / 4 = 650.25
            assert abs(psnr(a, b) - 20.0) <= 1e-9
            ramp = np.asarray(GOLDEN["input"], dtype=np.uint8)
            assert np.array_equal(downsample(ramp, 4), np.asarray(GOLDEN["downsampled_2x2"]))
            assert np.array_equal(upsample(ramp, 4), np.asarray(GOLDEN["upsampled_32x32"]))
            assert scalar_resize_2d(GOLDEN["input"], 2, 2) == GOLDEN["downsampled_2x2"]

    def test_criterion_7_byte_identical_determinism(self, tmp_path):
        """Same (scenario, seed) twice, and 1 vs 4 worker threads: identical CSV bytes."""
        with _verdict("criterion 7 (byte-identical determinism)"):
            bundled = str(bundled_config_path())
            outputs = []
            for name, workers in (("a", 1), ("b", 1), ("c", 4)):
                out = tmp_path / f"{name}.csv"
                code = main([
                    "simulate", "--scenario", bundled, "--optimizer", "oracle",
                    "--seed", "11", "--out", str(out), "--workers", str(workers), "--no-plot",
                ])
                assert code == 0
                outputs.append(out.read_bytes())
            assert outputs[0] == outputs[1]
            assert outputs[0] == outputs[2]
            sweep_outputs = []
            for name, workers in (("sa", 1), ("sb", 3)):
                out = tmp_path / f"{name}.csv"
                code = main([
                    "sweep", "--scenario", bundled, "--param", "tasks.*.symbols_per_word",
                    "--values", "1,8,16", "--out", str(out), "--workers", str(workers), "--no-plot",
                ])
                assert code == 0
                sweep_outputs.append(out.read_bytes())
            assert sweep_outputs[0] == sweep_outputs[1]
