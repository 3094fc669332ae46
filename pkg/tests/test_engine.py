import dataclasses
import math

import pytest

from semnetsim.config import load_bundled_config, scenario_from_dict, scenario_to_dict
from semnetsim.engine import run, set_by_path, sweep
from semnetsim.errors import ValidationError
from semnetsim.scenario import ArrivalProcess

from conftest import make_scenario


class TestRun:
    def test_empty_task_set_gives_zero_totals(self):
        scenario = make_scenario(n_devices=1)
        scenario = dataclasses.replace(scenario, tasks={})
        report = run(scenario)
        assert report.totals.total_energy_j == 0.0
        assert report.records == ()

    def test_same_scenario_and_seed_identical_reports(self):
        scenario = load_bundled_config().scenario
        a = run(scenario)
        b = run(scenario)
        assert a == b

    def test_conservation_totals_equal_record_sum(self):
        scenario = make_scenario(n_devices=3, optimizer="gne")
        report = run(scenario)
        assert report.totals.total_energy_j == pytest.approx(
            math.fsum(r.energy_j for r in report.records), rel=1e-15
        )

    def test_oracle_k_sweep_energy_non_decreasing(self):
        scenario = dataclasses.replace(load_bundled_config().scenario, optimizer="oracle")
        reports = sweep(scenario, "tasks.*.symbols_per_word", [1, 2, 4, 8, 12, 16])
        energies = [r.totals.total_energy_j for r in reports]
        assert all(b >= a for a, b in zip(energies, energies[1:]))

    def test_gne_reports_poa_and_certificate(self):
        scenario = load_bundled_config().scenario
        report = run(scenario)
        assert report.diagnostics.optimizer == "gne"
        assert report.diagnostics.converged is True
        assert report.diagnostics.max_deviation_gain_j <= 1e-9
        assert report.diagnostics.price_of_anarchy >= 1.0 - 1e-12

    def test_per_task_qoe_present_with_scales(self):
        scenario = load_bundled_config().scenario
        report = run(scenario)
        assert all(r.qoe is not None for r in report.records)
        assert report.totals.mean_qoe is not None

    def test_arrival_process_is_seeded_and_windowed(self):
        base = make_scenario(n_devices=2, optimizer="greedy-local")
        scenario = dataclasses.replace(
            base, arrivals=ArrivalProcess(rate_per_device_hz=0.5, horizon_s=8.0), epoch_window_s=2.0
        )
        a = run(scenario)
        b = run(scenario)
        assert a == b
        # 0.5 Hz over 8 s = 4 tasks per device
        assert len(a.records) == 8
        assert len({r.epoch for r in a.records}) >= 2

    def test_adapt_symbol_range_lowers_k_under_load(self):
        base = load_bundled_config().scenario
        # preload the server to two thirds capacity -> congestion 2/3 -> k = round(16 - 2/3*15) = 6
        nodes = tuple(
            n.with_load(6.4e10) if n.id == "edge0" else n for n in base.nodes
        )
        scenario = dataclasses.replace(base, nodes=nodes, adapt_symbol_range=(1, 16))
        report = run(scenario)
        assert {r.symbols_per_word for r in report.records} == {6}

    def test_marl_optimizer_runs_deterministically(self):
        scenario = dataclasses.replace(
            make_scenario(n_devices=2, optimizer="marl"),
        )
        scenario = dataclasses.replace(scenario, marl=dataclasses.replace(scenario.marl, episodes=200))
        a = run(scenario)
        b = run(scenario)
        assert a == b


class TestScenarioValidation:
    def test_duplicate_link_rejected(self):
        scenario = make_scenario(n_devices=1)
        with pytest.raises(ValidationError):
            dataclasses.replace(scenario, links=scenario.links + scenario.links)

    def test_unknown_node_in_link_rejected(self):
        scenario = make_scenario(n_devices=1)
        bad = dataclasses.replace(scenario.links[0], end_id="ghost")
        with pytest.raises(ValidationError):
            dataclasses.replace(scenario, links=(bad,))

    def test_task_on_server_rejected(self):
        scenario = make_scenario(n_devices=1)
        with pytest.raises(ValidationError):
            dataclasses.replace(scenario, tasks={"edge0": scenario.tasks["dev0"]})

    def test_unknown_optimizer_rejected(self):
        scenario = make_scenario(n_devices=1)
        with pytest.raises(ValidationError):
            dataclasses.replace(scenario, optimizer="anneal")


class TestAdmissionControl:
    def test_rejected_offload_falls_back_to_local(self):
        # admission demand per device: 100 words * 4e7 cycles/word * 4 flops/cycle
        # over a 10 s deadline = 1.6e9 FLOP/s; capacity fits exactly one.
        base = make_scenario(n_devices=2, optimizer="greedy-offload")
        nodes = tuple(
            dataclasses.replace(n, capacity_flops=2e9) if n.id == "edge0" else n for n in base.nodes
        )
        scenario = dataclasses.replace(base, nodes=nodes)
        report = run(scenario)
        modes = {r.device_id: r.mode for r in report.records}
        assert modes["dev0"] == "offload"
        assert modes["dev1"] == "local"


class TestSetByPath:
    def test_sets_nested_scalar(self):
        cfg = {"a": {"b": 1}}
        set_by_path(cfg, "a.b", 7)
        assert cfg["a"]["b"] == 7

    def test_wildcard_fans_out(self):
        cfg = {"tasks": [{"k": 1}, {"k": 2}]}
        set_by_path(cfg, "tasks.*.k", 9)
        assert [t["k"] for t in cfg["tasks"]] == [9, 9]

    def test_bad_path_rejected(self):
        with pytest.raises(ValidationError):
            set_by_path({"a": 1}, "a.b", 2)
        with pytest.raises(ValidationError):
            set_by_path({"a": {"b": 1}}, "a.c", 2)
        with pytest.raises(ValidationError):
            set_by_path({"a": {"b": {}}}, "a.b", 2)


class TestSweep:
    def test_single_value_equals_run(self):
        scenario = load_bundled_config().scenario
        single = sweep(scenario, "tasks.*.symbols_per_word", [8])
        assert len(single) == 1
        assert single[0] == run(scenario)

    def test_order_preserved_and_workers_irrelevant(self):
        scenario = dataclasses.replace(load_bundled_config().scenario, optimizer="greedy-local")
        values = [16, 1, 8]
        serial = sweep(scenario, "tasks.*.symbols_per_word", values)
        parallel = sweep(scenario, "tasks.*.symbols_per_word", values, workers=3)
        assert serial == parallel
        assert serial[1].totals.total_energy_j < serial[0].totals.total_energy_j

    def test_programmatic_scenario_round_trips_for_sweep(self):
        scenario = make_scenario(n_devices=2, optimizer="greedy-local")
        rebuilt = scenario_from_dict(scenario_to_dict(scenario))
        assert run(rebuilt) == run(scenario)
        reports = sweep(scenario, "seed", [0, 1])
        assert len(reports) == 2
