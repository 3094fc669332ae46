import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from semnetsim.errors import ValidationError
from semnetsim.model import ComputeNode, OffloadAction, Outcome, SemanticTask, Tier, dbm_to_watts, node_flops

from conftest import make_edge, make_end


class TestDbmToWatts:
    def test_milliwatt_reference(self):
        assert dbm_to_watts(30.0) == 1.0
        assert dbm_to_watts(0.0) == 0.001

    def test_15_dbm(self):
        # 10^(-1.5) evaluated independently
        assert dbm_to_watts(15.0) == pytest.approx(0.0316227766, abs=1e-9)

    @given(st.floats(-80, 60), st.floats(-80, 60))
    def test_strictly_monotone(self, a, b):
        # Strict above float granularity; adjacent representable dBm values can
        # collapse to the same power.
        if a < b and b - a > 1e-9:
            assert dbm_to_watts(a) < dbm_to_watts(b)

    @given(st.floats(-60, 40))
    def test_decade_step(self, p):
        assert dbm_to_watts(p + 10.0) == pytest.approx(10.0 * dbm_to_watts(p), rel=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            dbm_to_watts(math.nan)


class TestNodeFlops:
    def test_identity_factors(self):
        node = make_edge(clock_hz=1e9, cores=1, flops_per_cycle=1)
        assert node_flops(node) == 1e9

    def test_product(self):
        node = make_edge(clock_hz=1.72e9, cores=2, flops_per_cycle=4)
        assert node_flops(node) == pytest.approx(1.376e10)

    def test_zero_clock_rejected(self):
        with pytest.raises(ValidationError):
            make_edge(clock_hz=0.0)


class TestInvariants:
    def test_end_node_requires_kappa_and_range(self):
        with pytest.raises(ValidationError):
            ComputeNode(id="d", tier=Tier.END, clock_hz=1e9, cores=1, flops_per_cycle=1, freq_range_hz=(1e9, 2e9))

    def test_freq_range_ordering(self):
        with pytest.raises(ValidationError):
            make_end(freq_range=(2e9, 1e9))

    def test_load_capped_by_capacity(self):
        with pytest.raises(ValidationError):
            make_edge(load=1e20)

    def test_server_does_not_take_dvfs_fields(self):
        with pytest.raises(ValidationError):
            ComputeNode(
                id="e", tier=Tier.EDGE, clock_hz=1e9, cores=1, flops_per_cycle=1,
                capacity_flops=1e9, kappa=1e-27,
            )

    def test_task_bounds(self):
        with pytest.raises(ValidationError):
            SemanticTask(
                id="t", source_words=-1, symbols_per_word=1, bits_per_symbol=1,
                enc_cycles_fixed=0, enc_cycles_per_symbol=0, dec_cycles_per_word=0, deadline_s=1.0,
            )
        with pytest.raises(ValidationError):
            SemanticTask(
                id="t", source_words=1, symbols_per_word=0, bits_per_symbol=1,
                enc_cycles_fixed=0, enc_cycles_per_symbol=0, dec_cycles_per_word=0, deadline_s=1.0,
            )

    def test_action_shape(self):
        with pytest.raises(ValidationError):
            OffloadAction(mode="local", cpu_freq_hz=1e9, tx_power_dbm=20.0)
        with pytest.raises(ValidationError):
            OffloadAction(mode="offload", cpu_freq_hz=1e9, server_id="edge0")
        act = OffloadAction.offload("edge0", 1e9, 20.0)
        assert act.server_id == "edge0"

    def test_outcome_non_negative(self):
        with pytest.raises(ValidationError):
            Outcome(energy_j=-1.0, latency_s=0.0, feasible=True, bits_sent=0, semantic_rate_sps=0.0)


class TestPerfScore:
    def test_saturating_and_bounded(self):
        task = SemanticTask(
            id="t", source_words=1, symbols_per_word=1, bits_per_symbol=1,
            enc_cycles_fixed=0, enc_cycles_per_symbol=0, dec_cycles_per_word=0, deadline_s=1.0,
        )
        scores = [task.perf_score(k) for k in range(1, 40)]
        assert all(0 <= s <= 1 for s in scores)
        assert all(b >= a for a, b in zip(scores, scores[1:]))
