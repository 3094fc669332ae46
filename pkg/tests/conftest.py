import pytest

from semnetsim.costs import QoeWeights, ReferenceScales
from semnetsim.model import ComputeNode, SemanticTask, Tier, WirelessLink
from semnetsim.scenario import Scenario


def make_end(node_id="dev0", freq_range=(0.96e9, 1.72e9), kappa=1e-27):
    return ComputeNode(
        id=node_id,
        tier=Tier.END,
        clock_hz=1.2e9,
        cores=1,
        flops_per_cycle=1,
        freq_range_hz=freq_range,
        kappa=kappa,
    )


def make_edge(node_id="edge0", clock_hz=3.0e9, cores=8, flops_per_cycle=4, load=0.0):
    capacity = clock_hz * cores * flops_per_cycle
    return ComputeNode(
        id=node_id,
        tier=Tier.EDGE,
        clock_hz=clock_hz,
        cores=cores,
        flops_per_cycle=flops_per_cycle,
        capacity_flops=capacity,
        current_load_flops=load,
    )


def make_link(end_id="dev0", server_id="edge0", bandwidth=1e6, gain=1e-7, noise=1e-17, power_range=(15.0, 24.0)):
    return WirelessLink(
        end_id=end_id,
        server_id=server_id,
        bandwidth_hz=bandwidth,
        channel_gain=gain,
        noise_psd=noise,
        power_range_dbm=power_range,
    )


def make_task(task_id="t0", words=100, k=8, q=16, a0=1.0e6, a1=1.2e5, dec=4.0e7, deadline=10.0):
    return SemanticTask(
        id=task_id,
        source_words=words,
        symbols_per_word=k,
        bits_per_symbol=q,
        enc_cycles_fixed=a0,
        enc_cycles_per_symbol=a1,
        dec_cycles_per_word=dec,
        deadline_s=deadline,
    )


def make_scenario(n_devices=2, optimizer="oracle", seed=0, n_freq=2, n_power=2, **task_kwargs):
    devices = [make_end(f"dev{i}") for i in range(n_devices)]
    edge = make_edge()
    links = tuple(make_link(d.id) for d in devices)
    tasks = {d.id: make_task(f"task-{d.id}", **task_kwargs) for d in devices}
    return Scenario(
        nodes=tuple(devices) + (edge,),
        links=links,
        tasks=tasks,
        optimizer=optimizer,
        seed=seed,
        grid_freq_levels=n_freq,
        grid_power_levels=n_power,
        qoe_weights=QoeWeights(bits=0.1, compute=0.1, latency=0.3, energy=0.4, performance=0.1),
        reference_scales=ReferenceScales(bits=25600, compute_cycles=5.3e9, latency_s=10.0, energy_j=16.0),
    )


@pytest.fixture
def end_node():
    return make_end()


@pytest.fixture
def edge_node():
    return make_edge()


@pytest.fixture
def link():
    return make_link()


@pytest.fixture
def task():
    return make_task()
