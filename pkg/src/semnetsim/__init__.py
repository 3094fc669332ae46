"""Deterministic simulator of cloud-edge-end computing networks running
semantic-communication workloads, with a joint offloading/frequency/power
optimizer suite and a keyframe-based video sampling pipeline."""

__version__ = "0.1.0"

from .capability import CapabilityReport, adapt_symbol_dimension, admit, estimate_end_to_end, measure
from .costs import (
    CostBreakdown,
    QoeWeights,
    ReferenceScales,
    local_outcome,
    offload_outcome,
    qoe,
    semantic_payload_bits,
    shannon_rate,
)
from .errors import ConfigError, SearchCapExceeded, ValidationError
from .model import (
    ComputeNode,
    NetworkStatus,
    OffloadAction,
    Outcome,
    SemanticTask,
    Tier,
    WirelessLink,
    dbm_to_watts,
    node_flops,
)
from .optimizers import (
    ActionGrid,
    JointSolution,
    PolicyTable,
    best_response_gne,
    deviation_gain,
    greedy_local,
    greedy_offload,
    marl_evaluate,
    marl_solution,
    marl_train,
    oracle_search,
    partition_divisible,
)
from .scenario import ArrivalProcess, MarlConfig, Scenario
from .video import (
    CodedRates,
    FrameSequence,
    SamplingPlan,
    VideoReport,
    apply_sensing_mask,
    compute_bpp,
    detect_redundant,
    downsample,
    psnr,
    reconstruct_baseline,
    run_pipeline,
    select_keyframes_content,
    select_keyframes_fixed,
    ssim,
    synthetic_sequence,
    upsample,
)

__all__ = [name for name in dir() if not name.startswith("_")]
