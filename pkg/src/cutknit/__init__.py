"""Cut-and-knit simulation of Gray-code angle encoders.

Typical use::

    from cutknit import PipelineConfig, cmd_pipeline
    res = cmd_pipeline(PipelineConfig(n_addr=2, n_data=1))
    res.record.rmse
"""
from .circuit import Circuit, CircuitError, GateKind, GateOp, joint_probabilities, simulate_statevector
from .mps import MpsState, simulate_mps
from .encoder import EncodingError, build_encoder_circuit, data_to_angles, decode_counts, encode
from .cutting import CutError, CutPlan, expand_cut_cx, make_plan, sparse_cut_select
from .knitting import JobResult, KnitError, RunOptions, knit
from .aqc import AqcError, OptimizerConfig, compile_prefix
from .cli import PipelineConfig, cmd_ablation, cmd_image, cmd_pipeline, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "AqcError", "Circuit", "CircuitError", "CutError", "CutPlan", "EncodingError", "GateKind",
    "GateOp", "JobResult", "KnitError", "MpsState", "OptimizerConfig", "PipelineConfig",
    "RunOptions", "build_encoder_circuit", "cmd_ablation", "cmd_image", "cmd_pipeline",
    "compile_prefix", "data_to_angles", "decode_counts", "encode", "expand_cut_cx",
    "joint_probabilities", "knit", "make_plan", "run_pipeline", "simulate_mps",
    "simulate_statevector", "sparse_cut_select",
]
