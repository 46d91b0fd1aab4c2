"""Heterogeneous CPU/accelerator benchmarking for batches of simulation variants."""
from .executor import (BatchFailed, BatchRequest, BatchResult, DevicePerfModel, Executors, Mode,
                       executor_contract_check, run_batch_cpu, run_batch_synthetic)
from .monitor import NoKnee, Stats, detect_saturation_knee, summarize
from .scheduler import (AllocationPlan, CalibrationProfile, HybridResult, calibrate, naive_sum,
                        plan_allocation, plan_allocation_optimal, run_hybrid)
from .simkernel import ModelKind, NumericalBlowup, VariantResult, WorldState, build_model, simulate, step

__version__ = "0.1.0"
