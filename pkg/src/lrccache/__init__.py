"""Reference-count-aware cache management for DAG-structured jobs."""
from .dag import (BlockMeta, DagSpec, JobSpec, RefCountProfile, compute_reference_counts,
                  on_block_materialized, reference_distances, runnable_blocks)
from .kernels import BACKEND
from .policies import POLICIES, Cache, EvictionDecision, EvictionLog
from .simulator import CostModel, SimReport, run, run_multi_tenant

__all__ = [
    "BACKEND", "BlockMeta", "Cache", "CostModel", "DagSpec", "EvictionDecision",
    "EvictionLog", "JobSpec", "POLICIES", "RefCountProfile", "SimReport",
    "compute_reference_counts", "on_block_materialized", "reference_distances",
    "run", "run_multi_tenant", "runnable_blocks",
]
