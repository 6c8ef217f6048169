"""Enriched physics-informed networks for stress intensity factors of 2D cracks."""

import os as _os

_threads = _os.environ.get("CRACKPINN_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .benchmarks import BENCHMARK_IDS, BenchmarkCase, benchmark_case, run_benchmark  # noqa: E402
from .elasticity import Assumption, Material  # noqa: E402
from .kinematics import CrackTip, EnrichedModel  # noqa: E402
from .network import ActivationKind, Network, init_network  # noqa: E402
from .sif import cod_sif, dem_sif, extrapolate_sif, ktilde_to_k  # noqa: E402
from .training import NetArch, ProblemDefinition, TrainingConfig, train  # noqa: E402

__all__ = [
    "ActivationKind",
    "Assumption",
    "BENCHMARK_IDS",
    "BenchmarkCase",
    "CrackTip",
    "EnrichedModel",
    "Material",
    "NetArch",
    "Network",
    "ProblemDefinition",
    "TrainingConfig",
    "benchmark_case",
    "cod_sif",
    "dem_sif",
    "extrapolate_sif",
    "init_network",
    "ktilde_to_k",
    "run_benchmark",
    "train",
]
