"""Quantum-accelerated periodic homogenisation on a statevector emulator."""

from .ensemble import EnsembleReport, LoadSet, load_set, solve_ensemble
from .oracle import (
    fft_fixed_point,
    homogenised_stress,
    pick_steps,
    relative_error,
)
from .problem import (
    AnalyticBenchmark,
    IterationPlan,
    RveSpec,
    StrainField,
    bench_1d,
    bench_2d,
    grid,
    mu_midpoint,
)
from .rve import (
    EXECUTE_QUBIT_CAP,
    QubitBudgetError,
    QubitLayout,
    SolveReport,
    SolverConfig,
    build_layout,
    solve,
)
from .state import StateVector

__all__ = [
    "AnalyticBenchmark",
    "EnsembleReport",
    "EXECUTE_QUBIT_CAP",
    "IterationPlan",
    "LoadSet",
    "QubitBudgetError",
    "QubitLayout",
    "RveSpec",
    "SolveReport",
    "SolverConfig",
    "StateVector",
    "StrainField",
    "bench_1d",
    "bench_2d",
    "build_layout",
    "fft_fixed_point",
    "grid",
    "homogenised_stress",
    "load_set",
    "mu_midpoint",
    "pick_steps",
    "relative_error",
    "solve",
    "solve_ensemble",
]
