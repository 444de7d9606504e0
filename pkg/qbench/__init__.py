"""Classical fidelity thresholds (quantum benchmarks) for measure-and-prepare strategies."""

from .benchmarks import BenchmarkValue, EnsembleSpec, benchmark
from .ensembles import FamilyType, PriorSpec, StateFamily
from .hub import Hub

__all__ = [
    "BenchmarkValue",
    "EnsembleSpec",
    "FamilyType",
    "Hub",
    "PriorSpec",
    "StateFamily",
    "benchmark",
]
