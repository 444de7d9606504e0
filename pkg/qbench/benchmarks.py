"""Closed-form probabilistic classical fidelity thresholds (CFTs).

Each ``cft_*`` function returns a :class:`BenchmarkValue` holding the threshold,
the success probability of the optimal measure-and-prepare protocol and the
identifier of the formula used.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .errors import ContractViolation, ImproperPriorError, UnsupportedEnsembleError
from .ensembles import FamilyType, PriorSpec, StateFamily
from .special_math import log_binom_real

_LOGGER = logging.getLogger(__name__)

NOT_PROVEN_NOTE = "numerically verified, not proven"
UNDEFINED = "undefined (uniform noncompact prior)"


class Provenance(Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class EnsembleSpec:
    """A benchmark query: family, copy numbers and prior."""

    family: StateFamily
    N: int
    M: int
    prior: PriorSpec
    k_weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        for name, value in (("N", self.N), ("M", self.M)):
            if int(value) != value or value < 1:
                raise ContractViolation(f"{name} must be a positive integer, got {value!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "M", int(self.M))
        if self.prior.family != self.family:
            raise ContractViolation("Prior family does not match ensemble family")
        if self.k_weights is not None:
            weights = tuple(float(w) for w in self.k_weights)
            if len(weights) != self.M:
                raise ContractViolation(
                    f"k_weights must give one probability per k in 1..{self.M}, got {len(weights)}"
                )
            if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
                raise ContractViolation(f"k_weights must be a probability vector, got {weights}")
            object.__setattr__(self, "k_weights", weights)

    @classmethod
    def create(
        cls,
        family: StateFamily,
        N: int,
        M: int,
        beta: float = 0.0,
        lam: float = 0.0,
        k_weights: Sequence[float] | None = None,
    ) -> EnsembleSpec:
        return cls(
            family,
            N,
            M,
            PriorSpec(family, float(beta), float(lam)),
            tuple(k_weights) if k_weights is not None else None,
        )

    @property
    def beta(self) -> float:
        return self.prior.beta

    @property
    def lam(self) -> float:
        return self.prior.lam

    def with_M(self, M: int) -> EnsembleSpec:
        return dataclasses.replace(self, M=M, k_weights=None)

    def __str__(self) -> str:
        return f"{self.family} N={self.N} M={self.M} beta={self.beta} lambda={self.lam}"


@dataclass(frozen=True)
class BenchmarkValue:
    fidelity_threshold: float
    success_probability: float | None
    formula_id: str
    provenance: Provenance = Provenance.CLOSED_FORM
    error_estimate: float = 0.0
    notes: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not 0 < self.fidelity_threshold <= 1 + 1e-12:
            raise ContractViolation(
                f"Fidelity threshold {self.fidelity_threshold} outside (0, 1]"
            )

    @property
    def success_defined(self) -> bool:
        return self.success_probability is not None

    def as_dict(self) -> dict:
        return {
            "fidelity_threshold": self.fidelity_threshold,
            "success_probability": (
                self.success_probability if self.success_probability is not None else UNDEFINED
            ),
            "formula_id": self.formula_id,
            "provenance": self.provenance.value,
            "error_estimate": self.error_estimate,
            "notes": list(self.notes),
        }


def _binomial_ratio(top_upper: float, bottom_upper: float, lower: int) -> float:
    """C(top_upper, lower) / C(bottom_upper, lower), exact for integer arguments."""
    if float(top_upper).is_integer() and float(bottom_upper).is_integer():
        return float(
            Fraction(math.comb(int(top_upper), lower), math.comb(int(bottom_upper), lower))
        )
    return math.exp(log_binom_real(top_upper, lower) - log_binom_real(bottom_upper, lower))


def _check_copies(N: int, M: int) -> None:
    if N < 1 or M < 1:
        raise ContractViolation(f"Copy numbers must be >= 1, got N={N}, M={M}")


def cft_qudit(d: int, N: int, M: int, beta: float) -> BenchmarkValue:
    """C(N+β+d-1, d-1) / C(M+N+β+d-1, d-1)."""
    _check_copies(N, M)
    if d < 2:
        raise ContractViolation(f"Qudit dimension must be >= 2, got {d}")
    fidelity = _binomial_ratio(N + beta + d - 1, M + N + beta + d - 1, d - 1)
    success = _binomial_ratio(beta + d - 1, N + beta + d - 1, d - 1)
    return BenchmarkValue(fidelity, success, "eq:benchmarkqudit")


def cft_spin(j: float, k: float, N: int, M: int, beta: float) -> BenchmarkValue:
    """(2jN+β+1) / (2jN+2kM+β+1)."""
    _check_copies(N, M)
    for name, value in (("j", j), ("k", k)):
        if not value > 0 or not float(2 * value).is_integer():
            raise ContractViolation(f"Spin index {name} must be a positive half-integer, got {value!r}")
    fidelity = (2 * j * N + beta + 1) / (2 * j * N + 2 * k * M + beta + 1)
    success = (beta + 1) / (2 * j * N + beta + 1)
    return BenchmarkValue(fidelity, success, "eq:benchmarkspin")


def cft_coherent(N: int, M: int, g: complex, lam: float) -> BenchmarkValue:
    """(N+λ) / (M|g|²+N+λ)."""
    _check_copies(N, M)
    gain_sq = abs(g) ** 2
    fidelity = (N + lam) / (M * gain_sq + N + lam)
    success = lam / (N + lam) if lam > 0 else None
    return BenchmarkValue(fidelity, success, "benchcoh")


def _perelomov_formula_id(j: float, k: float) -> str:
    if j == k == 0.5:
        return "benchSMSV"
    if j == k == 1.5:
        return "SSPS"
    return "eq:benchmarkperelomov"


def cft_perelomov(j: float, k: float, N: int, M: int, beta: float) -> BenchmarkValue:
    """(2jN+β) / (2kM+2jN+β)."""
    _check_copies(N, M)
    if not j > 0 or not k > 0:
        raise ContractViolation(f"Perelomov indices must be positive, got j={j}, k={k}")
    fidelity = (2 * j * N + beta) / (2 * k * M + 2 * j * N + beta)
    success = beta / (2 * j * N + beta) if beta > 0 else None
    return BenchmarkValue(fidelity, success, _perelomov_formula_id(j, k))


def cft_two_mode_squeezed_number(m: int, N: int, M: int, beta: float) -> BenchmarkValue:
    """Two-mode squeezed number states |m⟩-seeded: Perelomov with j = k = m + 1."""
    if m < 0 or int(m) != m:
        raise ContractViolation(f"Seed photon number must be a non-negative integer, got {m!r}")
    value = cft_perelomov(m + 1, m + 1, N, M, beta)
    return dataclasses.replace(value, formula_id="eq:benchmarkperelomov")


def cft_gaussian_1mode(N: int, M: int, lam: float, beta: float) -> BenchmarkValue:
    """(N+λ)(N+β) / ((N+M+λ)(N+M+β)), as the product of its two factors."""
    coherent = cft_coherent(N, M, 1.0, lam)
    squeezed = cft_perelomov(0.5, 0.5, N, M, beta)
    fidelity = coherent.fidelity_threshold * squeezed.fidelity_threshold
    if coherent.success_defined and squeezed.success_defined:
        success = coherent.success_probability * squeezed.success_probability
    else:
        success = None
    notes = ()
    if not (float(lam).is_integer() and float(beta).is_integer()):
        notes = (NOT_PROVEN_NOTE,)
    return BenchmarkValue(fidelity, success, "bench1mg", notes=notes)


# --- dispatch over ensemble specs ---


def _spin_indices(spec: EnsembleSpec) -> tuple[float, float]:
    family = spec.family
    j = family.j if family.j is not None else 0.5
    k = family.k if family.k is not None else j
    return j, k


def _eval_qudit(spec: EnsembleSpec) -> BenchmarkValue:
    return cft_qudit(spec.family.d or 2, spec.N, spec.M, spec.beta)


def _eval_qubit(spec: EnsembleSpec) -> BenchmarkValue:
    return dataclasses.replace(cft_qudit(2, spec.N, spec.M, spec.beta), formula_id="eq:benchmarkqubit")


def _eval_spin(spec: EnsembleSpec) -> BenchmarkValue:
    j, k = _spin_indices(spec)
    return cft_spin(j, k, spec.N, spec.M, spec.beta)


def _eval_coherent(spec: EnsembleSpec) -> BenchmarkValue:
    return cft_coherent(spec.N, spec.M, spec.family.gain, spec.lam)


def _eval_perelomov(spec: EnsembleSpec) -> BenchmarkValue:
    j, k = _spin_indices(spec)
    return cft_perelomov(j, k, spec.N, spec.M, spec.beta)


def _eval_squeezed_vacuum(spec: EnsembleSpec) -> BenchmarkValue:
    return cft_perelomov(0.5, 0.5, spec.N, spec.M, spec.beta)


def _eval_single_photon(spec: EnsembleSpec) -> BenchmarkValue:
    return cft_perelomov(1.5, 1.5, spec.N, spec.M, spec.beta)


def _eval_gaussian(spec: EnsembleSpec) -> BenchmarkValue:
    return cft_gaussian_1mode(spec.N, spec.M, spec.lam, spec.beta)


FORMULAS: dict[str, Callable[[EnsembleSpec], BenchmarkValue]] = {
    "eq:benchmarkqudit": _eval_qudit,
    "eq:benchmarkqubit": _eval_qubit,
    "eq:benchmarkspin": _eval_spin,
    "benchcoh": _eval_coherent,
    "eq:benchmarkperelomov": _eval_perelomov,
    "benchSMSV": _eval_squeezed_vacuum,
    "SSPS": _eval_single_photon,
    "bench1mg": _eval_gaussian,
}

DEFAULT_FORMULA = {
    FamilyType.QUDIT: "eq:benchmarkqudit",
    FamilyType.SPIN: "eq:benchmarkspin",
    FamilyType.COHERENT: "benchcoh",
    FamilyType.SQUEEZED_VACUUM: "benchSMSV",
    FamilyType.PERELOMOV: "eq:benchmarkperelomov",
    FamilyType.GAUSSIAN_1MODE: "bench1mg",
}


def _single(spec: EnsembleSpec, formula_id: str | None) -> BenchmarkValue:
    formula_id = formula_id or DEFAULT_FORMULA[spec.family.kind]
    try:
        evaluator = FORMULAS[formula_id]
    except KeyError as err:
        raise UnsupportedEnsembleError(f"Unknown formula id: {formula_id}") from err
    return evaluator(spec)


def cft_kcopy(spec: EnsembleSpec, formula_id: str | None = None) -> BenchmarkValue:
    """Σ_k p(k) F_c(M=k) for a test on k randomly chosen output copies."""
    if spec.k_weights is None:
        raise ContractViolation("k-copy benchmark requires k_weights")
    fidelity = 0.0
    success = None
    for k, weight in enumerate(spec.k_weights, start=1):
        value = _single(spec.with_M(k), formula_id)
        fidelity += weight * value.fidelity_threshold
        success = value.success_probability
    return BenchmarkValue(fidelity, success, "kcopy")


def benchmark(spec: EnsembleSpec, formula_id: str | None = None) -> BenchmarkValue:
    """Closed-form benchmark for any catalog spec (k-copy when weights are present)."""
    _LOGGER.debug("Closed-form benchmark for %s (formula %s)", spec, formula_id)
    if spec.k_weights is not None:
        return cft_kcopy(spec, formula_id)
    return _single(spec, formula_id)


def success_probability(spec: EnsembleSpec) -> float:
    """∫ p(g) |⟨φ|φ_g⟩|^{2N} dg for proper priors."""
    if not spec.prior.is_proper:
        raise ImproperPriorError("improper uniform prior has no success probability")
    return _single(spec.with_M(1), None).success_probability
