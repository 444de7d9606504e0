"""Square-root-measurement (SRM) strategies for qubit teleportation.

The SRM built for a prior of inverse width η is used on inputs drawn with
inverse width β. Its fidelity F(β, η) has a closed form for N = M = 1, and
for β > 0 even its optimum over η stays below the probabilistic threshold.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize

from .benchmarks import EnsembleSpec, benchmark
from .const import DEFAULT_NODES
from .ensembles import (
    BlochAngles,
    FamilyType,
    PriorSpec,
    StateFamily,
    log_prior_density,
    sample_prior,
    state_vector,
)
from .errors import ContractViolation, ConvergenceError, ImproperPriorError
from .operators import build_rho_qudit, embed_batch
from .oracle import compact_grid
from .rng import SeededRNG
from .special_math import partitions

_LOGGER = logging.getLogger(__name__)

OPTIMIZER_XATOL = 1e-10
AGREEMENT_TOLERANCE = 1e-9
QUBIT = StateFamily.spin(0.5)


def srm_fidelity_qubit(beta: float, eta: float) -> float:
    """Teleportation fidelity of the η-SRM on inputs with prior width β (N = M = 1)."""
    if beta < 0 or eta < 0:
        raise ContractViolation(f"beta and eta must be >= 0, got ({beta}, {eta})")
    root = math.sqrt(eta + 1.0)
    return (
        (eta + 2.0) / (eta + 3.0) * (beta + 1.0) / (beta + 3.0)
        + (1.0 + root) ** 2 / (eta + 3.0) * (beta + 1.0) / ((beta + 2.0) * (beta + 3.0))
        + 4.0 / ((eta + 3.0) * (beta + 3.0) * (beta + 2.0))
    )


def _radicand(beta: float) -> float:
    return beta**4 + 8.0 * beta**3 + 22.0 * beta**2 + 8.0 * beta + 9.0


def srm_eta_opt(beta: float) -> float:
    """Closed-form maximizer: sqrt(η+1) solves (β+1)t² - ((β+1)(β+3) - 4)t - 2(β+1) = 0."""
    b2 = beta + 1.0
    linear = (beta + 1.0) * (beta + 3.0) - 4.0
    t = (linear + math.sqrt(_radicand(beta))) / (2.0 * b2)
    return t * t - 1.0


def srm_gap(beta: float) -> float:
    """(β+2)/(β+3) - max_η F(β, η), written without cancellation."""
    return 4.0 * beta / (
        (beta + 2.0) * (beta + 3.0) * ((beta + 1.0) * (beta + 3.0) + math.sqrt(_radicand(beta)))
    )


@dataclass(frozen=True)
class SrmResult:
    beta: float
    eta_opt: float
    fidelity_opt: float
    benchmark: float
    gap: float
    eta_numeric: float
    fidelity_numeric: float


def srm_optimize(beta: float) -> SrmResult:
    """Closed-form optimum of F(β, ·) cross-checked by a bounded 1-D maximization."""
    if beta < 0:
        raise ContractViolation(f"beta must be >= 0, got {beta}")
    eta_opt = srm_eta_opt(beta)
    threshold = (beta + 2.0) / (beta + 3.0)
    gap = srm_gap(beta)
    fidelity_opt = srm_fidelity_qubit(beta, eta_opt)

    # η_opt grows like (β+3)²
    upper = 2.0 * (beta + 3.0) ** 2 + 10.0 * beta + 100.0
    result = optimize.minimize_scalar(
        lambda eta: -srm_fidelity_qubit(beta, eta),
        bounds=(0.0, upper),
        method="bounded",
        options={"xatol": OPTIMIZER_XATOL * max(1.0, eta_opt), "maxiter": 2000},
    )
    if not result.success:
        raise ConvergenceError(f"SRM optimizer failed for beta={beta}: {result.message}")
    fidelity_numeric = -float(result.fun)
    if abs(fidelity_numeric - fidelity_opt) > AGREEMENT_TOLERANCE:
        raise ConvergenceError(
            f"Closed-form SRM optimum {fidelity_opt:.12g} disagrees with numerical {fidelity_numeric:.12g}"
        )
    _LOGGER.debug("SRM optimum beta=%s eta=%.10g F=%.12g gap=%.3g", beta, eta_opt, fidelity_opt, gap)
    return SrmResult(
        beta=beta,
        eta_opt=eta_opt,
        fidelity_opt=fidelity_opt,
        benchmark=threshold,
        gap=gap,
        eta_numeric=float(result.x),
        fidelity_numeric=fidelity_numeric,
    )


class UniformCheck(NamedTuple):
    srm: float
    classical: float
    gap: float


def srm_uniform_optimality(family: StateFamily, N: int, M: int) -> UniformCheck:
    """Deterministic SRM fidelity under the uniform prior vs the threshold at zero width.

    By invariance of the Haar measure the outcome can be fixed to the identity, and
    with x = |⟨φ|φ_g⟩|² the fidelity reduces to dim(Sym_N) ∫ x^a w(x) dx.
    """
    kind = family.kind
    if not kind.is_compact:
        raise ImproperPriorError(f"Uniform prior on {family} is improper; the SRM is undefined")
    if kind == FamilyType.QUDIT:
        d = family.d
        dimension = math.comb(N + d - 1, d - 1)
        power = N + M
        weight = lambda x: (d - 1) * (1.0 - x) ** (d - 2)  # noqa: E731
    else:
        dimension = 2.0 * family.j * N + 1.0
        power = 2.0 * family.j * N + 2.0 * family.k * M
        weight = lambda x: 1.0  # noqa: E731
    value, _ = integrate.quad(lambda x: x**power * weight(x), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    fidelity = dimension * value
    classical = benchmark(EnsembleSpec.create(family, N, M, beta=0.0)).fidelity_threshold
    return UniformCheck(fidelity, classical, fidelity - classical)


class SrmPovm:
    """Square-root measurement for N qubit copies drawn with prior width η.

    Outcome density p(ĝ|g) = p_η(ĝ) |⟨ψ_g|^{⊗N} ρ_η^{-1/2} |ψ_ĝ⟩^{⊗N}|², with respect
    to dθ̂ dφ̂.
    """

    def __init__(self, eta: float, N: int = 1, nodes: int = DEFAULT_NODES) -> None:
        if eta < 0 or N < 1:
            raise ContractViolation(f"SRM needs eta >= 0 and N >= 1, got ({eta}, {N})")
        self.eta = float(eta)
        self.N = int(N)
        self.nodes = nodes
        self.prior = PriorSpec(QUBIT, self.eta)
        self._labels = partitions(self.N, 2)
        rho = build_rho_qudit(self.N, 2, self.eta)
        self._rho_inv_sqrt = 1.0 / np.sqrt(np.real(rho.dense().diagonal()))

    def __repr__(self) -> str:
        return f"SrmPovm(eta={self.eta}, N={self.N})"

    def _embedded(self, g: BlochAngles) -> np.ndarray:
        return embed_batch(state_vector(QUBIT, g), self.N, self._labels)

    def _amplitudes(self, g: BlochAngles, g_hat: BlochAngles) -> np.ndarray:
        """|⟨ψ_g|ρ^{-1/2}|ψ_ĝ⟩|² for every (g, ĝ) pair, shape (len(g), len(ĝ))."""
        left = self._embedded(g).conj() * self._rho_inv_sqrt
        return np.abs(left @ self._embedded(g_hat).T) ** 2

    def density(self, g: BlochAngles, g_hat: BlochAngles) -> np.ndarray:
        weights = np.exp(np.atleast_1d(log_prior_density(self.prior, g_hat)))
        return self._amplitudes(g, g_hat) * weights

    def _outcome_grid(self, extra: int = 0) -> tuple[BlochAngles, np.ndarray]:
        return compact_grid(QUBIT, self.nodes, 2 * (self.N + extra) + 2)

    def total_mass(self, g: BlochAngles) -> np.ndarray:
        """∫ p(ĝ|g) dĝ for each g (POVM completeness)."""
        outcomes, weights = self._outcome_grid()
        return self.density(g, outcomes) @ weights

    def expected_fidelity(self, g: BlochAngles, M: int = 1) -> np.ndarray:
        """∫ p(ĝ|g) |⟨ψ_g|ψ_ĝ⟩|^{2M} dĝ for each g."""
        outcomes, weights = self._outcome_grid(M)
        overlaps = np.abs(state_vector(QUBIT, g).conj() @ state_vector(QUBIT, outcomes).T) ** 2
        return (self.density(g, outcomes) * overlaps**M) @ weights

    def sample(self, g: BlochAngles, rng: SeededRNG) -> BlochAngles:
        """Draw one outcome per input point by rejection from the η prior.

        The acceptance ratio is bounded by ⟨ψ_g|ρ^{-1}|ψ_g⟩ (Cauchy-Schwarz).
        """
        inputs = self._embedded(g)
        bound = np.real(np.sum(np.abs(inputs) ** 2 * self._rho_inv_sqrt**2, axis=1))
        count = len(bound)
        theta = np.empty(count)
        phi = np.empty(count)
        pending = np.arange(count)
        while pending.size:
            proposal = sample_prior(self.prior, rng, pending.size, bloch=True)
            left = inputs[pending].conj() * self._rho_inv_sqrt
            ratio = np.abs(np.sum(left * self._embedded(proposal), axis=1)) ** 2 / bound[pending]
            accepted = rng.random(pending.size) < ratio
            theta[pending[accepted]] = np.asarray(proposal.theta)[accepted]
            phi[pending[accepted]] = np.asarray(proposal.phi)[accepted]
            pending = pending[~accepted]
        return BlochAngles(theta, phi)


def srm_povm_qubit(eta: float, N: int = 1) -> SrmPovm:
    return SrmPovm(eta, N)


def srm_expected_fidelity(eta: float, g: BlochAngles, N: int = 1, M: int = 1) -> np.ndarray:
    return SrmPovm(eta, N).expected_fidelity(g, M)
