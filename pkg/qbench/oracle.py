"""Independent numerical evaluation of fidelity thresholds.

Compact angles use Gauss-Legendre nodes (Richardson error estimate across node
doublings), phases use the periodic trapezoid rule, and noncompact radial
coordinates are integrated adaptively after mapping [0, inf) onto [0, cutoff]
(the mapped integrand decays smoothly at the cutoff). Everything the integrand
needs comes from :mod:`qbench.ensembles`: prior densities and overlaps are
evaluated at the group points, never taken from the closed forms.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import voluptuous as vol
from scipy import integrate, special

from .benchmarks import BenchmarkValue, EnsembleSpec, Provenance
from .config_flow import QUADRATURE_SCHEMA
from .const import (
    DEFAULT_CUTOFF,
    DEFAULT_MAX_REFINEMENTS,
    DEFAULT_MC_SAMPLES,
    DEFAULT_NODES,
    DEFAULT_PHASE_NODES,
    DEFAULT_SEED,
    DEFAULT_TOLERANCE,
    DEFAULT_WORKERS,
    NONCONVERGENT_ERROR,
    SCHEME_GAUSS_LEGENDRE,
    SCHEME_MONTE_CARLO,
    SQUEEZE_MAP_RATIONAL,
    SQUEEZE_MAP_TANH,
)
from .ensembles import (
    TWO_PI,
    BlochAngles,
    DisplacedSqueezing,
    Displacement,
    FamilyType,
    GroupPoint,
    QuditAngles,
    Squeezing,
    log_cosh,
    log_overlap_sq,
    log_prior_density,
    log_target_overlap_sq,
    one_minus_tanh,
    sample_prior,
)
from .errors import ContractViolation, ConvergenceError, ImproperPriorError
from .rng import SeededRNG

_LOGGER = logging.getLogger(__name__)

# Beyond this squeezing every prior weight is below e^{-300}.
_S_CEILING = 300.0

# Gauss-Legendre nodes for Hurwitz angles past θ_0 on phase-free grids.
_SECONDARY_NODES = 24


@dataclass(frozen=True)
class QuadratureConfig:
    scheme: str = SCHEME_GAUSS_LEGENDRE
    nodes_per_dim: int = DEFAULT_NODES
    mc_samples: int = DEFAULT_MC_SAMPLES
    noncompact_cutoff: float = DEFAULT_CUTOFF
    phase_nodes: int = DEFAULT_PHASE_NODES
    max_refinements: int = DEFAULT_MAX_REFINEMENTS
    tolerance: float = DEFAULT_TOLERANCE
    seed: int = DEFAULT_SEED
    workers: int = DEFAULT_WORKERS
    squeeze_map: str = SQUEEZE_MAP_RATIONAL
    conjugate: bool = False

    def __post_init__(self) -> None:
        try:
            QUADRATURE_SCHEMA(dataclasses.asdict(self))
        except vol.Invalid as err:
            raise ContractViolation(f"Invalid quadrature config: {err}") from err

    @classmethod
    def from_dict(cls, data: dict) -> QuadratureConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        return cls(**{key: value for key, value in data.items() if key in known})


class FigureOfMerit(NamedTuple):
    fidelity: float
    success_probability: float | None
    error_estimate: float


class _Integral(NamedTuple):
    values: np.ndarray
    error: np.ndarray


# --- 1-D rules ---


def _gauss_legendre(n: int, low: float, high: float) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = special.roots_legendre(n)
    half = 0.5 * (high - low)
    return half * nodes + 0.5 * (high + low), half * weights


def _periodic(p: int) -> tuple[np.ndarray, np.ndarray]:
    return np.arange(p) * (TWO_PI / p), np.full(p, TWO_PI / p)


def _half_line(u: float, squeeze_map: str) -> tuple[float, float]:
    """Map u in [0, 1) to x in [0, inf); returns (x, dx/du)."""
    if squeeze_map == SQUEEZE_MAP_TANH:
        return math.atanh(u), 1.0 / (1.0 - u * u)
    return u / (1.0 - u), 1.0 / (1.0 - u) ** 2


def _mesh(*axes: tuple[np.ndarray, np.ndarray]) -> tuple[list[np.ndarray], np.ndarray]:
    nodes = np.meshgrid(*(a[0] for a in axes), indexing="ij")
    weights = np.meshgrid(*(a[1] for a in axes), indexing="ij")
    total = np.ones_like(weights[0])
    for w in weights:
        total = total * w
    return [x.ravel() for x in nodes], total.ravel()


# --- per-family grids ---


def _bloch_grid(n: int, p: int) -> tuple[GroupPoint, np.ndarray]:
    (theta, phi), weights = _mesh(_gauss_legendre(n, 0.0, math.pi), _periodic(p))
    return BlochAngles(theta, phi), weights


def _hurwitz_grid(d: int, n: int, p: int, secondary: int | None = None) -> tuple[GroupPoint, np.ndarray]:
    """Hurwitz angles with ``n`` nodes on θ_0 and ``secondary`` on the other θ axes."""
    secondary = n if secondary is None else secondary
    axes = [_gauss_legendre(n, 0.0, 0.5 * math.pi)]
    axes += [_gauss_legendre(secondary, 0.0, 0.5 * math.pi)] * (d - 2)
    axes += [_periodic(p)] * (d - 1)
    nodes, weights = _mesh(*axes)
    return QuditAngles(np.stack(nodes[: d - 1]), np.stack(nodes[d - 1 :])), weights


def _displacement_ring(u: float, p: int, squeeze_map: str) -> tuple[GroupPoint, np.ndarray]:
    # d²α = ½ d(r²) dφ
    v, jac = _half_line(u, squeeze_map)
    phi, w_phi = _periodic(p)
    return Displacement(math.sqrt(v) * np.exp(1j * phi)), 0.5 * jac * w_phi


def _squeezing_ring(u: float, p: int, squeeze_map: str) -> tuple[GroupPoint, np.ndarray]:
    s, jac = _half_line(u, squeeze_map)
    theta, w_theta = _periodic(p)
    return Squeezing(np.full(p, s), theta), jac * w_theta


def _displaced_squeezing_ring(
    u_s: float, u_v: float, p: int, squeeze_map: str
) -> tuple[GroupPoint, np.ndarray]:
    """Polar coordinates carried along by the squeezing S(s e^{iθ}).

    α = e^{iθ/2}(ρ cos ψ / sqrt(1 - tanh s) + i ρ sin ψ / sqrt(1 + tanh s)), so
    d²α = ½ cosh(s) d(ρ²) dψ.
    """
    s, jac_s = _half_line(u_s, squeeze_map)
    v, jac_v = _half_line(u_v, squeeze_map)
    (psi, theta), w_angles = _mesh(_periodic(p), _periodic(p))
    if s > _S_CEILING:
        return DisplacedSqueezing(np.zeros(p * p, dtype=complex), np.full(p * p, s), theta), np.zeros(p * p)
    rho = math.sqrt(v)
    lower = float(one_minus_tanh(s))
    upper = 2.0 - lower
    x = rho * np.cos(psi) / math.sqrt(lower)
    y = rho * np.sin(psi) / math.sqrt(upper)
    alpha = np.exp(0.5j * theta) * (x + 1j * y)
    jac_alpha = 0.5 * math.exp(float(log_cosh(s)))
    return DisplacedSqueezing(alpha, np.full(p * p, s), theta), jac_s * jac_v * jac_alpha * w_angles


def compact_grid(
    family, nodes: int, phase_nodes: int, phase_free: bool = False
) -> tuple[GroupPoint, np.ndarray]:
    """Product Gauss-Legendre x trapezoid grid over a compact family, with weights.

    ``phase_free`` is for integrands that do not depend on the phases: each
    phase axis collapses to one node of weight 2π and the secondary Hurwitz
    angles, which only carry the Haar factors, keep a fixed node count.
    """
    if phase_free:
        phase_nodes = 1
    if family.kind == FamilyType.SPIN:
        return _bloch_grid(nodes, phase_nodes)
    if family.kind == FamilyType.QUDIT:
        secondary = min(nodes, _SECONDARY_NODES) if phase_free else None
        return _hurwitz_grid(family.d, nodes, phase_nodes, secondary)
    raise ContractViolation(f"Family {family} is not compact")


# --- integration driver ---


def _integrate(
    spec: EnsembleSpec,
    cfg: QuadratureConfig,
    integrand: Callable[[GroupPoint], np.ndarray],
    nodes: int,
    phase_free: bool = False,
) -> _Integral:
    """Integrate the stacked integrand (K rows) over the family's group."""
    family = spec.family
    kind = family.kind
    p = cfg.phase_nodes
    cutoff = cfg.noncompact_cutoff

    def weighted(points: GroupPoint, weights: np.ndarray) -> np.ndarray:
        if cfg.conjugate:
            points = points.conjugate()
        values = np.asarray(integrand(points), dtype=float)
        return np.nan_to_num(values, nan=0.0, posinf=0.0) @ weights

    if kind.is_compact:
        values = weighted(*compact_grid(family, nodes, p, phase_free))
        return _Integral(values, np.zeros_like(values))

    quad_opts = {"epsabs": 0.0, "epsrel": 1e-12, "norm": "max", "limit": 2000}
    if kind == FamilyType.COHERENT:
        ring = lambda u: weighted(*_displacement_ring(u, p, cfg.squeeze_map))  # noqa: E731
        values, error = integrate.quad_vec(ring, 0.0, cutoff, **quad_opts)
        return _Integral(np.asarray(values), np.full(np.shape(values), error))
    if kind in (FamilyType.SQUEEZED_VACUUM, FamilyType.PERELOMOV):
        ring = lambda u: weighted(*_squeezing_ring(u, p, cfg.squeeze_map))  # noqa: E731
        values, error = integrate.quad_vec(ring, 0.0, cutoff, **quad_opts)
        return _Integral(np.asarray(values), np.full(np.shape(values), error))
    if kind == FamilyType.GAUSSIAN_1MODE:
        inner_opts = {**quad_opts, "epsrel": 1e-11}
        inner_errors: list[float] = []

        def slice_at(u_s: float) -> np.ndarray:
            ring = lambda u_v: weighted(  # noqa: E731
                *_displaced_squeezing_ring(u_s, u_v, p, cfg.squeeze_map)
            )
            values, error = integrate.quad_vec(ring, 0.0, cutoff, **inner_opts)
            inner_errors.append(error)
            return np.asarray(values)

        values, error = integrate.quad_vec(slice_at, 0.0, cutoff, **{**inner_opts, "epsrel": 1e-10})
        return _Integral(np.asarray(values), np.full(np.shape(values), error + max(inner_errors, default=0.0)))
    raise ContractViolation(f"No quadrature layout for family {family}")


def _richardson_error(previous: float | None, delta: float) -> float:
    """Error of the finest value from the last two doubling differences.

    The observed ratio r = |δ_k| / |δ_{k-1}| stands for 2^{-p} with unknown
    order p, which leaves |δ_k| r / (1 - r) as the remaining error.
    """
    if previous is None or previous == 0.0 or abs(delta) >= abs(previous):
        return abs(delta)
    ratio = abs(delta) / abs(previous)
    return abs(delta) * ratio / (1.0 - ratio)


def _refined(
    spec: EnsembleSpec,
    cfg: QuadratureConfig,
    integrand: Callable[[GroupPoint], np.ndarray],
    combine: Callable[[np.ndarray], float],
    phase_free: bool = False,
) -> tuple[float, float, int]:
    """Evaluate ``combine(integrals)`` with node doubling until the error estimate is within tolerance."""
    nodes = cfg.nodes_per_dim
    first = _integrate(spec, cfg, integrand, nodes, phase_free)
    if not spec.family.kind.is_compact:
        value = combine(first.values)
        # first-order propagation of the adaptive error through the ratio
        bumped = combine(first.values + first.error)
        return value, abs(bumped - value) + abs(combine(first.values - first.error) - value), nodes
    value = combine(first.values)
    error = math.inf
    previous = None
    for _ in range(max(1, cfg.max_refinements)):
        nodes *= 2
        finer = combine(_integrate(spec, cfg, integrand, nodes, phase_free).values)
        delta = finer - value
        error = _richardson_error(previous, delta)
        previous, value = delta, finer
        if error <= cfg.tolerance:
            break
    error = max(error, 4.0 * np.finfo(float).eps * abs(value))
    return value, error, nodes


def _cft_integrand(spec: EnsembleSpec, with_prior: bool = True) -> Callable[[GroupPoint], np.ndarray]:
    def integrand(g: GroupPoint) -> np.ndarray:
        log_p = log_prior_density(spec.prior, g) if with_prior else 0.0
        log_in = spec.N * log_overlap_sq(spec.family, g)
        log_out = spec.M * log_target_overlap_sq(spec.family, g)
        with np.errstate(invalid="ignore"):
            return np.stack([np.exp(log_p + log_in + log_out), np.exp(log_p + log_in)])

    return integrand


def _check_error(error: float, what: str) -> None:
    if not error <= NONCONVERGENT_ERROR:
        raise ConvergenceError(
            f"{what} did not converge: error estimate {error:.3g} exceeds {NONCONVERGENT_ERROR}",
            error,
        )


# --- Monte Carlo ---


def _mc_samples(spec: EnsembleSpec, cfg: QuadratureConfig) -> list[GroupPoint]:
    root = SeededRNG(cfg.seed)
    shares = np.full(cfg.workers, cfg.mc_samples // cfg.workers)
    shares[: cfg.mc_samples % cfg.workers] += 1
    batches = []
    for worker, share in enumerate(shares):
        if share == 0:
            continue
        points = sample_prior(spec.prior, root.fork(worker), int(share))
        batches.append(points.conjugate() if cfg.conjugate else points)
    return batches


def _ratio_with_stderr(numer: np.ndarray, denom: np.ndarray) -> tuple[float, float]:
    """Ratio of means and its delta-method standard error."""
    n = numer.size
    mean_a = float(np.mean(numer))
    mean_b = float(np.mean(denom))
    ratio = mean_a / mean_b
    cov = np.cov(np.stack([numer, denom]))
    variance = cov[0, 0] - 2.0 * ratio * cov[0, 1] + ratio**2 * cov[1, 1]
    return ratio, math.sqrt(max(variance, 0.0) / n) / mean_b


def _mc_columns(spec, cfg, fn) -> np.ndarray:
    return np.concatenate([np.asarray(fn(points), dtype=float) for points in _mc_samples(spec, cfg)], axis=-1)


# --- public API ---


def cft_numeric(spec: EnsembleSpec, cfg: QuadratureConfig | None = None) -> BenchmarkValue:
    """Ratio ∫p|⟨ψ|ψ_g⟩|^{2M}|⟨φ|φ_g⟩|^{2N} / ∫p|⟨φ|φ_g⟩|^{2N} with an error estimate."""
    cfg = cfg or QuadratureConfig()
    if spec.k_weights is not None:
        parts = [cft_numeric(spec.with_M(k), cfg) for k in range(1, spec.M + 1)]
        fidelity = sum(w * part.fidelity_threshold for w, part in zip(spec.k_weights, parts))
        error = sum(w * part.error_estimate for w, part in zip(spec.k_weights, parts))
        return dataclasses.replace(parts[0], fidelity_threshold=fidelity, error_estimate=error, formula_id="kcopy")
    integrand = _cft_integrand(spec)
    _LOGGER.debug("Numerical CFT for %s with %s", spec, cfg)
    if cfg.scheme == SCHEME_MONTE_CARLO:
        numer, denom = _mc_columns(spec, cfg, _cft_integrand(spec, with_prior=False))
        fidelity, error = _ratio_with_stderr(numer, denom)
        provenance = Provenance.MONTE_CARLO
        success = float(np.mean(denom))
    else:
        fidelity, error, _ = _refined(spec, cfg, integrand, lambda v: v[0] / v[1], phase_free=True)
        provenance = Provenance.QUADRATURE
        success = None
        if spec.prior.is_proper:
            success = _refined(spec, cfg, integrand, lambda v: v[1], phase_free=True)[0]
    _check_error(error, f"CFT integral for {spec}")
    _LOGGER.info("Numerical CFT for %s: %.12g +- %.2g", spec, fidelity, error)
    return BenchmarkValue(
        min(fidelity, 1.0), success, "probCFT", provenance=provenance, error_estimate=error
    )


def success_probability_numeric(
    spec: EnsembleSpec, cfg: QuadratureConfig | None = None
) -> tuple[float, float]:
    """∫ p(g)|⟨φ|φ_g⟩|^{2N} dg and its error estimate."""
    cfg = cfg or QuadratureConfig()
    if not spec.prior.is_proper:
        raise ImproperPriorError("improper uniform prior has no success probability")
    integrand = _cft_integrand(spec)
    if cfg.scheme == SCHEME_MONTE_CARLO:
        denom = _mc_columns(spec, cfg, _cft_integrand(spec, with_prior=False))[1]
        value, error = float(np.mean(denom)), float(np.std(denom, ddof=1) / math.sqrt(denom.size))
    else:
        value, error, _ = _refined(spec, cfg, integrand, lambda v: v[1], phase_free=True)
    _check_error(error, f"success probability for {spec}")
    return value, error


def figure_of_merit(
    acceptance_fn: Callable[[GroupPoint], np.ndarray],
    fidelity_fn: Callable[[GroupPoint], np.ndarray],
    spec: EnsembleSpec,
    cfg: QuadratureConfig | None = None,
    phase_free: bool = False,
) -> FigureOfMerit:
    """Conditional fidelity and success probability of a probabilistic strategy.

    F = ∫ p acc fid / ∫ p acc and p_yes = ∫ p acc. Set ``phase_free`` when both
    functions depend on the group point only through overlaps.
    """
    cfg = cfg or QuadratureConfig()

    def integrand(g: GroupPoint, with_prior: bool = True) -> np.ndarray:
        acc = np.broadcast_to(np.asarray(acceptance_fn(g), dtype=float), (len(g),))
        if np.any(acc < -1e-12) or np.any(acc > 1 + 1e-12):
            raise ContractViolation("Acceptance probability outside [0, 1]")
        fid = np.broadcast_to(np.asarray(fidelity_fn(g), dtype=float), (len(g),))
        weight = np.exp(log_prior_density(spec.prior, g)) if with_prior else np.ones(len(g))
        return np.stack([weight * acc * fid, weight * acc, weight])

    if cfg.scheme == SCHEME_MONTE_CARLO:
        columns = _mc_columns(spec, cfg, lambda g: integrand(g, with_prior=False))
        fidelity, error = _ratio_with_stderr(columns[0], columns[1])
        return FigureOfMerit(fidelity, float(np.mean(columns[1])), error)

    fidelity, error, _ = _refined(spec, cfg, integrand, lambda v: v[0] / v[1], phase_free)
    success = None
    if spec.prior.is_proper:
        success = _refined(spec, cfg, integrand, lambda v: v[1] / v[2], phase_free)[0]
    _check_error(error, f"figure of merit for {spec}")
    return FigureOfMerit(fidelity, success, error)


def deterministic_figure(
    fidelity_fn: Callable[[GroupPoint], np.ndarray],
    spec: EnsembleSpec,
    cfg: QuadratureConfig | None = None,
    phase_free: bool = False,
) -> float:
    """Average fidelity of a strategy that never declares failure."""
    return figure_of_merit(lambda g: np.ones(len(g)), fidelity_fn, spec, cfg, phase_free).fidelity
