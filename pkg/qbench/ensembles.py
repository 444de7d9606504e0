"""State families, group-point parametrizations, priors and exact samplers.

Prior densities are expressed with respect to plain Lebesgue measure on the
coordinates of each GroupPoint variant (dθ dφ, d²α, ds dθ, ...), so the weight
of the invariant measure is already folded in and product quadrature applies.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import special

from .errors import ContractViolation, DomainError, ImproperPriorError
from .rng import SeededRNG
from .special_math import log_bessel_i0, log_binom_real

_LOGGER = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class FamilyType(Enum):
    """Catalog state family, keyed by its wire name."""

    QUDIT = "qudit"
    SPIN = "spin"
    COHERENT = "coherent"
    SQUEEZED_VACUUM = "squeezed-vacuum"
    GAUSSIAN_1MODE = "gaussian-1mode"
    PERELOMOV = "perelomov"

    @property
    def needs_dimension(self) -> bool:
        return self == FamilyType.QUDIT

    @property
    def needs_spin_indices(self) -> bool:
        return self in (FamilyType.SPIN, FamilyType.PERELOMOV)

    @property
    def needs_gain(self) -> bool:
        return self == FamilyType.COHERENT

    @property
    def uses_beta(self) -> bool:
        return self != FamilyType.COHERENT

    @property
    def uses_lambda(self) -> bool:
        return self in (FamilyType.COHERENT, FamilyType.GAUSSIAN_1MODE)

    @property
    def is_compact(self) -> bool:
        return self in (FamilyType.QUDIT, FamilyType.SPIN)

    @property
    def has_operator_model(self) -> bool:
        return self in (
            FamilyType.QUDIT,
            FamilyType.SPIN,
            FamilyType.SQUEEZED_VACUUM,
            FamilyType.PERELOMOV,
        )


@dataclass(frozen=True)
class StateFamily:
    """Input family plus the index/gain of the target family it is mapped to.

    ``j`` is the input index and ``k`` the target index (spin stretching,
    Perelomov j -> k maps); ``gain`` is the coherent amplification factor.
    """

    kind: FamilyType
    d: int | None = None
    j: float | None = None
    k: float | None = None
    gain: complex = 1.0

    def __post_init__(self) -> None:
        kind = self.kind
        if kind == FamilyType.QUDIT:
            if self.d is None or int(self.d) != self.d or self.d < 2:
                raise ContractViolation(f"Qudit family needs integer d >= 2, got {self.d!r}")
            object.__setattr__(self, "d", int(self.d))
        elif kind == FamilyType.SQUEEZED_VACUUM:
            object.__setattr__(self, "j", 0.5)
            object.__setattr__(self, "k", 0.5)
        elif kind in (FamilyType.SPIN, FamilyType.PERELOMOV):
            if self.j is None or not self.j > 0:
                raise ContractViolation(f"{kind.value} family needs j > 0, got {self.j!r}")
            if self.k is None:
                object.__setattr__(self, "k", self.j)
            if not self.k > 0:
                raise ContractViolation(f"{kind.value} family needs k > 0, got {self.k!r}")
            if kind == FamilyType.SPIN:
                for name, value in (("j", self.j), ("k", self.k)):
                    if not float(2 * value).is_integer():
                        raise ContractViolation(
                            f"Spin index {name} must be a positive half-integer, got {value!r}"
                        )
        elif kind == FamilyType.COHERENT:
            if not abs(self.gain) > 0:
                raise ContractViolation(f"Coherent family needs |gain| > 0, got {self.gain!r}")

    @classmethod
    def qudit(cls, d: int) -> StateFamily:
        return cls(FamilyType.QUDIT, d=d)

    @classmethod
    def spin(cls, j: float, k: float | None = None) -> StateFamily:
        return cls(FamilyType.SPIN, j=j, k=k)

    @classmethod
    def coherent(cls, gain: complex = 1.0) -> StateFamily:
        return cls(FamilyType.COHERENT, gain=gain)

    @classmethod
    def squeezed_vacuum(cls) -> StateFamily:
        return cls(FamilyType.SQUEEZED_VACUUM)

    @classmethod
    def gaussian_1mode(cls) -> StateFamily:
        return cls(FamilyType.GAUSSIAN_1MODE)

    @classmethod
    def perelomov(cls, j: float, k: float | None = None) -> StateFamily:
        return cls(FamilyType.PERELOMOV, j=j, k=k)

    @property
    def gain_sq(self) -> float:
        return float(abs(self.gain) ** 2)

    def __str__(self) -> str:
        if self.kind == FamilyType.QUDIT:
            return f"qudit(d={self.d})"
        if self.kind in (FamilyType.SPIN, FamilyType.PERELOMOV):
            return f"{self.kind.value}(j={self.j}, k={self.k})"
        if self.kind == FamilyType.COHERENT:
            return f"coherent(gain={self.gain})"
        return self.kind.value


@dataclass(frozen=True)
class PriorSpec:
    """Prior over the group: inverse widths beta and lambda (0 means flat)."""

    family: StateFamily
    beta: float = 0.0
    lam: float = 0.0

    def __post_init__(self) -> None:
        for name, value in (("beta", self.beta), ("lambda", self.lam)):
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"Prior width {name} must be finite and >= 0, got {value!r}")

    @property
    def is_proper(self) -> bool:
        """True when the prior is normalizable (and therefore samplable)."""
        kind = self.family.kind
        if kind.is_compact:
            return True
        if kind == FamilyType.COHERENT:
            return self.lam > 0
        if kind == FamilyType.GAUSSIAN_1MODE:
            return self.lam > 0 and self.beta > 0
        return self.beta > 0


# --- group points ---


class GroupPoint:
    """Batched group-point base: every field is a scalar or an array over points."""

    def take(self, mask) -> GroupPoint:
        """Select a subset of a batch by boolean mask or index array."""
        values = {
            f.name: np.asarray(getattr(self, f.name))[..., mask] for f in dataclasses.fields(self)
        }
        return dataclasses.replace(self, **values)

    def __len__(self) -> int:
        first = np.asarray(getattr(self, dataclasses.fields(self)[0].name))
        return 1 if first.ndim == 0 else first.shape[-1]


@dataclass(frozen=True)
class BlochAngles(GroupPoint):
    theta: np.ndarray | float
    phi: np.ndarray | float

    def conjugate(self) -> BlochAngles:
        return BlochAngles(self.theta, np.mod(-np.asarray(self.phi), TWO_PI))


@dataclass(frozen=True)
class QuditAngles(GroupPoint):
    """Hurwitz angles; ``thetas``/``phis`` have shape (d-1,) or (d-1, n)."""

    thetas: np.ndarray
    phis: np.ndarray

    @property
    def d(self) -> int:
        return np.asarray(self.thetas).shape[0] + 1

    def conjugate(self) -> QuditAngles:
        return QuditAngles(self.thetas, np.mod(-np.asarray(self.phis), TWO_PI))


@dataclass(frozen=True)
class Displacement(GroupPoint):
    alpha: np.ndarray | complex

    def conjugate(self) -> Displacement:
        return Displacement(np.conj(self.alpha))


@dataclass(frozen=True)
class Squeezing(GroupPoint):
    s: np.ndarray | float
    theta: np.ndarray | float = 0.0

    def conjugate(self) -> Squeezing:
        return Squeezing(self.s, np.mod(-np.asarray(self.theta), TWO_PI))

    def __len__(self) -> int:
        return 1 if np.ndim(self.s) == 0 else np.shape(self.s)[-1]


@dataclass(frozen=True)
class DisplacedSqueezing(GroupPoint):
    alpha: np.ndarray | complex
    s: np.ndarray | float
    theta: np.ndarray | float = 0.0

    def conjugate(self) -> DisplacedSqueezing:
        return DisplacedSqueezing(
            np.conj(self.alpha), self.s, np.mod(-np.asarray(self.theta), TWO_PI)
        )


def fiducial_point(family: StateFamily) -> GroupPoint:
    """Group identity in the family's parametrization."""
    kind = family.kind
    if kind == FamilyType.QUDIT:
        return QuditAngles(np.zeros(family.d - 1), np.zeros(family.d - 1))
    if kind == FamilyType.SPIN:
        return BlochAngles(0.0, 0.0)
    if kind == FamilyType.COHERENT:
        return Displacement(0j)
    if kind == FamilyType.GAUSSIAN_1MODE:
        return DisplacedSqueezing(0j, 0.0, 0.0)
    return Squeezing(0.0, 0.0)


# --- stable hyperbolic helpers ---


def log_cosh(s):
    s = np.abs(np.asarray(s, dtype=float))
    return s + np.log1p(np.exp(-2.0 * s)) - math.log(2.0)


def log_sinh(s):
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        return s + np.log(-np.expm1(-2.0 * s)) - math.log(2.0)


def one_minus_tanh(s):
    """1 - tanh(s) without cancellation."""
    return 2.0 * special.expit(-2.0 * np.asarray(s, dtype=float))


def _gaussian_quadratic_form(g: DisplacedSqueezing):
    """|α|² - tanh(s) Re(e^{-iθ} α²), evaluated without cancellation."""
    alpha = np.asarray(g.alpha, dtype=complex)
    s = np.asarray(g.s, dtype=float)
    rotated = np.exp(-0.5j * np.asarray(g.theta, dtype=float)) * alpha
    return one_minus_tanh(s) * np.abs(alpha) ** 2 + 2.0 * np.tanh(s) * rotated.imag**2


def _as_output(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


# --- overlaps ---


def _variant_mismatch(family: StateFamily, g: GroupPoint) -> ContractViolation:
    return ContractViolation(
        f"Group point {type(g).__name__} does not match family {family}"
    )


def _log_overlap(family: StateFamily, g: GroupPoint, index: float | None, gain_sq: float):
    kind = family.kind
    if kind == FamilyType.QUDIT:
        if isinstance(g, QuditAngles):
            if g.d != family.d:
                raise _variant_mismatch(family, g)
            with np.errstate(divide="ignore"):
                return 2.0 * np.log(np.abs(np.cos(np.asarray(g.thetas)[0])))
        if isinstance(g, BlochAngles) and family.d == 2:
            with np.errstate(divide="ignore"):
                return 2.0 * np.log(np.abs(np.cos(0.5 * np.asarray(g.theta, dtype=float))))
        raise _variant_mismatch(family, g)
    if kind == FamilyType.SPIN:
        if not isinstance(g, BlochAngles):
            raise _variant_mismatch(family, g)
        with np.errstate(divide="ignore"):
            return 4.0 * index * np.log(np.abs(np.cos(0.5 * np.asarray(g.theta, dtype=float))))
    if kind == FamilyType.COHERENT:
        if not isinstance(g, Displacement):
            raise _variant_mismatch(family, g)
        return -gain_sq * np.abs(np.asarray(g.alpha)) ** 2
    if kind in (FamilyType.SQUEEZED_VACUUM, FamilyType.PERELOMOV):
        if not isinstance(g, Squeezing):
            raise _variant_mismatch(family, g)
        return -2.0 * index * log_cosh(g.s)
    if kind == FamilyType.GAUSSIAN_1MODE:
        if not isinstance(g, DisplacedSqueezing):
            raise _variant_mismatch(family, g)
        return -_gaussian_quadratic_form(g) - log_cosh(g.s)
    raise ContractViolation(f"Unsupported family: {family}")


def log_overlap_sq(family: StateFamily, g: GroupPoint):
    """ln |⟨φ|φ_g⟩|² for one input copy."""
    return _log_overlap(family, g, family.j, 1.0)


def log_target_overlap_sq(family: StateFamily, g: GroupPoint):
    """ln |⟨ψ|ψ_g⟩|² for one copy of the target family."""
    return _log_overlap(family, g, family.k, family.gain_sq)


def overlap_sq(family: StateFamily, g: GroupPoint):
    """|⟨φ|φ_g⟩|² of one input copy against the fiducial state."""
    return _as_output(np.exp(log_overlap_sq(family, g)))


def target_overlap_sq(family: StateFamily, g: GroupPoint):
    """|⟨ψ|ψ_g⟩|² of one target copy (index k, gain g applied)."""
    return _as_output(np.exp(log_target_overlap_sq(family, g)))


# --- priors ---


def _width_factor(width: float) -> float:
    # Flat limit keeps the unnormalized invariant weight.
    return width if width > 0 else 1.0


def _log_bloch_density(beta: float, g: BlochAngles):
    half = 0.5 * np.asarray(g.theta, dtype=float)
    with np.errstate(divide="ignore"):
        return (
            math.log(beta + 1.0)
            + (2.0 * beta + 1.0) * np.log(np.abs(np.cos(half)))
            + np.log(np.abs(np.sin(half)))
            - math.log(TWO_PI)
            + 0.0 * np.asarray(g.phi, dtype=float)
        )


def _log_hurwitz_density(beta: float, d: int, g: QuditAngles):
    thetas = np.asarray(g.thetas, dtype=float)
    log_haar = math.lgamma(d) - (d - 1) * math.log(math.pi)
    with np.errstate(divide="ignore"):
        total = log_binom_real(beta + d - 1, d - 1) + log_haar
        total = total + 2.0 * beta * np.log(np.abs(np.cos(thetas[0])))
        for idx in range(d - 1):
            total = total + np.log(np.abs(np.cos(thetas[idx])))
            total = total + (2 * (d - idx - 1) - 1) * np.log(np.abs(np.sin(thetas[idx])))
    return total + 0.0 * np.asarray(g.phis, dtype=float)[0]


def _log_squeezing_density(beta: float, g):
    s = np.asarray(g.s, dtype=float)
    return (
        math.log(_width_factor(beta))
        + log_sinh(s)
        - (beta + 1.0) * log_cosh(s)
        - math.log(TWO_PI)
        + 0.0 * np.asarray(g.theta, dtype=float)
    )


def log_prior_density(spec: PriorSpec, g: GroupPoint):
    """ln of :func:`prior_density`; -inf where the density vanishes."""
    family = spec.family
    kind = family.kind
    if kind == FamilyType.QUDIT:
        if isinstance(g, QuditAngles) and g.d == family.d:
            return _log_hurwitz_density(spec.beta, family.d, g)
        if isinstance(g, BlochAngles) and family.d == 2:
            return _log_bloch_density(spec.beta, g)
        raise _variant_mismatch(family, g)
    if kind == FamilyType.SPIN:
        if not isinstance(g, BlochAngles):
            raise _variant_mismatch(family, g)
        return _log_bloch_density(spec.beta, g)
    if kind == FamilyType.COHERENT:
        if not isinstance(g, Displacement):
            raise _variant_mismatch(family, g)
        return math.log(_width_factor(spec.lam) / math.pi) - spec.lam * np.abs(np.asarray(g.alpha)) ** 2
    if kind in (FamilyType.SQUEEZED_VACUUM, FamilyType.PERELOMOV):
        if not isinstance(g, Squeezing):
            raise _variant_mismatch(family, g)
        return _log_squeezing_density(spec.beta, g)
    if kind == FamilyType.GAUSSIAN_1MODE:
        if not isinstance(g, DisplacedSqueezing):
            raise _variant_mismatch(family, g)
        s = np.asarray(g.s, dtype=float)
        return (
            math.log(_width_factor(spec.lam) * _width_factor(spec.beta) / (2.0 * math.pi**2))
            - spec.lam * _gaussian_quadratic_form(g)
            + log_sinh(s)
            - (spec.beta + 2.0) * log_cosh(s)
        )
    raise ContractViolation(f"Unsupported family: {family}")


def prior_density(spec: PriorSpec, g: GroupPoint):
    """Prior density w.r.t. Lebesgue measure on the point's coordinates.

    For a flat prior on a noncompact family the width factor is dropped and the
    result is the (non-normalizable) limit weight, usable in density ratios.
    """
    return _as_output(np.exp(log_prior_density(spec, g)))


def qubit_z_marginal(z, beta: float):
    """Density of z = cos θ under the qubit prior."""
    z = np.asarray(z, dtype=float)
    return _as_output(2.0 ** (-(beta + 1.0)) * (beta + 1.0) * (z + 1.0) ** beta)


def qubit_z_cdf(z, beta: float):
    return _as_output(((np.asarray(z, dtype=float) + 1.0) / 2.0) ** (beta + 1.0))


def squeezing_s_cdf(s, beta: float):
    return _as_output(-np.expm1(-beta * log_cosh(s)))


def gaussian_marginal_density(alpha_abs, s, lam: float, beta: float):
    """(α, s) density of the Gaussian-state prior after integrating the phase θ.

    π⁻¹ λβ e^{-λ|α|²} sinh s cosh^{-β-2} s I0(λ|α|² tanh s), w.r.t. d²α ds.
    """
    r_sq = np.asarray(alpha_abs, dtype=float) ** 2
    s = np.asarray(s, dtype=float)
    arg = lam * r_sq * np.tanh(s)
    log_value = (
        math.log(lam * beta / math.pi)
        - lam * r_sq
        + log_sinh(s)
        - (beta + 2.0) * log_cosh(s)
        + log_bessel_i0(arg)
    )
    return _as_output(np.exp(log_value))


# --- state vectors ---


def state_vector(family: StateFamily, g: GroupPoint, conjugate: bool = False) -> np.ndarray:
    """Single-system state vectors for finite-dimensional families, shape (n, d)."""
    if isinstance(g, BlochAngles) and family.kind in (FamilyType.SPIN, FamilyType.QUDIT):
        half = 0.5 * np.atleast_1d(np.asarray(g.theta, dtype=float))
        phi = np.atleast_1d(np.asarray(g.phi, dtype=float))
        vec = np.stack([np.cos(half) + 0j, np.exp(1j * phi) * np.sin(half)], axis=-1)
    elif isinstance(g, QuditAngles) and family.kind == FamilyType.QUDIT:
        thetas = np.asarray(g.thetas, dtype=float).reshape(family.d - 1, -1)
        phis = np.asarray(g.phis, dtype=float).reshape(family.d - 1, -1)
        count = thetas.shape[1]
        vec = np.empty((count, family.d), dtype=complex)
        running = np.ones(count)
        for idx in range(family.d - 1):
            vec[:, idx] = np.exp(1j * phis[idx]) * np.cos(thetas[idx]) * running
            running = running * np.sin(thetas[idx])
        vec[:, family.d - 1] = running
    else:
        raise _variant_mismatch(family, g)
    return np.conj(vec) if conjugate else vec


# --- samplers ---


def _as_rng(rng_seed) -> SeededRNG:
    return rng_seed if isinstance(rng_seed, SeededRNG) else SeededRNG(int(rng_seed))


def _sample_squeezing(beta: float, rng: SeededRNG, n: int):
    u = rng.random(n)
    log_cosh_s = -np.log1p(-u) / beta
    s = log_cosh_s + np.log1p(np.sqrt(-np.expm1(-2.0 * log_cosh_s)))
    theta = rng.uniform(0.0, TWO_PI, n)
    return s, theta


def sample_prior(spec: PriorSpec, rng_seed, n: int, bloch: bool = False) -> GroupPoint:
    """Draw ``n`` exact i.i.d. samples from the prior as one batched GroupPoint.

    ``rng_seed`` is an integer seed or a :class:`SeededRNG` stream. Qudit priors
    are sampled in Hurwitz angles unless ``bloch`` is set (d = 2 only).
    """
    if n < 1:
        raise ContractViolation(f"Sample count must be >= 1, got {n}")
    if not spec.is_proper:
        raise ImproperPriorError("improper uniform prior is not samplable")
    rng = _as_rng(rng_seed)
    family = spec.family
    kind = family.kind
    _LOGGER.debug("Sampling %d points from %s prior beta=%s lambda=%s", n, family, spec.beta, spec.lam)

    if kind == FamilyType.SPIN or (kind == FamilyType.QUDIT and bloch and family.d == 2):
        x = rng.random(n) ** (1.0 / (spec.beta + 1.0))
        theta = 2.0 * np.arccos(np.sqrt(x))
        return BlochAngles(theta, rng.uniform(0.0, TWO_PI, n))
    if kind == FamilyType.QUDIT:
        d = family.d
        thetas = np.empty((d - 1, n))
        thetas[0] = np.arccos(np.sqrt(rng.beta(spec.beta + 1.0, d - 1, n)))
        for idx in range(1, d - 1):
            thetas[idx] = np.arccos(np.sqrt(rng.beta(1.0, d - idx - 1, n)))
        return QuditAngles(thetas, rng.uniform(0.0, TWO_PI, (d - 1, n)))
    if kind == FamilyType.COHERENT:
        scale = math.sqrt(0.5 / spec.lam)
        return Displacement(rng.normal(scale, n) + 1j * rng.normal(scale, n))
    if kind in (FamilyType.SQUEEZED_VACUUM, FamilyType.PERELOMOV):
        return Squeezing(*_sample_squeezing(spec.beta, rng, n))
    if kind == FamilyType.GAUSSIAN_1MODE:
        s, theta = _sample_squeezing(spec.beta, rng, n)
        lower = np.maximum(one_minus_tanh(s), 1e-300)
        upper = 2.0 * special.expit(2.0 * s)
        x = rng.normal(1.0, n) * np.sqrt(0.5 / (spec.lam * lower))
        y = rng.normal(1.0, n) * np.sqrt(0.5 / (spec.lam * upper))
        return DisplacedSqueezing(np.exp(0.5j * theta) * (x + 1j * y), s, theta)
    raise ContractViolation(f"Unsupported family: {family}")


# --- odd cat states ---


def cat_squeezing_map(alpha_abs: float) -> float:
    """Squeezing s* of the squeezed single photon closest to an odd cat of amplitude |α|."""
    if not 0 < alpha_abs <= 1:
        raise DomainError(f"Cat amplitude must lie in (0, 1], got {alpha_abs!r}")
    a2 = alpha_abs**2
    return 0.5 * math.log(a2 / 3.0 + math.sqrt(9.0 + 4.0 * a2**2) / 3.0)


def cat_confidence_beta(alpha_max: float, confidence: float) -> float:
    """Smallest β whose squeezing prior puts ``confidence`` mass below s*(alpha_max)."""
    if not 0 < confidence < 1:
        raise DomainError(f"Confidence must lie in (0, 1), got {confidence!r}")
    s_star = cat_squeezing_map(alpha_max)
    return math.log1p(-confidence) / -float(log_cosh(s_star))
