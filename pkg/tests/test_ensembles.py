"""Tests for state families, priors, overlaps and samplers."""
import math

import numpy as np
import pytest
from scipy import integrate, stats

from qbench.ensembles import (
    TWO_PI,
    BlochAngles,
    Displacement,
    DisplacedSqueezing,
    FamilyType,
    PriorSpec,
    QuditAngles,
    Squeezing,
    StateFamily,
    cat_confidence_beta,
    cat_squeezing_map,
    fiducial_point,
    gaussian_marginal_density,
    overlap_sq,
    prior_density,
    qubit_z_cdf,
    qubit_z_marginal,
    sample_prior,
    squeezing_s_cdf,
    state_vector,
    target_overlap_sq,
)
from qbench.errors import ContractViolation, DomainError, ImproperPriorError
from qbench.rng import SeededRNG


# --- families ---

async def test_qudit_requires_dimension():
    with pytest.raises(ContractViolation, match="d >= 2"):
        StateFamily.qudit(1)


async def test_spin_requires_half_integer():
    with pytest.raises(ContractViolation, match="half-integer"):
        StateFamily.spin(0.7)


async def test_perelomov_target_defaults_to_input():
    family = StateFamily.perelomov(1.5)
    assert family.k == 1.5


async def test_squeezed_vacuum_is_perelomov_half():
    family = StateFamily.squeezed_vacuum()
    assert (family.j, family.k) == (0.5, 0.5)


async def test_coherent_gain_must_be_nonzero():
    with pytest.raises(ContractViolation, match="gain"):
        StateFamily.coherent(0.0)


async def test_family_predicates():
    assert FamilyType.QUDIT.needs_dimension
    assert FamilyType.PERELOMOV.needs_spin_indices
    assert not FamilyType.COHERENT.uses_beta
    assert FamilyType.GAUSSIAN_1MODE.uses_lambda
    assert FamilyType.SPIN.is_compact
    assert not FamilyType.GAUSSIAN_1MODE.has_operator_model


# --- priors ---

async def test_negative_width_rejected():
    with pytest.raises(DomainError, match="beta"):
        PriorSpec(StateFamily.qudit(2), beta=-1.0)


async def test_proper_priors():
    assert PriorSpec(StateFamily.qudit(3)).is_proper
    assert not PriorSpec(StateFamily.coherent()).is_proper
    assert PriorSpec(StateFamily.coherent(), lam=1.0).is_proper
    assert not PriorSpec(StateFamily.gaussian_1mode(), lam=1.0).is_proper
    assert PriorSpec(StateFamily.perelomov(1.5), beta=2.0).is_proper


@pytest.mark.parametrize("beta", [0.0, 1.0, 4.5])
async def test_bloch_density_normalized(beta):
    spec = PriorSpec(StateFamily.spin(0.5), beta=beta)
    value, _ = integrate.quad(lambda t: TWO_PI * prior_density(spec, BlochAngles(t, 0.0)), 0.0, math.pi)
    assert value == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("beta", [0.0, 2.0])
async def test_hurwitz_density_normalized(beta):
    spec = PriorSpec(StateFamily.qudit(3), beta=beta)

    def density(t1, t0):
        return TWO_PI**2 * prior_density(spec, QuditAngles(np.array([t0, t1]), np.zeros(2)))

    value, _ = integrate.dblquad(density, 0.0, math.pi / 2, 0.0, math.pi / 2)
    assert value == pytest.approx(1.0, abs=1e-9)


async def test_squeezing_density_normalized():
    spec = PriorSpec(StateFamily.squeezed_vacuum(), beta=2.0)
    value, _ = integrate.quad(lambda s: TWO_PI * prior_density(spec, Squeezing(s, 0.0)), 0.0, np.inf)
    assert value == pytest.approx(1.0, abs=1e-10)


async def test_qubit_z_marginal_normalized():
    value, _ = integrate.quad(lambda z: qubit_z_marginal(z, 3.0), -1.0, 1.0)
    assert value == pytest.approx(1.0, abs=1e-12)
    assert qubit_z_cdf(1.0, 3.0) == pytest.approx(1.0)


async def test_gaussian_marginal_reproduces_squeezing_prior():
    lam, beta, s = 1.0, 2.0, 0.7
    value, _ = integrate.quad(
        lambda u: math.pi * gaussian_marginal_density(math.sqrt(u), s, lam, beta), 0.0, np.inf
    )
    expected = beta * math.sinh(s) * math.cosh(s) ** (-beta - 1.0)
    assert value == pytest.approx(expected, rel=1e-7)


# --- overlaps ---

async def test_fiducial_overlap_is_one():
    for family in (
        StateFamily.qudit(3),
        StateFamily.spin(1.0),
        StateFamily.coherent(2.0),
        StateFamily.squeezed_vacuum(),
        StateFamily.gaussian_1mode(),
        StateFamily.perelomov(1.5),
    ):
        assert overlap_sq(family, fiducial_point(family)) == pytest.approx(1.0)


async def test_spin_overlap_scales_with_index():
    theta = 1.1
    qubit = overlap_sq(StateFamily.spin(0.5), BlochAngles(theta, 0.3))
    spin_one = overlap_sq(StateFamily.spin(1.0), BlochAngles(theta, 0.3))
    assert qubit == pytest.approx(math.cos(theta / 2) ** 2)
    assert spin_one == pytest.approx(qubit**2)


async def test_coherent_target_overlap_uses_gain():
    family = StateFamily.coherent(2.0)
    g = Displacement(0.3 + 0.4j)
    assert overlap_sq(family, g) == pytest.approx(math.exp(-0.25))
    assert target_overlap_sq(family, g) == pytest.approx(math.exp(-1.0))


async def test_perelomov_target_overlap_uses_k():
    family = StateFamily.perelomov(0.5, 1.5)
    g = Squeezing(0.8, 1.0)
    assert overlap_sq(family, g) == pytest.approx(1.0 / math.cosh(0.8))
    assert target_overlap_sq(family, g) == pytest.approx(math.cosh(0.8) ** -3)


async def test_overlap_variant_mismatch():
    with pytest.raises(ContractViolation, match="does not match"):
        overlap_sq(StateFamily.coherent(), Squeezing(0.1))


async def test_gaussian_overlap_at_zero_squeezing():
    g = DisplacedSqueezing(0.5 + 0j, 0.0, 0.0)
    assert overlap_sq(StateFamily.gaussian_1mode(), g) == pytest.approx(math.exp(-0.25))


async def test_state_vector_normalized_and_conjugate():
    family = StateFamily.qudit(4)
    rng = SeededRNG(3)
    g = sample_prior(PriorSpec(family, beta=1.0), rng, 50)
    vectors = state_vector(family, g)
    assert np.linalg.norm(vectors, axis=1) == pytest.approx(np.ones(50))
    assert np.allclose(state_vector(family, g, conjugate=True), vectors.conj())
    overlaps = np.abs(vectors[:, 0]) ** 2
    assert overlaps == pytest.approx(overlap_sq(family, g))


# --- samplers ---

async def test_sampler_rejects_improper_prior():
    with pytest.raises(ImproperPriorError):
        sample_prior(PriorSpec(StateFamily.coherent()), 0, 10)


async def test_sampler_rejects_zero_count():
    with pytest.raises(ContractViolation):
        sample_prior(PriorSpec(StateFamily.qudit(2)), 0, 0)


async def test_sampler_is_deterministic():
    spec = PriorSpec(StateFamily.perelomov(1.5), beta=2.0)
    first = sample_prior(spec, 42, 100)
    second = sample_prior(spec, 42, 100)
    assert np.array_equal(first.s, second.s)
    assert np.array_equal(first.theta, second.theta)


async def test_qubit_sampler_mean():
    beta = 2.0
    g = sample_prior(PriorSpec(StateFamily.qudit(2), beta=beta), 1, 200_000, bloch=True)
    assert isinstance(g, BlochAngles)
    assert np.mean(np.cos(g.theta)) == pytest.approx(beta / (beta + 2.0), abs=0.01)


async def test_qudit_sampler_mean_overlap():
    family = StateFamily.qudit(3)
    g = sample_prior(PriorSpec(family, beta=1.0), 2, 200_000)
    assert np.mean(overlap_sq(family, g)) == pytest.approx(2.0 / 4.0, abs=0.005)


async def test_coherent_sampler_variance():
    g = sample_prior(PriorSpec(StateFamily.coherent(), lam=2.0), 3, 200_000)
    assert np.mean(np.abs(g.alpha) ** 2) == pytest.approx(0.5, abs=0.01)


async def test_squeezing_sampler_matches_cdf():
    beta = 3.0
    g = sample_prior(PriorSpec(StateFamily.squeezed_vacuum(), beta=beta), 4, 200_000)
    assert np.mean(g.s <= 0.5) == pytest.approx(squeezing_s_cdf(0.5, beta), abs=0.005)


# one-dimensional marginals against their analytic laws at significance 1e-3

@pytest.mark.parametrize("beta", [0.0, 1.0, 4.0])
async def test_qubit_sampler_ks(beta):
    g = sample_prior(PriorSpec(StateFamily.spin(0.5), beta=beta), 11, 20_000)
    result = stats.kstest(np.cos(g.theta), lambda z: qubit_z_cdf(z, beta))
    assert result.pvalue > 1e-3


@pytest.mark.parametrize(("d", "beta"), [(3, 0.0), (4, 2.5)])
async def test_qudit_sampler_ks(d, beta):
    g = sample_prior(PriorSpec(StateFamily.qudit(d), beta=beta), 12, 20_000)
    leading = np.cos(g.thetas[0]) ** 2
    assert stats.kstest(leading, stats.beta(beta + 1.0, d - 1).cdf).pvalue > 1e-3
    phases = g.phis.ravel() / TWO_PI
    assert stats.kstest(phases, "uniform").pvalue > 1e-3


@pytest.mark.parametrize("beta", [0.5, 2.0, 10.0])
async def test_squeezing_sampler_ks(beta):
    g = sample_prior(PriorSpec(StateFamily.perelomov(1.5), beta=beta), 13, 20_000)
    assert stats.kstest(g.s, lambda s: squeezing_s_cdf(s, beta)).pvalue > 1e-3


async def test_coherent_sampler_ks():
    lam = 2.0
    g = sample_prior(PriorSpec(StateFamily.coherent(), lam=lam), 14, 20_000)
    # λ|α|² is a unit exponential
    assert stats.kstest(lam * np.abs(g.alpha) ** 2, "expon").pvalue > 1e-3


@pytest.mark.parametrize(("lam", "beta"), [(1.0, 1.0), (0.5, 3.0)])
async def test_gaussian_sampler_ks(lam, beta):
    g = sample_prior(PriorSpec(StateFamily.gaussian_1mode(), beta=beta, lam=lam), 15, 20_000)
    assert isinstance(g, DisplacedSqueezing)
    assert stats.kstest(g.s, lambda s: squeezing_s_cdf(s, beta)).pvalue > 1e-3
    # λ (|α|² - tanh s Re(e^{-iθ} α²)) is a unit exponential given any s
    quadratic = np.abs(g.alpha) ** 2 - np.tanh(g.s) * np.real(np.exp(-1j * g.theta) * g.alpha**2)
    assert stats.kstest(lam * quadratic, "expon").pvalue > 1e-3


# --- odd cat states ---

async def test_cat_squeezing_map():
    assert cat_squeezing_map(1.0) == pytest.approx(0.21433, abs=1e-5)


async def test_cat_confidence_beta():
    beta = cat_confidence_beta(1.0, 0.99)
    assert beta == pytest.approx(202.0, abs=0.5)
    assert squeezing_s_cdf(cat_squeezing_map(1.0), beta) == pytest.approx(0.99)


async def test_cat_map_domain():
    with pytest.raises(DomainError):
        cat_squeezing_map(1.5)
