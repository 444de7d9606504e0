"""Tests for the closed-form classical fidelity thresholds."""
import json

import pytest

from qbench.benchmarks import (
    DEFAULT_FORMULA,
    FORMULAS,
    NOT_PROVEN_NOTE,
    UNDEFINED,
    BenchmarkValue,
    EnsembleSpec,
    benchmark,
    cft_coherent,
    cft_gaussian_1mode,
    cft_perelomov,
    cft_qudit,
    cft_spin,
    cft_two_mode_squeezed_number,
    success_probability,
)
from qbench.config_flow import spec_from_dict
from qbench.ensembles import FamilyType, StateFamily
from qbench.errors import ContractViolation, ImproperPriorError, UnsupportedEnsembleError


def _make_spec(family=None, N=1, M=1, **kwargs):
    return EnsembleSpec.create(family or StateFamily.qudit(2), N, M, **kwargs)


# --- single formulas ---

async def test_qubit_uniform_is_two_thirds():
    value = cft_qudit(2, 1, 1, 0.0)
    assert value.fidelity_threshold == 2 / 3
    assert value.success_probability == 0.5
    assert value.formula_id == "eq:benchmarkqudit"


@pytest.mark.parametrize("beta", [0.0, 0.5, 1.0, 2.0, 5.0, 10.0])
async def test_qubit_teleportation(beta):
    assert cft_qudit(2, 1, 1, beta).fidelity_threshold == pytest.approx((beta + 2) / (beta + 3), rel=1e-14)


async def test_qudit_cloning():
    # d = 3, 1 -> 2 copies: C(3,2)/C(4,2)
    assert cft_qudit(3, 1, 1, 0.0).fidelity_threshold == pytest.approx(3 / 6)
    assert cft_qudit(3, 1, 2, 0.0).fidelity_threshold == pytest.approx(3 / 10)


async def test_spin_matches_qubit_substitution():
    for j, k, N, M, beta in ((1.0, 1.0, 1, 1, 0.0), (1.5, 0.5, 2, 3, 1.5), (0.5, 2.0, 1, 2, 4.0)):
        spin = cft_spin(j, k, N, M, beta).fidelity_threshold
        qubit = cft_qudit(2, int(2 * j * N), int(2 * k * M), beta).fidelity_threshold
        assert spin == pytest.approx(qubit, rel=1e-14)


async def test_spin_rejects_non_half_integer():
    with pytest.raises(ContractViolation, match="half-integer"):
        cft_spin(0.3, 0.5, 1, 1, 0.0)


async def test_coherent_uniform_is_half():
    value = cft_coherent(1, 1, 1, 0.0)
    assert value.fidelity_threshold == 0.5
    assert value.success_probability is None


async def test_coherent_with_gain_and_width():
    value = cft_coherent(2, 1, 2.0, 1.0)
    assert value.fidelity_threshold == pytest.approx(3 / 7)
    assert value.success_probability == pytest.approx(1 / 3)


async def test_perelomov_single_photon():
    value = cft_perelomov(1.5, 1.5, 1, 1, 4.0)
    assert value.fidelity_threshold == pytest.approx(0.7)
    assert value.success_probability == pytest.approx(4 / 7)
    assert value.formula_id == "SSPS"


async def test_squeezed_vacuum_formula_id():
    assert cft_perelomov(0.5, 0.5, 1, 1, 1.0).formula_id == "benchSMSV"


async def test_two_mode_squeezed_number():
    value = cft_two_mode_squeezed_number(0, 2, 1, 3.0)
    assert value.fidelity_threshold == pytest.approx((4 + 3) / (2 + 4 + 3))
    assert value.formula_id == "eq:benchmarkperelomov"


async def test_gaussian_uniform_is_quarter():
    assert cft_gaussian_1mode(1, 1, 0.0, 0.0).fidelity_threshold == 0.25


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("M", [1, 2, 3])
@pytest.mark.parametrize("lam", [0.0, 1.0, 2.0])
@pytest.mark.parametrize("beta", [0.0, 1.0, 2.0])
async def test_gaussian_factorizes(N, M, lam, beta):
    product = (
        cft_coherent(N, M, 1.0, lam).fidelity_threshold
        * cft_perelomov(0.5, 0.5, N, M, beta).fidelity_threshold
    )
    assert cft_gaussian_1mode(N, M, lam, beta).fidelity_threshold == product


async def test_gaussian_non_integer_widths_are_flagged():
    assert NOT_PROVEN_NOTE in cft_gaussian_1mode(1, 1, 0.5, 1.0).notes
    assert cft_gaussian_1mode(1, 1, 1.0, 1.0).notes == ()


async def test_copy_numbers_checked():
    with pytest.raises(ContractViolation, match="Copy numbers"):
        cft_qudit(2, 0, 1, 0.0)


async def test_threshold_range_checked():
    with pytest.raises(ContractViolation, match="outside"):
        BenchmarkValue(1.5, None, "x")


# --- dispatch ---

async def test_default_formula_per_family():
    assert set(DEFAULT_FORMULA) == set(FamilyType)
    assert all(formula_id in FORMULAS for formula_id in DEFAULT_FORMULA.values())


async def test_benchmark_dispatch():
    spec = _make_spec(StateFamily.perelomov(1.5), beta=4.0)
    assert benchmark(spec).fidelity_threshold == pytest.approx(0.7)


async def test_benchmark_qubit_formula_id():
    value = benchmark(_make_spec(beta=1.0), "eq:benchmarkqubit")
    assert value.formula_id == "eq:benchmarkqubit"
    assert value.fidelity_threshold == pytest.approx(0.75)


async def test_benchmark_unknown_formula():
    with pytest.raises(UnsupportedEnsembleError, match="Unknown formula id"):
        benchmark(_make_spec(), "nope")


async def test_kcopy_benchmark():
    spec = _make_spec(M=2, k_weights=[0.5, 0.5])
    value = benchmark(spec)
    assert value.formula_id == "kcopy"
    assert value.fidelity_threshold == pytest.approx(0.5 * 2 / 3 + 0.5 * 2 / 4)


async def test_kcopy_weights_validated():
    with pytest.raises(ContractViolation, match="probability vector"):
        _make_spec(M=2, k_weights=[0.7, 0.7])
    with pytest.raises(ContractViolation, match="one probability per k"):
        _make_spec(M=2, k_weights=[1.0])


async def test_spec_copy_counts_validated():
    with pytest.raises(ContractViolation, match="positive integer"):
        _make_spec(N=0)


async def test_success_probability_requires_proper_prior():
    with pytest.raises(ImproperPriorError):
        success_probability(_make_spec(StateFamily.coherent()))
    assert success_probability(_make_spec(StateFamily.coherent(), lam=1.0)) == pytest.approx(0.5)


async def test_as_dict_marks_undefined_success():
    data = cft_coherent(1, 1, 1.0, 0.0).as_dict()
    assert data["success_probability"] == UNDEFINED
    assert data["provenance"] == "closed_form"


# --- golden values ---

async def test_golden_benchmarks(fixtures_path):
    golden = json.loads((fixtures_path / "golden_benchmarks.json").read_text(encoding="utf-8"))
    for entry in golden:
        spec, _ = spec_from_dict(entry["spec"])
        data = benchmark(spec).as_dict()
        assert data["fidelity_threshold"] == pytest.approx(entry["fidelity_threshold"], rel=1e-12), entry
        if "success_probability" in entry:
            expected = entry["success_probability"]
            if isinstance(expected, str):
                assert data["success_probability"] == expected
            else:
                assert data["success_probability"] == pytest.approx(expected, rel=1e-12)
