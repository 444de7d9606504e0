"""Tests for spec, experiment and run-setting schemas."""
import pytest
import voluptuous as vol

from qbench.benchmarks import EnsembleSpec
from qbench.config_flow import (
    EXPERIMENT_SCHEMA,
    HUB_SCHEMA,
    QUADRATURE_SCHEMA,
    _build_spec_schema,
    _resolve_family,
    describe_errors,
    load_spec_entries,
    nearest_family,
    parse_and_validate_comma_separated_floats,
    parse_and_validate_int_range,
    spec_from_dict,
    spec_to_dict,
    translate_error,
    validate_spec,
)
from qbench.const import (
    CONF_BETA,
    CONF_D,
    CONF_GAIN,
    CONF_J,
    CONF_K,
    CONF_LAMBDA,
    CONF_N_MAX,
    CONF_SCHEME,
    DEFAULT_N_MAX,
    DEFAULT_NODES,
    DOMAIN,
    SCHEME_GAUSS_LEGENDRE,
)
from qbench.ensembles import FamilyType, StateFamily
from qbench.errors import SpecValidationError, UnsupportedEnsembleError


# --- parse_and_validate_comma_separated_floats tests ---

async def test_parse_valid_floats():
    result = parse_and_validate_comma_separated_floats("0.5, 1, 2.25")
    assert result == [0.5, 1.0, 2.25]


async def test_parse_empty_string():
    assert parse_and_validate_comma_separated_floats("") == []
    assert parse_and_validate_comma_separated_floats("   ") == []


async def test_parse_invalid_float_raises():
    with pytest.raises(ValueError, match="Invalid float value"):
        parse_and_validate_comma_separated_floats("0.5, abc")


# --- parse_and_validate_int_range tests ---

async def test_parse_inclusive_range():
    assert parse_and_validate_int_range("1..4") == [1, 2, 3, 4]


async def test_parse_int_list():
    assert parse_and_validate_int_range("1, 2,4") == [1, 2, 4]


async def test_parse_reversed_range_raises():
    with pytest.raises(ValueError, match="Invalid integer range"):
        parse_and_validate_int_range("4..1")


async def test_parse_invalid_int_raises():
    with pytest.raises(ValueError, match="Invalid integer value"):
        parse_and_validate_int_range("1,x")


async def test_parse_empty_int_range_raises():
    with pytest.raises(ValueError, match="Empty"):
        parse_and_validate_int_range(" , ")


# --- Schema field presence tests ---

async def test_qudit_schema_has_dimension():
    keys = [str(k) for k in _build_spec_schema(FamilyType.QUDIT).schema]
    assert CONF_D in keys
    assert CONF_BETA in keys
    assert CONF_J not in keys
    assert CONF_GAIN not in keys


async def test_index_families_have_j_and_k():
    for family in (FamilyType.SPIN, FamilyType.PERELOMOV):
        keys = [str(k) for k in _build_spec_schema(family).schema]
        assert CONF_J in keys, f"{family} missing j"
        assert CONF_K in keys, f"{family} missing k"
        assert CONF_D not in keys, f"{family} has d"


async def test_coherent_schema_has_gain_and_lambda():
    keys = [str(k) for k in _build_spec_schema(FamilyType.COHERENT).schema]
    assert CONF_GAIN in keys
    assert CONF_LAMBDA in keys
    assert CONF_BETA not in keys


async def test_gaussian_schema_has_both_widths():
    keys = [str(k) for k in _build_spec_schema(FamilyType.GAUSSIAN_1MODE).schema]
    assert CONF_LAMBDA in keys
    assert CONF_BETA in keys


async def test_squeezed_vacuum_schema_has_only_beta():
    keys = [str(k) for k in _build_spec_schema(FamilyType.SQUEEZED_VACUUM).schema]
    assert CONF_BETA in keys
    assert CONF_J not in keys
    assert CONF_LAMBDA not in keys


# --- family resolution ---

async def test_resolve_family():
    assert _resolve_family({"family": "perelomov"}) == FamilyType.PERELOMOV


async def test_unknown_family_suggests_nearest():
    assert nearest_family("qudt") == "qudit"
    with pytest.raises(UnsupportedEnsembleError, match="nearest valid family: 'coherent'"):
        _resolve_family({"family": "coherant"})


# --- validate_spec ---

async def test_validate_spec_fills_defaults():
    family, validated = validate_spec({"family": "qudit", "d": 3, "N": 1, "M": 2})
    assert family == FamilyType.QUDIT
    assert validated[CONF_BETA] == 0.0


async def test_validate_spec_missing_field():
    with pytest.raises(SpecValidationError) as err:
        validate_spec({"family": "qudit", "N": 1, "M": 1})
    assert err.value.errors == {"d": "field_missing"}


async def test_validate_spec_extra_field():
    with pytest.raises(SpecValidationError) as err:
        validate_spec({"family": "coherent", "N": 1, "M": 1, "beta": 1.0})
    assert err.value.errors == {"beta": "field_not_allowed"}


async def test_validate_spec_out_of_range():
    with pytest.raises(SpecValidationError) as err:
        validate_spec({"family": "qudit", "d": 2, "N": 0, "M": 1})
    assert err.value.errors == {"N": "value_out_of_range"}


async def test_validate_spec_rejects_fractional_copies():
    with pytest.raises(SpecValidationError):
        validate_spec({"family": "qudit", "d": 2, "N": 1.5, "M": 1})


async def test_validate_spec_negative_width():
    with pytest.raises(SpecValidationError) as err:
        validate_spec({"family": "squeezed-vacuum", "N": 1, "M": 1, "beta": -2})
    assert err.value.errors == {"beta": "value_out_of_range"}


async def test_validate_spec_k_weights_string():
    _, validated = validate_spec({"family": "qudit", "d": 2, "N": 1, "M": 2, "k_weights": "0.25, 0.75"})
    assert validated["k_weights"] == [0.25, 0.75]


async def test_validate_spec_k_weights_invalid():
    for weights in ("0.5, x", [0.9, 0.9], [1.0]):
        with pytest.raises(SpecValidationError) as err:
            validate_spec({"family": "qudit", "d": 2, "N": 1, "M": 2, "k_weights": weights})
        assert err.value.errors == {"k_weights": "kweights_not_valid"}


async def test_error_messages_are_translated():
    assert translate_error("field_missing") != "field_missing"
    assert translate_error("no_such_key") == "no_such_key"
    assert describe_errors({"d": "field_missing"}).startswith("d: ")


# --- spec_from_dict / spec_to_dict ---

async def test_spec_from_dict():
    spec, formula_id = spec_from_dict(
        {"family": "perelomov", "j": 1.5, "N": 2, "M": 1, "beta": 4, "formula_id": "SSPS"}
    )
    assert spec == EnsembleSpec.create(StateFamily.perelomov(1.5), 2, 1, beta=4.0)
    assert formula_id == "SSPS"


async def test_spec_from_dict_complex_gain():
    for gain in ("1+1j", [1.0, 1.0], 1 + 1j):
        spec, _ = spec_from_dict({"family": "coherent", "gain": gain, "N": 1, "M": 1})
        assert spec.family.gain == 1 + 1j


async def test_spec_from_dict_invalid_spin_index():
    with pytest.raises(SpecValidationError) as err:
        spec_from_dict({"family": "spin", "j": 0.7, "N": 1, "M": 1})
    assert err.value.errors == {"base": "spec_not_valid"}


@pytest.mark.parametrize(
    "spec",
    [
        EnsembleSpec.create(StateFamily.qudit(3), 2, 1, beta=1.5),
        EnsembleSpec.create(StateFamily.spin(1.0, 0.5), 1, 3),
        EnsembleSpec.create(StateFamily.coherent(2.0), 1, 2, lam=1.0),
        EnsembleSpec.create(StateFamily.coherent(1 - 2j), 1, 1, lam=0.5),
        EnsembleSpec.create(StateFamily.squeezed_vacuum(), 3, 1, beta=2.0),
        EnsembleSpec.create(StateFamily.gaussian_1mode(), 1, 1, lam=1.0, beta=1.0),
        EnsembleSpec.create(StateFamily.qudit(2), 1, 2, k_weights=[0.5, 0.5]),
    ],
)
async def test_spec_to_dict_is_inverse(spec):
    assert spec_from_dict(spec_to_dict(spec))[0] == spec


async def test_load_spec_entries():
    single = {"family": "qudit", "d": 2, "N": 1, "M": 1}
    assert load_spec_entries(single) == [single]
    assert load_spec_entries([single, single]) == [single, single]
    assert load_spec_entries({"specs": [single]}) == [single]
    with pytest.raises(SpecValidationError):
        load_spec_entries([])


# --- run settings ---

async def test_quadrature_schema_defaults():
    config = QUADRATURE_SCHEMA({})
    assert config[CONF_SCHEME] == SCHEME_GAUSS_LEGENDRE
    assert config["nodes_per_dim"] == DEFAULT_NODES
    assert config["conjugate"] is False


async def test_quadrature_schema_rejects_cutoff_of_one():
    with pytest.raises(vol.Invalid):
        QUADRATURE_SCHEMA({"noncompact_cutoff": 1.0})


async def test_quadrature_schema_enforces_minimum_resolution():
    for bad in ({"nodes_per_dim": 7}, {"mc_samples": 9_999}, {"nodes_per_dim": 2, "mc_samples": 2}):
        with pytest.raises(vol.Invalid):
            QUADRATURE_SCHEMA(bad)
    config = QUADRATURE_SCHEMA({"nodes_per_dim": 8, "mc_samples": 10_000})
    assert config["nodes_per_dim"] == 8


async def test_hub_schema_defaults():
    config = HUB_SCHEMA({})
    assert config["name"] == DOMAIN
    assert config[CONF_N_MAX] == DEFAULT_N_MAX
    assert config["z"] == 3.0


async def test_experiment_schema_requires_version():
    with pytest.raises(vol.Invalid):
        EXPERIMENT_SCHEMA({"schema": "other", "ensemble": {}, "runs": [{"passed": 1, "tested": 1}]})
