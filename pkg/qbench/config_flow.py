"""Schemas for spec files, experiment files and run settings."""

from __future__ import annotations

import difflib
import functools
import json
import logging
from pathlib import Path

import voluptuous as vol

from .const import (
    CONF_BETA,
    CONF_CUTOFF,
    CONF_D,
    CONF_ENSEMBLE,
    CONF_FAMILY,
    CONF_FORMULA_ID,
    CONF_GAIN,
    CONF_INPUT_PARAMS,
    CONF_J,
    CONF_K,
    CONF_K_WEIGHTS,
    CONF_LAMBDA,
    CONF_M,
    CONF_MAX_REFINEMENTS,
    CONF_MC_SAMPLES,
    CONF_MEAN_FIDELITY,
    CONF_N,
    CONF_N_MAX,
    CONF_NAME,
    CONF_NODES,
    CONF_PASSED,
    CONF_PHASE_NODES,
    CONF_RUNS,
    CONF_SAMPLES,
    CONF_SCHEMA,
    CONF_SCHEME,
    CONF_SEED,
    CONF_SPECS,
    CONF_SQUEEZE_MAP,
    CONF_STDERR,
    CONF_TESTED,
    CONF_TOLERANCE,
    CONF_WORKERS,
    CONF_Z,
    DEFAULT_CUTOFF,
    DEFAULT_MAX_REFINEMENTS,
    DEFAULT_MC_SAMPLES,
    DEFAULT_N_MAX,
    DEFAULT_NODES,
    DEFAULT_PHASE_NODES,
    DEFAULT_SEED,
    DEFAULT_TOLERANCE,
    DEFAULT_WORKERS,
    DEFAULT_Z,
    DOMAIN,
    MIN_MC_SAMPLES,
    MIN_NODES,
    SCHEMA_VERSION,
    SCHEME_GAUSS_LEGENDRE,
    SCHEME_MONTE_CARLO,
    SQUEEZE_MAP_RATIONAL,
    SQUEEZE_MAP_TANH,
)
from .benchmarks import EnsembleSpec
from .ensembles import FamilyType, StateFamily
from .errors import ContractViolation, DomainError, SpecValidationError, UnsupportedEnsembleError

_LOGGER = logging.getLogger(__name__)

_positive_int = vol.All(int, vol.Range(min=1))
_width = vol.All(vol.Coerce(float), vol.Range(min=0.0))
_index = vol.All(vol.Coerce(float), vol.Range(min=0.0, min_included=False))


def _coerce_gain(value) -> complex:
    """Accept a number, a "re+imj" string or a [re, im] pair."""
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, bool):
        raise vol.Invalid("gain must be numeric")
    try:
        return complex(str(value).replace(" ", "")) if isinstance(value, str) else complex(value)
    except (TypeError, ValueError) as err:
        raise vol.Invalid(f"invalid gain: {value!r}") from err


_COMMON_FIELDS = {
    vol.Required(CONF_FAMILY): str,
    vol.Required(CONF_N): _positive_int,
    vol.Required(CONF_M): _positive_int,
    vol.Optional(CONF_K_WEIGHTS): vol.Any(str, [vol.Coerce(float)]),
    vol.Optional(CONF_FORMULA_ID): str,
    vol.Optional(CONF_NAME): str,
}

_QUDIT_FIELDS = {
    vol.Required(CONF_D): vol.All(int, vol.Range(min=2)),
    vol.Optional(CONF_BETA, default=0.0): _width,
}

_SPIN_FIELDS = {
    vol.Required(CONF_J): _index,
    vol.Optional(CONF_K): _index,
    vol.Optional(CONF_BETA, default=0.0): _width,
}

_COHERENT_FIELDS = {
    vol.Optional(CONF_GAIN, default=1.0): _coerce_gain,
    vol.Optional(CONF_LAMBDA, default=0.0): _width,
}

_SQUEEZED_FIELDS = {
    vol.Optional(CONF_BETA, default=0.0): _width,
}

_GAUSSIAN_FIELDS = {
    vol.Optional(CONF_LAMBDA, default=0.0): _width,
    vol.Optional(CONF_BETA, default=0.0): _width,
}


def _build_spec_schema(family: FamilyType) -> vol.Schema:
    """Build the spec schema for the given family."""
    if family.needs_dimension:
        family_fields = _QUDIT_FIELDS
    elif family.needs_spin_indices:
        family_fields = _SPIN_FIELDS
    elif family.needs_gain:
        family_fields = _COHERENT_FIELDS
    elif family.uses_lambda:
        family_fields = _GAUSSIAN_FIELDS
    else:
        family_fields = _SQUEEZED_FIELDS
    return vol.Schema({**family_fields, **_COMMON_FIELDS})


QUADRATURE_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_SCHEME, default=SCHEME_GAUSS_LEGENDRE): vol.In(
            [SCHEME_GAUSS_LEGENDRE, SCHEME_MONTE_CARLO]
        ),
        vol.Optional(CONF_NODES, default=DEFAULT_NODES): vol.All(int, vol.Range(min=MIN_NODES, max=4096)),
        vol.Optional(CONF_MC_SAMPLES, default=DEFAULT_MC_SAMPLES): vol.All(int, vol.Range(min=MIN_MC_SAMPLES)),
        vol.Optional(CONF_CUTOFF, default=DEFAULT_CUTOFF): vol.All(
            vol.Coerce(float), vol.Range(min=0.5, max=1.0, max_included=False)
        ),
        vol.Optional(CONF_PHASE_NODES, default=DEFAULT_PHASE_NODES): vol.All(int, vol.Range(min=1)),
        vol.Optional(CONF_MAX_REFINEMENTS, default=DEFAULT_MAX_REFINEMENTS): vol.All(
            int, vol.Range(min=0, max=8)
        ),
        vol.Optional(CONF_TOLERANCE, default=DEFAULT_TOLERANCE): vol.All(
            vol.Coerce(float), vol.Range(min=0.0, min_included=False)
        ),
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(int, vol.Range(min=0)),
        vol.Optional(CONF_WORKERS, default=DEFAULT_WORKERS): vol.All(int, vol.Range(min=1)),
        vol.Optional(CONF_SQUEEZE_MAP, default=SQUEEZE_MAP_RATIONAL): vol.In(
            [SQUEEZE_MAP_RATIONAL, SQUEEZE_MAP_TANH]
        ),
        vol.Optional("conjugate", default=False): bool,
    }
)

HUB_SCHEMA = QUADRATURE_SCHEMA.extend(
    {
        vol.Optional(CONF_NAME, default=DOMAIN): str,
        vol.Optional(CONF_N_MAX, default=DEFAULT_N_MAX): vol.All(int, vol.Range(min=1)),
        vol.Optional(CONF_Z, default=DEFAULT_Z): vol.All(vol.Coerce(float), vol.Range(min=0.0)),
    }
)

_PASS_RUN = vol.Schema(
    {
        vol.Required(CONF_PASSED): vol.All(int, vol.Range(min=0)),
        vol.Required(CONF_TESTED): vol.All(int, vol.Range(min=1)),
        vol.Optional(CONF_INPUT_PARAMS, default="sampled"): vol.Any("sampled", dict),
    }
)

_MEAN_RUN = vol.Schema(
    {
        vol.Required(CONF_MEAN_FIDELITY): vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0)),
        vol.Required(CONF_STDERR): vol.All(vol.Coerce(float), vol.Range(min=0.0)),
        vol.Required(CONF_SAMPLES): vol.All(int, vol.Range(min=1)),
    }
)

EXPERIMENT_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_SCHEMA): vol.In([SCHEMA_VERSION]),
        vol.Required(CONF_ENSEMBLE): dict,
        vol.Required(CONF_RUNS): vol.All([vol.Any(_PASS_RUN, _MEAN_RUN)], vol.Length(min=1)),
    }
)


def parse_and_validate_comma_separated_floats(input_str: str) -> list[float]:
    """Parse and validate a comma-separated string of floats."""
    if not input_str.strip():
        return []

    validated = []
    for value in input_str.split(","):
        value = value.strip()
        if value:
            try:
                validated.append(float(value))
            except ValueError:
                raise ValueError(f"Invalid float value found: '{value}' in input '{input_str}'")
    return validated


def parse_and_validate_int_range(input_str: str) -> list[int]:
    """Parse "1..4" (inclusive) or "1,2,4" into a list of integers."""
    text = input_str.strip()
    if ".." in text:
        low, _, high = text.partition("..")
        try:
            start, stop = int(low), int(high)
        except ValueError:
            raise ValueError(f"Invalid integer range found: '{text}' in input '{input_str}'")
        if stop < start:
            raise ValueError(f"Invalid integer range found: '{text}' in input '{input_str}'")
        return list(range(start, stop + 1))

    validated = []
    for value in text.split(","):
        value = value.strip()
        if value:
            try:
                validated.append(int(value))
            except ValueError:
                raise ValueError(f"Invalid integer value found: '{value}' in input '{input_str}'")
    if not validated:
        raise ValueError(f"Empty integer range in input '{input_str}'")
    return validated


def nearest_family(value: str) -> str | None:
    matches = difflib.get_close_matches(str(value), [f.value for f in FamilyType], n=1, cutoff=0.0)
    return matches[0] if matches else None


def _resolve_family(data: dict) -> FamilyType:
    """Resolve the family of a spec dict, suggesting the closest name on failure."""
    value = data.get(CONF_FAMILY)
    try:
        return FamilyType(value)
    except ValueError:
        raise UnsupportedEnsembleError(
            f"Unsupported family: '{value}' (nearest valid family: '{nearest_family(value)}')"
        ) from None


@functools.cache
def _translations() -> dict:
    path = Path(__file__).parent / "translations" / "en.json"
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def translate_error(key: str) -> str:
    return _translations()["config"]["error"].get(key, key)


def describe_errors(errors: dict[str, str]) -> str:
    return "; ".join(f"{field}: {translate_error(key)}" for field, key in errors.items())


def _error_key(error: vol.Invalid) -> str:
    if "extra keys not allowed" in error.msg:
        return "field_not_allowed"
    if "required key not provided" in error.msg:
        return "field_missing"
    return "value_out_of_range"


def validate_spec(data: dict) -> tuple[FamilyType, dict]:
    """Validate a spec dict; raises SpecValidationError with an errors dict."""
    _LOGGER.debug("validate_spec called with data: %s", data)
    if not isinstance(data, dict):
        raise SpecValidationError("Spec must be a JSON object", {"base": "spec_not_valid"})
    family = _resolve_family(data)
    errors: dict[str, str] = {}
    try:
        validated = _build_spec_schema(family)(data)
    except vol.MultipleInvalid as err:
        for error in err.errors:
            field = str(error.path[0]) if error.path else "base"
            errors[field] = _error_key(error)
        raise SpecValidationError(f"Invalid {family.value} spec: {describe_errors(errors)}", errors) from err

    weights = validated.get(CONF_K_WEIGHTS)
    if isinstance(weights, str):
        try:
            validated[CONF_K_WEIGHTS] = parse_and_validate_comma_separated_floats(weights)
        except ValueError:
            errors[CONF_K_WEIGHTS] = "kweights_not_valid"
    if CONF_K_WEIGHTS in validated and CONF_K_WEIGHTS not in errors:
        weights = validated[CONF_K_WEIGHTS]
        if len(weights) != validated[CONF_M] or any(w < 0 for w in weights) or abs(sum(weights) - 1) > 1e-9:
            errors[CONF_K_WEIGHTS] = "kweights_not_valid"
    if errors:
        raise SpecValidationError(f"Invalid {family.value} spec: {describe_errors(errors)}", errors)
    return family, validated


def spec_from_dict(data: dict):
    """Build an EnsembleSpec (and the requested formula id) from a spec dict."""
    family, validated = validate_spec(data)
    try:
        state_family = StateFamily(
            family,
            d=validated.get(CONF_D),
            j=validated.get(CONF_J),
            k=validated.get(CONF_K),
            gain=validated.get(CONF_GAIN, 1.0),
        )
        spec = EnsembleSpec.create(
            state_family,
            validated[CONF_N],
            validated[CONF_M],
            beta=validated.get(CONF_BETA, 0.0),
            lam=validated.get(CONF_LAMBDA, 0.0),
            k_weights=validated.get(CONF_K_WEIGHTS),
        )
    except (ContractViolation, DomainError) as err:
        errors = {"base": "spec_not_valid"}
        raise SpecValidationError(f"Invalid {family.value} spec: {err}", errors) from err
    return spec, validated.get(CONF_FORMULA_ID)


def spec_to_dict(spec, formula_id: str | None = None) -> dict:
    """Inverse of :func:`spec_from_dict`."""
    family = spec.family
    kind = family.kind
    data: dict = {CONF_FAMILY: kind.value}
    if kind.needs_dimension:
        data[CONF_D] = family.d
    if kind.needs_spin_indices:
        data[CONF_J] = family.j
        data[CONF_K] = family.k
    if kind.needs_gain:
        gain = complex(family.gain)
        data[CONF_GAIN] = gain.real if gain.imag == 0 else [gain.real, gain.imag]
    data[CONF_N] = spec.N
    data[CONF_M] = spec.M
    if kind.uses_beta:
        data[CONF_BETA] = spec.beta
    if kind.uses_lambda:
        data[CONF_LAMBDA] = spec.lam
    if spec.k_weights is not None:
        data[CONF_K_WEIGHTS] = list(spec.k_weights)
    if formula_id is not None:
        data[CONF_FORMULA_ID] = formula_id
    return data


def load_spec_entries(payload) -> list[dict]:
    """Accept one spec object, a list of specs, or {"specs": [...]}."""
    if isinstance(payload, dict) and CONF_SPECS in payload:
        payload = payload[CONF_SPECS]
    if isinstance(payload, dict):
        return [payload]
    if isinstance(payload, list) and payload:
        return payload
    raise SpecValidationError("Spec file holds no specs", {"base": "spec_not_valid"})
