"""Command-line entry point: benchmark, verify, simulate, sweep and certify."""

from __future__ import annotations

import argparse
import asyncio
import csv
import io
import json
import logging
import math
import sys
from collections.abc import Sequence
from pathlib import Path

from .benchmarks import EnsembleSpec, benchmark
from .certify import certify, load_experiment
from .config_flow import (
    describe_errors,
    load_spec_entries,
    nearest_family,
    parse_and_validate_int_range,
    parse_and_validate_comma_separated_floats,
    spec_from_dict,
    spec_to_dict,
    translate_error,
)
from .const import (
    CONF_BETA,
    CONF_D,
    CONF_FAMILY,
    CONF_FORMULA_ID,
    CONF_GAIN,
    CONF_J,
    CONF_K,
    CONF_K_WEIGHTS,
    CONF_LAMBDA,
    CONF_M,
    CONF_MC_SAMPLES,
    CONF_N,
    CONF_N_MAX,
    CONF_NAME,
    CONF_NODES,
    CONF_SCHEME,
    CONF_SEED,
    CONF_WORKERS,
    CONF_Z,
    DEFAULT_MC_SAMPLES,
    DEFAULT_N_MAX,
    DEFAULT_NODES,
    DEFAULT_SEED,
    DEFAULT_WORKERS,
    DEFAULT_Z,
    EXIT_DATA_FORMAT,
    EXIT_IO_ERROR,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFICATION_FAILED,
    SCHEME_GAUSS_LEGENDRE,
    SCHEME_MONTE_CARLO,
    SWEEP_HEADER,
)
from .ensembles import FamilyType
from .errors import (
    ContractViolation,
    DomainError,
    ExperimentFormatError,
    ImproperPriorError,
    SpecValidationError,
    UnsupportedEnsembleError,
)
from .game_sim import optimal_mp_strategy, srm_strategy_qubit
from .hub import Hub, _sync_library_logging
from .srm import srm_eta_opt

_LOGGER = logging.getLogger(__name__)

STRATEGY_OPTIMAL_MP = "optimal-mp"
STRATEGY_SRM = "srm"


class UsageError(Exception):
    """Bad command-line usage (exit code 64)."""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


# --- helpers ---


def _jsonable(value):
    """Replace non-finite floats by None so the output stays strict JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    return value


def _emit(payload: dict) -> None:
    print(json.dumps(_jsonable(payload), indent=2))


def _spec_flags(args: argparse.Namespace) -> dict:
    """Collect only the spec flags that were given, keyed like a spec file."""
    data = {CONF_FAMILY: args.family}
    for key, attr in (
        (CONF_D, "d"),
        (CONF_J, "j"),
        (CONF_K, "k"),
        (CONF_GAIN, "gain"),
        (CONF_N, "N"),
        (CONF_M, "M"),
        (CONF_BETA, "beta"),
        (CONF_LAMBDA, "lam"),
        (CONF_K_WEIGHTS, "kweights"),
        (CONF_FORMULA_ID, "formula_id"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            data[key] = value
    return data


def _spec_from_flags(data: dict):
    try:
        return spec_from_dict(data)
    except UnsupportedEnsembleError:
        family = data.get(CONF_FAMILY)
        raise UsageError(
            f"{translate_error('family_unknown')} Got '{family}', nearest valid family: '{nearest_family(family)}'"
        ) from None


def _read_specs(path: str) -> list[tuple[EnsembleSpec, str | None, str | None]]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    specs = []
    for entry in load_spec_entries(payload):
        spec, formula_id = spec_from_dict(entry)
        specs.append((spec, formula_id, entry.get(CONF_NAME) if isinstance(entry, dict) else None))
    return specs


def _hub_config(args: argparse.Namespace) -> dict:
    config = {
        CONF_SEED: args.seed,
        CONF_WORKERS: args.workers,
    }
    for key, attr in (
        (CONF_SCHEME, "scheme"),
        (CONF_NODES, "nodes"),
        (CONF_MC_SAMPLES, "mc_samples"),
        (CONF_N_MAX, "n_max"),
        (CONF_Z, "z"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            config[key] = value
    return config


async def _with_versions(hub: Hub, coro):
    await hub.log_versions()
    return await coro


# --- commands ---


def _cmd_benchmark(args: argparse.Namespace) -> int:
    spec, formula_id = _spec_from_flags(_spec_flags(args))
    value = benchmark(spec, formula_id)
    _emit({"spec": spec_to_dict(spec, formula_id), **value.as_dict()})
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    specs = _read_specs(args.spec_file)
    hub = Hub(_hub_config(args))
    report = asyncio.run(_with_versions(hub, hub.verify(specs)))
    _emit(report.as_dict())
    if not report.passed:
        for row in report.failures:
            print(f"verification failed for {row.name}: {json.dumps(row.spec)}", file=sys.stderr)
        return EXIT_VERIFICATION_FAILED
    return EXIT_OK


def _simulation_spec(args: argparse.Namespace) -> EnsembleSpec:
    if args.spec_file:
        specs = _read_specs(args.spec_file)
        if len(specs) != 1:
            raise UsageError(f"simulate needs exactly one spec, got {len(specs)}")
        return specs[0][0]
    if args.family is None:
        raise UsageError("simulate needs --spec-file or --family")
    return _spec_from_flags(_spec_flags(args))[0]


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.trials < 1:
        raise UsageError(f"--trials must be >= 1, got {args.trials}")
    spec = _simulation_spec(args)
    if args.strategy == STRATEGY_SRM:
        family = spec.family
        qubit = (family.kind == FamilyType.QUDIT and family.d == 2) or (
            family.kind == FamilyType.SPIN and family.j == family.k == 0.5
        )
        if not qubit:
            raise UsageError(f"The srm strategy needs a qubit ensemble, got {family}")
        eta = args.eta if args.eta is not None else srm_eta_opt(spec.beta)
        strategy = srm_strategy_qubit(eta, spec.N, spec.M)
    else:
        eta = None
        strategy = optimal_mp_strategy(spec)

    hub = Hub(_hub_config(args))
    batch = asyncio.run(_with_versions(hub, hub.simulate(spec, strategy, args.trials)))
    value = benchmark(spec)
    payload = {
        "spec": spec_to_dict(spec),
        "strategy": strategy.name,
        **({"eta": eta} if eta is not None else {}),
        **batch.as_dict(),
        "fidelity_threshold": value.fidelity_threshold,
        "success_probability": value.success_probability,
    }
    _emit(payload)
    return EXIT_OK


def _sweep_rows(args: argparse.Namespace):
    try:
        family = FamilyType(args.family)
    except ValueError:
        raise UsageError(
            f"{translate_error('family_unknown')} Got '{args.family}', nearest valid family: "
            f"'{nearest_family(args.family)}'"
        ) from None
    n_values = parse_and_validate_int_range(args.N_range)
    m_values = parse_and_validate_int_range(args.M_range)
    widths = parse_and_validate_comma_separated_floats(args.width_grid) or [0.0]
    lambdas = parse_and_validate_comma_separated_floats(args.lambda_grid) if args.lambda_grid else None

    if family == FamilyType.COHERENT:
        grid = [(None, width) for width in widths]
    elif family == FamilyType.GAUSSIAN_1MODE:
        grid = [(width, lam) for width in widths for lam in (lambdas or [args.lam or 0.0])]
    else:
        grid = [(width, None) for width in widths]

    for N in n_values:
        for M in m_values:
            for beta, lam in grid:
                data = {CONF_FAMILY: args.family, CONF_N: N, CONF_M: M}
                for key, attr in ((CONF_D, "d"), (CONF_J, "j"), (CONF_K, "k"), (CONF_GAIN, "gain")):
                    if getattr(args, attr) is not None:
                        data[key] = getattr(args, attr)
                if beta is not None:
                    data[CONF_BETA] = beta
                if lam is not None:
                    data[CONF_LAMBDA] = lam
                spec, _ = _spec_from_flags(data)
                value = benchmark(spec)
                kind = spec.family.kind
                if kind.needs_dimension:
                    index, target = spec.family.d, ""
                elif kind.needs_spin_indices:
                    index, target = spec.family.j, spec.family.k
                else:
                    index, target = "", ""
                yield [
                    kind.value,
                    index,
                    target,
                    N,
                    M,
                    spec.beta if kind.uses_beta else "",
                    spec.lam if kind.uses_lambda else "",
                    repr(value.fidelity_threshold),
                    repr(value.success_probability) if value.success_defined else "",
                ]


def _cmd_sweep(args: argparse.Namespace) -> int:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    rows = 0
    for row in _sweep_rows(args):
        writer.writerow(row)
        rows += 1
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            handle.write(buffer.getvalue())
        _LOGGER.info("Wrote %d sweep rows to %s", rows, args.out)
    else:
        sys.stdout.write(buffer.getvalue())
    return EXIT_OK


def _cmd_certify(args: argparse.Namespace) -> int:
    text = Path(args.experiment_file).read_text(encoding="utf-8")
    try:
        record = load_experiment(text)
    except SpecValidationError as err:
        raise ExperimentFormatError(f"Invalid ensemble in experiment: {err}") from err
    _emit(certify(record, args.z).as_dict())
    return EXIT_OK


# --- parser ---


def _add_spec_flags(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--family", required=required, help="state family wire name")
    parser.add_argument("--d", type=int, help="qudit dimension")
    parser.add_argument("--j", type=float, help="input index (spin, perelomov)")
    parser.add_argument("--k", type=float, help="target index (spin, perelomov)")
    parser.add_argument("--gain", help="coherent gain, e.g. 1, 1.5 or 1+1j")
    parser.add_argument("--beta", type=float, help="inverse prior width of angles/squeezing")
    parser.add_argument("--lambda", dest="lam", type=float, help="inverse prior width of displacements")


def _add_quadrature_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--workers", type=int, default=DEFAULT_WORKERS)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="qbench", description="Classical fidelity thresholds for quantum benchmarks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    bench = subparsers.add_parser("benchmark", help="closed-form benchmark of one ensemble")
    _add_spec_flags(bench)
    bench.add_argument("--N", type=int, required=True)
    bench.add_argument("--M", type=int, required=True)
    bench.add_argument("--kweights", help="comma-separated probabilities of testing k = 1..M copies")
    bench.add_argument("--formula-id", dest="formula_id")
    bench.set_defaults(handler=_cmd_benchmark)

    verify = subparsers.add_parser("verify", help="closed forms vs numerical oracle vs operator norm")
    verify.add_argument("--spec-file", required=True)
    verify.add_argument("--scheme", choices=[SCHEME_GAUSS_LEGENDRE, SCHEME_MONTE_CARLO], default=SCHEME_GAUSS_LEGENDRE)
    verify.add_argument("--nodes", type=int, default=DEFAULT_NODES)
    verify.add_argument("--mc-samples", dest="mc_samples", type=int, default=DEFAULT_MC_SAMPLES)
    verify.add_argument("--n-max", dest="n_max", type=int, default=DEFAULT_N_MAX)
    verify.add_argument("--z", type=float, default=DEFAULT_Z)
    _add_quadrature_flags(verify)
    verify.set_defaults(handler=_cmd_verify)

    simulate = subparsers.add_parser("simulate", help="Monte Carlo game simulation")
    simulate.add_argument("--spec-file")
    _add_spec_flags(simulate, required=False)
    simulate.add_argument("--N", type=int)
    simulate.add_argument("--M", type=int)
    simulate.add_argument("--strategy", choices=[STRATEGY_OPTIMAL_MP, STRATEGY_SRM], default=STRATEGY_OPTIMAL_MP)
    simulate.add_argument("--eta", type=float, help="SRM prior width (default: optimal for the input prior)")
    simulate.add_argument("--trials", type=int, required=True)
    _add_quadrature_flags(simulate)
    simulate.set_defaults(handler=_cmd_simulate)

    sweep = subparsers.add_parser("sweep", help="CSV table of thresholds over a grid")
    _add_spec_flags(sweep)
    sweep.add_argument("--N-range", dest="N_range", default="1..4")
    sweep.add_argument("--M-range", dest="M_range", default="1..4")
    sweep.add_argument("--width-grid", dest="width_grid", default="0")
    sweep.add_argument("--lambda-grid", dest="lambda_grid", help="displacement widths (gaussian-1mode)")
    sweep.add_argument("--out", help="output CSV path (stdout when omitted)")
    sweep.set_defaults(handler=_cmd_sweep)

    cert = subparsers.add_parser("certify", help="certify an experimental fidelity record")
    cert.add_argument("--experiment-file", dest="experiment_file", required=True)
    cert.add_argument("--z", type=float, default=DEFAULT_Z)
    cert.set_defaults(handler=_cmd_certify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    _sync_library_logging()
    _LOGGER.debug("Running command %s with %s", args.command, vars(args))

    try:
        return args.handler(args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except SpecValidationError as err:
        print(f"invalid spec: {describe_errors(err.errors) or err}", file=sys.stderr)
        return EXIT_USAGE
    except (json.JSONDecodeError, ExperimentFormatError, UnsupportedEnsembleError, ImproperPriorError) as err:
        print(f"data format error: {err}", file=sys.stderr)
        return EXIT_DATA_FORMAT
    except (ContractViolation, DomainError, ValueError) as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO_ERROR
