"""Pooling of experimental fidelity records and the certification verdict."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import voluptuous as vol

from .benchmarks import BenchmarkValue, EnsembleSpec, benchmark
from .config_flow import EXPERIMENT_SCHEMA, spec_from_dict
from .const import (
    CONF_ENSEMBLE,
    CONF_INPUT_PARAMS,
    CONF_MEAN_FIDELITY,
    CONF_PASSED,
    CONF_RUNS,
    CONF_SAMPLES,
    CONF_STDERR,
    CONF_TESTED,
    DEFAULT_Z,
)
from .errors import ContractViolation, ExperimentFormatError

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class PassRun:
    passed: int
    tested: int
    input_params: dict | str = "sampled"

    def __post_init__(self) -> None:
        if not 0 <= self.passed <= self.tested or self.tested < 1:
            raise ContractViolation(f"Run needs 0 <= passed <= tested, got {self.passed}/{self.tested}")


@dataclass(frozen=True)
class MeanRun:
    mean_fidelity: float
    stderr: float
    samples: int

    def __post_init__(self) -> None:
        if self.stderr < 0 or self.samples < 1:
            raise ContractViolation(f"Run needs stderr >= 0 and samples >= 1, got {self.stderr}, {self.samples}")


@dataclass(frozen=True)
class ExperimentRecord:
    ensemble: EnsembleSpec
    runs: tuple[PassRun | MeanRun, ...]
    formula_id: str | None = None


@dataclass(frozen=True)
class Verdict:
    benchmark: BenchmarkValue
    observed: float
    stderr: float
    z_score: float
    certified_quantum: bool
    z_threshold: float = DEFAULT_Z
    notes: tuple[str, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {
            "benchmark": self.benchmark.as_dict(),
            "observed": self.observed,
            "stderr": self.stderr,
            "z_score": self.z_score,
            "z_threshold": self.z_threshold,
            "certified_quantum": self.certified_quantum,
            "notes": list(self.notes),
        }


def pool_runs(runs) -> tuple[float, float]:
    """Pooled fidelity estimate and its standard error.

    Pass/tested runs are pooled as one binomial sample (the standard error uses
    the smoothed rate (passed + 1/2)/(tested + 1) so that 0 or all passes still
    carry an uncertainty). Mean/stderr runs are pooled by inverse variance. A mix
    of both combines the two pooled estimates by inverse variance.
    """
    runs = list(runs)
    if not runs:
        raise ContractViolation("Experiment has no runs")
    estimates: list[tuple[float, float]] = []

    pass_runs = [run for run in runs if isinstance(run, PassRun)]
    if pass_runs:
        passed = sum(run.passed for run in pass_runs)
        tested = sum(run.tested for run in pass_runs)
        smoothed = (passed + 0.5) / (tested + 1.0)
        estimates.append((passed / tested, math.sqrt(smoothed * (1.0 - smoothed) / tested)))

    mean_runs = [run for run in runs if isinstance(run, MeanRun)]
    exact = [run for run in mean_runs if run.stderr == 0]
    if exact:
        # a run without error bars dominates any inverse-variance pool
        mean = sum(run.mean_fidelity * run.samples for run in exact) / sum(run.samples for run in exact)
        return mean, 0.0
    if mean_runs:
        weights = [1.0 / run.stderr**2 for run in mean_runs]
        total = sum(weights)
        mean = sum(w * run.mean_fidelity for w, run in zip(weights, mean_runs)) / total
        estimates.append((mean, math.sqrt(1.0 / total)))

    if len(estimates) == 1:
        return estimates[0]
    weights = [1.0 / stderr**2 for _, stderr in estimates]
    total = sum(weights)
    return sum(w * value for w, (value, _) in zip(weights, estimates)) / total, math.sqrt(1.0 / total)


def certify(record: ExperimentRecord, z: float = DEFAULT_Z) -> Verdict:
    """Compare the pooled fidelity with the classical threshold of the declared ensemble."""
    value = benchmark(record.ensemble, record.formula_id)
    observed, stderr = pool_runs(record.runs)
    excess = observed - value.fidelity_threshold
    notes = ["prior as declared by the experimenter"]
    if stderr > 0:
        z_score = excess / stderr
    else:
        z_score = math.copysign(math.inf, excess) if excess != 0 else 0.0
        notes.append("zero standard error")
    certified = z_score >= z and excess > 0
    _LOGGER.info(
        "Certification of %s: observed %.6g +- %.3g vs threshold %.6g (z=%.3g) -> %s",
        record.ensemble,
        observed,
        stderr,
        value.fidelity_threshold,
        z_score,
        "quantum" if certified else "not certified",
    )
    return Verdict(value, observed, stderr, z_score, certified, z, tuple(notes))


def _run_from_dict(data: dict) -> PassRun | MeanRun:
    if CONF_PASSED in data:
        return PassRun(data[CONF_PASSED], data[CONF_TESTED], data.get(CONF_INPUT_PARAMS, "sampled"))
    return MeanRun(data[CONF_MEAN_FIDELITY], data[CONF_STDERR], data[CONF_SAMPLES])


def experiment_from_dict(data: dict) -> ExperimentRecord:
    try:
        validated = EXPERIMENT_SCHEMA(data)
    except vol.Invalid as err:
        raise ExperimentFormatError(f"Invalid experiment record: {err}") from err
    spec, formula_id = spec_from_dict(validated[CONF_ENSEMBLE])
    try:
        runs = tuple(_run_from_dict(run) for run in validated[CONF_RUNS])
    except ContractViolation as err:
        raise ExperimentFormatError(f"Invalid experiment run: {err}") from err
    return ExperimentRecord(spec, runs, formula_id)


def load_experiment(text: str) -> ExperimentRecord:
    """Parse an experiment file; JSON errors carry line and column."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ExperimentFormatError(
            f"Malformed experiment JSON at line {err.lineno}, column {err.colno}: {err.msg}",
            err.lineno,
            err.colno,
        ) from err
    if not isinstance(data, dict):
        raise ExperimentFormatError("Experiment file must hold a JSON object")
    return experiment_from_dict(data)
