"""
Coordinator for verification runs and game simulations.

The hub owns one validated run configuration. Numerical work is pushed to the
event loop's executor so that callers (the CLI, notebooks, services) can await
it and receive each finished result through registered callbacks.
"""

from __future__ import annotations

import asyncio
import functools
import importlib.metadata
import inspect
import logging
import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import voluptuous as vol

from .benchmarks import EnsembleSpec, benchmark
from .config_flow import HUB_SCHEMA, spec_to_dict
from .const import (
    CONF_N_MAX,
    CONF_NAME,
    CONF_Z,
    DOMAIN,
    QUADRATURE_TOLERANCE,
    SCHEME_MONTE_CARLO,
)
from .errors import ContractViolation, ImproperPriorError, QBenchError, TruncationError
from .game_sim import Strategy, TrialBatch, run_game
from .operators import build_A, norm_tolerance, operator_norm
from .oracle import QuadratureConfig, cft_numeric

_LOGGER = logging.getLogger(__name__)
_WARNINGS_LOGGER = logging.getLogger("py.warnings")


async def _get_package_version(package_name: str) -> str:
    loop = asyncio.get_running_loop()
    try:
        return await loop.run_in_executor(None, importlib.metadata.version, package_name)
    except importlib.metadata.PackageNotFoundError:
        return "unknown"


def _sync_library_logging() -> None:
    """Route numpy/scipy warnings through logging at the package's level."""
    logging.captureWarnings(True)
    _WARNINGS_LOGGER.setLevel(logging.getLogger(DOMAIN).getEffectiveLevel())
    _WARNINGS_LOGGER.propagate = True


@dataclass
class VerificationRow:
    name: str
    spec: dict
    formula_id: str | None
    closed_form: float | None = None
    oracle: float | None = None
    oracle_error: float | None = None
    oracle_tolerance: float | None = None
    operator_norm: float | None = None
    norm_tolerance: float | None = None
    passed: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def oracle_delta(self) -> float | None:
        if self.closed_form is None or self.oracle is None:
            return None
        return self.oracle - self.closed_form

    @property
    def norm_delta(self) -> float | None:
        if self.closed_form is None or self.operator_norm is None:
            return None
        return self.operator_norm - self.closed_form

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "spec": self.spec,
            "formula_id": self.formula_id,
            "closed_form": self.closed_form,
            "oracle": self.oracle,
            "oracle_error": self.oracle_error,
            "oracle_delta": self.oracle_delta,
            "oracle_tolerance": self.oracle_tolerance,
            "operator_norm": self.operator_norm,
            "norm_delta": self.norm_delta,
            "norm_tolerance": self.norm_tolerance,
            "passed": self.passed,
            "notes": self.notes,
        }


@dataclass
class VerificationReport:
    scheme: str
    seed: int
    rows: list[VerificationRow]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def failures(self) -> list[VerificationRow]:
        return [row for row in self.rows if not row.passed]

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "passed": self.passed,
            "rows": [row.as_dict() for row in self.rows],
        }


class Hub:
    """Runs verifications and simulations for one configuration."""

    def __init__(self, config: dict | None = None) -> None:
        try:
            self.config = HUB_SCHEMA(dict(config or {}))
        except vol.Invalid as err:
            raise ContractViolation(f"Invalid hub configuration: {err}") from err

        self.state = "Initializing"
        self.name = self.config[CONF_NAME]
        self.n_max = self.config[CONF_N_MAX]
        self.z = self.config[CONF_Z]
        self.quadrature = QuadratureConfig.from_dict(self.config)
        self._callbacks: list[Callable] = []

        self.specs_verified = 0
        self.verification_failures = 0
        self.trials_run = 0

        _LOGGER.info(
            "Configuring hub %s with scheme: %s, nodes: %s, mc_samples: %s, seed: %s, workers: %s, n_max: %s, z: %s",
            self.name,
            self.quadrature.scheme,
            self.quadrature.nodes_per_dim,
            self.quadrature.mc_samples,
            self.quadrature.seed,
            self.quadrature.workers,
            self.n_max,
            self.z,
        )

    def register_result_callback(self, callback: Callable) -> None:
        _LOGGER.debug("Result callback registered for %s", self.name)
        self._callbacks.append(callback)

    async def _notify(self, result) -> None:
        for callback in self._callbacks:
            outcome = callback(result)
            if inspect.isawaitable(outcome):
                await outcome

    async def log_versions(self) -> None:
        versions = {name: await _get_package_version(name) for name in (DOMAIN, "numpy", "scipy")}
        _LOGGER.info(
            "qbench version: %s. numpy version: %s. scipy version: %s",
            versions[DOMAIN],
            versions["numpy"],
            versions["scipy"],
        )

    async def _run(self, func, *args, **kwargs):
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, functools.partial(func, *args, **kwargs))

    def _oracle_tolerance(self, error: float) -> float:
        if self.quadrature.scheme == SCHEME_MONTE_CARLO:
            return self.z * error
        return max(QUADRATURE_TOLERANCE, 10.0 * error)

    async def _verify_one(self, index: int, spec: EnsembleSpec, formula_id: str | None, name: str | None):
        row = VerificationRow(name or f"spec-{index}", spec_to_dict(spec, formula_id), formula_id)
        try:
            row.closed_form = (await self._run(benchmark, spec, formula_id)).fidelity_threshold
            numeric = await self._run(cft_numeric, spec, self.quadrature)
        except QBenchError as err:
            _LOGGER.warning("Verification of %s failed: %s", row.name, err)
            row.notes.append(str(err))
            return row

        row.oracle = numeric.fidelity_threshold
        row.oracle_error = numeric.error_estimate
        row.oracle_tolerance = self._oracle_tolerance(numeric.error_estimate)
        checks = [abs(row.oracle_delta) <= row.oracle_tolerance]

        kind = spec.family.kind
        if kind.has_operator_model and spec.k_weights is None:
            try:
                op = await self._run(build_A, spec, self.n_max)
                row.operator_norm = await self._run(operator_norm, op)
                row.norm_tolerance = norm_tolerance(spec)
                checks.append(abs(row.norm_delta) <= row.norm_tolerance)
            except (ImproperPriorError, TruncationError) as err:
                _LOGGER.debug("No operator check for %s: %s", row.name, err)
                row.notes.append(f"operator norm skipped: {err}")

        row.passed = all(checks) and not math.isnan(row.oracle)
        _LOGGER.debug("Verified %s: %s", row.name, row.as_dict())
        return row

    async def verify(self, specs: Iterable) -> VerificationReport:
        """Closed form vs oracle vs operator norm for each (spec, formula_id[, name])."""
        specs = list(specs)
        _LOGGER.info("Verifying %d specs with scheme %s", len(specs), self.quadrature.scheme)
        self.state = "Running"
        rows = []
        try:
            for index, entry in enumerate(specs):
                spec, formula_id, *rest = entry if isinstance(entry, tuple) else (entry, None)
                row = await self._verify_one(index, spec, formula_id, rest[0] if rest else None)
                self.specs_verified += 1
                if not row.passed:
                    self.verification_failures += 1
                rows.append(row)
                await self._notify(row)
        except Exception:
            self.state = "Failed"
            raise
        report = VerificationReport(self.quadrature.scheme, self.quadrature.seed, rows)
        self.state = "Done"
        _LOGGER.info("Verification finished: %d rows, %d failures", len(rows), len(report.failures))
        return report

    async def simulate(self, spec: EnsembleSpec, strategy: Strategy, trials: int) -> TrialBatch:
        """Split the trials over the configured workers and merge their batches in order."""
        if trials < 1:
            raise ContractViolation(f"Trial count must be >= 1, got {trials}")
        workers = self.quadrature.workers
        seed = self.quadrature.seed
        shares = [trials // workers + (1 if i < trials % workers else 0) for i in range(workers)]
        _LOGGER.info("Simulating %d trials of %s on %s with %d workers", trials, strategy.name, spec, workers)
        self.state = "Running"
        try:
            batches = await asyncio.gather(
                *(
                    self._run(run_game, spec, strategy, share, seed, worker=worker)
                    for worker, share in enumerate(shares)
                    if share > 0
                )
            )
        except Exception:
            self.state = "Failed"
            raise
        merged = functools.reduce(TrialBatch.merge, batches)
        self.trials_run += merged.trials
        self.state = "Done"
        await self._notify(merged)
        return merged
