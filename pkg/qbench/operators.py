"""Averaged operators ρ, Ω and the rescaled operator A = (I⊗ρ^{-1/2}) Ω (I⊗ρ^{-1/2}).

Qudit operators live on symmetric subspaces indexed by occupation partitions.
Perelomov operators live on truncated ladders |J, n⟩ (J = jN), with the
output-input product space ordered by total excitation so that A is block
diagonal with rank-one blocks.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import integrate, linalg, sparse, special
from scipy.sparse import linalg as sparse_linalg

from .benchmarks import EnsembleSpec, benchmark
from .const import PERELOMOV_NORM_TOLERANCE, QUDIT_NORM_TOLERANCE
from .ensembles import (
    FamilyType,
    Squeezing,
    log_cosh,
    log_prior_density,
    state_vector,
)
from .errors import (
    ContractViolation,
    ImproperPriorError,
    TruncationError,
    UnsupportedEnsembleError,
)
from .oracle import QuadratureConfig, compact_grid
from .special_math import log_binom_real, multinomial, partitions

_LOGGER = logging.getLogger(__name__)

BASIS_SYMMETRIC_QUDIT = "symmetric_qudit"
BASIS_PERELOMOV_LADDER = "perelomov_ladder"
BASIS_PRODUCT = "product"

DENSE_LIMIT = 2000
PINV_THRESHOLD = 1e-12
HERMITIAN_TOLERANCE = 1e-12
DEFAULT_TAIL_MASS = 1e-10
_CHUNK = 4096


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


@dataclass(frozen=True)
class BasisDescriptor:
    """Orthonormal basis an operator is written in.

    ``factors`` lists the (output, input) dimensions of a product basis and
    ``blocks`` groups indices into invariant subspaces of the operator.
    """

    kind: str
    dimension: int
    labels: tuple = ()
    factors: tuple[int, ...] = ()
    blocks: tuple[tuple[int, ...], ...] = ()
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.labels and len(self.labels) != self.dimension:
            raise ContractViolation(
                f"Basis has {len(self.labels)} labels for dimension {self.dimension}"
            )
        if self.factors and math.prod(self.factors) != self.dimension:
            raise ContractViolation(f"Factors {self.factors} do not multiply to {self.dimension}")

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "labels": [list(label) if isinstance(label, tuple) else label for label in self.labels],
            "factors": list(self.factors),
            "blocks": [list(block) for block in self.blocks],
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, data: dict) -> BasisDescriptor:
        return cls(
            kind=data["kind"],
            dimension=int(data["dimension"]),
            labels=_tuplify(data.get("labels", [])),
            factors=tuple(data.get("factors", [])),
            blocks=_tuplify(data.get("blocks", [])),
            params=dict(data.get("params", {})),
        )


@dataclass(frozen=True)
class HermitianOperator:
    """Immutable Hermitian matrix (dense ndarray or scipy sparse) plus its basis."""

    basis: BasisDescriptor
    matrix: np.ndarray | sparse.spmatrix

    def __post_init__(self) -> None:
        matrix = self.matrix
        if matrix.shape != (self.basis.dimension, self.basis.dimension):
            raise ContractViolation(
                f"Matrix shape {matrix.shape} does not match basis dimension {self.basis.dimension}"
            )
        if sparse.issparse(matrix):
            matrix = sparse.csr_matrix(matrix)
            deviation = abs(matrix - matrix.conj().T).max() if matrix.nnz else 0.0
            scale = abs(matrix).max() if matrix.nnz else 0.0
        else:
            matrix = np.array(matrix, dtype=complex)
            deviation = np.max(np.abs(matrix - matrix.conj().T), initial=0.0)
            scale = np.max(np.abs(matrix), initial=0.0)
            matrix.setflags(write=False)
        if deviation > HERMITIAN_TOLERANCE * max(1.0, scale):
            raise ContractViolation(f"Operator is not Hermitian (max deviation {deviation:.3g})")
        object.__setattr__(self, "matrix", matrix)

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    @property
    def trace(self) -> float:
        return float(np.real(self.matrix.diagonal().sum()))


# --- qudit symmetric subspaces ---


def symmetric_dimension(N: int, d: int) -> int:
    return math.comb(N + d - 1, d - 1)


def embed_batch(vectors: np.ndarray, N: int, labels: Sequence[tuple[int, ...]]) -> np.ndarray:
    """Coefficients of |ψ⟩^{⊗N} on |N, n⟩ for each row of ``vectors``."""
    out = np.empty((vectors.shape[0], len(labels)), dtype=complex)
    for col, label in enumerate(labels):
        term = np.full(vectors.shape[0], math.sqrt(multinomial(N, label).value), dtype=complex)
        for j, power in enumerate(label):
            if power:
                term = term * vectors[:, j] ** power
        out[:, col] = term
    return out


def symmetric_embed(psi_coeffs: Sequence[complex], N: int) -> np.ndarray:
    """Expand |ψ⟩^{⊗N} on the symmetric basis, ordered as :func:`partitions`."""
    psi = np.asarray(psi_coeffs, dtype=complex)
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > 1e-9:
        raise ContractViolation(f"Input vector must be normalized, got norm {norm}")
    labels = partitions(N, psi.size)
    return embed_batch(psi[None, :], N, labels)[0]


def _qudit_basis(N: int, d: int) -> BasisDescriptor:
    labels = tuple(partitions(N, d))
    return BasisDescriptor(BASIS_SYMMETRIC_QUDIT, len(labels), labels, params={"N": N, "d": d})


def _rho_qudit_eigenvalues(N: int, d: int, beta: float, labels) -> np.ndarray:
    # d_β C(N, n) / (C(N+β+d-1, d-1) C(N+β, n+β e_0))
    log_norm = log_binom_real(beta + d - 1, d - 1) - log_binom_real(N + beta + d - 1, d - 1)
    values = []
    for label in labels:
        shifted = multinomial(N, label).log - (
            math.lgamma(N + beta + 1)
            - math.lgamma(label[0] + beta + 1)
            - sum(math.lgamma(n + 1) for n in label[1:])
        )
        values.append(math.exp(log_norm + shifted))
    return np.asarray(values)


def build_rho_qudit(N: int, d: int, beta: float) -> HermitianOperator:
    """Average input state ∫ p_β |ψ_g⟩⟨ψ_g|^{⊗N}, diagonal on |N, n⟩."""
    basis = _qudit_basis(N, d)
    return HermitianOperator(basis, np.diag(_rho_qudit_eigenvalues(N, d, beta, basis.labels)))


def build_omega_qudit(N: int, M: int, d: int, beta: float) -> HermitianOperator:
    """Average of |ψ_g⟩⟨ψ_g|^{⊗(M+N)} on the joint symmetric space."""
    return build_rho_qudit(M + N, d, beta)


def _pinv_sqrt(values: np.ndarray) -> np.ndarray:
    threshold = PINV_THRESHOLD * float(np.max(values))
    out = np.zeros_like(values, dtype=float)
    support = values > threshold
    out[support] = 1.0 / np.sqrt(values[support])
    return out


def build_A_qudit(N: int, M: int, d: int, beta: float) -> HermitianOperator:
    """Rescaled Ω on Sym_M ⊗ Sym_N (output first).

    |M+N, t⟩ splits into Σ_{m+n=t} sqrt(C(M,m) C(N,n) / C(M+N,t)) |M,m⟩|N,n⟩.
    """
    out_labels = tuple(partitions(M, d))
    in_labels = tuple(partitions(N, d))
    joint_labels = tuple(partitions(M + N, d))
    joint_index = {label: idx for idx, label in enumerate(joint_labels)}
    rho_inv_sqrt = _pinv_sqrt(_rho_qudit_eigenvalues(N, d, beta, in_labels))
    omega = _rho_qudit_eigenvalues(M + N, d, beta, joint_labels)

    labels = tuple(itertools.product(out_labels, in_labels))
    splitting = np.zeros((len(labels), len(joint_labels)))
    groups: dict[int, list[int]] = {}
    for row, (m, n) in enumerate(labels):
        t = tuple(a + b for a, b in zip(m, n))
        col = joint_index[t]
        log_coeff = 0.5 * (
            multinomial(M, m).log + multinomial(N, n).log - multinomial(M + N, t).log
        )
        splitting[row, col] = math.exp(log_coeff) * rho_inv_sqrt[row % len(in_labels)]
        groups.setdefault(col, []).append(row)

    matrix = (splitting * omega) @ splitting.T
    basis = BasisDescriptor(
        BASIS_PRODUCT,
        len(labels),
        labels,
        factors=(len(out_labels), len(in_labels)),
        blocks=tuple(tuple(rows) for _, rows in sorted(groups.items())),
        params={"family": "qudit", "N": N, "M": M, "d": d, "beta": beta},
    )
    _LOGGER.debug("Built qudit A for d=%d N=%d M=%d beta=%s (dim %d)", d, N, M, beta, len(labels))
    return HermitianOperator(basis, matrix)


# --- Perelomov ladders ---


def _require_proper(beta: float) -> None:
    if not beta > 0:
        raise ImproperPriorError("improper uniform prior has no ladder spectrum")


def _log_ladder_tail(index: float, beta: float, n_max: int) -> float:
    # Σ_{n>n_max} ρ_n = B(J+n_max+1, β/2) / B(J, β/2)
    a = 0.5 * beta
    return float(special.betaln(index + n_max + 1, a) - special.betaln(index, a))


def ladder_tail_mass(j: float, N: int, beta: float, n_max: int) -> float:
    """Eigenvalue mass of ρ_β above ``n_max``.

    The spectrum of ρ_β is the beta-negative-binomial law with n = jN, a = β/2,
    b = 1, whose survival function has a closed gamma-ratio form; the tail
    decays like n^{-β/2}.
    """
    _require_proper(beta)
    return math.exp(_log_ladder_tail(j * N, beta, n_max))


def suggest_n_max(j: float, N: int, beta: float, tail_mass: float = DEFAULT_TAIL_MASS) -> int:
    """Smallest cutoff whose dropped eigenvalue mass is below ``tail_mass``."""
    _require_proper(beta)
    if not 0 < tail_mass < 1:
        raise ContractViolation(f"Tail mass must lie in (0, 1), got {tail_mass}")
    index, target = j * N, math.log(tail_mass)
    low, high = 0, 1
    while _log_ladder_tail(index, beta, high) > target:
        low, high = high, 2 * high
    while high - low > 1:
        mid = (low + high) // 2
        if _log_ladder_tail(index, beta, mid) > target:
            low = mid
        else:
            high = mid
    return 0 if _log_ladder_tail(index, beta, 0) <= target else high


def _check_tail(j: float, N: int, beta: float, n_max: int, max_tail_mass: float | None) -> None:
    if max_tail_mass is None:
        return
    tail = ladder_tail_mass(j, N, beta, n_max)
    if tail > max_tail_mass:
        suggested = suggest_n_max(j, N, beta, max_tail_mass)
        raise TruncationError(
            f"Cutoff n_max={n_max} drops eigenvalue mass {tail:.3g} > {max_tail_mass:.3g}; "
            f"use n_max >= {suggested}",
            suggested,
        )


def _ladder_eigenvalues(index: float, beta: float, n_max: int) -> np.ndarray:
    """β C(J+n-1, n) / ((2J+β) C(J+β/2+n, n)) for n = 0..n_max (β = 0 keeps the flat weight)."""
    width = beta if beta > 0 else 1.0
    head = math.log(width) - math.log(2.0 * index + beta)
    return np.exp(
        [
            head + log_binom_real(index + n - 1, n) - log_binom_real(index + 0.5 * beta + n, n)
            for n in range(n_max + 1)
        ]
    )


def _ladder_basis(index: float, n_max: int, **params) -> BasisDescriptor:
    return BasisDescriptor(
        BASIS_PERELOMOV_LADDER,
        n_max + 1,
        tuple(range(n_max + 1)),
        params={"index": index, "n_max": n_max, **params},
    )


def build_rho_perelomov(
    j: float, N: int, beta: float, n_max: int, max_tail_mass: float | None = None
) -> HermitianOperator:
    _check_tail(j, N, beta, n_max, max_tail_mass)
    values = _ladder_eigenvalues(j * N, beta, n_max)
    return HermitianOperator(_ladder_basis(j * N, n_max, beta=beta), sparse.diags(values))


def build_omega_perelomov(
    k: float, j: float, M: int, N: int, beta: float, n_max: int
) -> HermitianOperator:
    index = k * M + j * N
    values = _ladder_eigenvalues(index, beta, n_max)
    return HermitianOperator(_ladder_basis(index, n_max, beta=beta), sparse.diags(values))


def build_A_perelomov(
    k: float,
    j: float,
    M: int,
    N: int,
    beta: float,
    n_max: int,
    max_tail_mass: float | None = None,
) -> HermitianOperator:
    """Rescaled Ω on the output-input ladder product with a + b <= n_max.

    Each block of total excitation m carries the single vector
    Σ_{a+b=m} sqrt(C(a+K-1,a) C(b+J-1,b) / C(m+K+J-1,m)) ρ_b^{-1/2} |a⟩|b⟩.
    """
    _check_tail(j, N, beta, n_max, max_tail_mass)
    out_index, in_index = k * M, j * N
    rho_inv_sqrt = _pinv_sqrt(_ladder_eigenvalues(in_index, beta, n_max))
    omega = _ladder_eigenvalues(out_index + in_index, beta, n_max)

    labels: list[tuple[int, int]] = []
    blocks = []
    pieces = []
    for m in range(n_max + 1):
        start = len(labels)
        vector = np.empty(m + 1)
        for b in range(m + 1):
            a = m - b
            labels.append((a, b))
            log_coeff = 0.5 * (
                log_binom_real(a + out_index - 1, a)
                + log_binom_real(b + in_index - 1, b)
                - log_binom_real(m + out_index + in_index - 1, m)
            )
            vector[b] = math.exp(log_coeff) * rho_inv_sqrt[b]
        blocks.append(tuple(range(start, len(labels))))
        pieces.append(omega[m] * np.outer(vector, vector))

    basis = BasisDescriptor(
        BASIS_PRODUCT,
        len(labels),
        tuple(labels),
        blocks=tuple(blocks),
        params={"family": "perelomov", "k": k, "j": j, "M": M, "N": N, "beta": beta, "n_max": n_max},
    )
    _LOGGER.debug("Built Perelomov A for %s (dim %d)", basis.params, len(labels))
    return HermitianOperator(basis, sparse.block_diag(pieces, format="csr"))


def perelomov_ladder_vector(
    k: float, j: float, M: int, N: int, n: int, n_cap: int
) -> np.ndarray:
    """|Ψ^{(k,j)}_{M,N,n}⟩ in the (M+N)-mode Fock product, each mode cut at ``n_cap``.

    Built from the partition sum over photon numbers of all modes (M output modes
    of index k, then N input modes of index j).
    """
    if n > n_cap:
        raise ContractViolation(f"Ladder level {n} exceeds the per-mode cutoff {n_cap}")
    modes = M + N
    indices = [k] * M + [j] * N
    log_norm = log_binom_real(n + k * M + j * N - 1, n)
    vector = np.zeros((n_cap + 1) ** modes)
    for part in partitions(n, modes):
        log_weight = sum(log_binom_real(p + idx - 1, p) for p, idx in zip(part, indices))
        flat = np.ravel_multi_index(part, (n_cap + 1,) * modes)
        vector[flat] = math.exp(0.5 * (log_weight - log_norm))
    return vector


# --- spectra and norms ---


def _check_hermitian(op) -> HermitianOperator:
    if not isinstance(op, HermitianOperator):
        raise ContractViolation(f"Expected a HermitianOperator, got {type(op).__name__}")
    return op


def _block_spectra(op: HermitianOperator):
    matrix = op.matrix.tocsr() if op.is_sparse else op.matrix
    for block in op.basis.blocks:
        idx = np.asarray(block)
        sub = matrix[idx][:, idx]
        yield linalg.eigvalsh(sub.toarray() if sparse.issparse(sub) else sub)


def spectrum(op: HermitianOperator) -> np.ndarray:
    """All eigenvalues in ascending order, computed block by block when possible."""
    op = _check_hermitian(op)
    if op.basis.blocks:
        return np.sort(np.concatenate(list(_block_spectra(op))))
    return linalg.eigvalsh(op.dense())


def nonzero_spectrum(op: HermitianOperator, threshold: float = PINV_THRESHOLD) -> np.ndarray:
    values = spectrum(op)
    scale = max(float(np.max(np.abs(values), initial=0.0)), 1.0)
    return values[np.abs(values) > threshold * scale]


def operator_norm(op: HermitianOperator) -> float:
    """Largest absolute eigenvalue."""
    op = _check_hermitian(op)
    if op.basis.blocks:
        return float(max(np.max(np.abs(values)) for values in _block_spectra(op)))
    if op.dimension <= DENSE_LIMIT:
        values = linalg.eigvalsh(op.dense())
        return float(max(abs(values[0]), abs(values[-1])))
    values = sparse_linalg.eigsh(op.matrix, k=1, which="LM", return_eigenvectors=False)
    return float(abs(values[0]))


def partial_transpose(op: HermitianOperator, factor: str = "input") -> HermitianOperator:
    """Transpose one tensor factor of a product-basis operator in its own basis."""
    op = _check_hermitian(op)
    if len(op.basis.factors) != 2:
        raise ContractViolation("Partial transpose needs a two-factor product basis")
    d_out, d_in = op.basis.factors
    tensor = op.dense().reshape(d_out, d_in, d_out, d_in)
    if factor == "input":
        tensor = tensor.transpose(0, 3, 2, 1)
    elif factor == "output":
        tensor = tensor.transpose(2, 1, 0, 3)
    else:
        raise ContractViolation(f"Unknown tensor factor: {factor}")
    basis = BasisDescriptor(
        op.basis.kind,
        op.basis.dimension,
        op.basis.labels,
        factors=op.basis.factors,
        params={**op.basis.params, "partial_transpose": factor},
    )
    return HermitianOperator(basis, tensor.reshape(op.dimension, op.dimension))


# --- numerical quantum fidelity ---


def _rescaled(omega: np.ndarray, rho: np.ndarray, d_out: int) -> np.ndarray:
    values, vectors = linalg.eigh(rho)
    inv_sqrt = (vectors * _pinv_sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T
    lift = np.kron(np.eye(d_out), inv_sqrt)
    return lift @ omega @ lift


def _compact_averages(spec: EnsembleSpec, cfg: QuadratureConfig, conjugate_target: bool):
    family = spec.family
    if family.kind == FamilyType.SPIN:
        d, n_in, n_out = 2, round(2 * family.j * spec.N), round(2 * family.k * spec.M)
    else:
        d, n_in, n_out = family.d, spec.N, spec.M
    in_labels, out_labels = partitions(n_in, d), partitions(n_out, d)
    nodes = min(cfg.nodes_per_dim, max(32, 2 * (n_in + n_out) + math.ceil(2 * spec.beta) + 2 * d))
    phase_nodes = max(cfg.phase_nodes, n_in + n_out + 1)
    points, weights = compact_grid(family, nodes, phase_nodes)
    weights = weights * np.exp(log_prior_density(spec.prior, points))

    dim_in, dim_out = len(in_labels), len(out_labels)
    omega = np.zeros((dim_out * dim_in,) * 2, dtype=complex)
    rho = np.zeros((dim_in, dim_in), dtype=complex)
    for start in range(0, len(weights), _CHUNK):
        chunk = points.take(slice(start, start + _CHUNK))
        w = weights[start : start + _CHUNK]
        psi = state_vector(family, chunk)
        # input factor enters transposed
        x_in = embed_batch(np.conj(psi), n_in, in_labels)
        x_out = embed_batch(np.conj(psi) if conjugate_target else psi, n_out, out_labels)
        joint = np.einsum("pi,pj->pij", x_out, x_in).reshape(len(w), -1)
        omega += (joint * w[:, None]).T @ joint.conj()
        rho += (x_in * w[:, None]).T @ x_in.conj()
    return omega, rho, dim_out


def _ladder_coefficients(index: float, n_max: int) -> np.ndarray:
    return np.exp([0.5 * log_binom_real(n + index - 1, n) for n in range(n_max + 1)])


def _perelomov_averages(spec: EnsembleSpec, cfg: QuadratureConfig, n_max: int, conjugate_target: bool):
    family = spec.family
    out_index, in_index = family.k * spec.M, family.j * spec.N
    c_out = _ladder_coefficients(out_index, n_max)
    c_in = _ladder_coefficients(in_index, n_max)
    levels = np.arange(n_max + 1)
    phase_nodes = max(cfg.phase_nodes, 4 * n_max + 1)
    theta = np.arange(phase_nodes) * (2.0 * math.pi / phase_nodes)
    dim = n_max + 1

    def slice_at(u: float) -> np.ndarray:
        s = u / (1.0 - u)
        g = Squeezing(np.full(phase_nodes, s), theta)
        w = np.exp(log_prior_density(spec.prior, g)) * (2.0 * math.pi / phase_nodes) / (1.0 - u) ** 2
        rate = np.tanh(s) * np.exp(1j * theta)
        ladder = rate[:, None] ** levels
        x_out = math.exp(-out_index * float(log_cosh(s))) * c_out * ladder
        x_in = math.exp(-in_index * float(log_cosh(s))) * c_in * np.conj(ladder)
        if conjugate_target:
            x_out = np.conj(x_out)
        joint = np.einsum("pi,pj->pij", x_out, x_in).reshape(phase_nodes, -1)
        omega = (joint * w[:, None]).T @ joint.conj()
        rho = (x_in * w[:, None]).T @ x_in.conj()
        return np.concatenate([omega.ravel(), rho.ravel()])

    packed, _ = integrate.quad_vec(slice_at, 0.0, cfg.noncompact_cutoff, epsrel=1e-11, norm="max")
    omega = packed[: dim**4].reshape(dim * dim, dim * dim)
    rho = packed[dim**4 :].reshape(dim, dim)
    return omega, rho, dim


def quantum_fidelity_numeric(
    spec: EnsembleSpec,
    cfg: QuadratureConfig | None = None,
    n_max: int = 8,
    conjugate_target: bool = False,
) -> float:
    """‖(I⊗ρ^{-1/2}) Ω^{Θ_in} (I⊗ρ^{-1/2})‖ from a quadrature average of T_g ⊗ ρ_g^T.

    ``conjugate_target`` replaces the target |ψ_g⟩^{⊗M} by its complex conjugate.
    Perelomov families are truncated to ``n_max`` quanta per factor.
    """
    cfg = cfg or QuadratureConfig()
    kind = spec.family.kind
    if kind in (FamilyType.QUDIT, FamilyType.SPIN):
        omega, rho, dim_out = _compact_averages(spec, cfg, conjugate_target)
    elif kind in (FamilyType.PERELOMOV, FamilyType.SQUEEZED_VACUUM):
        omega, rho, dim_out = _perelomov_averages(spec, cfg, n_max, conjugate_target)
    else:
        raise UnsupportedEnsembleError(f"No finite operator model for {spec.family}")
    rescaled = _rescaled(0.5 * (omega + omega.conj().T), 0.5 * (rho + rho.conj().T), dim_out)
    values = linalg.eigvalsh(0.5 * (rescaled + rescaled.conj().T))
    fidelity = float(max(abs(values[0]), abs(values[-1])))
    _LOGGER.info("Quantum fidelity for %s (conjugate=%s): %.12g", spec, conjugate_target, fidelity)
    return fidelity


def build_A(spec: EnsembleSpec, n_max: int = 80) -> HermitianOperator:
    """Rescaled Ω for any family with an operator model."""
    family = spec.family
    kind = family.kind
    if kind == FamilyType.QUDIT:
        return build_A_qudit(spec.N, spec.M, family.d, spec.beta)
    if kind == FamilyType.SPIN:
        return build_A_qudit(round(2 * family.j * spec.N), round(2 * family.k * spec.M), 2, spec.beta)
    if kind in (FamilyType.PERELOMOV, FamilyType.SQUEEZED_VACUUM):
        return build_A_perelomov(family.k, family.j, spec.M, spec.N, spec.beta, n_max)
    raise UnsupportedEnsembleError(f"No finite operator model for {family}")


def norm_tolerance(spec: EnsembleSpec) -> float:
    return QUDIT_NORM_TOLERANCE if spec.family.kind.is_compact else PERELOMOV_NORM_TOLERANCE


class ConjugationCheck(NamedTuple):
    quantum: float
    classical: float
    gap: float


def conjugation_no_advantage_check(
    spec: EnsembleSpec,
    n_max: int = 60,
    route: str = "quadrature",
    cfg: QuadratureConfig | None = None,
) -> ConjugationCheck:
    """Quantum vs classical threshold for the target |ψ*_g⟩^{⊗M}.

    ``route="quadrature"`` (default) assembles the conjugated task directly and
    diagonalizes it; ``route="operator"`` takes F_q as the norm of the
    un-conjugated rescaled Ω.
    """
    if not spec.family.kind.has_operator_model:
        raise UnsupportedEnsembleError(f"No finite operator model for {spec.family}")
    classical = benchmark(spec).fidelity_threshold
    if route == "operator":
        quantum = operator_norm(build_A(spec, n_max))
    elif route == "quadrature":
        quantum = quantum_fidelity_numeric(spec, cfg, n_max=min(n_max, 8), conjugate_target=True)
    else:
        raise ContractViolation(f"Unknown route: {route}")
    return ConjugationCheck(quantum, classical, quantum - classical)


# --- debug dumps ---


def dump_operator(op: HermitianOperator, path: str | Path) -> None:
    """Header line with the basis as JSON, then one row per line of ``re im`` pairs."""
    dense = op.dense()
    header = {"basis": op.basis.as_dict(), "shape": list(dense.shape)}
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(json.dumps(header) + "\n")
        for row in dense:
            handle.write(" ".join(f"{float(v.real)!r} {float(v.imag)!r}" for v in row) + "\n")


def load_operator(path: str | Path) -> HermitianOperator:
    with open(path, encoding="utf-8") as handle:
        header = json.loads(handle.readline())
        rows = [np.asarray(line.split(), dtype=float) for line in handle if line.strip()]
    pairs = np.asarray(rows).reshape(header["shape"][0], header["shape"][1], 2)
    return HermitianOperator(BasisDescriptor.from_dict(header["basis"]), pairs[..., 0] + 1j * pairs[..., 1])
