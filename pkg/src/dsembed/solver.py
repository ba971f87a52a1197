"""Simplex-constrained KL matrix factorization by relaxed multiplicative updates.

Given a sparse symmetric similarity matrix S (n x n, zero diagonal), finds a
strictly positive n x r matrix W with rows on the probability simplex that
minimizes the generalized KL divergence

    D(S || Shat) = sum_ij [ S_ij log(S_ij / Shat_ij) - S_ij + Shat_ij ]

with Shat_ij = sum_k W_ik W_jk / s_k and s_k = sum_v W_vk. Shat is doubly
stochastic when W's rows sum to 1. The row-sum constraints are handled by
Lagrange multipliers folded into the multiplicative rule:

    W_ik <- W_ik (grad_minus_ik a_i + 1) / (grad_plus_ik a_i + b_i)

where grad_minus_ik = 2 (Z W)_ik / s_k, grad_plus_ik = (W^T Z W)_kk / s_k^2,
Z_ij = S_ij / Shat_ij on S's support, a_i = sum_l W_il / grad_plus_il and
b_i = sum_l W_il grad_minus_il / grad_plus_il. Each step never increases the
Lagrangian evaluated at the pre-update multipliers lambda_i = (b_i - 1)/a_i.

Note the full gradient of D also carries a +1 per entry from the +Shat_ij
mass term; the constraint multipliers absorb that constant, so it does not
appear in the update. Finite-difference checks must compare against
grad_plus - grad_minus + 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .corpus import SimilarityMatrix
from .errors import ConfigError, InputError, NumericalCollapseError

SHAT_FLOOR = 1e-300
_CHUNK = 1 << 18


@dataclass
class TrainConfig:
    rank: int
    max_iters: int = 500
    conv_tol: float = 1e-6
    simplex_tol: float = 1e-3
    seed: int = 0
    objective_every: int = 1

    def validate(self) -> None:
        if self.rank < 1:
            raise ConfigError(f"rank must be >= 1, got {self.rank}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.conv_tol <= 0 or self.simplex_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.objective_every < 1:
            raise ConfigError("objective_every must be >= 1")


@dataclass
class TrainResult:
    W: np.ndarray                # rows renormalized to exact simplex
    trace: np.ndarray            # objective after 0, 1, ..., iterations updates
    log_rows: list[tuple]        # (iter, objective, max_row_sum_err, max_delta)
    iterations: int
    converged: bool
    simplex_residual: float      # max row-sum error before final renormalization


def _csr(S) -> sp.csr_matrix:
    if isinstance(S, SimilarityMatrix):
        return S.mat
    if sp.issparse(S):
        m = S.tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return m
    return sp.csr_matrix(np.asarray(S, dtype=np.float64))


def initialize(n: int, r: int, seed: int) -> np.ndarray:
    """Positive start: i.i.d. uniform(0.5, 1.5) entries, rows scaled to sum 1."""
    if r < 1:
        raise ConfigError(f"rank must be >= 1, got {r}")
    if r > n:
        raise ConfigError(f"rank {r} exceeds matrix dimension {n}")
    rng = np.random.default_rng(seed)
    W = rng.uniform(0.5, 1.5, size=(n, r))
    W /= W.sum(axis=1, keepdims=True)
    return W


def _shat_values(A: sp.csr_matrix, W: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Shat at A's stored nonzeros, in csr data order, without forming Shat."""
    if not np.isfinite(s).all() or s.min() <= 0.0:
        raise NumericalCollapseError("a topic column sum is zero or non-finite")
    rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
    cols = A.indices
    Wn = W / s
    out = np.empty(A.nnz)
    for lo in range(0, A.nnz, _CHUNK):
        hi = min(lo + _CHUNK, A.nnz)
        out[lo:hi] = np.einsum("mk,mk->m", Wn[rows[lo:hi]], W[cols[lo:hi]])
    return out


def compute_shat_at(S, W: np.ndarray) -> np.ndarray:
    """Values of Shat = W diag(1/s) W^T at S's stored nonzeros."""
    A = _csr(S)
    return _shat_values(A, W, W.sum(axis=0))


def compute_z(S, shat_nz: np.ndarray) -> sp.csr_matrix:
    """Ratio Z = S / Shat on S's support, zero elsewhere."""
    A = _csr(S)
    if shat_nz.shape != A.data.shape:
        raise InputError("shat values do not align with S's stored nonzeros")
    if shat_nz.min() < SHAT_FLOOR:
        raise NumericalCollapseError(
            "Shat underflowed below 1e-300 at a nonzero of S"
        )
    return sp.csr_matrix((A.data / shat_nz, A.indices, A.indptr), shape=A.shape)


def gradient_parts(Z: sp.csr_matrix, W: np.ndarray):
    """Nonnegative gradient split of the KL term (mass term excluded).

    Returns (grad_minus, grad_plus, s) where grad_minus = 2 (Z W) / s and
    grad_plus_ik = (W^T Z W)_kk / s_k^2, constant down each column.
    """
    s = W.sum(axis=0)
    ZW = Z @ W
    grad_minus = 2.0 * ZW / s
    diag = np.einsum("ik,ik->k", W, ZW)
    grad_plus = np.broadcast_to(diag / s**2, W.shape)
    return grad_minus, grad_plus, s


def lagrange_coefficients(W: np.ndarray, grad_minus, grad_plus):
    """Per-row coefficients a_i, b_i and multipliers lambda_i = (b_i - 1)/a_i."""
    if np.asarray(grad_plus).min() <= 0.0:
        raise NumericalCollapseError("grad_plus has a non-positive entry")
    ratio = W / grad_plus
    a = ratio.sum(axis=1)
    b = (ratio * grad_minus).sum(axis=1)
    return a, b, (b - 1.0) / a


def update(W: np.ndarray, grad_minus, grad_plus, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """One relaxed multiplicative step; preserves strict positivity."""
    num = grad_minus * a[:, None] + 1.0
    den = grad_plus * a[:, None] + b[:, None]
    return W * (num / den)


def objective(S, W: np.ndarray) -> float:
    """Generalized KL divergence D(S || Shat), evaluated on S's support.

    Uses sum_ij Shat_ij = sum_k s_k so the dense matrix is never formed.
    """
    A = _csr(S)
    s = W.sum(axis=0)
    shat = _shat_values(A, W, s)
    if A.nnz and shat.min() < SHAT_FLOOR:
        raise NumericalCollapseError("Shat underflowed below 1e-300 at a nonzero of S")
    kl = float(np.dot(A.data, np.log(A.data / shat))) if A.nnz else 0.0
    return kl - float(A.data.sum()) + float(s.sum())


def lagrangian(S, W: np.ndarray, lam: np.ndarray) -> float:
    """Constrained objective whose descent the update rule guarantees.

    L(W, lam) = sum_nz [S log(S/Shat) - S] + sum_i lam_i (sum_k W_ik - 1).

    The multipliers lam_i = (b_i - 1)/a_i pair with the similarity-fit term,
    whose gradient is exactly the grad_plus - grad_minus split; the total-mass
    term sum_k s_k has unit gradient per entry and is what lam absorbs (it
    equals sum_i row_i, so folding it in only shifts every lam_i by one).
    Each multiplicative step never increases this L at the pre-update lam;
    the unnormalized divergence D itself is not monotone in general.
    """
    A = _csr(S)
    s = W.sum(axis=0)
    shat = _shat_values(A, W, s)
    if A.nnz and shat.min() < SHAT_FLOOR:
        raise NumericalCollapseError("Shat underflowed below 1e-300 at a nonzero of S")
    fit = float(np.dot(A.data, np.log(A.data / shat))) - float(A.data.sum()) if A.nnz else 0.0
    return fit + float(np.dot(lam, W.sum(axis=1) - 1.0))


def train(S, config: TrainConfig, W0: np.ndarray | None = None) -> TrainResult:
    """Run the multiplicative-update loop until conv_tol or max_iters.

    Stops when max|W_new - W| < conv_tol. The returned W has its rows
    renormalized to the exact simplex; the pre-normalization residual is
    reported in the result.
    """
    config.validate()
    A = _csr(S)
    n = A.shape[0]
    if config.rank > n:
        raise ConfigError(f"rank {config.rank} exceeds matrix dimension {n}")
    degree = np.diff(A.indptr)
    if np.any(degree == 0):
        empty = np.flatnonzero(degree == 0)
        raise InputError(
            f"{len(empty)} rows of S have no nonzeros (first: {int(empty[0])}); "
            "prune them before training"
        )
    if W0 is not None:
        W = np.array(W0, dtype=np.float64)
        if W.shape != (n, config.rank) or W.min() <= 0.0:
            raise ConfigError("W0 must be strictly positive with shape (n, rank)")
    else:
        W = initialize(n, config.rank, config.seed)

    total_S = float(A.data.sum())
    Z = sp.csr_matrix((A.data.copy(), A.indices, A.indptr), shape=A.shape)
    trace: list[float] = []
    log_rows: list[tuple] = []
    pending = None  # (iter, row_err, delta) awaiting the post-update objective
    delta = np.inf
    row_err = np.nan
    converged = False
    iterations = 0

    def _objective_for(W_cur):
        s = W_cur.sum(axis=0)
        shat = _shat_values(A, W_cur, s)
        if shat.min() < SHAT_FLOOR:
            raise NumericalCollapseError(
                f"Shat underflowed at iteration {iterations}"
            )
        z = A.data / shat
        obj = float(np.dot(A.data, np.log(z))) - total_S + float(s.sum())
        return s, z, obj

    for it in range(1, config.max_iters + 1):
        s, z, obj = _objective_for(W)
        trace.append(obj)
        if pending is not None and pending[0] % config.objective_every == 0:
            log_rows.append((pending[0], obj, pending[1], pending[2]))
        Z.data = z
        grad_minus, grad_plus, s = gradient_parts(Z, W)
        a, b, _ = lagrange_coefficients(W, grad_minus, grad_plus)
        W_new = update(W, grad_minus, grad_plus, a, b)
        if not np.isfinite(W_new).all():
            raise NumericalCollapseError(f"non-finite embedding entry at iteration {it}")
        delta = float(np.abs(W_new - W).max())
        W = W_new
        row_err = float(np.abs(W.sum(axis=1) - 1.0).max())
        iterations = it
        pending = (it, row_err, delta)
        if delta < config.conv_tol:
            converged = True
            break

    _, _, final_obj = _objective_for(W)
    trace.append(final_obj)
    if pending is not None and (
        not log_rows or log_rows[-1][0] != pending[0]
    ):
        log_rows.append((pending[0], final_obj, pending[1], pending[2]))
    residual = row_err
    W = W / W.sum(axis=1, keepdims=True)
    return TrainResult(
        W=W,
        trace=np.asarray(trace),
        log_rows=log_rows,
        iterations=iterations,
        converged=converged,
        simplex_residual=residual,
    )


def save_model(path: str | Path, W: np.ndarray) -> None:
    """Write the model file: `n r` header then one row of r values per word."""
    n, r = W.shape
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{n} {r}\n")
        for row in W:
            f.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_model(path: str | Path) -> np.ndarray:
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise InputError(f"{path}: expected 'n r' header")
        n, r = int(header[0]), int(header[1])
        W = np.empty((n, r))
        for i in range(n):
            parts = f.readline().split()
            if len(parts) != r:
                raise InputError(f"{path}: row {i} has {len(parts)} values, expected {r}")
            W[i] = [float(p) for p in parts]
    if not np.isfinite(W).all() or W.min() <= 0.0:
        raise InputError(f"{path}: model entries must be finite and positive")
    return W
