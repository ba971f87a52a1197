"""Shared test utilities: dense reference formulas and random instances.

The dense functions form Shat and Z as full matrices straight from their
definitions, independently of the sparse code paths they are used to check.
"""

import numpy as np
import scipy.sparse as sp


def shat_dense(W):
    s = W.sum(axis=0)
    return (W / s) @ W.T


def objective_dense(S, W):
    """Full generalized KL divergence, summed over every (i, j)."""
    S = np.asarray(S, dtype=float)
    Sh = shat_dense(W)
    mask = S > 0
    kl = np.sum(S[mask] * np.log(S[mask] / Sh[mask]) - S[mask])
    return kl + Sh.sum()


def z_dense(S, W):
    S = np.asarray(S, dtype=float)
    Sh = shat_dense(W)
    return np.where(S > 0, S / np.where(S > 0, Sh, 1.0), 0.0)


def grads_dense(S, W):
    Z = z_dense(S, W)
    s = W.sum(axis=0)
    gm = 2.0 * (Z @ W) / s
    gp_k = np.diag(W.T @ Z @ W) / s**2
    return gm, np.broadcast_to(gp_k, W.shape), s


def random_similarity(rng, n, density=0.3):
    """Dense symmetric nonnegative matrix, zero diagonal, no empty row,
    scaled to total mass n."""
    mask = np.triu(rng.random((n, n)) < density, 1)
    vals = rng.random((n, n)) * mask
    M = vals + vals.T
    for i in range(n):
        if M[i].sum() == 0.0:
            j = (i + 1) % n
            v = rng.random() + 0.1
            M[i, j] += v
            M[j, i] += v
    M *= n / M.sum()
    return M


def random_similarity_csr(rng, n, density=0.3):
    return sp.csr_matrix(random_similarity(rng, n, density))


def random_positive_w(rng, n, r, normalize=True):
    W = rng.uniform(0.5, 1.5, size=(n, r))
    if normalize:
        W /= W.sum(axis=1, keepdims=True)
    return W


def block_similarity(block_sizes):
    """Block-diagonal cliques (no cross mass), scaled to total mass n."""
    n = sum(block_sizes)
    M = np.zeros((n, n))
    start = 0
    labels = np.empty(n, dtype=int)
    for bi, size in enumerate(block_sizes):
        stop = start + size
        M[start:stop, start:stop] = 1.0
        labels[start:stop] = bi
        start = stop
    np.fill_diagonal(M, 0.0)
    M *= n / M.sum()
    return M, labels
