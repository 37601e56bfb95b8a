"""Rank-m WFA extraction from Hankel blocks via truncated SVD.

With H_B = U_m L_m V_m' and factors P = U_m, S = L_m V_m', the automaton is
read off as alpha0' = P(lambda, :), beta = S(:, lambda) and
W_sigma = pinv(P) H_sigma pinv(S). Because U_m and V_m have orthonormal
columns the pseudo-inverses reduce to U_m' and V_m diag(1/s).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .automaton import Wfa, score
from .core import compress


@dataclass(frozen=True)
class SpectralConfig:
    rank: int
    singular_value_floor: float = 1e-10


def _canonical_signs(U, Vt):
    # SVD is sign-ambiguous; flip each left singular vector so its
    # largest-magnitude entry is positive, for reproducible output.
    for j in range(U.shape[1]):
        i = int(np.argmax(np.abs(U[:, j])))
        if U[i, j] < 0:
            U[:, j] = -U[:, j]
            Vt[j, :] = -Vt[j, :]
    return U, Vt


def spectral_learn(blocks, cfg, xi=0.5, ap_count=0):
    """Extract a rank-`cfg.rank` WFA from the given Hankel blocks."""
    H_B = blocks.H_B
    m = cfg.rank
    if not (1 <= m <= min(H_B.shape)):
        raise ValueError(
            f"rank {m} out of range for a {H_B.shape[0]}x{H_B.shape[1]} Hankel block"
        )
    if not np.any(H_B):
        raise ValueError("degenerate model: Hankel block is all zero")
    U, sv, Vt = np.linalg.svd(H_B, full_matrices=False)
    U = U[:, :m].copy()
    sv = sv[:m].copy()
    Vt = Vt[:m, :].copy()
    sv[sv < cfg.singular_value_floor] = 0.0
    U, Vt = _canonical_signs(U, Vt)
    inv_sv = np.zeros_like(sv)
    inv_sv[sv > 0] = 1.0 / sv[sv > 0]

    lam_p = blocks.basis.prefixes.index(())
    lam_s = blocks.basis.suffixes.index(())
    alpha0 = U[lam_p, :].copy()
    beta = sv * Vt[:, lam_s]
    transitions = {}
    for sym, H in blocks.H_sigma.items():
        W = (U.T @ H @ Vt.T) * inv_sv[np.newaxis, :]
        transitions[sym] = W
    return Wfa(alpha0=alpha0, beta=beta, transitions=transitions, xi=xi, ap_count=ap_count)


def wfa_fit_loss(wfa, demos):
    """Mean squared error between WFA scores of demo words and demo scores."""
    if not demos:
        raise ValueError("no demonstrations")
    errs = [score(wfa, compress(d.word)) - d.score for d in demos]
    return float(np.mean(np.square(errs)))


def word_fit_loss(wfa, scored_words):
    """Same loss over raw (word, score) pairs (words compressed internally)."""
    if not scored_words:
        raise ValueError("no words")
    errs = [score(wfa, w) - s for w, s in scored_words]
    return float(np.mean(np.square(errs)))
