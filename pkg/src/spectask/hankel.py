"""Empirical Hankel sub-blocks built from scored, compressed words.

For a basis (P, S) of prefix/suffix words, H_B(u, v) averages the scores of
demonstrations whose compressed word equals uv, and H_sigma(u, v) does the
same for words u sigma v. Cells no demonstration touches stay 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import compress


@dataclass(frozen=True)
class Basis:
    prefixes: tuple
    suffixes: tuple

    def __post_init__(self):
        for name, words in (("prefixes", self.prefixes), ("suffixes", self.suffixes)):
            if () not in words:
                raise ValueError(f"basis {name} must contain the empty word")
            if len(set(words)) != len(words):
                raise ValueError(f"duplicate words in basis {name}")

    @property
    def shape(self):
        return len(self.prefixes), len(self.suffixes)


@dataclass
class HankelBlocks:
    basis: Basis
    H_B: np.ndarray
    H_sigma: dict
    counts_B: np.ndarray
    counts_sigma: dict

    @property
    def alphabet(self):
        return sorted(self.H_sigma)


def _sorted_words(words):
    return tuple(sorted(words, key=lambda w: (len(w), w)))


def basis_from_words(words, max_prefix_len, max_suffix_len):
    """Basis of all prefixes/suffixes of the given words up to the length caps."""
    prefixes = {()}
    suffixes = {()}
    for w in words:
        for i in range(1, len(w) + 1):
            if i <= max_prefix_len:
                prefixes.add(w[:i])
            if i <= max_suffix_len:
                suffixes.add(w[-i:])
    return Basis(_sorted_words(prefixes), _sorted_words(suffixes))


def select_basis(demos, max_prefix_len, max_suffix_len):
    """Basis over the compressed demonstration words."""
    if not demos:
        raise ValueError("no demonstrations")
    return basis_from_words(
        [compress(d.word) for d in demos], max_prefix_len, max_suffix_len
    )


def build_hankel(demos, basis):
    """Accumulate mean scores into H_B and per-symbol H_sigma blocks."""
    scored = [(compress(d.word), float(d.score)) for d in demos]
    return build_hankel_from_words(scored, basis)


def build_hankel_from_words(scored_words, basis):
    np_, ns = basis.shape
    p_index = {w: i for i, w in enumerate(basis.prefixes)}
    s_index = {w: i for i, w in enumerate(basis.suffixes)}
    sums_B = np.zeros((np_, ns))
    counts_B = np.zeros((np_, ns), dtype=int)
    sums_sigma = {}
    counts_sigma = {}
    symbols = {sym for w, _ in scored_words for sym in w}
    for sym in symbols:
        sums_sigma[sym] = np.zeros((np_, ns))
        counts_sigma[sym] = np.zeros((np_, ns), dtype=int)
    for word, s in scored_words:
        n = len(word)
        for i in range(n + 1):
            pi = p_index.get(word[:i])
            if pi is None:
                continue
            si = s_index.get(word[i:])
            if si is not None:
                sums_B[pi, si] += s
                counts_B[pi, si] += 1
            if i < n:
                sj = s_index.get(word[i + 1 :])
                if sj is not None:
                    sym = word[i]
                    sums_sigma[sym][pi, sj] += s
                    counts_sigma[sym][pi, sj] += 1
    H_B = np.divide(sums_B, counts_B, out=np.zeros_like(sums_B), where=counts_B > 0)
    H_sigma = {
        sym: np.divide(
            sums_sigma[sym],
            counts_sigma[sym],
            out=np.zeros_like(sums_sigma[sym]),
            where=counts_sigma[sym] > 0,
        )
        for sym in sums_sigma
    }
    return HankelBlocks(basis, H_B, H_sigma, counts_B, counts_sigma)


def exact_blocks(fn, basis, alphabet):
    """Blocks filled directly from a word-scoring function (for verification)."""
    np_, ns = basis.shape
    H_B = np.empty((np_, ns))
    for i, u in enumerate(basis.prefixes):
        for j, v in enumerate(basis.suffixes):
            H_B[i, j] = fn(u + v)
    H_sigma = {}
    for sym in alphabet:
        H = np.empty((np_, ns))
        for i, u in enumerate(basis.prefixes):
            for j, v in enumerate(basis.suffixes):
                H[i, j] = fn(u + (sym,) + v)
        H_sigma[sym] = H
    ones = np.ones((np_, ns), dtype=int)
    return HankelBlocks(basis, H_B, H_sigma, ones, {sym: ones.copy() for sym in alphabet})
