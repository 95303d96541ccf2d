"""Exhaustive enumeration, used to cross-check the dynamic programme.

Exponential in the word length; intended for lengths up to about 8.
"""
from __future__ import annotations

import math

import numpy as np

from .freegroup import GroupElement, product
from .projection import Projection


def brute_level_table(chi: Projection, targets, ps, n: int) -> dict[GroupElement, np.ndarray]:
    """Level sums for several targets and exponents from one pass over the words.

    Entry ``[i, m]`` of each array is the length-``m`` sum at ``ps[i]``.
    """
    system = chi.system
    ps = list(ps)
    terms = {g: [[[] for _ in range(n + 1)] for _ in ps] for g in targets}
    for m in range(n + 1):
        for w in system.enumerate_words(m):
            rows = terms.get(product(chi.images[a] for a in w))
            if rows is not None:
                s = system.birkhoff_sup(w)
                for i, p in enumerate(ps):
                    rows[i][m].append(math.exp(-p * s))
    return {g: np.array([[math.fsum(t) for t in row] for row in rows]) for g, rows in terms.items()}


def brute_level_sums(chi: Projection, g: GroupElement, p: float, n: int) -> np.ndarray:
    """``a_m = Σ exp(-p S_ω u)`` over every admissible ``ω`` of length ``m <= n`` with ``χ(ω) = g``."""
    return brute_level_table(chi, [g], [p], n)[g][0]


def brute_kernel_counts(chi: Projection, n: int) -> list[int]:
    return [int(round(v)) for v in brute_level_sums(chi, GroupElement(), 0.0, n)]


def brute_band_sums(chi: Projection, x, r: int, p: float, n: int) -> np.ndarray:
    """Covering sums by enumeration: words whose image stays within ``r`` of the ray ``x``."""
    from .freegroup import common_prefix

    system = chi.system
    out = np.zeros(n + 1)
    for m in range(n + 1):
        terms = []
        for w in system.enumerate_words(m):
            h = product(chi.images[a] for a in w)
            if len(h) - len(common_prefix(h, x)) <= r:
                terms.append(math.exp(-p * system.birkhoff_sup(w)))
        out[m] = math.fsum(terms)
    return out
