"""Kernel transitivity, coset extension and the combinatorial constructions
built on a projection: the injection lower bound for the critical exponent,
the greedy prefix-free transitive kernel set, and symmetry checks.

All searches are bounded; when a witness is not found within the bound they
raise :class:`~skewdim.errors.Inconclusive` instead of claiming a negative.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .dp import Codec, build_skeleton, distance_pruner
from .errors import Inconclusive, InputError, SymmetryViolation
from .freegroup import IDENTITY, GroupElement, ball, multiply
from .projection import Projection, project
from .symbolic import SftSystem, Word


def _distance(h: GroupElement, g: GroupElement) -> int:
    return len(multiply(h.inverse(), g))


def fiber_words(chi: Projection, target: GroupElement, max_len: int, min_len: int = 0,
                first: int | None = None, follows: int | None = None,
                precedes: int | None = None) -> Iterator[Word]:
    """Admissible words ``ω`` with ``χ(ω) = target`` in lexicographic order.

    ``follows``/``precedes`` restrict to words that may be preceded/followed by
    the given symbol.  Prefixes are visited before their extensions, so
    shorter words come before longer words sharing a prefix.
    """
    system = chi.system
    lam = chi.lambda1
    inc = system.incidence
    A = system.size

    def ok_end(w):
        if precedes is None:
            return True
        if not w:
            return follows is None or bool(inc[follows, precedes])
        return bool(inc[w[-1], precedes])

    if min_len == 0 and target.is_identity and first is None and ok_end(()):
        yield ()

    def rec(w: list, h: GroupElement):
        if len(w) >= min_len and h == target and ok_end(w):
            yield tuple(w)
        if len(w) == max_len:
            return
        for a in range(A):
            if not inc[w[-1], a]:
                continue
            h2 = h * chi.images[a]
            if _distance(h2, target) > lam * (max_len - len(w) - 1):
                continue
            w.append(a)
            yield from rec(w, h2)
            w.pop()

    if max_len == 0:
        return
    starts = range(A) if first is None else [first]
    for a in starts:
        if follows is not None and not inc[follows, a]:
            continue
        h = chi.images[a]
        if _distance(h, target) > lam * (max_len - 1):
            continue
        yield from rec([a], h)


def shortest_fiber_word(chi: Projection, target: GroupElement, max_len: int, **kw) -> Word | None:
    """Shortest (then lexicographically first) word in the fiber."""
    for ell in range(max_len + 1):
        for w in fiber_words(chi, target, ell, min_len=ell, **kw):
            return w
    return None


# -- transitivity ------------------------------------------------------------------

@dataclass(frozen=True)
class TransitivityCertificate:
    """Kernel connectors ``ρ(a, b)`` with ``χ(ρ) = 1`` and ``aρb`` admissible."""

    connectors: dict

    @property
    def bound(self) -> int:
        return max(len(r) for r in self.connectors.values())

    def connector(self, a: int, b: int) -> Word:
        return self.connectors[(a, b)]

    def validate(self, chi: Projection) -> None:
        inc = chi.system.incidence
        for (a, b), rho in self.connectors.items():
            if not project(chi, rho).is_identity:
                raise InputError(f"connector for {(a, b)} is not in the kernel")
            w = (a,) + tuple(rho) + (b,)
            if not all(inc[x, y] for x, y in zip(w, w[1:])):
                raise InputError(f"connector for {(a, b)} is not admissible")

    def to_dict(self, system: SftSystem) -> dict:
        return {"bound": self.bound,
                "connectors": [[system.alphabet[a], system.alphabet[b], system.format(r)]
                               for (a, b), r in sorted(self.connectors.items())]}

    @classmethod
    def from_dict(cls, system: SftSystem, doc: dict) -> "TransitivityCertificate":
        conn = {}
        for a, b, r in doc["connectors"]:
            conn[(system.symbol_index(a), system.symbol_index(b))] = system.word(r)
        return cls(conn)


def verify_kernel_transitivity(chi: Projection, max_depth: int) -> TransitivityCertificate:
    """Search connectors for every symbol pair up to ``max_depth`` symbols."""
    if max_depth < 0:
        raise InputError("max_depth must be non-negative")
    system = chi.system
    inc = system.incidence
    A = system.size
    pending = {(a, b) for a in range(A) for b in range(A)}
    found: dict = {}
    for ell in range(max_depth + 1):
        if not pending:
            break
        for rho in fiber_words(chi, IDENTITY, ell, min_len=ell):
            hit = [(a, b) for (a, b) in pending
                   if (not rho and inc[a, b])
                   or (rho and inc[a, rho[0]] and inc[rho[-1], b])]
            for pair in hit:
                found[pair] = rho
                pending.discard(pair)
            if not pending:
                break
    if pending:
        missing = sorted(pending)
        raise Inconclusive(
            f"no kernel connector within {max_depth} symbols for "
            f"{len(missing)} pair(s): "
            + ", ".join(f"({system.alphabet[a]},{system.alphabet[b]})" for a, b in missing[:8]),
            missing=missing)
    return TransitivityCertificate(found)


def save_certificate(cert: TransitivityCertificate, system: SftSystem, path) -> None:
    with open(path, "w") as fh:
        json.dump(cert.to_dict(system), fh, indent=1)


def load_certificate(system: SftSystem, path) -> TransitivityCertificate:
    with open(path) as fh:
        return TransitivityCertificate.from_dict(system, json.load(fh))


# -- coset extension ---------------------------------------------------------------

class CosetExtender:
    """Extend any word into any fiber by a bounded suffix.

    Holds shortest representatives ``τ(h)`` for every ``|h| <= radius``; an
    extension of ``ω'`` into ``χ^{-1}(g)`` is ``ω' ρ τ(χ(ω')^{-1} g)`` with a
    kernel connector ``ρ``, hence at most ``L(radius)`` symbols long.
    """

    def __init__(self, chi: Projection, cert: TransitivityCertificate, radius: int,
                 max_len: int | None = None):
        self.chi = chi
        self.cert = cert
        self.radius = radius
        if max_len is None:
            max_len = 3 * max(radius, 1) * max(chi.lambda1, 1) + 2 * cert.bound + 2
        self.reps: dict[GroupElement, Word] = {}
        for h in ball(chi.rank, radius):
            w = shortest_fiber_word(chi, h, max_len)
            if w is None:
                raise Inconclusive(f"no representative for {h} within {max_len} symbols",
                                   missing=[h])
            self.reps[h] = w

    @property
    def extension_bound(self) -> int:
        return self.cert.bound + max(len(w) for w in self.reps.values())

    def extend(self, word, target: GroupElement) -> Word:
        w = self.chi.system.check_admissible(word)
        h = multiply(project(self.chi, w).inverse(), target)
        if h not in self.reps:
            raise Inconclusive(f"{h} lies outside the representative ball of radius {self.radius}",
                               missing=[h])
        tau = self.reps[h]
        if not w or not tau:
            rho: Word = ()
        else:
            rho = self.cert.connector(w[-1], tau[0])
        return w + tuple(rho) + tau


def extend_to_coset(chi: Projection, cert: TransitivityCertificate, word,
                    target: GroupElement, radius: int | None = None) -> Word:
    w = chi.system.check_admissible(word)
    need = len(multiply(project(chi, w).inverse(), target))
    return CosetExtender(chi, cert, need if radius is None else radius).extend(w, target)


# -- constructive positivity bound --------------------------------------------------

@dataclass(frozen=True)
class DeltaLowerBound:
    value: float
    free_growth: float
    l_chi: int
    sup_potential: float
    blocks: dict  # symbol -> a ρ(a) a

    @property
    def max_block(self) -> int:
        return max(len(t) for t in self.blocks.values())


def constructive_delta_lower_bound(chi: Projection, cert: TransitivityCertificate | None = None,
                                   max_len: int = 12) -> DeltaLowerBound:
    """Positive lower bound for the kernel critical exponent.

    Builds ``a ρ(a) a`` with ``χ(ρ(a)) = χ(a)^{-2}``; these blocks code every
    word injectively into the kernel, and the free group has growth
    ``log(2n-1)``.  The bound is ``log(2n-1) / (l_χ ‖u‖_∞ max_a |aρ(a)a|)``
    where ``l_χ`` is the longest shortest fiber word of a generator inside a
    one-symbol cylinder.
    """
    system = chi.system
    inc = system.incidence
    blocks = {}
    for a in range(system.size):
        target = (chi.images[a] * chi.images[a]).inverse()
        found = None
        for ell in range(max_len + 1):
            for rho in fiber_words(chi, target, ell, min_len=ell, follows=a, precedes=a):
                found = rho
                break
            if found is not None:
                break
        if found is None:
            raise Inconclusive(f"no ρ for symbol {system.alphabet[a]!r} within {max_len} symbols",
                               missing=[a])
        blocks[a] = (a,) + found + (a,)
        if not all(inc[x, y] for x, y in zip(blocks[a], blocks[a][1:])):
            raise AssertionError("block construction produced an inadmissible word")
    l_chi = 0
    gens = [GroupElement((s * i,)) for i in range(1, chi.rank + 1) for s in (1, -1)]
    for a in range(system.size):
        for e in gens:
            w = shortest_fiber_word(chi, e, max_len, first=a)
            if w is None:
                raise Inconclusive(
                    f"no word in [{system.alphabet[a]}] projecting to {e} within {max_len}",
                    missing=[(a, e)])
            l_chi = max(l_chi, len(w))
    growth = math.log(2 * chi.rank - 1)
    sup_u = system.potential.sup
    value = growth / (l_chi * sup_u * max(len(t) for t in blocks.values()))
    return DeltaLowerBound(value, growth, l_chi, sup_u, blocks)


# -- greedy prefix-free transitive set ----------------------------------------------

@dataclass(frozen=True)
class DisjointTransitiveSet:
    words: dict  # (a, b) -> ρ(a, b)
    m: int
    base_bound: int
    threshold: int
    pool_sizes: dict = field(repr=False)

    @property
    def bound(self) -> int:
        return max(len(w) for w in self.words.values())

    def as_certificate(self) -> TransitivityCertificate:
        return TransitivityCertificate(dict(self.words))


def pool_threshold(alphabet_size: int, base_bound: int) -> int:
    """Number of words a greedy choice may have to avoid."""
    A, L0 = alphabet_size, base_bound
    return (A * A - 1) * (2 * L0 + 1) + (A + 1) * (A ** (2 * L0 + 1) - 1)


def kernel_pool_counts(chi: Projection, lo: int, hi: int) -> np.ndarray:
    """``#C(a, b)``: kernel words of length in ``[lo, hi]`` fitting between ``a`` and ``b``."""
    system = chi.system
    A = system.size
    codec = Codec(chi.rank)
    skel = build_skeleton(system, chi.images, chi.rank, hi,
                          distance_pruner(codec, [IDENTITY], chi.lambda1, hi), track_head=True)
    counts = np.zeros((A, A))
    weights = skel.forward(0.0)
    inc = system.incidence.astype(float)
    for m in range(max(lo, 1), hi + 1):
        lv = skel.levels[m]
        mask = lv.codes == 0
        for c, w in zip(lv.ctx[mask], weights[m][mask]):
            head, tail = skel.contexts[c]
            counts[head[0], tail[-1]] += w
    # pool(a, b) = Σ_{f, l} inc[a, f] count[f, l] inc[l, b]
    return inc @ counts @ inc


def build_disjoint_transitive_set(chi: Projection, cert: TransitivityCertificate,
                                  m_cap: int = 24) -> DisjointTransitiveSet:
    """Finite transitive kernel set whose words are pairwise prefix-incomparable.

    ``m`` grows until every pool of kernel words with length in
    ``[m, m + 2 L0]`` fitting between ``a`` and ``b`` exceeds the avoidance
    threshold; then pairs are served in lexicographic order, each taking the
    lexicographically first pool word that is prefix-incomparable with all
    earlier choices.
    """
    system = chi.system
    A = system.size
    L0 = cert.bound
    N = pool_threshold(A, L0)
    pools = None
    m = 1
    while m <= m_cap:
        pools = kernel_pool_counts(chi, m, m + 2 * L0)
        if pools.min() > N:
            break
        m += 1
    else:
        raise Inconclusive(f"kernel pools never exceed {N} words for m <= {m_cap}")
    chosen: dict = {}
    picked: list[Word] = []

    def clash(w):
        for v in picked:
            k = min(len(v), len(w))
            if v[:k] == w[:k]:
                return True
        return False

    for a in range(A):
        for b in range(A):
            for rho in fiber_words(chi, IDENTITY, m + 2 * L0, min_len=m, follows=a, precedes=b):
                if not clash(rho):
                    chosen[(a, b)] = rho
                    picked.append(rho)
                    break
            else:
                raise AssertionError("pool exhausted despite exceeding the threshold")
    return DisjointTransitiveSet(chosen, m, L0, N,
                                 {(a, b): int(pools[a, b]) for a in range(A) for b in range(A)})


def prefix_free(words) -> bool:
    ws = sorted(set(map(tuple, words)))
    return all(ws[i + 1][:len(ws[i])] != ws[i] for i in range(len(ws) - 1))


# -- involutions and symmetry -------------------------------------------------------

@dataclass(frozen=True)
class Involution:
    """Word reversal composed with an involutive symbol relabeling."""

    relabel: tuple[int, ...]

    def __post_init__(self):
        r = tuple(self.relabel)
        if sorted(r) != list(range(len(r))) or any(r[r[i]] != i for i in range(len(r))):
            raise InputError("relabeling must be an involution of the alphabet")
        object.__setattr__(self, "relabel", r)

    @classmethod
    def from_pairs(cls, system: SftSystem, pairs) -> "Involution":
        r = list(range(system.size))
        for x, y in pairs:
            i, j = system.symbol_index(x), system.symbol_index(y)
            r[i], r[j] = j, i
        return cls(tuple(r))

    @classmethod
    def reversal(cls, system: SftSystem) -> "Involution":
        return cls(tuple(range(system.size)))

    def __call__(self, word) -> Word:
        return tuple(self.relabel[a] for a in reversed(tuple(word)))


@dataclass
class SymmetryReport:
    depth: int
    words_checked: int
    max_gap_by_length: list  # empirical max |S_ω u - S_{ω†} u| per length

    @property
    def empirical_constant(self) -> float:
        return max(self.max_gap_by_length)

    @property
    def stabilized(self) -> bool:
        g = self.max_gap_by_length
        return len(g) >= 3 and abs(g[-1] - g[-2]) <= 1e-9 * max(1.0, g[-1])


def check_symmetry(chi: Projection, dagger: Involution, depth: int) -> SymmetryReport:
    """Exact symmetry checks on every admissible word up to ``depth``."""
    if depth < 1:
        raise InputError("depth must be >= 1")
    system = chi.system
    inc = system.incidence
    gaps = [0.0]
    count = 0
    for ell in range(1, depth + 1):
        gap = 0.0
        for w in system.enumerate_words(ell):
            count += 1
            d = dagger(w)
            name = system.format(w)
            if not all(inc[x, y] for x, y in zip(d, d[1:])):
                raise SymmetryViolation(f"dagger of {name!r} is not admissible", witness=w)
            if dagger(d) != w:
                raise SymmetryViolation(f"dagger is not involutive on {name!r}", witness=w)
            for j in range(1, ell):
                if dagger(w[j:]) + dagger(w[:j]) != d:
                    raise SymmetryViolation(f"dagger is not anti-multiplicative on {name!r}",
                                            witness=w)
            if project(chi, d) != project(chi, w).inverse():
                raise SymmetryViolation(
                    f"χ(ω†) != χ(ω)^-1 for ω = {name!r}", witness=w)
            gap = max(gap, abs(system.birkhoff_sup(w) - system.birkhoff_sup(d)))
        gaps.append(gap)
    return SymmetryReport(depth, count, gaps)


def symmetry_defects(chi: Projection, dagger: Involution, word) -> list[str]:
    """Which exact symmetry conditions fail on one word (empty if none)."""
    system = chi.system
    w = system.check_admissible(word)
    d = dagger(w)
    out = []
    if not all(system.incidence[x, y] for x, y in zip(d, d[1:])):
        out.append("admissibility")
    if dagger(d) != w:
        out.append("involution")
    if project(chi, d) != project(chi, w).inverse():
        out.append("inverse")
    return out
