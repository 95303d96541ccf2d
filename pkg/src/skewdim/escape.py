"""Escape-measure lower bound and covering upper bound for escaping sets.

The lower-bound construction concatenates blocks ``τ(e) ρ w ρ'`` where
``τ(e)`` projects to the generator ``e = x_k``, ``ρ, ρ'`` come from a
prefix-free transitive kernel set and ``w`` runs over a large set of kernel
words.  Kernel words are handled as *classes* (first symbols, last symbols,
exact full-window sum) with multiplicities: the class is all the mass
computations need, and individual words can still be drawn from a class.
The measure tree merges nodes that agree on context, Birkhoff sum and mass,
so its size stays small even though the number of cylinders is astronomic.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dp import DEFAULT_MAX_STATES, Codec, Skeleton, band_pruner, build_skeleton, distance_pruner
from .errors import Inconclusive, InputError, TruncationError
from .extension import (DisjointTransitiveSet, TransitivityCertificate,
                        build_disjoint_transitive_set, fiber_words, prefix_free)
from .freegroup import IDENTITY, BoundaryPoint, GroupElement, common_prefix
from .projection import Projection, project
from .symbolic import SftSystem, Word


@dataclass(frozen=True)
class KernelClass:
    """Kernel words of one length sharing head, tail and full-window sum."""

    head: Word
    tail: Word
    length: int
    full_sum: float
    count: float
    state: int  # state index at level ``length`` of the kernel skeleton


@dataclass(frozen=True)
class Block:
    """Block class ``τ(e) ρ w ρ'`` with ``w`` ranging over a kernel class."""

    letter: int
    tau: Word
    rho: Word
    kernel: int  # index into EscapeConstruction.kernel_classes
    rho_out: Word
    first: int
    length: int
    count: float


@dataclass
class EscapeConstruction:
    chi: Projection
    x: BoundaryPoint
    p: float
    taus: dict  # generator letter -> word
    transitive: DisjointTransitiveSet
    kernel_length: int
    kernel_classes: list[KernelClass]
    kernel_skeleton: Skeleton = field(repr=False)
    threshold: float
    kernel_log_mass: float
    blocks: dict = field(repr=False)  # (letter, next first symbol) -> list[Block]

    @property
    def margin(self) -> float:
        """``log Σ_W exp(-p S) - threshold``; positive when the construction is valid."""
        return self.kernel_log_mass - self.threshold

    @property
    def kernel_word_count(self) -> float:
        return sum(c.count for c in self.kernel_classes)

    @property
    def max_block_length(self) -> int:
        return max(b.length for bl in self.blocks.values() for b in bl)

    def step(self, k: int) -> tuple[int, int]:
        """``(x_k, a_{k+1})``: generator letter and first symbol of the next block."""
        nxt = self.x.letter(k + 1)
        return self.x.letter(k), self.taus[nxt][0]

    def block_set(self, k: int) -> list[Block]:
        return self.blocks[self.step(k)]

    def deviation_bound(self) -> int:
        """Bound ``R`` with every support prefix in ``S(x, R)``."""
        return self.max_block_length * self.chi.lambda1

    def block_log_mass(self, key) -> float:
        """``log Σ_{B in A(e, a)} exp(-p S_B)`` for a block set."""
        system = self.chi.system
        vals = []
        for b in self.blocks[key]:
            full, ctx = fold_block(system, 0.0, (), b, self)
            vals.append(math.log(b.count) - self.p * (full + system.tail_sup(ctx)))
        return _logsumexp(vals)

    def summary(self) -> dict:
        system = self.chi.system
        return {
            "p": self.p,
            "boundary_point": str(self.x),
            "taus": {_letter_name(e): system.format(w) for e, w in self.taus.items()},
            "transitive_set_m": self.transitive.m,
            "transitive_set": sorted(system.format(w) for w in self.transitive.words.values()),
            "kernel_length": self.kernel_length,
            "kernel_word_count": self.kernel_word_count,
            "kernel_classes": len(self.kernel_classes),
            "threshold": self.threshold,
            "kernel_log_mass": self.kernel_log_mass,
            "margin": self.margin,
            "max_block_length": self.max_block_length,
            "deviation_bound": self.deviation_bound(),
        }


def _letter_name(x: int) -> str:
    return ("e" if x > 0 else "E") + str(abs(x))


def _logsumexp(vals) -> float:
    vals = np.asarray(vals, dtype=float)
    if not len(vals):
        return -math.inf
    m = vals.max()
    return float(m + math.log(np.exp(vals - m).sum()))


def _select_taus(chi: Projection, max_len: int) -> dict:
    """Nonempty words projecting to each generator, pairwise prefix-incomparable."""
    picked: list[Word] = []
    out = {}
    for i in range(1, chi.rank + 1):
        for s in (1, -1):
            e = GroupElement((s * i,))
            choice = None
            for ell in range(1, max_len + 1):
                for w in fiber_words(chi, e, ell, min_len=ell):
                    if not any(v[:min(len(v), len(w))] == w[:min(len(v), len(w))] for v in picked):
                        choice = w
                        break
                if choice is not None:
                    break
            if choice is None:
                raise Inconclusive(f"no disjoint word for {e} within {max_len} symbols")
            picked.append(choice)
            out[s * i] = choice
    return out


def _kernel_layers(chi: Projection, n: int, max_states: int):
    codec = Codec(chi.rank)
    skel = build_skeleton(chi.system, chi.images, chi.rank, n,
                          distance_pruner(codec, [IDENTITY], chi.lambda1, n),
                          track_head=True, split_sums=True, max_states=max_states)
    counts = skel.forward(0.0)
    layers = {}
    for L in range(1, n + 1):
        lv = skel.levels[L]
        idx = np.flatnonzero(lv.codes == 0)
        if not len(idx):
            continue
        classes = []
        for i in idx:
            head, tail = skel.contexts[lv.ctx[i]]
            classes.append(KernelClass(head, tail, L, float(lv.fsum[i]), float(counts[L][i]), int(i)))
        layers[L] = classes
    return skel, layers


def _concat_ok(inc, parts: Sequence[Word]) -> bool:
    prev = None
    for part in parts:
        for a in part:
            if prev is not None and not inc[prev, a]:
                return False
            prev = a
    return True


def build_escape_construction(chi: Projection, cert: TransitivityCertificate, x: BoundaryPoint,
                              p: float, *, length_cap: int = 20, tau_max_len: int = 8,
                              delta_hat: tuple[float, float] | None = None,
                              transitive: DisjointTransitiveSet | None = None,
                              max_states: int = DEFAULT_MAX_STATES) -> EscapeConstruction:
    """Blocks and kernel word set for the measure ``μ^p`` along ``x``.

    The kernel set is the first full length layer of kernel words whose mass
    beats ``p‖u‖(max|τ| + 2 max|ρ|) + 3pV``.  A single length keeps all blocks
    of a step prefix-incomparable, so their cylinders are disjoint.
    ``delta_hat = (estimate, ci)`` only triggers a warning when ``p`` is not
    clearly below the exponent.
    """
    if p <= 0:
        raise InputError("p must be positive")
    if delta_hat is not None and p >= delta_hat[0] - delta_hat[1]:
        warnings.warn(f"p = {p} is not below the estimated exponent {delta_hat[0]:.4f} "
                      f"(ci {delta_hat[1]:.4f}); the construction may be Inconclusive",
                      stacklevel=2)
    system = chi.system
    inc = system.incidence
    taus = _select_taus(chi, tau_max_len)
    if transitive is None:
        transitive = build_disjoint_transitive_set(chi, cert)
    rhos = list(dict.fromkeys(transitive.words.values()))
    V = system.distortion_constant()
    threshold = p * system.potential.sup * (
        max(len(t) for t in taus.values()) + 2 * max(len(r) for r in rhos)) + 3 * p * V

    best = -math.inf
    chosen = None
    tried = 0
    n = min(8, length_cap)
    while chosen is None:
        skel, layers = _kernel_layers(chi, n, max_states)
        for L in range(tried + 1, n + 1):
            if L not in layers:
                continue
            mass = _logsumexp([math.log(c.count) - p * (c.full_sum + system.tail_sup(c.tail))
                               for c in layers[L]])
            best = max(best, mass - threshold)
            if mass > threshold:
                chosen = (L, layers[L], mass, skel)
                break
        tried = n
        if chosen is None:
            if n >= length_cap:
                raise Inconclusive(
                    f"no kernel layer up to length {length_cap} beats the threshold "
                    f"{threshold:.4g} (best margin {best:.4g}); p may exceed the exponent",
                    partial={"threshold": threshold, "best_margin": best})
            n = min(n + 4, length_cap)
    L, classes, mass, skel = chosen

    firsts = {taus[e][0] for e in taus}
    blocks = {}
    for e, tau in taus.items():
        for a in sorted(firsts):
            out = []
            for rho in rhos:
                for ki, kc in enumerate(classes):
                    for rho_out in rhos:
                        if not (_concat_ok(inc, [tau, rho, kc.head])
                                and _concat_ok(inc, [kc.tail, rho_out, (a,)])):
                            continue
                        out.append(Block(e, tau, rho, ki, rho_out, tau[0],
                                         len(tau) + len(rho) + L + len(rho_out), kc.count))
            if not out:
                raise Inconclusive(f"empty block set for {_letter_name(e)} before {system.alphabet[a]}")
            blocks[(e, a)] = out
    return EscapeConstruction(chi, x, float(p), taus, transitive, L, classes, skel,
                              float(threshold), float(mass), blocks)


def fold_symbols(system: SftSystem, full: float, ctx: Word, symbols: Word) -> tuple[float, Word]:
    """Append explicit symbols, adding every window they complete."""
    k = system.depth
    cl = max(1, k - 1)
    table = system.potential.table
    for a in symbols:
        if len(ctx) >= k - 1:
            w = (ctx[len(ctx) - (k - 1):] if k > 1 else ()) + (a,)
            full += table[w]
        ctx = (ctx + (a,))[-cl:]
    return full, ctx


def fold_block(system: SftSystem, full: float, ctx: Word, block: Block,
               con: EscapeConstruction) -> tuple[float, Word]:
    """Full-window sum and context after appending a block class."""
    k = system.depth
    kc = con.kernel_classes[block.kernel]
    full, ctx = fold_symbols(system, full, ctx, block.tau + block.rho)
    # windows that start before the kernel word and end inside it
    if k > 1:
        c = ctx[len(ctx) - min(len(ctx), k - 1):]
        joined = c + kc.head
        table = system.potential.table
        for j in range(len(c)):
            if j + k <= len(joined):
                full += table[joined[j:j + k]]
    full += kc.full_sum
    cl = max(1, k - 1)
    ctx = (ctx + kc.tail)[-cl:] if kc.length < cl else kc.tail
    return fold_symbols(system, full, ctx, block.rho_out)


# -- the measure tree ------------------------------------------------------------------

@dataclass
class TreeNode:
    """Aggregate of tree nodes sharing context, Birkhoff data and mass."""

    ctx: Word
    full_sum: float
    log_mass: float  # log μ^p of each single node
    count: float     # number of cylinders in the aggregate
    path: tuple      # block indices of one representative

    def birkhoff(self, system: SftSystem) -> float:
        return self.full_sum + system.tail_sup(self.ctx)


@dataclass
class MeasureTree:
    construction: EscapeConstruction
    levels: list[list[TreeNode]]
    max_consistency_error: float

    @property
    def depth(self) -> int:
        return len(self.levels)

    def total_mass(self, k: int) -> float:
        return math.fsum(n.count * math.exp(n.log_mass) for n in self.levels[k])

    def to_dict(self) -> dict:
        system = self.construction.chi.system
        return {
            "construction": self.construction.summary(),
            "max_consistency_error": self.max_consistency_error,
            "levels": [[{"path": list(n.path), "count": n.count, "mass": math.exp(n.log_mass),
                         "birkhoff": n.birkhoff(system)} for n in lv] for lv in self.levels],
        }


def _block_moves(con: EscapeConstruction, blocks: list[Block], ctx: Word):
    """For one parent context: admissible block indices, sum increments, new contexts."""
    system = con.chi.system
    idx, delta, ctxs = [], [], []
    for bi, b in enumerate(blocks):
        if ctx and not system.incidence[ctx[-1], b.first]:
            continue
        full, c = fold_block(system, 0.0, ctx, b, con)
        idx.append(bi)
        delta.append(full)
        ctxs.append(c)
    return np.array(idx, dtype=np.int64), np.array(delta), ctxs


def build_measure_tree(con: EscapeConstruction, depth: int, max_nodes: int = 1_000_000) -> MeasureTree:
    """Masses of ``μ^p`` on the first ``depth`` block generations.

    Each child gets ``μ(parent) exp(-p S_child) / Σ_siblings exp(-p S)``;
    children are checked to sum to their parent before aggregates merge.
    Block folds depend only on the parent context, so they are computed once
    per context and the expansion is vectorized over parents.
    """
    if depth < 1:
        raise InputError("depth must be >= 1")
    system = con.chi.system
    p = con.p
    frontier = [TreeNode((), 0.0, 0.0, 1.0, ())]
    levels = []
    worst = 0.0
    for k in range(depth):
        blocks = con.block_set(k)
        counts = np.array([b.count for b in blocks])
        log_counts = np.log(counts)
        moves = {}
        parts = []
        for ni, node in enumerate(frontier):
            if node.ctx not in moves:
                moves[node.ctx] = _block_moves(con, blocks, node.ctx)
            idx, delta, ctxs = moves[node.ctx]
            if not len(idx):
                raise InputError("a tree node has no admissible child block")
            full = node.full_sum + delta
            tails = np.array([system.tail_sup(c) for c in ctxs])
            logw = -p * (full + tails) + log_counts[idx]
            log_den = _logsumexp(logw)
            child_log = node.log_mass - p * (full + tails) - log_den
            total = float(np.exp(logw - log_den).sum())
            worst = max(worst, abs(total - 1.0))
            parts.append((ni, idx, full, child_log, ctxs))
        # merge children that agree on context, Birkhoff sum and mass
        ctx_ids: dict = {}
        cols = {"parent": [], "block": [], "ctx": [], "full": [], "log": []}
        for ni, idx, full, child_log, ctxs in parts:
            cols["parent"].append(np.full(len(idx), ni))
            cols["block"].append(idx)
            cols["ctx"].append(np.array([ctx_ids.setdefault(c, len(ctx_ids)) for c in ctxs]))
            cols["full"].append(full)
            cols["log"].append(child_log)
        parent, block, ctx, full, logm = (np.concatenate(cols[c]) for c in
                                          ("parent", "block", "ctx", "full", "log"))
        mult = np.array([frontier[i].count for i in parent]) * counts[block]
        keys = [np.round(logm, 9), np.round(full, 9), ctx]
        order = np.lexsort(keys)
        new = np.ones(len(order), dtype=bool)
        diff = np.zeros(len(order) - 1, dtype=bool)
        for key in keys:
            ks = key[order]
            diff |= ks[1:] != ks[:-1]
        new[1:] = diff
        group = np.cumsum(new) - 1
        n_groups = int(group[-1]) + 1
        if n_groups > max_nodes:
            raise TruncationError(f"more than {max_nodes} tree aggregates at depth {k}")
        totals = np.bincount(group, weights=mult[order], minlength=n_groups)
        ctx_list = list(ctx_ids)
        firsts = order[new]
        frontier = [TreeNode(ctx_list[ctx[j]], float(full[j]), float(logm[j]), float(c),
                             frontier[parent[j]].path + (int(block[j]),))
                    for j, c in zip(firsts, totals)]
        levels.append(frontier)
    return MeasureTree(con, levels, worst)


def mass_ratio_profile(tree: MeasureTree) -> list[float]:
    """``M_k = max μ(node) / exp(-p S_node)`` per depth."""
    system = tree.construction.chi.system
    p = tree.construction.p
    return [max(math.exp(n.log_mass + p * n.birkhoff(system)) for n in lv) for lv in tree.levels]


@dataclass
class LocalDimensionStats:
    depth: int
    minimum: float
    median: float
    maximum: float


def local_dimension_estimates(tree: MeasureTree) -> list[LocalDimensionStats]:
    """``log μ(node) / log diam``-style ratios ``log μ / (-S_node)`` per depth."""
    system = tree.construction.chi.system
    out = []
    for k, lv in enumerate(tree.levels):
        vals = np.array([n.log_mass / -n.birkhoff(system) for n in lv])
        counts = np.array([n.count for n in lv])
        order = np.argsort(vals)
        cum = np.cumsum(counts[order])
        med = float(vals[order][np.searchsorted(cum, 0.5 * cum[-1])])
        out.append(LocalDimensionStats(k + 1, float(vals.min()), med, float(vals.max())))
    return out


# -- sampling the support ------------------------------------------------------------

def sample_kernel_word(con: EscapeConstruction, kclass: KernelClass, rng: np.random.Generator) -> Word:
    """Draw a kernel word from a class, uniformly among its members."""
    skel = con.kernel_skeleton
    counts = skel.forward(0.0)
    state = kclass.state
    out = []
    for m in range(kclass.length, 0, -1):
        _, tail = skel.contexts[skel.levels[m].ctx[state]]
        out.append(tail[-1])
        step = skel.steps[m - 1]
        preds = np.flatnonzero(step.dst == state)
        w = counts[m - 1][step.src[preds]]
        state = int(step.src[preds[rng.choice(len(preds), p=w / w.sum())]])
    return tuple(reversed(out))


def sample_support_word(con: EscapeConstruction, depth: int,
                        rng: np.random.Generator) -> tuple[Word, list[int]]:
    """A word ``ω^(0) ... ω^(depth-1)`` drawn from ``μ^p`` and its block ends."""
    system = con.chi.system
    p = con.p
    inc = system.incidence
    word: Word = ()
    ends = []
    full, ctx = 0.0, ()
    for k in range(depth):
        blocks = con.block_set(k)
        cands, logs = [], []
        for b in blocks:
            if ctx and not inc[ctx[-1], b.first]:
                continue
            f2, c2 = fold_block(system, full, ctx, b, con)
            cands.append((b, f2, c2))
            logs.append(math.log(b.count) - p * (f2 + system.tail_sup(c2)))
        logs = np.array(logs)
        probs = np.exp(logs - logs.max())
        b, full, ctx = cands[rng.choice(len(cands), p=probs / probs.sum())]
        w = sample_kernel_word(con, con.kernel_classes[b.kernel], rng)
        word = word + b.tau + b.rho + w + b.rho_out
        ends.append(len(word))
    return word, ends


# -- covering sums and trajectories --------------------------------------------------

@dataclass
class CoveringProfile:
    x: BoundaryPoint
    r: int
    p: float
    level_sums: np.ndarray

    def slope(self, lo: int, hi: int) -> float:
        """Least-squares slope of ``log c_m`` over the nonzero ``m`` in ``[lo, hi]``."""
        ms = np.array([m for m in range(lo, hi + 1) if self.level_sums[m] > 0], dtype=float)
        if len(ms) < 2:
            raise Inconclusive("not enough nonzero covering sums for a slope")
        y = np.log(self.level_sums[ms.astype(int)])
        return float(np.polyfit(ms, y, 1)[0])

    @property
    def total(self) -> float:
        return float(math.fsum(self.level_sums))


def covering_sum(chi: Projection, x: BoundaryPoint, r: int | None, p: float, n: int,
                 max_states: int = DEFAULT_MAX_STATES) -> CoveringProfile:
    """``c_m = Σ exp(-p S_ω u)`` over words of length ``m`` with ``|χ(ω)| - |χ(ω) ∧ x| <= r``."""
    if r is None:
        r = chi.lambda1
    if r < 0:
        raise InputError("r must be non-negative")
    codec = Codec(chi.rank)
    skel = build_skeleton(chi.system, chi.images, chi.rank, n,
                          band_pruner(codec, x, r, chi.lambda1, n), max_states=max_states)

    def in_band(lv):
        lcp = codec.prefix_match(lv.codes, lv.lengths, x, int(lv.lengths.max(initial=0)))
        return lv.lengths.astype(np.int64) - lcp <= r

    return CoveringProfile(x, r, float(p), skel.level_sums(float(p), in_band))


@dataclass
class TrajectoryProfile:
    lengths: list[int]
    overlaps: list[int]

    @property
    def deviations(self) -> list[int]:
        return [a - b for a, b in zip(self.lengths, self.overlaps)]


def classify_trajectory(chi: Projection, word, x: BoundaryPoint) -> TrajectoryProfile:
    """``|χ(ω_0..ω_{m-1})|`` and its overlap with ``x`` for ``m = 1..|ω|``."""
    w = chi.system.check_admissible(word)
    g = IDENTITY
    lengths, overlaps = [], []
    for a in w:
        g = g * chi.images[a]
        lengths.append(len(g))
        overlaps.append(len(common_prefix(g, x)))
    return TrajectoryProfile(lengths, overlaps)


def disjointness_report(con: EscapeConstruction) -> dict:
    return {
        "transitive_set_prefix_free": prefix_free(con.transitive.words.values()),
        "taus_prefix_free": prefix_free(con.taus.values()),
        "kernel_words_single_length": True,
    }
