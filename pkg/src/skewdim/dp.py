"""Level-by-level dynamic programme over (context, group element) states.

The state after reading an admissible word ``ω`` is the pair

* context: the last ``max(1, k-1)`` symbols (optionally also the first
  ``max(1, k-1)`` symbols), which decides admissibility of the next symbol
  and which potential windows it completes;
* the reduced word ``χ(ω)``, stored as an integer code (see
  :func:`skewdim.freegroup.encode`).

Words sharing a state have identical futures, so their weights
``exp(-p * full_window_sum)`` can be merged.  The transition structure does
not depend on ``p``; it is built once (the *skeleton*) and then any number of
exponents are swept through it with ``bincount``.  A caller-supplied
predicate prunes states that can no longer contribute, e.g. states too far
from every target to reach one in the remaining steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import TruncationError
from .freegroup import BoundaryPoint, GroupElement, encode, letter_digit, max_code_length

DEFAULT_MAX_STATES = 20_000_000

KeepFn = Callable[[int, np.ndarray, np.ndarray], np.ndarray]


class Codec:
    """Vectorized reduced-word arithmetic on integer codes for rank ``n``."""

    def __init__(self, rank: int):
        self.rank = rank
        self.base = 2 * rank + 1
        self.max_len = max_code_length(self.base)
        self._pow = np.array([self.base ** j for j in range(self.max_len + 1)], dtype=np.int64)

    @staticmethod
    def inverse_digit(d: int) -> int:
        return d + 1 if d % 2 else d - 1

    def append(self, codes, lengths, digits: Sequence[int]):
        for d in digits:
            inv = self.inverse_digit(d)
            cancel = (lengths > 0) & (codes % self.base == inv)
            codes = np.where(cancel, codes // self.base, codes * self.base + d)
            lengths = lengths + np.where(cancel, -1, 1).astype(lengths.dtype)
        return codes, lengths

    def prefix_match(self, codes, lengths, target: GroupElement | BoundaryPoint, upto: int):
        """Length of the common prefix of each coded word with ``target``."""
        lcp = np.zeros(len(codes), dtype=np.int16)
        if isinstance(target, BoundaryPoint):
            tl = [target.letter(j) for j in range(upto)]
        else:
            tl = list(target.letters[:upto])
        tcode = 0
        alive = np.ones(len(codes), dtype=bool)
        for j, x in enumerate(tl, start=1):
            tcode = tcode * self.base + letter_digit(x)
            ok = alive & (lengths >= j)
            if not ok.any():
                break
            shift = self._pow[np.where(ok, lengths - j, 0)]
            match = ok & (codes // shift == tcode)
            lcp[match] = j
            alive = match
        return lcp


def distance_pruner(codec: Codec, targets: Sequence[GroupElement], lam: int, n: int) -> KeepFn:
    """Keep states from which some target is reachable in the remaining steps.

    ``|h^{-1} g| = |h| + |g| - 2|h ∧ g|`` and each symbol moves at most
    ``lam`` letters, so a state at level ``m`` is useful only when
    ``|h^{-1} g| <= lam * (n - m)`` for some target ``g``.  Lossless.
    """
    targets = list(targets)

    def keep(m, codes, lengths):
        budget = lam * (n - m)
        ok = np.zeros(len(codes), dtype=bool)
        for g in targets:
            lcp = codec.prefix_match(codes, lengths, g, len(g))
            dist = lengths.astype(np.int64) + len(g) - 2 * lcp
            ok |= dist <= budget
        return ok

    return keep


def radius_pruner(radius: int, lam: int, n: int) -> KeepFn:
    """Specialization of :func:`distance_pruner` to the whole ball ``|g| <= radius``."""

    def keep(m, codes, lengths):
        return lengths <= radius + lam * (n - m)

    return keep


def band_pruner(codec: Codec, x: BoundaryPoint, r: int, lam: int, n: int) -> KeepFn:
    """Keep states that can re-enter the band ``|h| - |h ∧ x| <= r``."""

    def keep(m, codes, lengths):
        lcp = codec.prefix_match(codes, lengths, x, int(lengths.max(initial=0)))
        dev = lengths.astype(np.int64) - lcp
        return dev - r <= lam * (n - m)

    return keep


@dataclass
class Level:
    ctx: np.ndarray
    codes: np.ndarray
    lengths: np.ndarray
    fsum: np.ndarray | None = None


@dataclass
class Step:
    src: np.ndarray
    dst: np.ndarray
    win: np.ndarray


@dataclass
class Skeleton:
    """All levels ``0..n`` of the pruned state space and their transitions."""

    system: object
    codec: Codec
    contexts: list
    ctx_tail_sup: np.ndarray
    window_values: np.ndarray
    levels: list[Level]
    steps: list[Step] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.levels) - 1

    @property
    def state_count(self) -> int:
        return sum(len(lv.codes) for lv in self.levels)

    def forward(self, p) -> list[np.ndarray]:
        """Per-level state weights ``Σ exp(-p * full_window_sum)``.

        ``p`` may be a scalar or a 1-d array; in the latter case each weight
        array has one column per exponent.
        """
        ps = np.atleast_1d(np.asarray(p, dtype=float))
        ew = np.exp(-np.outer(np.append(self.window_values, 0.0), ps))
        w = np.ones((1, len(ps)))
        out = [w]
        for step, nxt in zip(self.steps, self.levels[1:]):
            contrib = w[step.src] * ew[step.win]
            w = np.empty((len(nxt.codes), len(ps)))
            for j in range(len(ps)):
                w[:, j] = np.bincount(step.dst, weights=contrib[:, j], minlength=len(nxt.codes))
            out.append(w)
        if np.ndim(p) == 0:
            return [x[:, 0] for x in out]
        return out

    def level_sums(self, p, select: Callable[[Level], np.ndarray]) -> np.ndarray:
        """``a_m(p) = Σ_{states selected at level m} weight * exp(-p tail_sup)``.

        Returns shape ``(n+1,)`` for scalar ``p`` else ``(n+1, len(p))``.
        """
        ps = np.atleast_1d(np.asarray(p, dtype=float))
        weights = self.forward(ps)
        out = np.zeros((self.n + 1, len(ps)))
        for m, (lv, w) in enumerate(zip(self.levels, weights)):
            mask = select(lv)
            if not mask.any():
                continue
            tail = np.exp(-np.outer(self.ctx_tail_sup[lv.ctx[mask]], ps))
            out[m] = (w[mask] * tail).sum(axis=0)
        if np.ndim(p) == 0:
            return out[:, 0]
        return out

    def target_selector(self, g: GroupElement) -> Callable[[Level], np.ndarray]:
        code = encode(g, self.codec.base)
        return lambda lv: lv.codes == code


def build_skeleton(system, images: Sequence[GroupElement], rank: int, n: int,
                   keep: KeepFn | None = None, *, track_head: bool = False,
                   split_sums: bool = False, max_states: int = DEFAULT_MAX_STATES) -> Skeleton:
    """Enumerate the pruned state space up to level ``n``.

    With ``split_sums`` the accumulated full-window sum becomes part of the
    state, so every state is a class of words with one exact Birkhoff sum.
    """
    codec = Codec(rank)
    k = system.depth
    cl = max(1, k - 1)
    A = system.size
    table = system.potential.table
    windows = sorted(table)
    win_id = {w: i for i, w in enumerate(windows)}
    window_values = np.array([table[w] for w in windows], dtype=float)
    none_win = len(windows)
    digits = [[letter_digit(x) for x in g.letters] for g in images]

    contexts: list = [((), ())]
    ctx_id = {((), ()): 0}
    trans: list[list] = []

    def expand(i):
        head, tail = contexts[i]
        row = []
        for a in range(A):
            if tail and not system.incidence[tail[-1], a]:
                row.append((-1, none_win))
                continue
            if len(tail) >= k - 1:
                w = (tail[len(tail) - (k - 1):] if k > 1 else ()) + (a,)
                wid = win_id[w]
            else:
                wid = none_win
            new_tail = (tail + (a,))[-cl:]
            new_head = (head + (a,))[:cl] if track_head else ()
            key = (new_head, new_tail)
            if key not in ctx_id:
                ctx_id[key] = len(contexts)
                contexts.append(key)
            row.append((ctx_id[key], wid))
        return row

    i = 0
    while i < len(contexts):
        trans.append(expand(i))
        i += 1
    next_ctx = np.array([[t[0] for t in row] for row in trans], dtype=np.int32)
    next_win = np.array([[t[1] for t in row] for row in trans], dtype=np.int32)
    tail_sup = np.array([system.tail_sup(t) for _, t in contexts], dtype=float)

    lv = Level(np.zeros(1, dtype=np.int32), np.zeros(1, dtype=np.int64),
               np.zeros(1, dtype=np.int16), np.zeros(1) if split_sums else None)
    skel = Skeleton(system, codec, contexts, tail_sup, window_values, [lv])
    total = 1
    for m in range(n):
        if len(lv.codes) and int(lv.lengths.max()) + max(map(len, digits)) > codec.max_len:
            raise TruncationError(
                f"group words longer than {codec.max_len} letters at level {m}", partial=skel)
        srcs, ctxs, codes, lens, wins = [], [], [], [], []
        for a in range(A):
            nc = next_ctx[lv.ctx, a]
            idx = np.flatnonzero(nc >= 0)
            c, l_ = codec.append(lv.codes[idx], lv.lengths[idx], digits[a])
            srcs.append(idx)
            ctxs.append(nc[idx])
            codes.append(c)
            lens.append(l_)
            wins.append(next_win[lv.ctx[idx], a])
        src = np.concatenate(srcs).astype(np.int32)
        ctx = np.concatenate(ctxs)
        code = np.concatenate(codes)
        ln = np.concatenate(lens)
        win = np.concatenate(wins)
        if keep is not None:
            mask = keep(m + 1, code, ln)
            src, ctx, code, ln, win = src[mask], ctx[mask], code[mask], ln[mask], win[mask]
        keys = [code, ctx]
        fs = None
        if split_sums:
            vals = np.append(window_values, 0.0)
            fs = lv.fsum[src] + vals[win]
            keys = [np.round(fs, 9), code, ctx]
        order = np.lexsort(keys)
        if len(order):
            new = np.ones(len(order), dtype=bool)
            diff = np.zeros(len(order) - 1, dtype=bool)
            for key in keys:
                ks = key[order]
                diff |= ks[1:] != ks[:-1]
            new[1:] = diff
            ids = np.cumsum(new) - 1
            dst = np.empty(len(order), dtype=np.int32)
            dst[order] = ids
            first = order[new]
        else:
            dst = np.zeros(0, dtype=np.int32)
            first = order
        lv = Level(ctx[first], code[first], ln[first], None if fs is None else fs[first])
        total += len(first)
        if total > max_states:
            raise TruncationError(
                f"state cap {max_states} exceeded at level {m + 1}", partial=skel)
        skel.steps.append(Step(src, dst, win.astype(np.int32)))
        skel.levels.append(lv)
    return skel


def log_sum(values) -> float:
    s = float(np.sum(values))
    return math.log(s) if s > 0 else -math.inf
