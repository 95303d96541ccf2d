"""One-sided subshifts of finite type with locally constant potentials.

Words are tuples of symbol indices.  A potential of depth ``k`` assigns a
strictly positive value to every admissible window of ``k`` consecutive
symbols; the Birkhoff sum over a word sums the windows that start inside it,
and windows running past the end of the word are resolved by maximizing over
admissible completions (the supremum over the cylinder).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import InputError

Word = tuple[int, ...]


@dataclass(frozen=True)
class Potential:
    """Locally constant potential of depth ``depth``: window -> value."""

    depth: int
    table: Mapping[Word, float]

    def __post_init__(self):
        if self.depth < 1:
            raise InputError("potential depth must be a positive integer")
        for w, v in self.table.items():
            if len(w) != self.depth:
                raise InputError(f"window {w} has length {len(w)}, expected {self.depth}")
            if not (v > 0 and math.isfinite(v)):
                raise InputError(f"potential value for window {w} must be positive, got {v}")

    @property
    def sup(self) -> float:
        return max(self.table.values())

    @property
    def inf(self) -> float:
        return min(self.table.values())

    def scaled(self, c: float) -> "Potential":
        return Potential(self.depth, {w: c * v for w, v in self.table.items()})


@dataclass(frozen=True, eq=False)
class SftSystem:
    """A topologically transitive one-sided SFT together with a potential.

    ``incidence[a, b]`` is True when symbol ``b`` may follow symbol ``a``.
    Construction validates that every symbol has a successor, that the
    incidence graph is strongly connected and that the potential table is
    defined on exactly the admissible windows.
    """

    alphabet: tuple[str, ...]
    incidence: np.ndarray
    potential: Potential
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        if len(alphabet) < 2:
            raise InputError("alphabet needs at least two symbols")
        if len(set(alphabet)) != len(alphabet):
            raise InputError("alphabet symbols must be distinct")
        inc = np.array(self.incidence, dtype=bool)
        inc.setflags(write=False)
        if inc.shape != (len(alphabet), len(alphabet)):
            raise InputError(f"incidence matrix must be {len(alphabet)}x{len(alphabet)}")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "incidence", inc)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(alphabet)})
        dead = [alphabet[i] for i in range(len(alphabet)) if not inc[i].any()]
        if dead:
            raise InputError(f"symbols without admissible successor: {dead}")
        if not _strongly_connected(inc):
            raise InputError("incidence graph is not topologically transitive")
        k = self.potential.depth
        expected = set(self.enumerate_words(k))
        got = set(self.potential.table)
        if got != expected:
            missing = sorted(expected - got)[:5]
            extra = sorted(got - expected)[:5]
            raise InputError(
                f"potential table must cover exactly the admissible windows "
                f"(missing {missing}, inadmissible {extra})"
            )

    # -- symbols and words --------------------------------------------------
    @property
    def size(self) -> int:
        return len(self.alphabet)

    @property
    def depth(self) -> int:
        return self.potential.depth

    def symbol_index(self, s: str) -> int:
        try:
            return self._index[s]
        except KeyError:
            raise InputError(f"unknown symbol {s!r}") from None

    def word(self, text: str | Sequence[str] | Sequence[int]) -> Word:
        """Parse a word given as a string, a symbol list or an index tuple.

        Strings are split on whitespace when they contain any, otherwise
        into characters (which requires single-character symbols).
        """
        if isinstance(text, str):
            parts = text.split() if any(c.isspace() for c in text) else list(text)
            return tuple(self.symbol_index(s) for s in parts)
        out = []
        for s in text:
            if isinstance(s, (int, np.integer)):
                if not 0 <= s < self.size:
                    raise InputError(f"symbol index {s} out of range")
                out.append(int(s))
            else:
                out.append(self.symbol_index(s))
        return tuple(out)

    def format(self, word: Sequence[int]) -> str:
        sep = "" if all(len(s) == 1 for s in self.alphabet) else " "
        return sep.join(self.alphabet[i] for i in word)

    def is_admissible(self, word: Iterable) -> bool:
        w = self.word(list(word)) if not isinstance(word, str) else self.word(word)
        return all(self.incidence[a, b] for a, b in zip(w, w[1:]))

    def check_admissible(self, word: Word) -> Word:
        w = self.word(word)
        for j, (a, b) in enumerate(zip(w, w[1:])):
            if not self.incidence[a, b]:
                raise InputError(
                    f"word {self.format(w)!r} is not admissible at position {j}"
                )
        return w

    def enumerate_words(self, length: int, first_symbol=None, last_symbol=None) -> Iterator[Word]:
        """Yield admissible words of ``length`` in lexicographic index order."""
        if length < 0:
            raise InputError("length must be non-negative")
        first = None if first_symbol is None else self.word([first_symbol])[0]
        last = None if last_symbol is None else self.word([last_symbol])[0]
        if length == 0:
            if first is None and last is None:
                yield ()
            return
        succ = [np.flatnonzero(self.incidence[a]).tolist() for a in range(self.size)]
        starts = range(self.size) if first is None else [first]
        stack: list[int] = []

        def rec(depth):
            if depth == length:
                if last is None or stack[-1] == last:
                    yield tuple(stack)
                return
            for b in succ[stack[-1]]:
                stack.append(b)
                yield from rec(depth + 1)
                stack.pop()

        for a in starts:
            stack.append(a)
            yield from rec(1)
            stack.pop()

    def count_words(self, length: int) -> int:
        if length == 0:
            return 1
        m = np.linalg.matrix_power(self.incidence.astype(object), length - 1)
        return int(m.sum())

    # -- potential ----------------------------------------------------------
    @cached_property
    def _tail_bounds(self) -> dict[Word, tuple[float, float]]:
        """(max, min) of the windows starting inside a context over completions.

        Keys are admissible words of length 0..k-1; for a context ``c`` the
        value bounds the sum of the ``len(c)`` windows that start at its
        positions, taken over every admissible continuation of ``k-1``
        symbols.
        """
        k = self.depth
        table = self.potential.table
        out: dict[Word, tuple[float, float]] = {(): (0.0, 0.0)}
        for ell in range(1, k):
            for c in self.enumerate_words(ell):
                vals = []
                for ext in self._completions(c[-1], k - 1):
                    full = c + ext
                    vals.append(sum(table[full[j:j + k]] for j in range(ell)))
                out[c] = (max(vals), min(vals))
        return out

    def _completions(self, last: int, length: int) -> Iterator[Word]:
        for w in self.enumerate_words(length + 1, first_symbol=last):
            yield w[1:]

    def tail_sup(self, context: Word) -> float:
        """Maximal contribution of the windows starting in ``context``."""
        return self._tail_bounds[tuple(context[len(context) - min(len(context), self.depth - 1):])][0]

    def full_window_sum(self, word: Word) -> float:
        k = self.depth
        table = self.potential.table
        return math.fsum(table[word[j:j + k]] for j in range(len(word) - k + 1))

    def birkhoff_sup(self, word) -> float:
        """Supremum of the Birkhoff sum of the potential over the cylinder."""
        w = self.check_admissible(word)
        if not w:
            return 0.0
        return self.full_window_sum(w) + self.tail_sup(w[-(self.depth - 1):] if self.depth > 1 else ())

    def birkhoff_inf(self, word) -> float:
        w = self.check_admissible(word)
        if not w:
            return 0.0
        ctx = w[max(0, len(w) - (self.depth - 1)):] if self.depth > 1 else ()
        return self.full_window_sum(w) + self._tail_bounds[ctx][1]

    def distortion_constant(self) -> float:
        """Exact distortion constant of the potential.

        Only the windows starting in the last ``k-1`` positions vary across a
        cylinder, so the supremum is a maximum over contexts of length at most
        ``k-1``.
        """
        return max(hi - lo for hi, lo in self._tail_bounds.values())

    def cylinder_diameter_bracket(self, word) -> tuple[float, float]:
        s = self.birkhoff_sup(word)
        return math.exp(-s), math.exp(-s + self.distortion_constant())

    def with_potential(self, potential: Potential) -> "SftSystem":
        return SftSystem(self.alphabet, self.incidence, potential)

    def scaled(self, c: float) -> "SftSystem":
        return self.with_potential(self.potential.scaled(c))


def _strongly_connected(inc: np.ndarray) -> bool:
    n = inc.shape[0]
    for mat in (inc, inc.T):
        seen = {0}
        stack = [0]
        while stack:
            a = stack.pop()
            for b in np.flatnonzero(mat[a]):
                if b not in seen:
                    seen.add(int(b))
                    stack.append(int(b))
        if len(seen) != n:
            return False
    return True


# -- constructors ---------------------------------------------------------------

def constant_potential(alphabet_size: int, incidence, value: float = 1.0, depth: int = 1) -> Potential:
    inc = np.asarray(incidence, dtype=bool)
    windows = []
    for w in itertools.product(range(alphabet_size), repeat=depth):
        if all(inc[a, b] for a, b in zip(w, w[1:])):
            windows.append(w)
    return Potential(depth, {w: float(value) for w in windows})


def full_shift(alphabet: Sequence[str], potential: Mapping | float = 1.0) -> SftSystem:
    n = len(alphabet)
    inc = np.ones((n, n), dtype=bool)
    return _with_table(alphabet, inc, potential)


def from_forbidden(alphabet: Sequence[str], forbidden: Iterable, potential: Mapping | float = 1.0) -> SftSystem:
    idx = {s: i for i, s in enumerate(alphabet)}
    inc = np.ones((len(alphabet), len(alphabet)), dtype=bool)
    for a, b in forbidden:
        inc[idx[a], idx[b]] = False
    return _with_table(alphabet, inc, potential)


def _with_table(alphabet, inc, potential) -> SftSystem:
    if isinstance(potential, Potential):
        return SftSystem(tuple(alphabet), inc, potential)
    if isinstance(potential, (int, float)):
        return SftSystem(tuple(alphabet), inc, constant_potential(len(alphabet), inc, potential))
    idx = {s: i for i, s in enumerate(alphabet)}
    table = {}
    for key, v in potential.items():
        parts = key.split() if any(c.isspace() for c in key) else list(key)
        table[tuple(idx[s] for s in parts)] = float(v)
    depth = len(next(iter(table)))
    return SftSystem(tuple(alphabet), inc, Potential(depth, table))


def golden_mean(potential: Mapping | float = 1.0) -> SftSystem:
    """Alphabet {0, 1} with the pair ``11`` forbidden."""
    return from_forbidden(["0", "1"], [("1", "1")], potential)


def system_from_dict(doc: Mapping, path: str = "system") -> SftSystem:
    """Build a system from its JSON document form.

    ``{"alphabet": [...], "mode": "allow"|"forbid", "incidence": [[a, b], ...],
    "potential": {"depth": k, "entries": [[window, value], ...]}}``; the
    potential may also be ``{"constant": c, "depth": k}``.
    """
    try:
        alphabet = [str(s) for s in doc["alphabet"]]
    except (KeyError, TypeError):
        raise InputError(f"{path}.alphabet: missing or not a list") from None
    mode = doc.get("mode", "forbid")
    if mode not in ("allow", "forbid"):
        raise InputError(f"{path}.mode: expected 'allow' or 'forbid', got {mode!r}")
    idx = {s: i for i, s in enumerate(alphabet)}
    n = len(alphabet)
    inc = np.full((n, n), mode == "forbid", dtype=bool)
    for j, pair in enumerate(doc.get("incidence", [])):
        try:
            a, b = pair
            inc[idx[str(a)], idx[str(b)]] = mode == "allow"
        except (ValueError, KeyError, TypeError):
            raise InputError(f"{path}.incidence[{j}]: bad pair {pair!r}") from None
    pot = doc.get("potential", {"constant": 1.0})
    if isinstance(pot, (int, float)) and not isinstance(pot, bool):
        pot = {"constant": pot}
    if not isinstance(pot, dict):
        raise InputError(f"{path}.potential: expected a number or an object")
    if "constant" in pot:
        try:
            potential = constant_potential(n, inc, float(pot["constant"]), int(pot.get("depth", 1)))
        except (TypeError, ValueError):
            raise InputError(f"{path}.potential: bad constant or depth") from None
    else:
        try:
            depth = int(pot["depth"])
            table = {}
            for j, (window, value) in enumerate(pot["entries"]):
                parts = window if isinstance(window, list) else (
                    window.split() if " " in window else list(window))
                table[tuple(idx[str(s)] for s in parts)] = float(value)
        except (KeyError, ValueError, TypeError):
            raise InputError(f"{path}.potential: expected depth and entries") from None
        potential = Potential(depth, table)
    return SftSystem(tuple(alphabet), inc, potential)


def system_to_dict(system: SftSystem) -> dict:
    allowed = [[system.alphabet[a], system.alphabet[b]]
               for a in range(system.size) for b in range(system.size)
               if system.incidence[a, b]]
    return {
        "alphabet": list(system.alphabet),
        "mode": "allow",
        "incidence": allowed,
        "potential": {
            "depth": system.depth,
            "entries": [[[system.alphabet[i] for i in w], v]
                        for w, v in sorted(system.potential.table.items())],
        },
    }


def load_system(path) -> SftSystem:
    with open(path) as fh:
        return system_from_dict(json.load(fh))
