"""Reduced-word arithmetic in finitely generated free groups.

A letter is a nonzero integer: ``+i`` is the generator ``e_i`` and ``-i`` its
inverse.  Text form writes ``e1``, ``e2``, ... and ``E1``, ``E2``, ... for the
inverses, separated by whitespace (``1`` or an empty string is the identity).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InputError

_TOKEN = re.compile(r"([eE])(\d+)")


def _reduce(letters: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for x in letters:
        if x == 0:
            raise InputError("letter 0 is not a generator")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


@dataclass(frozen=True, order=True)
class GroupElement:
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        letters = tuple(int(x) for x in self.letters)
        if _reduce(letters) != letters:
            raise InputError(f"word {letters} is not reduced")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def from_letters(cls, letters: Iterable[int]) -> "GroupElement":
        """Freely reduce ``letters``."""
        return cls(_reduce(letters))

    @classmethod
    def parse(cls, text: str) -> "GroupElement":
        text = text.strip()
        if text in ("", "1", "1_G", "id"):
            return cls()
        pos = 0
        letters = []
        for m in _TOKEN.finditer(text):
            if text[pos:m.start()].strip():
                raise InputError(f"cannot parse group element {text!r}")
            i = int(m.group(2))
            if i < 1:
                raise InputError(f"generator index must be >= 1 in {text!r}")
            letters.append(i if m.group(1) == "e" else -i)
            pos = m.end()
        if text[pos:].strip():
            raise InputError(f"cannot parse group element {text!r}")
        return cls.from_letters(letters)

    @classmethod
    def generator(cls, i: int, sign: int = 1) -> "GroupElement":
        return cls((sign * i,))

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def inverse(self) -> "GroupElement":
        return GroupElement(tuple(-x for x in reversed(self.letters)))

    @property
    def is_identity(self) -> bool:
        return not self.letters

    @property
    def rank_used(self) -> int:
        return max((abs(x) for x in self.letters), default=0)

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return " ".join(("e" if x > 0 else "E") + str(abs(x)) for x in self.letters)

    def __repr__(self) -> str:
        return f"GroupElement({str(self)!r})"


IDENTITY = GroupElement()


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    a, b = g.letters, h.letters
    i = 0
    while i < min(len(a), len(b)) and a[len(a) - 1 - i] == -b[i]:
        i += 1
    return GroupElement(a[:len(a) - i] + b[i:])


def inverse(g: GroupElement) -> GroupElement:
    return g.inverse()


def product(elements: Iterable[GroupElement]) -> GroupElement:
    return GroupElement.from_letters(x for g in elements for x in g.letters)


@dataclass(frozen=True)
class BoundaryPoint:
    """Eventually periodic reduced infinite word ``head cycle cycle ...``."""

    head: GroupElement
    cycle: GroupElement

    def __post_init__(self):
        if self.cycle.is_identity:
            raise InputError("boundary point needs a nonempty cycle")
        c = self.cycle.letters
        if c[-1] == -c[0]:
            raise InputError(f"cycle {self.cycle} cancels against itself when repeated")
        if self.head.letters and self.head.letters[-1] == -c[0]:
            raise InputError(f"head {self.head} cancels against cycle {self.cycle}")

    @classmethod
    def parse(cls, head: str, cycle: str) -> "BoundaryPoint":
        return cls(GroupElement.parse(head), GroupElement.parse(cycle))

    def letter(self, j: int) -> int:
        h = self.head.letters
        if j < len(h):
            return h[j]
        c = self.cycle.letters
        return c[(j - len(h)) % len(c)]

    def prefix(self, m: int) -> GroupElement:
        return boundary_prefix(self, m)

    def __str__(self) -> str:
        return f"{self.head} ({self.cycle})^inf"


def boundary_prefix(x: BoundaryPoint, m: int) -> GroupElement:
    """The reduced word ``x_0 ... x_{m-1}``."""
    if m < 0:
        raise InputError("prefix length must be non-negative")
    return GroupElement(tuple(x.letter(j) for j in range(m)))


def common_prefix(g: GroupElement, x: GroupElement | BoundaryPoint) -> GroupElement:
    """Longest common prefix ``g ∧ x``."""
    a = g.letters
    if isinstance(x, BoundaryPoint):
        get = x.letter
        limit = len(a)
    else:
        get = x.letters.__getitem__
        limit = min(len(a), len(x.letters))
    i = 0
    while i < limit and a[i] == get(i):
        i += 1
    return GroupElement(a[:i])


def ball(rank: int, radius: int) -> list[GroupElement]:
    """All elements of word length at most ``radius``, shortlex ordered."""
    letters = [s * i for i in range(1, rank + 1) for s in (1, -1)]
    layer = [IDENTITY]
    out = [IDENTITY]
    for _ in range(radius):
        nxt = []
        for g in layer:
            for x in letters:
                if not g.letters or g.letters[-1] != -x:
                    nxt.append(GroupElement(g.letters + (x,)))
        out.extend(nxt)
        layer = nxt
    return out


# Integer codes used by the vectorized dynamic programme: the letter ``+i``
# is digit ``2i-1`` and ``-i`` is digit ``2i``; a word is read in base
# ``2n+1`` with its last letter in the least significant digit.

def letter_digit(x: int) -> int:
    return 2 * x - 1 if x > 0 else -2 * x


def digit_letter(d: int) -> int:
    return (d + 1) // 2 if d % 2 else -(d // 2)


def encode(g: GroupElement, base: int) -> int:
    code = 0
    for x in g.letters:
        code = code * base + letter_digit(x)
    return code


def decode(code: int, base: int) -> GroupElement:
    letters = []
    while code:
        code, d = divmod(code, base)
        letters.append(digit_letter(d))
    return GroupElement(tuple(reversed(letters)))


def max_code_length(base: int) -> int:
    """Longest word whose code fits in a signed 64-bit integer."""
    n = 0
    while base ** (n + 1) < 2 ** 62:
        n += 1
    return n


def parse_elements(items: Sequence[str]) -> list[GroupElement]:
    return [GroupElement.parse(s) for s in items]
