"""Homomorphic projections from words onto a free group."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import InputError
from .freegroup import GroupElement, product
from .symbolic import SftSystem, Word


@dataclass(frozen=True, eq=False)
class Projection:
    """Symbol images ``χ(a)``; ``χ`` extends multiplicatively to words."""

    system: SftSystem
    images: tuple[GroupElement, ...]
    rank: int

    def __post_init__(self):
        images = tuple(self.images)
        if len(images) != self.system.size:
            raise InputError(
                f"projection needs one image per symbol ({self.system.size}), got {len(images)}")
        if self.rank < 2:
            raise InputError("target free group must have rank >= 2")
        for a, g in enumerate(images):
            if g.rank_used > self.rank:
                raise InputError(
                    f"image of {self.system.alphabet[a]!r} uses a generator beyond rank {self.rank}")
        object.__setattr__(self, "images", images)

    @classmethod
    def from_mapping(cls, system: SftSystem, mapping: Mapping[str, str | GroupElement],
                     rank: int | None = None) -> "Projection":
        images = []
        for s in system.alphabet:
            if s not in mapping:
                raise InputError(f"projection: no image for symbol {s!r}")
            g = mapping[s]
            images.append(g if isinstance(g, GroupElement) else GroupElement.parse(g))
        if rank is None:
            rank = max(g.rank_used for g in images)
        return cls(system, tuple(images), rank)

    @property
    def lambda1(self) -> int:
        """``max_a |χ(a)|``."""
        return max(len(g) for g in self.images)

    def __call__(self, word) -> GroupElement:
        return project(self, word)

    def to_dict(self) -> dict:
        return {"rank": self.rank,
                "images": {s: str(g) for s, g in zip(self.system.alphabet, self.images)}}

    def generates(self, radius: int = 4) -> bool:
        """Whether every generator is a product of symbol images and inverses.

        Bounded breadth-first search over products of at most ``radius``
        images; False means *not witnessed*, not disproved.
        """
        gens = {g for g in self.images if not g.is_identity}
        gens |= {g.inverse() for g in gens}
        wanted = {GroupElement((i,)) for i in range(1, self.rank + 1)}
        seen = {GroupElement()}
        layer = [GroupElement()]
        for _ in range(radius):
            nxt = []
            for h in layer:
                for g in gens:
                    hg = h * g
                    if hg not in seen:
                        seen.add(hg)
                        nxt.append(hg)
            layer = nxt
            if wanted <= seen:
                return True
        return wanted <= seen


def project(chi: Projection, word) -> GroupElement:
    w: Word = chi.system.check_admissible(word)
    return product(chi.images[a] for a in w)


def projection_from_dict(system: SftSystem, doc: Mapping, path: str = "projection") -> Projection:
    if "images" in doc:
        mapping = doc["images"]
        rank = doc.get("rank")
    else:
        mapping, rank = doc, None
    if not isinstance(mapping, Mapping):
        raise InputError(f"{path}: expected a map symbol -> group element")
    return Projection.from_mapping(system, {str(k): str(v) for k, v in mapping.items()}, rank)


def load_projection(system: SftSystem, path) -> Projection:
    with open(path) as fh:
        return projection_from_dict(system, json.load(fh))


def f2_srw(potential=1.0):
    """Full shift on ``a, A, b, B`` projected onto ``F_2`` as ``e1, E1, e2, E2``."""
    from .symbolic import full_shift

    system = full_shift(["a", "A", "b", "B"], potential)
    chi = Projection.from_mapping(system, {"a": "e1", "A": "E1", "b": "e2", "B": "E2"}, rank=2)
    return system, chi


