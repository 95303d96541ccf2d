"""Schottky groups in the disk model and the kernel-cover exponent pipeline.

Symbol ``a`` owns a circle orthogonal to the unit circle bounding the closed
half-disk ``H_a``; the generator ``a`` maps the complement of ``H_ā`` onto
``H_a``.  The boundary arc of a reduced word ``ω = ω'b`` is
``I_ω = ω'·I_b``; arcs nest and shrink along reduced sequences.

Series over the group use a locally constant potential of depth ``k``:
``u(w) = d_h(0, w·0) - d_h(0, w_1..w_{k-1}·0)``, the ``k``-step Busemann
increment of the orbital distance.  Its Birkhoff sums differ from
``d_h(0, ω·0)`` by a bounded amount, so every exponent computed from it is
the orbital one, and the generic dynamic programme applies unchanged.
"""
from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dp import build_skeleton
from .errors import GeometryError, Inconclusive, InputError
from .extension import (DisjointTransitiveSet, Involution, TransitivityCertificate,
                        check_symmetry, prefix_free)
from .freegroup import IDENTITY, BoundaryPoint, GroupElement
from .poincare import ExponentEstimate, GrowthRate, bisect_growth, exponent_estimate
from .projection import Projection
from .symbolic import Potential, SftSystem, Word

DEFAULT_TOL = 1e-9
DEFAULT_DEPTH = 4


# -- Möbius helpers -----------------------------------------------------------------

def mobius(M: np.ndarray, z: complex) -> complex:
    return (M[0, 0] * z + M[0, 1]) / (M[1, 0] * z + M[1, 1])


def _normalize(M: np.ndarray) -> np.ndarray:
    return M / cmath.sqrt(np.linalg.det(M))


def rotation(alpha: float) -> np.ndarray:
    return np.array([[cmath.exp(0.5j * alpha), 0], [0, cmath.exp(-0.5j * alpha)]])


def translation(x: float) -> np.ndarray:
    """Hyperbolic translation along the real diameter with ``0 ↦ x``."""
    return _normalize(np.array([[1, x], [x, 1]], dtype=complex))


def hyperbolic_distance(z: complex, w: complex) -> float:
    """Poincaré-disk distance ``2 artanh(|z - w| / |1 - conj(z) w|)``."""
    if abs(z) >= 1 or abs(w) >= 1:
        raise InputError("points must lie in the open unit disk")
    q = abs(z - w) / abs(1 - z.conjugate() * w)
    return 2.0 * math.atanh(min(q, 1.0))


def orbit_distance(M: np.ndarray) -> float:
    """``d_h(0, M·0)`` for a determinant-one disk automorphism.

    Such a matrix is ``[[α, β], [conj β, conj α]]`` up to sign with
    ``|β| = sinh(d/2)``; this stays accurate when ``M·0`` is within rounding
    of the unit circle, where ``log((1+r)/(1-r))`` would cancel.
    """
    b = 0.5 * (abs(M[0, 1]) + abs(M[1, 0]))
    return 2.0 * math.asinh(b)


# -- the group ---------------------------------------------------------------------

@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    @property
    def direction(self) -> float:
        return cmath.phase(self.center)

    @property
    def half_width(self) -> float:
        """Angular half-width of the boundary arc cut out by the circle."""
        return math.acos(1.0 / abs(self.center))

    def arc(self) -> tuple[complex, complex]:
        """Counterclockwise ``(start, end)`` of ``H ∩ ∂𝔻``."""
        a, h = self.direction, self.half_width
        return cmath.exp(1j * (a - h)), cmath.exp(1j * (a + h))


@dataclass(frozen=True, eq=False)
class SchottkyGroup:
    symbols: tuple[str, ...]
    circles: tuple[Circle, ...]
    pair: tuple[int, ...]
    generators: tuple[np.ndarray, ...] = field(repr=False)
    tol: float = DEFAULT_TOL

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def rank(self) -> int:
        return self.size // 2

    def is_reduced(self, word: Word) -> bool:
        return all(b != self.pair[a] for a, b in zip(word, word[1:]))

    def word(self, w) -> Word:
        if isinstance(w, str):
            parts = w.split() if " " in w.strip() else list(w)
            try:
                w = tuple(self.symbols.index(s) for s in parts)
            except ValueError as exc:
                raise InputError(f"unknown symbol in {w!r}") from exc
        w = tuple(int(a) for a in w)
        if any(not 0 <= a < self.size for a in w):
            raise InputError(f"symbol index out of range in {w}")
        if not self.is_reduced(w):
            raise InputError(f"word {self.format(w)!r} is not reduced")
        return w

    def format(self, w: Word) -> str:
        return "".join(self.symbols[a] for a in w)

    def inverse_word(self, w: Word) -> Word:
        return tuple(self.pair[a] for a in reversed(w))

    def matrix(self, w: Word) -> np.ndarray:
        M = np.eye(2, dtype=complex)
        for a in w:
            M = M @ self.generators[a]
        return M

    def orbit_point(self, w: Word) -> complex:
        return mobius(self.matrix(w), 0j)

    def coding_system(self, depth: int = DEFAULT_DEPTH) -> SftSystem:
        """Reduced sequences with the depth-``depth`` orbital increment potential."""
        if depth < 1:
            raise InputError("potential depth must be >= 1")
        inc = np.ones((self.size, self.size), dtype=bool)
        for a in range(self.size):
            inc[a, self.pair[a]] = False
        table = {}
        for w in itertools.product(range(self.size), repeat=depth):
            if self.is_reduced(w):
                table[w] = orbit_distance(self.matrix(w)) - orbit_distance(self.matrix(w[1:]))
        low = min(table.values())
        if low <= 0:
            raise GeometryError(
                f"orbital increment of depth {depth} is not positive (min {low:.3g}); "
                "use a larger depth")
        return SftSystem(tuple(self.symbols), inc, Potential(depth, table))

    def geometric_system(self, depth: int = DEFAULT_DEPTH) -> SftSystem:
        """Reduced sequences with ``log|f'|`` sampled at the midpoint of each depth-``depth`` arc."""
        inc = np.ones((self.size, self.size), dtype=bool)
        for a in range(self.size):
            inc[a, self.pair[a]] = False
        table = {}
        for w in itertools.product(range(self.size), repeat=depth):
            if self.is_reduced(w):
                z = arc_midpoint(self, w)
                table[w] = -math.log(derivative_abs(self.generators[w[0]], mobius(
                    np.linalg.inv(self.generators[w[0]]), z)))
        if min(table.values()) <= 0:
            raise GeometryError("geometric potential is not positive; use a larger depth")
        return SftSystem(tuple(self.symbols), inc, Potential(depth, table))


def derivative_abs(M: np.ndarray, z: complex) -> float:
    """``|M'(z)|`` for a determinant-one matrix."""
    return 1.0 / abs(M[1, 0] * z + M[1, 1]) ** 2


def pairing_generator(src: Circle, dst: Circle) -> np.ndarray:
    """Möbius map sending ``H_src`` onto the closed complement of ``H_dst``.

    Conjugates the half-turn about 0 by the isometries taking the imaginary
    diameter to each circle, so the source circle lands on the target circle.
    """
    def place(c: Circle) -> np.ndarray:
        x = abs(c.center) - c.radius
        return rotation(c.direction) @ translation(x)

    return _normalize(place(dst) @ rotation(math.pi) @ np.linalg.inv(place(src)))


def _circle_from_doc(doc: Mapping, path: str) -> Circle:
    try:
        r = float(doc["radius"])
        if "center_re" in doc:
            c = complex(float(doc["center_re"]), float(doc.get("center_im", 0.0)))
        elif "angle" in doc or "angle_deg" in doc:
            ang = float(doc["angle"]) if "angle" in doc else math.radians(float(doc["angle_deg"]))
            c = cmath.rect(float(doc["center_abs"]), ang)
        else:
            raise InputError(f"{path}: give center_re/center_im or angle/center_abs")
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if r <= 0:
        raise InputError(f"{path}.radius: must be positive")
    return Circle(c, r)


def build_schottky(config: Mapping) -> SchottkyGroup:
    """Validated Schottky group from circles and a fixed-point-free pairing.

    ``config`` either names a preset (``{"preset": "SYM3", "half_width_deg": 25}``)
    or gives ``circles`` and ``pairing`` explicitly.
    """
    if "preset" in config:
        if str(config["preset"]).upper() != "SYM3":
            raise InputError(f"preset: unknown preset {config['preset']!r}")
        return sym3(float(config.get("half_width_deg", 25.0)), float(config.get("tolerance", DEFAULT_TOL)))
    tol = float(config.get("tolerance", DEFAULT_TOL))
    docs = config.get("circles")
    if not isinstance(docs, Sequence) or not docs:
        raise InputError("circles: expected a nonempty list")
    circles = tuple(_circle_from_doc(d, f"circles[{i}]") for i, d in enumerate(docs))
    n = len(circles)
    if n % 2 or n < 6:
        raise InputError(f"circles: need an even number >= 6 of circles, got {n}")
    pair = [-1] * n
    for i, pr in enumerate(config.get("pairing", [])):
        try:
            a, b = (int(v) for v in pr)
        except (TypeError, ValueError):
            raise InputError(f"pairing[{i}]: expected an index pair") from None
        if not (0 <= a < n and 0 <= b < n) or a == b or pair[a] >= 0 or pair[b] >= 0:
            raise InputError(f"pairing[{i}]: invalid or repeated pair ({a}, {b})")
        pair[a], pair[b] = b, a
    if min(pair) < 0:
        raise InputError("pairing: every circle must be paired")
    symbols = config.get("symbols") or default_symbols(n, pair)
    if len(symbols) != n or len(set(symbols)) != n:
        raise InputError("symbols: need one distinct name per circle")
    return _assemble(tuple(map(str, symbols)), circles, tuple(pair), tol)


def default_symbols(n: int, pair: Sequence[int]) -> list[str]:
    names = [""] * n
    letters = "abcdefghijklmnopqrstuvwxyz"
    k = 0
    for a in range(n):
        if not names[a]:
            names[a], names[pair[a]] = letters[k], letters[k].upper()
            k += 1
    return names


def _assemble(symbols, circles, pair, tol) -> SchottkyGroup:
    for i, c in enumerate(circles):
        if abs(abs(c.center) ** 2 - 1 - c.radius ** 2) > tol:
            raise GeometryError(f"circle {symbols[i]} is not orthogonal to the unit circle")
    for i, j in itertools.combinations(range(len(circles)), 2):
        ci, cj = circles[i], circles[j]
        if abs(ci.center - cj.center) <= ci.radius + cj.radius + tol:
            raise GeometryError(f"circles {symbols[i]} and {symbols[j]} intersect")
    gens = tuple(pairing_generator(circles[pair[a]], circles[a]) for a in range(len(circles)))
    group = SchottkyGroup(symbols, circles, pair, gens, tol)
    check_generators(group)
    return group


def check_generators(group: SchottkyGroup, samples: int = 16) -> float:
    """Verify pair inverses and that ``a`` maps circle ``ā`` onto circle ``a``.

    Returns the largest defect found; raises when it exceeds the tolerance.
    """
    worst = 0.0
    for a in range(group.size):
        b = group.pair[a]
        P = group.generators[a] @ group.generators[b]
        d = min(np.abs(P - np.eye(2)).max(), np.abs(P + np.eye(2)).max())
        worst = max(worst, d)
        if d > 10 * group.tol:
            raise GeometryError(f"generators {group.symbols[a]}, {group.symbols[b]} are not inverse")
        src, dst = group.circles[b], group.circles[a]
        for t in np.linspace(-1, 1, samples):
            # points of the source circle inside the disk
            ang = src.direction + math.pi + t * (math.pi / 2 - src.half_width)
            z = src.center + src.radius * cmath.exp(1j * ang)
            e = abs(abs(mobius(group.generators[a], z) - dst.center) - dst.radius)
            worst = max(worst, e)
            if e > group.tol:
                raise GeometryError(
                    f"generator {group.symbols[a]} does not map circle {group.symbols[b]} onto "
                    f"circle {group.symbols[a]}")
        inner = cmath.rect(1.0, src.direction)  # a point of H_ā on the boundary
        if abs(mobius(group.generators[a], inner) - dst.center) < dst.radius - group.tol:
            raise GeometryError(f"generator {group.symbols[a]} maps H_{group.symbols[b]} into "
                                f"H_{group.symbols[a]}")
    return worst


def sym3(half_width_deg: float = 25.0, tol: float = DEFAULT_TOL) -> SchottkyGroup:
    """Six equal circles at angles ``πj/3``, circle ``j`` paired with ``j + 3``."""
    if not 0 < half_width_deg < 30:
        raise GeometryError("SYM3 circles overlap unless the half-width is below 30 degrees")
    th = math.radians(half_width_deg)
    s, rho = 1 / math.cos(th), math.tan(th)
    circles = tuple(Circle(cmath.rect(s, math.pi * j / 3), rho) for j in range(6))
    return _assemble(("a", "b", "c", "A", "B", "C"), circles, (3, 4, 5, 0, 1, 2), tol)


def load_schottky(path) -> SchottkyGroup:
    with open(path) as fh:
        return build_schottky(json.load(fh))


# -- word geometry -----------------------------------------------------------------

def orbital_birkhoff(group: SchottkyGroup, word) -> float:
    """``d_h(0, ω·0)``."""
    w = group.word(word)
    return orbit_distance(group.matrix(w))


def cylinder_arc(group: SchottkyGroup, word) -> tuple[complex, complex]:
    """Counterclockwise endpoints of ``I_ω = ω_0..ω_{m-2} · I_{ω_{m-1}}``."""
    w = group.word(word)
    if not w:
        raise InputError("cylinder_arc needs a nonempty word")
    M = group.matrix(w[:-1])
    s, e = group.circles[w[-1]].arc()
    return mobius(M, s), mobius(M, e)


def arc_length(arc: tuple[complex, complex]) -> float:
    return (cmath.phase(arc[1]) - cmath.phase(arc[0])) % (2 * math.pi)


def arc_midpoint(group: SchottkyGroup, word) -> complex:
    s, e = cylinder_arc(group, word)
    return cmath.exp(1j * (cmath.phase(s) + 0.5 * arc_length((s, e))))


def geometric_birkhoff(group: SchottkyGroup, word) -> float:
    """``log|(ω^{-1})'(z_ω)|`` with ``z_ω = ω·`` (ccw end of ``I_ω̄last``).

    ``z_ω`` is an endpoint of ``I_ω``.  For a determinant-one ``ω = [[·,·],[γ,δ]]``
    this equals ``2 log|γ e + δ|`` with ``e`` the base endpoint.
    """
    w = group.word(word)
    if not w:
        raise InputError("geometric_birkhoff needs a nonempty word")
    M = group.matrix(w)
    e = group.circles[group.pair[w[-1]]].arc()[1]
    return 2.0 * math.log(abs(M[1, 0] * e + M[1, 1]))


def random_reduced_words(group: SchottkyGroup, length: int, count: int,
                         rng: np.random.Generator) -> list[Word]:
    out = []
    for _ in range(count):
        w = [int(rng.integers(group.size))]
        for _ in range(length - 1):
            b = int(rng.integers(group.size - 1))
            if b >= group.pair[w[-1]]:
                b += 1
            w.append(b)
        out.append(tuple(w))
    return out


@dataclass
class GapProfile:
    """Largest ``|geometric - orbital|`` per word length."""

    lengths: list[int]
    max_gap: list[float]
    words_checked: int

    @property
    def running_max(self) -> list[float]:
        return list(np.maximum.accumulate(self.max_gap))

    def stabilization(self, last: int = 3) -> float:
        r = self.running_max[-last:]
        return (max(r) - min(r)) / max(r)


def birkhoff_gap_profile(group: SchottkyGroup, max_len: int = 12, exhaustive_upto: int = 5,
                         samples: int = 2000, seed: int = 0) -> GapProfile:
    """Exhaustive for short words, seeded random samples for longer ones."""
    rng = np.random.default_rng(seed)
    gaps, total = [], 0
    for m in range(1, max_len + 1):
        if m <= exhaustive_upto:
            words = [w for w in itertools.product(range(group.size), repeat=m) if group.is_reduced(w)]
        else:
            words = random_reduced_words(group, m, samples, rng)
        total += len(words)
        gaps.append(max(abs(geometric_birkhoff(group, w) - orbital_birkhoff(group, w)) for w in words))
    return GapProfile(list(range(1, max_len + 1)), gaps, total)


def orbital_symmetry_defect(group: SchottkyGroup, count: int = 1000, max_len: int = 12,
                            seed: int = 0) -> float:
    """``max |d_h(0, ω·0) - d_h(0, ω^{-1}·0)|`` over random reduced words."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        m = int(rng.integers(1, max_len + 1))
        (w,) = random_reduced_words(group, m, 1, rng)
        worst = max(worst, abs(orbital_birkhoff(group, w)
                               - orbital_birkhoff(group, group.inverse_word(w))))
    return worst


# -- projections and exponents ----------------------------------------------------

def kernel_projection(group: SchottkyGroup, mapping: Mapping[str, str], system: SftSystem | None = None,
                      rank: int | None = None) -> Projection:
    """Projection of the coding onto a free group from images of the generators.

    ``mapping`` gives images for one symbol of each pair; the paired symbol
    gets the inverse, so the projection is a group homomorphism.
    """
    if system is None:
        system = group.coding_system()
    images: dict[str, GroupElement] = {}
    for s, g in mapping.items():
        if s not in group.symbols:
            raise InputError(f"chi: unknown generator {s!r}")
        g = GroupElement.parse(g) if isinstance(g, str) else g
        a = group.symbols.index(s)
        images[s] = g
        images[group.symbols[group.pair[a]]] = g.inverse()
    for s, g in mapping.items():
        a = group.symbols.index(s)
        if images[group.symbols[group.pair[a]]] != (GroupElement.parse(g) if isinstance(g, str) else g).inverse():
            raise InputError(f"chi: inconsistent images for {s!r} and its inverse")
    return Projection.from_mapping(system, images, rank)


def sym3_projection(group: SchottkyGroup, system: SftSystem | None = None) -> Projection:
    """``a ↦ e1``, ``b ↦ e2``, ``c ↦ 1`` onto the rank-two free group."""
    return kernel_projection(group, {"a": "e1", "b": "e2", "c": "1"}, system, rank=2)


def kernel_transitive_set(group: SchottkyGroup, chi: Projection, kernel_word) -> DisjointTransitiveSet:
    """Connectors ``b ω b^{-1}`` built from one nonempty kernel word ``ω``.

    For every pair ``(x, y)`` some ``b`` avoids ``ω_0^{-1}``, ``ω_last`` and
    the two admissibility constraints, since there are at least six symbols.
    All connectors share one length, so the set is prefix-free.
    """
    w = group.word(kernel_word)
    if not w or not chi(w).is_identity:
        raise InputError("kernel word must be nonempty and project to the identity")
    allowed = [b for b in range(group.size) if b not in (group.pair[w[0]], w[-1])]
    words = {}
    for x in range(group.size):
        for y in range(group.size):
            for b in allowed:
                rho = (b,) + w + (group.pair[b],)
                if group.is_reduced((x,) + rho + (y,)):
                    words[(x, y)] = rho
                    break
            else:
                raise Inconclusive(f"no connector b ω b^-1 between {group.symbols[x]} and {group.symbols[y]}")
    L = len(w) + 2
    return DisjointTransitiveSet(words, L, L, 0, {})


def _all_states(lv):
    return np.ones(len(lv.codes), dtype=bool)


def _add_depth_drift(fine: ExponentEstimate, coarse: ExponentEstimate, depth: int) -> ExponentEstimate:
    # the k-step surrogate biases the exponent by O(contraction^k); the change
    # from depth k-1 to k bounds what the ci would otherwise miss
    drift = abs(fine.value - coarse.value)
    fine.diagnostics["potential_depth"] = depth
    fine.diagnostics["depth_drift"] = drift
    fine.diagnostics["estimate_at_previous_depth"] = coarse.value
    fine.ci_width += drift
    return fine


def _unrestricted(system: SftSystem, n_max: int, p_bracket, tol) -> ExponentEstimate:
    skel = build_skeleton(system, [IDENTITY] * system.size, 2, n_max)
    growth = GrowthRate(lambda ps: skel.level_sums(ps, _all_states), n_max)
    est = bisect_growth(growth, p_bracket, tol)
    est.diagnostics["series"] = "all reduced words"
    est.diagnostics["n_max"] = n_max
    return est


def delta_G_estimate(group: SchottkyGroup, n_max: int = 14, depth: int = DEFAULT_DEPTH,
                     p_bracket: tuple[float, float] = (0.0, 2.0), tol: float = 1e-3,
                     geometric: bool = False) -> ExponentEstimate:
    """Exponent of the unrestricted series over all reduced words.

    ``geometric`` swaps the orbital increment for ``log|f'|`` sampled on arcs.
    The ci includes the change in the estimate from depth ``depth - 1``.
    """
    if n_max < 8:
        raise InputError("n_max must be at least 8")
    make = group.geometric_system if geometric else group.coding_system
    fine = _unrestricted(make(depth), n_max, p_bracket, tol)
    if depth < 2:
        return fine
    return _add_depth_drift(fine, _unrestricted(make(depth - 1), n_max, p_bracket, tol), depth)


def delta_N_estimate(group: SchottkyGroup, chi: Projection, n_max: int = 14,
                     p_bracket: tuple[float, float] = (0.0, 2.0), tol: float = 1e-3) -> ExponentEstimate:
    """Exponent of the series restricted to the kernel of ``chi``.

    ``chi.system`` fixes the potential depth; the ci includes the change
    from one depth lower.
    """
    depth = chi.system.depth
    fine = exponent_estimate(chi, IDENTITY, n_max, p_bracket, tol)
    fine.diagnostics["series"] = "kernel"
    if depth < 2:
        return fine
    coarse_chi = Projection(group.coding_system(depth - 1), chi.images, chi.rank)
    coarse = exponent_estimate(coarse_chi, IDENTITY, n_max, p_bracket, tol)
    return _add_depth_drift(fine, coarse, depth)


def normal_subgroup_report(group: SchottkyGroup, chi: Projection, x: BoundaryPoint, n_max: int = 14,
                     kernel_word=None, cover_n: int = 16, escape_length_cap: int = 10,
                     symmetry_depth: int = 4, seed: int = 0) -> dict:
    """Exponents of the group and its kernel cover, with lower and upper bound runs."""
    from .escape import build_escape_construction, build_measure_tree, covering_sum

    dG = delta_G_estimate(group, n_max, chi.system.depth)
    dN = delta_N_estimate(group, chi, n_max)
    combined = dG.ci_width + dN.ci_width
    report = {
        "delta_G": dG.to_dict(),
        "delta_N": dN.to_dict(),
        "margin_lower": dN.value - dG.value / 2,
        "margin_upper": dG.value - dN.value,
        "combined_ci": combined,
        "ordering_holds": bool(dN.value - dG.value / 2 > combined and dG.value - dN.value > combined),
    }
    dagger = Involution(tuple(group.pair))
    sym = check_symmetry(chi, dagger, symmetry_depth)
    report["symmetry"] = {
        "dagger": "group inverse",
        "words_checked": sym.words_checked,
        "orbital_sup_term": orbital_symmetry_defect(group, seed=seed),
        "surrogate_gap_by_length": sym.max_gap_by_length,
    }
    if kernel_word is None:
        kernel_word = next(a for a in range(group.size) if chi.images[a].is_identity
                           and a < group.pair[a])
        kernel_word = (kernel_word,)
    transitive = kernel_transitive_set(group, chi, kernel_word)
    cert = TransitivityCertificate(dict(transitive.words))
    report["transitive_set"] = {
        "kernel_word": group.format(group.word(kernel_word)),
        "words": sorted({group.format(w) for w in transitive.words.values()}),
        "prefix_free": prefix_free(transitive.words.values()),
    }
    p_lo, p_hi = 0.9 * dN.value, 1.1 * dN.value
    try:
        con = build_escape_construction(chi, cert, x, p_lo, length_cap=escape_length_cap,
                                        transitive=transitive)
        tree = build_measure_tree(con, 2)
        report["lower_bound"] = {"p": p_lo, "status": "ok", "margin": con.margin,
                                 "total_mass": [tree.total_mass(k) for k in range(tree.depth)]}
    except Inconclusive as exc:
        report["lower_bound"] = {"p": p_lo, "status": "inconclusive", "reason": str(exc)}
    cov = covering_sum(chi, x, None, p_hi, cover_n)
    lo = cover_n // 2
    report["upper_bound"] = {"p": p_hi, "n": cover_n, "slope": cov.slope(lo, cover_n),
                             "level_sums": [float(v) for v in cov.level_sums]}
    return report
