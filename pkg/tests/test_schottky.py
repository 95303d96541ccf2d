import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skewdim.errors import GeometryError, InputError
from skewdim.extension import prefix_free
from skewdim.freegroup import IDENTITY, BoundaryPoint
from skewdim.poincare import bisect_growth
from skewdim.projection import project
from skewdim.schottky import (arc_length, arc_midpoint, birkhoff_gap_profile, build_schottky,
                              check_generators, cylinder_arc, delta_G_estimate, delta_N_estimate,
                              derivative_abs, geometric_birkhoff, hyperbolic_distance,
                              kernel_transitive_set, mobius, orbital_birkhoff,
                              orbital_symmetry_defect, random_reduced_words, sym3,
                              sym3_projection, normal_subgroup_report)


@pytest.fixture(scope="module")
def group():
    return sym3(25.0)


def transfer_exponent(system):
    """Zero of the pressure from the spectral radius of the context transfer matrix."""
    k = system.depth
    ctx = list(system.enumerate_words(k - 1))
    idx = {c: i for i, c in enumerate(ctx)}

    def radius(s):
        M = np.zeros((len(ctx), len(ctx)))
        for w, v in system.potential.table.items():
            M[idx[w[:-1]], idx[w[1:]]] += math.exp(-s * v)
        return max(abs(np.linalg.eigvals(M)))

    lo, hi = 0.0, 3.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if radius(mid) > 1 else (lo, mid)
    return lo


def test_hyperbolic_distance_examples():
    assert hyperbolic_distance(0, 0.5) == pytest.approx(math.log(3))
    assert hyperbolic_distance(0.3 + 0.2j, 0.3 + 0.2j) == 0.0
    with pytest.raises(InputError):
        hyperbolic_distance(0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(max_magnitude=0.9), st.complex_numbers(max_magnitude=0.9),
       st.floats(-3, 3), st.floats(-0.9, 0.9))
def test_distance_is_mobius_invariant(z, w, ang, x):
    from skewdim.schottky import rotation, translation
    M = rotation(ang) @ translation(x)
    assert hyperbolic_distance(mobius(M, z), mobius(M, w)) == pytest.approx(
        hyperbolic_distance(z, w), abs=1e-9)


def test_sym3_is_valid(group):
    assert group.rank == 3
    assert check_generators(group) <= 1e-10
    for a in range(6):
        P = group.generators[a] @ group.generators[group.pair[a]]
        assert min(np.abs(P - np.eye(2)).max(), np.abs(P + np.eye(2)).max()) <= 1e-10


def test_invalid_configurations():
    with pytest.raises(GeometryError):
        sym3(31.0)
    circles = [{"angle_deg": 60 * j, "center_abs": 1 / math.cos(math.radians(35)),
                "radius": math.tan(math.radians(35))} for j in range(6)]
    with pytest.raises(GeometryError, match="intersect"):
        build_schottky({"circles": circles, "pairing": [[0, 3], [1, 4], [2, 5]]})
    with pytest.raises(InputError, match="even"):
        build_schottky({"circles": circles[:5], "pairing": [[0, 3], [1, 4]]})
    bad = [dict(c) for c in circles]
    for c in bad:
        c["center_abs"] = 1 / math.cos(math.radians(20))
        c["radius"] = 0.2
    with pytest.raises(GeometryError, match="orthogonal"):
        build_schottky({"circles": bad, "pairing": [[0, 3], [1, 4], [2, 5]]})


def test_explicit_config_matches_preset(group):
    th = math.radians(25)
    circles = [{"center_re": math.cos(math.pi * j / 3) / math.cos(th),
                "center_im": math.sin(math.pi * j / 3) / math.cos(th),
                "radius": math.tan(th)} for j in range(6)]
    g = build_schottky({"circles": circles, "pairing": [[0, 3], [1, 4], [2, 5]]})
    assert g.symbols == ("a", "b", "c", "A", "B", "C")
    for w in ["a", "abC", "cBa"]:
        assert orbital_birkhoff(g, w) == pytest.approx(orbital_birkhoff(group, w), rel=1e-12)


def test_irregular_eight_circle_group():
    spec = [(0, 0.3), (70, 0.25), (150, 0.35), (200, 0.2), (250, 0.3), (300, 0.2), (110, 0.15), (325, 0.1)]
    circles = [{"angle_deg": a, "center_abs": math.sqrt(1 + r * r), "radius": r} for a, r in spec]
    g = build_schottky({"circles": circles, "pairing": [[0, 4], [1, 5], [2, 6], [3, 7]]})
    assert g.rank == 4
    assert check_generators(g) <= 1e-9


def test_arcs_nest_and_are_disjoint(group):
    for m in range(1, 5):
        words = [w for w in itertools.product(range(6), repeat=m) if group.is_reduced(w)]
        arcs = {w: cylinder_arc(group, w) for w in words}
        for w, (s, e) in arcs.items():
            if m > 1:
                ps, pe = arcs.get(w[:-1]) or cylinder_arc(group, w[:-1])
                base = cmath.phase(ps)
                rel = lambda z: (cmath.phase(z) - base) % (2 * math.pi)
                assert rel(s) <= arc_length((ps, pe)) + 1e-9
                assert rel(e) <= arc_length((ps, pe)) + 1e-9
                assert arc_length((s, e)) < arc_length((ps, pe))
        mids = sorted(cmath.phase(arc_midpoint(group, w)) % (2 * math.pi) for w in words)
        lengths = sum(arc_length(a) for a in arcs.values())
        assert lengths < 2 * math.pi
        assert len(set(np.round(mids, 12))) == len(words)


def test_base_arc_endpoints(group):
    s, e = cylinder_arc(group, "a")
    th = math.radians(25)
    assert s == pytest.approx(cmath.exp(-1j * th))
    assert e == pytest.approx(cmath.exp(1j * th))


def test_orbital_birkhoff_basics(group):
    assert orbital_birkhoff(group, "") == 0.0
    rng = np.random.default_rng(1)
    for w, v in zip(random_reduced_words(group, 6, 50, rng), random_reduced_words(group, 5, 50, rng)):
        if group.is_reduced(w + v):
            assert orbital_birkhoff(group, w + v) <= orbital_birkhoff(group, w) + orbital_birkhoff(group, v) + 1e-9
    assert orbital_symmetry_defect(group, 1000, 12, 0) <= 1e-9


def test_orbital_matches_pointwise_distance(group):
    for w in ["a", "ab", "abC"]:
        z = group.orbit_point(group.word(w))
        assert orbital_birkhoff(group, w) == pytest.approx(hyperbolic_distance(0, z), rel=1e-12)


def test_geometric_birkhoff(group):
    # the base arc endpoints lie on the isometric circle, where |(a^-1)'| = 1
    assert geometric_birkhoff(group, "a") == pytest.approx(0.0, abs=1e-12)
    inv = np.linalg.inv(group.generators[0])
    for t in np.linspace(-0.9, 0.9, 7):
        z = cmath.exp(1j * t * math.radians(25))
        assert math.log(derivative_abs(inv, z)) > 0
    # chain rule along a word
    w = group.word("abCa")
    tail = geometric_birkhoff(group, w[1:])
    head_point = mobius(group.matrix(w[1:]), group.circles[group.pair[w[-1]]].arc()[1])
    step = math.log(derivative_abs(np.linalg.inv(group.generators[w[0]]),
                                   mobius(group.generators[w[0]], head_point)))
    assert geometric_birkhoff(group, w) == pytest.approx(tail + step, abs=1e-9)


def test_gap_profile_stabilizes(group):
    prof = birkhoff_gap_profile(group, 12, 5, 500, 0)
    assert prof.stabilization(3) < 0.05
    assert max(prof.max_gap) < 10


def test_coding_potential_is_positive_and_tracks_orbit(group):
    system = group.coding_system()
    assert system.potential.inf > 0
    rng = np.random.default_rng(5)
    gaps = [abs(system.birkhoff_sup(w) - orbital_birkhoff(group, w))
            for m in (4, 8, 12) for w in random_reduced_words(group, m, 100, rng)]
    assert max(gaps) < 2.0


def test_delta_G_matches_transfer_matrix(group):
    system = group.coding_system()
    est = delta_G_estimate(group, 14)
    assert est.value == pytest.approx(transfer_exponent(system), abs=est.ci_width)
    assert 0 < est.value < 1


def test_delta_G_decreases_as_disks_shrink():
    vals = [delta_G_estimate(sym3(th), 12).value for th in (18, 22, 26)]
    assert vals[0] < vals[1] < vals[2]


def test_delta_G_truncations_agree(group):
    a, b = delta_G_estimate(group, 14), delta_G_estimate(group, 18)
    assert abs(a.value - b.value) <= a.ci_width + b.ci_width


def test_geometric_and_orbital_exponents_agree(group):
    a = delta_G_estimate(group, 14)
    b = delta_G_estimate(group, 14, geometric=True)
    assert abs(a.value - b.value) <= a.ci_width + b.ci_width


def test_kernel_projection(group):
    chi = sym3_projection(group)
    assert chi.rank == 2
    assert project(chi, "c").is_identity
    assert project(chi, "aA" if False else "ab") == project(chi, "a") * project(chi, "b")
    assert chi.generates()
    dts = kernel_transitive_set(group, chi, "c")
    assert prefix_free(dts.words.values())
    for (x, y), w in dts.words.items():
        assert project(chi, w).is_identity
        assert group.is_reduced((x,) + w + (y,))


def test_normal_subgroup_report(group):
    chi = sym3_projection(group)
    rep = normal_subgroup_report(group, chi, BoundaryPoint.parse("", "e1 e2"), 12, cover_n=12)
    assert rep["ordering_holds"]
    assert rep["symmetry"]["orbital_sup_term"] <= 1e-9
    assert rep["lower_bound"]["status"] in ("ok", "inconclusive")
    assert rep["upper_bound"]["slope"] < 0
