import math

import pytest

from skewdim.errors import Inconclusive, InputError, SymmetryViolation
from skewdim.extension import (CosetExtender, Involution, TransitivityCertificate,
                               build_disjoint_transitive_set, check_symmetry,
                               constructive_delta_lower_bound, extend_to_coset, fiber_words,
                               load_certificate, pool_threshold, prefix_free, save_certificate,
                               shortest_fiber_word, symmetry_defects, verify_kernel_transitivity)
from skewdim.freegroup import IDENTITY, GroupElement, ball
from skewdim.projection import Projection, project
from skewdim.symbolic import from_forbidden


def brute_fiber(chi, g, length):
    return [w for w in chi.system.enumerate_words(length) if project(chi, w) == g]


@pytest.mark.parametrize("target", ["1", "e1", "e1 e2", "E2 e1"])
def test_fiber_words_match_enumeration(f2, target):
    g = GroupElement.parse(target)
    for n in range(5):
        assert list(fiber_words(f2, g, n, min_len=n)) == brute_fiber(f2, g, n)


def test_fiber_words_on_restricted_system(restricted):
    for g in ball(2, 2):
        for n in range(5):
            assert list(fiber_words(restricted, g, n, min_len=n)) == brute_fiber(restricted, g, n)


def test_shortest_fiber_word(f2):
    assert shortest_fiber_word(f2, GroupElement.parse("e1 e2"), 4) == f2.system.word("ab")
    assert shortest_fiber_word(f2, IDENTITY, 4) == ()
    assert shortest_fiber_word(f2, GroupElement.parse("e1 e1 e1"), 2) is None


def test_transitivity_certificate(f2, tmp_path):
    cert = verify_kernel_transitivity(f2, 4)
    cert.validate(f2)
    # on a full shift the empty word already connects every pair
    assert cert.bound == 0
    path = tmp_path / "cert.json"
    save_certificate(cert, f2.system, path)
    again = load_certificate(f2.system, path)
    assert again.connectors == cert.connectors


def test_transitivity_on_restricted_system(restricted):
    cert = verify_kernel_transitivity(restricted, 6)
    cert.validate(restricted)
    assert cert.bound > 0


def test_transitivity_inconclusive_reports_missing_pairs():
    system = from_forbidden(["a", "b"], [("a", "a")])
    chi = Projection.from_mapping(system, {"a": "e1", "b": "e2"}, rank=2)
    # only positive letters: no nonempty word returns to the identity, so (a, a) has no connector
    with pytest.raises(Inconclusive) as info:
        verify_kernel_transitivity(chi, 4)
    assert info.value.missing == [(0, 0)]


def test_invalid_certificate_is_rejected(f2):
    bad = TransitivityCertificate({(0, 0): f2.system.word("a")})
    with pytest.raises(InputError):
        bad.validate(f2)


def test_coset_extension(f2, f2_cert):
    ext = CosetExtender(f2, f2_cert, 5)
    for g in ball(2, 2):
        for w in ["", "a", "abA", "BBa"]:
            out = ext.extend(w, g)
            assert project(f2, out) == g
            assert out[:len(w)] == f2.system.word(w)
            assert len(out) - len(w) <= ext.extension_bound
    assert project(f2, extend_to_coset(f2, f2_cert, "ab", IDENTITY)) == IDENTITY


def test_constructive_delta_lower_bound(f2, f2_cert):
    lb = constructive_delta_lower_bound(f2, f2_cert)
    assert lb.l_chi == 3
    assert lb.max_block == 4
    assert lb.value == pytest.approx(math.log(3) / 12)
    for a, block in lb.blocks.items():
        assert block[0] == a == block[-1]


def test_pool_threshold_formula():
    # (A^2 - 1)(2 L0 + 1) + (A + 1)(A^(2 L0 + 1) - 1)
    assert pool_threshold(4, 0) == 15 + 5 * 3
    assert pool_threshold(2, 1) == 3 * 3 + 3 * 7


def test_disjoint_transitive_set_on_restricted_system(restricted):
    cert = verify_kernel_transitivity(restricted, 6)
    dts = build_disjoint_transitive_set(restricted, cert)
    words = list(dts.words.values())
    assert prefix_free(words)
    assert len(set(words)) == len(words)
    for (a, b), w in dts.words.items():
        assert project(restricted, w) == IDENTITY
        assert restricted.system.is_admissible((a,) + w + (b,))


def test_prefix_free():
    assert prefix_free([(0, 1), (1, 0), (0, 0, 1)])
    assert not prefix_free([(0,), (0, 1)])


def test_symmetry_of_inverse_relabeling(f2):
    dagger = Involution.from_pairs(f2.system, [("a", "A"), ("b", "B")])
    rep = check_symmetry(f2, dagger, 5)
    assert rep.words_checked == sum(4 ** n for n in range(1, 6))
    assert rep.empirical_constant == 0.0
    assert rep.stabilized


def test_plain_reversal_is_not_a_symmetry(f2):
    dagger = Involution.reversal(f2.system)
    with pytest.raises(SymmetryViolation) as info:
        check_symmetry(f2, dagger, 3)
    assert f2.system.format(info.value.witness) == "a"
    assert "inverse" in symmetry_defects(f2, dagger, "ab")


def test_involution_validation():
    with pytest.raises(InputError):
        Involution((1, 2, 0))
