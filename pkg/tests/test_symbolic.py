import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skewdim.errors import InputError
from skewdim.symbolic import (Potential, SftSystem, constant_potential, from_forbidden, full_shift,
                              golden_mean, load_system, system_from_dict, system_to_dict)


def depth3_system():
    alphabet = ["0", "1", "2"]
    base = from_forbidden(alphabet, [("2", "2")])
    table = {}
    for w in base.enumerate_words(3):
        table["".join(alphabet[i] for i in w)] = 0.5 + 0.3 * w[0] + 0.2 * w[1] * w[2] + 0.05 * w[2]
    return from_forbidden(alphabet, [("2", "2")], table)


def brute_sup(system, w):
    """Sup of the Birkhoff sum by enumerating every completion of length k-1."""
    k = system.depth
    best = -math.inf
    for ext in system.enumerate_words(len(w) + k - 1):
        if ext[:len(w)] != w:
            continue
        best = max(best, sum(system.potential.table[ext[j:j + k]] for j in range(len(w))))
    return best


def test_golden_mean_counts_are_fibonacci():
    g = golden_mean()
    assert [g.count_words(n) for n in range(1, 8)] == [2, 3, 5, 8, 13, 21, 34]
    assert all(len(list(g.enumerate_words(n))) == g.count_words(n) for n in range(7))


def test_enumeration_is_lexicographic():
    g = golden_mean()
    words = list(g.enumerate_words(4))
    assert words == sorted(words)


def test_word_parsing_and_admissibility():
    g = golden_mean()
    assert g.word("0101") == (0, 1, 0, 1)
    assert g.word("0 1") == (0, 1)
    assert g.is_admissible("0101")
    assert not g.is_admissible("0110")
    with pytest.raises(InputError, match="position 1"):
        g.check_admissible("0110")
    with pytest.raises(InputError):
        g.word("012")


def test_constant_potential_sums():
    s = full_shift(["a", "b"], 2.0)
    assert s.birkhoff_sup("abba") == 8.0
    assert s.birkhoff_sup("") == 0.0
    assert s.distortion_constant() == 0.0


def test_depth3_birkhoff_sup_matches_completion_search():
    s = depth3_system()
    for n in range(0, 6):
        for w in s.enumerate_words(n):
            assert s.birkhoff_sup(w) == pytest.approx(brute_sup(s, w) if w else 0.0, abs=1e-12)


def test_distortion_constant_bounds_cylinder_variation():
    s = depth3_system()
    V = s.distortion_constant()
    assert V > 0
    for w in s.enumerate_words(4):
        assert s.birkhoff_sup(w) - s.birkhoff_inf(w) <= V + 1e-12
    lo, hi = s.cylinder_diameter_bracket(s.word("0120"))
    assert hi / lo == pytest.approx(math.exp(V))


def test_rejects_bad_systems():
    with pytest.raises(InputError, match="successor"):
        SftSystem(("a", "b"), np.array([[1, 1], [0, 0]]), constant_potential(2, [[1, 1], [1, 1]]))
    with pytest.raises(InputError, match="transitive"):
        inc = np.array([[1, 1], [0, 1]])
        SftSystem(("a", "b"), inc, constant_potential(2, inc))
    with pytest.raises(InputError, match="positive"):
        Potential(1, {(0,): 0.0})
    with pytest.raises(InputError, match="cover exactly"):
        SftSystem(("a", "b"), np.ones((2, 2)), Potential(1, {(0,): 1.0}))


def test_json_round_trip(tmp_path):
    s = depth3_system()
    doc = system_to_dict(s)
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    t = load_system(path)
    assert t.alphabet == s.alphabet
    assert (t.incidence == s.incidence).all()
    assert dict(t.potential.table) == dict(s.potential.table)


def test_json_errors_carry_field_paths():
    with pytest.raises(InputError, match=r"system\.alphabet"):
        system_from_dict({})
    with pytest.raises(InputError, match=r"system\.mode"):
        system_from_dict({"alphabet": ["a", "b"], "mode": "sometimes"})
    with pytest.raises(InputError, match=r"incidence\[0\]"):
        system_from_dict({"alphabet": ["a", "b"], "incidence": [["a", "z"]]})


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=7), st.floats(0.1, 5.0))
def test_scaling_multiplies_birkhoff_sums(word, c):
    s = depth3_system()
    w = tuple(word)
    if not s.is_admissible(w):
        return
    assert s.scaled(c).birkhoff_sup(w) == pytest.approx(c * s.birkhoff_sup(w), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=6),
       st.lists(st.integers(0, 2), min_size=1, max_size=6))
def test_birkhoff_sup_is_subadditive(u, v):
    s = depth3_system()
    u, v = tuple(u), tuple(v)
    if not s.is_admissible(u + v):
        return
    assert s.birkhoff_sup(u + v) <= s.birkhoff_sup(u) + s.birkhoff_sup(v) + 1e-12


def test_potential_field_errors():
    from skewdim.errors import InputError
    from skewdim.symbolic import system_from_dict
    assert system_from_dict({"alphabet": ["a", "b"], "potential": 2.0}).potential.inf == 2.0
    with pytest.raises(InputError, match="potential"):
        system_from_dict({"alphabet": ["a", "b"], "potential": "x"})
    with pytest.raises(InputError, match="potential"):
        system_from_dict({"alphabet": ["a", "b"], "potential": {"constant": "x"}})
