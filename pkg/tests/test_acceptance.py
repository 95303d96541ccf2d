"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import hashlib
import math
import time

import numpy as np
import pytest

from skewdim.cli import main
from skewdim.escape import (build_escape_construction, build_measure_tree, covering_sum,
                            local_dimension_estimates, mass_ratio_profile)
from skewdim.extension import build_disjoint_transitive_set, prefix_free
from skewdim.freegroup import IDENTITY, GroupElement, ball, boundary_prefix, multiply
from skewdim.oracle import brute_kernel_counts, brute_level_table
from skewdim.poincare import (SeriesEngine, exponent_estimate, kernel_counts,
                              supermultiplicativity_report, truncated_series)
from skewdim.schottky import (birkhoff_gap_profile, check_generators, delta_G_estimate,
                              delta_N_estimate, orbital_symmetry_defect, sym3, sym3_projection)

DELTA_F2 = 0.5 * math.log(12)


@pytest.fixture
def report(capsys):
    """Print one status line per criterion, even when pytest captures output."""
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def f2_exponents(f2):
    targets = [IDENTITY, GroupElement.parse("e1"), GroupElement.parse("e1 e2")]
    t = time.perf_counter()
    engine = SeriesEngine(f2, targets, 24)
    ests = {str(g): exponent_estimate(f2, g, 24, engine=engine) for g in targets}
    return ests, time.perf_counter() - t


def test_criterion_01_kernel_counts(f2, report):
    t = time.perf_counter()
    got = kernel_counts(f2, 6)
    elapsed = time.perf_counter() - t
    want = brute_kernel_counts(f2, 6)
    ok = got == want and (got[2], got[4], got[6]) == (4, 28, 232) and elapsed < 1
    report(1, ok, f"r_2, r_4, r_6 = {got[2]}, {got[4]}, {got[6]} in {elapsed:.3f} s")


def test_criterion_02_exponent_recovery(f2, f2_exponents, report):
    ests, elapsed = f2_exponents
    est = ests["1"]
    r = kernel_counts(f2, 24)
    ok = abs(est.value - DELTA_F2) < 0.1 and elapsed < 60
    report(2, ok, f"estimate {est.value:.4f} (ci {est.ci_width:.4f}) vs {DELTA_F2:.4f}, "
                  f"r_24/r_22 = {r[24] / r[22]:.3f}, {elapsed:.1f} s")


def test_criterion_03_target_independence(f2_exponents, report):
    ests, _ = f2_exponents
    base = ests["1"]
    gaps = {k: (abs(e.value - base.value), e.ci_width + base.ci_width)
            for k, e in ests.items() if k != "1"}
    ok = all(d <= ci for d, ci in gaps.values())
    report(3, ok, ", ".join(f"{k}: |Δ| {d:.4f} <= {ci:.4f}" for k, (d, ci) in gaps.items()))


def test_criterion_04_termwise_inequality(f2, ray, report):
    p, pp = 1.3, 1.6
    system = f2.system
    V, umin, lam = system.distortion_constant(), system.potential.inf, f2.lambda1
    prefixes = [boundary_prefix(ray, m) for m in range(1, 11)]
    engine = SeriesEngine(f2, prefixes, 20)
    worst, ratios = 0.0, []
    for g in prefixes:
        sums = np.cumsum(engine.level_sums(np.array([p, pp]), g), axis=0)
        factor = math.exp((pp - p) * V + (p - pp) * len(g) * umin / lam)
        for n in range(1, 21):
            if sums[n, 0] > 0:
                worst = max(worst, (sums[n, 1] - factor * sums[n, 0]) / (factor * sums[n, 0]))
        ratios.append(sums[20, 1] / sums[20, 0])
    ms = np.arange(1, 11)
    tail = ms >= 5
    rate = math.exp(np.polyfit(ms[tail], np.log(ratios)[tail], 1)[0])
    partial = np.cumsum(ratios)
    ok = worst <= 1e-12 and rate <= math.exp(-0.3)
    report(4, ok, f"max relative excess {worst:.2e}, ratio decay factor {rate:.3f} "
                  f"<= {math.exp(-0.3):.3f}, partial sum {partial[-1]:.4f}")


def test_criterion_05_supermultiplicativity(f2, report):
    elems = ball(2, 2)
    pairs = [(g, h) for g in elems for h in elems]
    rep = supermultiplicativity_report(f2, 1.5, pairs, range(6, 17))
    stab = rep.stabilization(3)
    report(5, stab < 0.05, f"running max {rep.running_max[-1]:.4f}, "
                           f"relative change over last three n {stab:.4f}")


def test_criterion_06_escape_construction(f2, f2_cert, ray, report):
    con = build_escape_construction(f2, f2_cert, ray, 0.6)
    tree = build_measure_tree(con, 5)
    masses = [tree.total_mass(k) for k in range(tree.depth)]
    M = mass_ratio_profile(tree)
    ld = local_dimension_estimates(tree)[-1]
    ok = (con.margin > 0 and all(abs(m - 1) <= 1e-10 for m in masses)
          and all(b <= a + 1e-10 * a for a, b in zip(M, M[1:])) and ld.minimum >= 0.55)
    report(6, ok, f"margin {con.margin:.3f}, max |mass-1| {max(abs(m - 1) for m in masses):.1e}, "
                  f"M_k {', '.join(f'{m:.2e}' for m in M)}, min local dimension {ld.minimum:.3f}")


def test_criterion_07_covering_bracket(f2, ray, f2_exponents, report):
    hi = covering_sum(f2, ray, None, 1.5, 20).slope(8, 20)
    lo = covering_sum(f2, ray, None, 0.8, 20).slope(8, 20)
    delta = f2_exponents[0]["1"].value
    ok = hi < 0 < lo and 0.8 < delta < 1.5
    report(7, ok, f"slope {hi:.3f} at p = 1.5, {lo:.3f} at p = 0.8, estimate {delta:.4f} between")


def test_criterion_08_oracle_equivalence(f2, restricted, report):
    worst, ps = 0.0, (0.0, 0.7, 1.9)
    for chi in (f2, restricted):
        targets = ball(2, 2)
        table = brute_level_table(chi, targets, ps, 8)
        for g in targets:
            for i, p in enumerate(ps):
                dp = truncated_series(chi, g, p, 8).level_sums
                bf = table[g][i]
                if np.any((dp == 0) != (bf == 0)):
                    worst = math.inf
                nz = bf != 0
                worst = max(worst, float(np.max(np.abs(dp - bf)[nz] / bf[nz], initial=0.0)))
    report(8, worst <= 1e-12, f"max relative error {worst:.2e} over two systems, 17 targets, 3 p")


def test_criterion_09_disjoint_transitive_set(f2, f2_cert, report):
    dts = build_disjoint_transitive_set(f2, f2_cert)
    words = dts.words
    kernel = all(f2(w).is_identity for w in words.values())
    admissible = all(f2.system.is_admissible((a,) + w + (b,)) for (a, b), w in words.items())
    transitive = len(words) == f2.system.size ** 2
    ok = kernel and admissible and transitive and prefix_free(words.values()) and dts.m <= 12
    report(9, ok, f"m = {dts.m}, {len(set(words.values()))} distinct words, kernel {kernel}, "
                  f"transitive {transitive}")


def test_criterion_10_schottky(report):
    t = time.perf_counter()
    group = sym3(25.0)
    chi = sym3_projection(group)
    inv = check_generators(group)
    sym = orbital_symmetry_defect(group, 1000, 12, 0)
    gaps = birkhoff_gap_profile(group, 12, 5, 2000, 0)
    dG = delta_G_estimate(group, 14)
    dN = delta_N_estimate(group, chi, 14)
    ci = dG.ci_width + dN.ci_width
    lower, upper = dN.value - dG.value / 2, dG.value - dN.value
    elapsed = time.perf_counter() - t
    ok = (inv <= 1e-10 and sym <= 1e-9 and gaps.stabilization(3) < 0.05
          and lower > ci and upper > ci and elapsed < 300)
    report(10, ok, f"inverse {inv:.1e}, symmetry {sym:.1e}, gap change {gaps.stabilization(3):.4f}, "
                   f"δG {dG.value:.4f}, δN {dN.value:.4f}, margins {lower:.3f}/{upper:.3f} "
                   f"> ci {ci:.4f}, {elapsed:.1f} s")


def test_criterion_11_determinism(tmp_path, report):
    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["verify", "--out", str(out), "--seed", "3"]) == 0
        digests.append({f.name: hashlib.sha256(f.read_bytes()).hexdigest()
                        for f in sorted(out.iterdir())})
    report(11, digests[0] == digests[1] and digests[0], f"artifacts {sorted(digests[0])} identical")
