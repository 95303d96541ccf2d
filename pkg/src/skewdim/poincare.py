"""Truncated restricted Poincaré series and their critical exponent.

``Z_n(p|g)`` sums ``exp(-p S_ω u)`` over admissible words of length at most
``n`` (the empty word included) with ``χ(ω) = g``.  Level sums come from the
pruned dynamic programme in :mod:`skewdim.dp`, so one state-space build
serves every exponent ``p``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .dp import DEFAULT_MAX_STATES, Codec, Skeleton, build_skeleton, distance_pruner, radius_pruner
from .errors import Inconclusive, InputError
from .freegroup import IDENTITY, BoundaryPoint, GroupElement, ball, boundary_prefix, multiply
from .projection import Projection


@dataclass
class SeriesProfile:
    target: GroupElement
    p: float
    max_length: int
    level_sums: np.ndarray

    @property
    def total(self) -> float:
        return float(math.fsum(self.level_sums))

    def to_csv_rows(self):
        return [(m, float(a)) for m, a in enumerate(self.level_sums)]


class SeriesEngine:
    """Pruned state space for a fixed set of targets and truncation length."""

    def __init__(self, chi: Projection, targets: Iterable[GroupElement], n: int,
                 max_states: int = DEFAULT_MAX_STATES):
        if n < 0:
            raise InputError("truncation length must be non-negative")
        self.chi = chi
        self.targets = list(dict.fromkeys(targets))
        self.n = n
        codec = Codec(chi.rank)
        radius = max(len(g) for g in self.targets)
        if set(self.targets) == set(ball(chi.rank, radius)) and radius > 0:
            keep = radius_pruner(radius, chi.lambda1, n)
        else:
            keep = distance_pruner(codec, self.targets, chi.lambda1, n)
        self.skeleton: Skeleton = build_skeleton(chi.system, chi.images, chi.rank, n, keep,
                                                 max_states=max_states)

    def level_sums(self, p, g: GroupElement) -> np.ndarray:
        if g not in self.targets:
            raise InputError(f"{g} is not a target of this engine")
        return self.skeleton.level_sums(p, self.skeleton.target_selector(g))

    def profile(self, p: float, g: GroupElement) -> SeriesProfile:
        return SeriesProfile(g, float(p), self.n, self.level_sums(float(p), g))


def truncated_series(chi: Projection, g: GroupElement, p: float, n: int,
                     max_states: int = DEFAULT_MAX_STATES) -> SeriesProfile:
    return SeriesEngine(chi, [g], n, max_states).profile(p, g)


def kernel_counts(chi: Projection, n: int, max_states: int = DEFAULT_MAX_STATES) -> list[int]:
    """Number of admissible words of each length ``0..n`` projecting to 1."""
    sums = SeriesEngine(chi, [IDENTITY], n, max_states).level_sums(0.0, IDENTITY)
    if sums.max(initial=0) >= 2 ** 53:
        raise InputError("counts exceed exact float range")
    return [int(round(x)) for x in sums]


# -- exponent estimation -----------------------------------------------------------

@dataclass
class ExponentEstimate:
    value: float
    ci_width: float
    window: tuple[int, int]
    lattice: int
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"estimate": self.value, "ci_width": self.ci_width,
                "window": list(self.window), "lattice": self.lattice,
                "diagnostics": self.diagnostics}


def _lattice(ms: np.ndarray) -> int:
    if len(ms) < 2:
        return 1
    return int(reduce(math.gcd, (int(d) for d in np.diff(ms)))) or 1


def _fit(ms: np.ndarray, logs: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and its standard error."""
    x = ms - ms.mean()
    sxx = float(x @ x)
    slope = float(x @ (logs - logs.mean())) / sxx
    if len(ms) <= 2:
        return slope, 0.0
    resid = logs - logs.mean() - slope * x
    se = math.sqrt(float(resid @ resid) / (len(ms) - 2) / sxx)
    return slope, se


class GrowthRate:
    """``γ(p)``: regression slope of ``log a_m(p)`` on the mass-carrying lattice."""

    def __init__(self, level_sums_fn, n_max: int, window: tuple[int, int] | None = None):
        self.level_sums_fn = level_sums_fn
        lo, hi = window if window is not None else (n_max // 2, n_max)
        self.window = (lo, hi)
        probe = np.asarray(level_sums_fn(np.array([0.0])))[:, 0]
        ms = np.arange(lo, hi + 1)
        support = ms[probe[lo:hi + 1] > 0]
        if len(support) < 2:
            raise Inconclusive(
                f"fewer than two nonzero level sums in window [{lo}, {hi}]; increase n_max")
        self.lattice = _lattice(support)
        self.ms = support

    def __call__(self, ps: np.ndarray, ms: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        ms = self.ms if ms is None else ms
        sums = np.asarray(self.level_sums_fn(np.atleast_1d(ps)))
        slopes, ses = [], []
        for j in range(sums.shape[1]):
            logs = np.log(sums[ms, j])
            s, se = _fit(ms.astype(float), logs)
            slopes.append(s)
            ses.append(se)
        return np.array(slopes), np.array(ses)


def bisect_growth(growth: GrowthRate, bracket: tuple[float, float], tol: float = 1e-3,
                  points: int = 8) -> ExponentEstimate:
    """Find the zero of the (strictly decreasing) growth rate in ``bracket``."""
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise InputError("exponent bracket must satisfy lo < hi")
    g, _ = growth(np.array([lo, hi]))
    if not (g[0] > 0 > g[1]):
        raise InputError(
            f"growth rate does not change sign on [{lo}, {hi}] (γ = {g[0]:.4g}, {g[1]:.4g})")
    while hi - lo > tol:
        grid = np.linspace(lo, hi, points + 2)[1:-1]
        gs, _ = growth(grid)
        pos = grid[gs > 0]
        neg = grid[gs <= 0]
        if len(pos):
            lo = float(pos.max())
        if len(neg):
            hi = float(neg.min())
    value = 0.5 * (lo + hi)
    h = max(tol, 1e-3)
    (g_minus, g_mid, g_plus), (_, se, _) = growth(np.array([value - h, value, value + h]))
    dgdp = (g_plus - g_minus) / (2 * h)
    upper = growth.ms[len(growth.ms) // 2:]
    drift = 0.0
    if len(upper) >= 2:
        (g_upper,), _ = growth(np.array([value]), upper)
        drift = abs(g_upper - g_mid) / abs(dgdp)
    # two slope standard errors and the window drift, both mapped through dγ/dp,
    # plus the remaining bisection bracket
    ci = 2.0 * se / abs(dgdp) + drift + 0.5 * (hi - lo)
    sums = np.asarray(growth.level_sums_fn(np.array([value])))[:, 0]
    ms = growth.ms
    ratios = [float(sums[b] / sums[a]) for a, b in zip(ms, ms[1:])]
    diag = {"growth_at_estimate": float(g_mid), "slope_se": float(se),
            "dgrowth_dp": float(dgdp), "window_drift": float(drift),
            "lattice_points": [int(m) for m in ms],
            "ratio_sequence": ratios}
    return ExponentEstimate(value, float(ci), growth.window, growth.lattice, diag)


def exponent_estimate(chi: Projection, g: GroupElement = IDENTITY, n_max: int = 24,
                      p_bracket: tuple[float, float] = (0.0, 5.0), tol: float = 1e-3,
                      engine: SeriesEngine | None = None,
                      max_states: int = DEFAULT_MAX_STATES) -> ExponentEstimate:
    """Critical exponent of ``Z(·|g)`` from the zero of the level-sum growth rate."""
    if n_max < 8:
        raise InputError("n_max must be at least 8")
    if engine is None:
        engine = SeriesEngine(chi, [g], n_max, max_states)
    growth = GrowthRate(lambda ps: engine.level_sums(ps, g), n_max)
    est = bisect_growth(growth, p_bracket, tol)
    est.diagnostics["target"] = str(g)
    est.diagnostics["n_max"] = n_max
    return est


# -- numerical shadows of the structural propositions --------------------------------

@dataclass
class SupermultiplicativityReport:
    p: float
    ns: list[int]
    den_lengths: list[int]
    max_ratio_by_n: list[float]
    argmax_by_n: list[tuple[str, str]]

    @property
    def running_max(self) -> list[float]:
        return list(np.maximum.accumulate(self.max_ratio_by_n))

    def stabilization(self, last: int = 3) -> float:
        """Relative change of the running maximum over the last ``last`` values."""
        r = self.running_max[-last:]
        return (max(r) - min(r)) / max(r)


def supermultiplicativity_report(chi: Projection, p: float,
                                 pairs: Sequence[tuple[GroupElement, GroupElement]],
                                 ns: Sequence[int], connector_bound: int = 0,
                                 den_cap: int = 18,
                                 max_states: int = DEFAULT_MAX_STATES) -> SupermultiplicativityReport:
    """Sweep ``Z_n(p|g) Z_n(p|g') / Z_N(p|gg')`` with ``N = min(2n + L, den_cap)``.

    Capping ``N`` can only shrink the denominator, so the reported ratios
    bound the uncapped ones from above.
    """
    ns = sorted(ns)
    factors = {x for pair in pairs for x in pair}
    prods = {multiply(g, h) for g, h in pairs}
    n_top = ns[-1]
    N_top = min(2 * n_top + connector_bound, den_cap)
    num = SeriesEngine(chi, factors, n_top, max_states)
    den = SeriesEngine(chi, prods, N_top, max_states)
    num_cum = {g: np.cumsum(num.level_sums(p, g)) for g in factors}
    den_cum = {g: np.cumsum(den.level_sums(p, g)) for g in prods}
    maxes, args, dls = [], [], []
    for n in ns:
        N = min(2 * n + connector_bound, den_cap)
        dls.append(N)
        best, arg = -math.inf, None
        for g, h in pairs:
            d = den_cum[multiply(g, h)][N]
            if d <= 0:
                raise Inconclusive(f"Z_{N}(p|{multiply(g, h)}) vanished; raise den_cap")
            r = num_cum[g][n] * num_cum[h][n] / d
            if r > best:
                best, arg = r, (str(g), str(h))
        maxes.append(float(best))
        args.append(arg)
    return SupermultiplicativityReport(float(p), list(ns), dls, maxes, args)


@dataclass
class TermwiseDecayReport:
    p: float
    p_prime: float
    n: int
    lengths: list[int]
    z_p: list[float]
    z_p_prime: list[float]
    bounds: list[float]
    max_violation: float

    @property
    def ratios(self) -> list[float]:
        return [b / a for a, b in zip(self.z_p, self.z_p_prime)]

    @property
    def partial_sums(self) -> list[float]:
        return list(np.cumsum(self.ratios))

    @property
    def decay_factors(self) -> list[float]:
        r = self.ratios
        return [b / a for a, b in zip(r, r[1:])]

    def fitted_rate(self, start: int = 1) -> float:
        """Geometric decay factor of the ratios from a log-linear fit over ``m >= start``."""
        pts = [(m, r) for m, r in zip(self.lengths, self.ratios) if m >= start]
        if len(pts) < 2:
            return math.nan
        ms, rs = zip(*pts)
        slope, _ = _fit(np.array(ms, float), np.log(rs))
        return math.exp(slope)


def termwise_decay_check(chi: Projection, x: BoundaryPoint, p: float, p_prime: float,
                         m_max: int, n: int, rel_slack: float = 1e-12,
                         max_states: int = DEFAULT_MAX_STATES) -> TermwiseDecayReport:
    """Check ``Z(p'|g) <= exp((p'-p)V + (p-p')|g| min u / λ1) Z(p|g)`` along ``x``.

    The inequality holds word by word, hence exactly on equal truncations;
    a violation beyond floating slack means a bug and raises.
    """
    if not p_prime >= p:
        raise InputError("need p' >= p")
    system = chi.system
    V = system.distortion_constant()
    umin = system.potential.inf
    lam = chi.lambda1
    prefixes = [boundary_prefix(x, m) for m in range(1, m_max + 1)]
    eng = SeriesEngine(chi, prefixes, n, max_states)
    zs, zps, bounds = [], [], []
    worst = 0.0
    for g in prefixes:
        sums = eng.level_sums(np.array([p, p_prime]), g)
        z, zp = math.fsum(sums[:, 0]), math.fsum(sums[:, 1])
        bound = math.exp((p_prime - p) * V + (p - p_prime) * len(g) * umin / lam) * z
        excess = (zp - bound) / max(bound, 1e-300)
        worst = max(worst, excess)
        if excess > rel_slack:
            raise AssertionError(
                f"termwise bound violated at |g| = {len(g)}: {zp!r} > {bound!r}")
        zs.append(z)
        zps.append(zp)
        bounds.append(bound)
    return TermwiseDecayReport(float(p), float(p_prime), n, list(range(1, m_max + 1)),
                               zs, zps, bounds, worst)


@dataclass
class BoundarySeries:
    p: float
    n: int
    terms: list[float]

    @property
    def partial_sums(self) -> list[float]:
        return list(np.cumsum(self.terms))

    @property
    def running_sup(self) -> list[float]:
        return list(np.maximum.accumulate(self.terms))


def boundary_series(chi: Projection, x: BoundaryPoint, p: float, m_max: int, n: int,
                    max_states: int = DEFAULT_MAX_STATES) -> BoundarySeries:
    """Terms ``Z_n(p|x_0...x_{m-1})`` for ``m = 1..m_max``."""
    prefixes = [boundary_prefix(x, m) for m in range(1, m_max + 1)]
    eng = SeriesEngine(chi, prefixes, n, max_states)
    terms = [math.fsum(eng.level_sums(float(p), g)) for g in prefixes]
    return BoundarySeries(float(p), n, terms)
