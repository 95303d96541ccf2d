"""Command-line front end.

Every subcommand reads one JSON config, writes its artifacts to ``--out``
and prefixes them with a header carrying the tool version and a hash of the
resolved config.  Outputs depend only on the config and the seed.

Exit codes: 0 success, 2 inconclusive, 1 error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .errors import GeometryError, Inconclusive, InputError, SkewdimError, SymmetryViolation
from .freegroup import IDENTITY, BoundaryPoint, GroupElement, parse_elements

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2
ENV_PREFIX = "SKEWDIM_"
SUBCOMMANDS = ("validate", "series", "exponent", "measure", "cover", "schottky", "verify")


def tool_version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:  # not installed, e.g. running from a source tree
        return "0.1.0"


def fmt_real(x: float) -> str:
    """17 significant digits: round-trips every double."""
    return format(float(x), ".17g")


# -- config --------------------------------------------------------------------------

@dataclass
class RunConfig:
    doc: dict
    base_dir: Path
    seed: int = 0
    threads: int = 1
    out: Path = Path("out")
    fmt: str = "json"
    _cache: dict = field(default_factory=dict, repr=False)

    def get(self, key, default=None):
        return self.doc.get(key, default)

    @property
    def hash(self) -> str:
        canon = json.dumps({"config": self.doc, "seed": self.seed}, sort_keys=True,
                           separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def _resolve(self, value, key):
        if isinstance(value, str):
            path = (self.base_dir / value)
            if not path.exists():
                raise InputError(f"{key}: file {value!r} does not exist")
            try:
                return json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise InputError(f"{key}: {value}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        return value

    def system_and_projection(self):
        if "chi" in self._cache:
            return self._cache["chi"]
        from .projection import f2_srw, projection_from_dict
        from .symbolic import system_from_dict

        preset = self.get("preset")
        if preset is not None:
            if str(preset).upper() != "F2-SRW":
                raise InputError(f"preset: unknown preset {preset!r}")
            system, chi = f2_srw(self.get("potential", 1.0))
        else:
            if "system" not in self.doc:
                raise InputError("system: missing (or give preset)")
            system = system_from_dict(self._resolve(self.doc["system"], "system"))
            if "projection" not in self.doc:
                raise InputError("projection: missing")
            chi = projection_from_dict(system, self._resolve(self.doc["projection"], "projection"))
        self._cache["chi"] = chi
        return chi

    def boundary_point(self) -> BoundaryPoint:
        doc = self.get("boundary_point", {"head": "", "cycle": "e1 e2"})
        if isinstance(doc, str):
            return BoundaryPoint.parse("", doc)
        if not isinstance(doc, dict) or "cycle" not in doc:
            raise InputError("boundary_point: expected a cycle string or {head, cycle}")
        return BoundaryPoint.parse(str(doc.get("head", "")), str(doc["cycle"]))

    def targets(self) -> list[GroupElement]:
        return parse_elements(self.get("targets", ["1"]))

    def positive_int(self, key, default) -> int:
        v = self.get(key, default)
        if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
            raise InputError(f"{key}: expected a positive integer, got {v!r}")
        return v

    def real(self, key, default) -> float:
        v = self.get(key, default)
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise InputError(f"{key}: expected a number, got {v!r}")
        return float(v)

    def p_grid(self) -> list[float]:
        grid = self.get("p_grid", [self.get("p", 1.0)])
        if not isinstance(grid, list) or not grid:
            raise InputError("p_grid: expected a nonempty list of numbers")
        try:
            return [float(p) for p in grid]
        except (TypeError, ValueError):
            raise InputError("p_grid: expected numbers") from None

    def max_states(self) -> int:
        from .dp import DEFAULT_MAX_STATES
        return self.positive_int("max_states", DEFAULT_MAX_STATES)


def load_config(path: str | None) -> tuple[dict, Path]:
    if path is None:
        return {"preset": "F2-SRW"}, Path.cwd()
    p = Path(path)
    if not p.exists():
        raise InputError(f"config file {path!r} does not exist")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be an object")
    return doc, p.parent


# -- output --------------------------------------------------------------------------

class Writer:
    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.written: list[Path] = []

    @property
    def header(self) -> dict:
        return {"tool": "skewdim", "version": tool_version(), "command": self.command,
                "config_sha256": self.cfg.hash, "seed": self.cfg.seed}

    def _path(self, name: str) -> Path:
        self.cfg.out.mkdir(parents=True, exist_ok=True)
        path = self.cfg.out / name
        self.written.append(path)
        return path

    def json(self, name: str, result: Any) -> Path:
        path = self._path(name + ".json")
        body = {"header": self.header, "result": _jsonable(result)}
        path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
        return path

    def csv(self, name: str, columns: list[str], rows) -> Path:
        path = self._path(name + ".csv")
        buf = io.StringIO()
        for k, v in self.header.items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt_real(x) if isinstance(x, float) else x for x in row])
        path.write_text(buf.getvalue())
        return path

    def table(self, name: str, result: dict) -> Path:
        """Honor ``--format``: JSON document or a flattened key/value CSV."""
        if self.cfg.fmt == "csv":
            return self.csv(name, ["key", "value"], _flatten(_jsonable(result)))
        return self.json(name, result)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (GroupElement, BoundaryPoint)):
        return str(x)
    return x


def _flatten(x, prefix=""):
    if isinstance(x, dict):
        for k, v in x.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(x, list):
        for i, v in enumerate(x):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield (prefix[:-1], x)


# -- subcommands ---------------------------------------------------------------------

def cmd_validate(cfg: RunConfig, out: Writer) -> int:
    from .extension import Involution, check_symmetry, verify_kernel_transitivity

    chi = cfg.system_and_projection()
    system = chi.system
    report = {
        "alphabet": list(system.alphabet),
        "depth": system.depth,
        "potential_min": system.potential.inf,
        "potential_max": system.potential.sup,
        "distortion_constant": system.distortion_constant(),
        "lambda1": chi.lambda1,
        "surjective_witnessed": chi.generates(cfg.positive_int("surjectivity_radius", 4)),
    }
    status = EXIT_OK
    try:
        cert = verify_kernel_transitivity(chi, cfg.positive_int("transitivity_depth", 6))
        report["transitivity"] = {"status": "certified", "bound": cert.bound,
                                  "connectors": cert.to_dict(system)}
    except Inconclusive as exc:
        report["transitivity"] = {"status": "inconclusive", "reason": str(exc),
                                  "missing": [[system.alphabet[a], system.alphabet[b]]
                                              for a, b in (exc.missing or [])]}
        status = EXIT_INCONCLUSIVE
    pairs = cfg.get("involution")
    if pairs is not None:
        dagger = Involution.from_pairs(system, pairs)
        try:
            sym = check_symmetry(chi, dagger, cfg.positive_int("symmetry_depth", 6))
            report["symmetry"] = {"status": "ok", "words_checked": sym.words_checked,
                                  "max_gap_by_length": sym.max_gap_by_length}
        except SymmetryViolation as exc:
            report["symmetry"] = {"status": "violated", "reason": str(exc),
                                  "witness": system.format(exc.witness)}
    out.table("validate", report)
    return status


def cmd_series(cfg: RunConfig, out: Writer) -> int:
    from .poincare import SeriesEngine

    chi = cfg.system_and_projection()
    n = cfg.positive_int("n", 12)
    targets = cfg.targets()
    engine = SeriesEngine(chi, targets, n, cfg.max_states())
    rows = []
    for g in targets:
        for p in cfg.p_grid():
            for m, a in enumerate(engine.level_sums(p, g)):
                rows.append((str(g), p, m, float(a)))
    if cfg.fmt == "json":
        out.json("series", [{"target": t, "p": p, "m": m, "a_m": a} for t, p, m, a in rows])
    else:
        out.csv("series", ["target", "p", "m", "a_m"], rows)
    return EXIT_OK


def cmd_exponent(cfg: RunConfig, out: Writer) -> int:
    from .poincare import SeriesEngine, exponent_estimate

    chi = cfg.system_and_projection()
    n_max = cfg.positive_int("n_max", 20)
    bracket = tuple(cfg.get("p_bracket", [0.0, 5.0]))
    targets = cfg.targets()
    engine = SeriesEngine(chi, targets, n_max, cfg.max_states())
    result = {}
    for g in targets:
        est = exponent_estimate(chi, g, n_max, bracket, cfg.real("tol", 1e-3), engine=engine)
        result[str(g)] = est.to_dict()
    out.table("exponent", result)
    return EXIT_OK


def _certificate(cfg: RunConfig, chi):
    from .extension import verify_kernel_transitivity
    return verify_kernel_transitivity(chi, cfg.positive_int("transitivity_depth", 6))


def cmd_measure(cfg: RunConfig, out: Writer) -> int:
    from .escape import (build_escape_construction, build_measure_tree, local_dimension_estimates,
                         mass_ratio_profile)

    chi = cfg.system_and_projection()
    con = build_escape_construction(chi, _certificate(cfg, chi), cfg.boundary_point(),
                                    cfg.real("p", 0.6),
                                    length_cap=cfg.positive_int("length_cap", 20),
                                    max_states=cfg.max_states())
    tree = build_measure_tree(con, cfg.positive_int("depth", 5))
    doc = tree.to_dict()
    doc["mass_ratio_profile"] = mass_ratio_profile(tree)
    doc["local_dimension"] = [vars(s) for s in local_dimension_estimates(tree)]
    doc["total_mass"] = [tree.total_mass(k) for k in range(tree.depth)]
    out.json("measure", doc)
    return EXIT_OK


def cmd_cover(cfg: RunConfig, out: Writer) -> int:
    from .escape import covering_sum

    chi = cfg.system_and_projection()
    n = cfg.positive_int("n", 16)
    r = cfg.get("r")
    rows = []
    for p in cfg.p_grid():
        prof = covering_sum(chi, cfg.boundary_point(), r, p, n, cfg.max_states())
        rows += [(p, m, float(c)) for m, c in enumerate(prof.level_sums)]
    if cfg.fmt == "json":
        out.json("cover", [{"p": p, "m": m, "c_m": c} for p, m, c in rows])
    else:
        out.csv("cover", ["p", "m", "c_m"], rows)
    return EXIT_OK


def cmd_schottky(cfg: RunConfig, out: Writer) -> int:
    from .schottky import DEFAULT_DEPTH, build_schottky, kernel_projection, normal_subgroup_report

    gdoc = cfg._resolve(cfg.get("schottky", {"preset": "SYM3", "half_width_deg": 25}), "schottky")
    group = build_schottky(gdoc)
    system = group.coding_system(cfg.positive_int("potential_depth", DEFAULT_DEPTH))
    chi = kernel_projection(group, cfg.get("chi", {"a": "e1", "b": "e2", "c": "1"}), system)
    report = normal_subgroup_report(group, chi, cfg.boundary_point(), cfg.positive_int("n_max", 14),
                              seed=cfg.seed)
    out.table("schottky", report)
    return EXIT_OK


# -- verify --------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    detail: str


def _run_check(name: str, fn: Callable[[], tuple[bool, str]]) -> Check:
    try:
        ok, detail = fn()
    except Inconclusive as exc:
        return Check(name, False, f"inconclusive: {exc}")
    except (SkewdimError, AssertionError, ValueError) as exc:
        return Check(name, False, f"error: {exc}")
    return Check(name, bool(ok), detail)


def verification_checks(cfg: RunConfig) -> list[Check]:
    """Invariant suite on the configured system (default F2-SRW) and SYM3."""
    from .escape import (build_escape_construction, build_measure_tree, classify_trajectory,
                         covering_sum, mass_ratio_profile, sample_support_word)
    from .extension import build_disjoint_transitive_set, prefix_free, verify_kernel_transitivity
    from .oracle import brute_level_sums
    from .poincare import kernel_counts, termwise_decay_check, truncated_series
    from .schottky import (birkhoff_gap_profile, build_schottky, check_generators,
                           orbital_symmetry_defect)

    chi = cfg.system_and_projection()
    system = chi.system
    rng = np.random.default_rng(cfg.seed)
    n_small = cfg.positive_int("verify_n", 6)
    x = cfg.boundary_point()
    checks = []

    def kernel():
        got = kernel_counts(chi, n_small)
        want = [int(round(v)) for v in brute_level_sums(chi, IDENTITY, 0.0, n_small)]
        return got == want, f"r = {got}"
    checks.append(_run_check("kernel counts match enumeration", kernel))

    def oracle():
        worst = 0.0
        for _ in range(3):
            p = float(rng.uniform(0.2, 2.0))
            g = GroupElement.from_letters(
                int(rng.choice([-1, 1]) * rng.integers(1, chi.rank + 1))
                for _ in range(int(rng.integers(0, 3))))
            dp = truncated_series(chi, g, p, n_small).level_sums
            bf = brute_level_sums(chi, g, p, n_small)
            worst = max(worst, float(np.max(np.abs(dp - bf) / np.maximum(np.abs(bf), 1e-300))))
        return worst <= 1e-12, f"max relative error {worst:.3g}"
    checks.append(_run_check("series match enumeration", oracle))

    def scaling():
        c = 1.7
        a = truncated_series(chi, IDENTITY, 1.3 * c, n_small).level_sums
        scaled = type(chi)(system.scaled(c), chi.images, chi.rank)
        b = truncated_series(scaled, IDENTITY, 1.3, n_small).level_sums
        err = float(np.max(np.abs(a - b) / np.maximum(a, 1e-300)))
        return err <= 1e-12, f"max relative error {err:.3g}"
    checks.append(_run_check("potential scaling identity", scaling))

    def termwise():
        rep = termwise_decay_check(chi, x, 1.3, 1.6, 6, 2 * n_small)
        return rep.max_violation <= 1e-12, f"max excess {rep.max_violation:.3g}"
    checks.append(_run_check("termwise decay inequality", termwise))

    cert_box = {}

    def transitive():
        cert = verify_kernel_transitivity(chi, cfg.positive_int("transitivity_depth", 6))
        cert_box["cert"] = cert
        dts = build_disjoint_transitive_set(chi, cert)
        cert_box["dts"] = dts
        ok = prefix_free(dts.words.values()) and all(
            chi(w).is_identity and system.is_admissible((a,) + w + (b,))
            for (a, b), w in dts.words.items())
        return ok, f"m = {dts.m}, {len(set(dts.words.values()))} words"
    checks.append(_run_check("disjoint transitive kernel set", transitive))

    con_box = {}

    def escape():
        con = build_escape_construction(chi, cert_box["cert"], x, cfg.real("p", 0.6),
                                        transitive=cert_box["dts"], max_states=cfg.max_states())
        tree = build_measure_tree(con, 3)
        con_box["con"] = con
        masses = [tree.total_mass(k) for k in range(tree.depth)]
        M = mass_ratio_profile(tree)
        ok = (con.margin > 0 and all(abs(m - 1) <= 1e-10 for m in masses)
              and all(b <= a * (1 + 1e-10) for a, b in zip(M, M[1:])))
        return ok, f"margin {con.margin:.4g}, masses {[round(m, 12) for m in masses]}"
    checks.append(_run_check("escape measure tree", escape))

    def support():
        con = con_box["con"]
        R = con.deviation_bound()
        worst = 0
        for _ in range(3):
            w, _ = sample_support_word(con, 3, rng)
            worst = max(worst, max(classify_trajectory(chi, w, x).deviations))
        return worst <= R, f"max deviation {worst} <= R = {R}"
    checks.append(_run_check("support stays near the boundary ray", support))

    def cover():
        prof = covering_sum(chi, x, 0, 1.0, 4)
        return prof.level_sums[0] == 1.0, f"c_0 = {prof.level_sums[0]}"
    checks.append(_run_check("covering sum contains the empty word", cover))

    def schottky():
        group = build_schottky(cfg.get("schottky", {"preset": "SYM3", "half_width_deg": 25}))
        inv = check_generators(group)
        sym = orbital_symmetry_defect(group, 200, 10, cfg.seed)
        gap = birkhoff_gap_profile(group, 8, 4, 200, cfg.seed)
        ok = inv <= 1e-9 and sym <= 1e-9
        return ok, (f"generator defect {inv:.3g}, orbital symmetry {sym:.3g}, "
                    f"max gap {max(gap.max_gap):.6f}")
    checks.append(_run_check("Schottky geometry", schottky))
    return checks


def cmd_verify(cfg: RunConfig, out: Writer) -> int:
    checks = verification_checks(cfg)
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}")
    rows = [(c.name, "pass" if c.passed else "fail", c.detail) for c in checks]
    if cfg.fmt == "csv":
        out.csv("verify", ["check", "status", "detail"], rows)
    else:
        out.json("verify", [{"check": n, "status": s, "detail": d} for n, s, d in rows])
    if all(c.passed for c in checks):
        return EXIT_OK
    if any(c.detail.startswith("inconclusive") for c in checks if not c.passed) and \
            all(c.passed or c.detail.startswith("inconclusive") for c in checks):
        return EXIT_INCONCLUSIVE
    return EXIT_ERROR


COMMANDS = {
    "validate": cmd_validate, "series": cmd_series, "exponent": cmd_exponent,
    "measure": cmd_measure, "cover": cmd_cover, "schottky": cmd_schottky, "verify": cmd_verify,
}


def _env(name, default=None):
    return os.environ.get(ENV_PREFIX + name, default)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="skewdim", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=SUBCOMMANDS)
    ap.add_argument("--config", default=_env("CONFIG"), help="JSON run config (default: F2-SRW preset)")
    ap.add_argument("--out", default=_env("OUT", "out"), help="output directory")
    ap.add_argument("--threads", type=int, default=int(_env("THREADS", "1")),
                    help="accepted for compatibility; engines are vectorized in one process")
    ap.add_argument("--seed", type=int, default=int(_env("SEED", "0")))
    ap.add_argument("--format", dest="fmt", choices=("json", "csv"), default=_env("FORMAT", "json"))
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ValueError as exc:  # bad integer in an environment override
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise InputError("--seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise InputError("--threads must be positive")
        doc, base = load_config(args.config)
        cfg = RunConfig(doc, base, args.seed, args.threads, Path(args.out), args.fmt)
        status = COMMANDS[args.command](cfg, Writer(cfg, args.command))
    except Inconclusive as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (InputError, GeometryError, SymmetryViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SkewdimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return status


if __name__ == "__main__":
    sys.exit(main())
