"""Command-line front end: validated job configuration, subcommand
dispatch, and machine-readable JSON reports.

Subcommands: pairs (enumerate and certify Wronskian pairs), spectrum
(joint diagonalization with the simple-spectrum certificate), match (the
pair <-> eigen-tuple bijection, producing an eigenvector per pair),
sov-check (separated-variables residuals, surplus consistency and
operator transport; n capped at 6).

Reports are single JSON documents: rationals appear as "p/q" strings,
complex numbers as [re, im] pairs, floats as plain numbers, and
polynomials as ascending coefficient arrays.  Runs repeated with one
(config, seed) are byte-identical outside the timings block.  --out
names the report file; otherwise it lands in $BETHELAB_OUT or the
working directory.  Exit codes: 0 success, 1 resource or solver failure,
2 mathematical assertion failure, 64 bad usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .diffop import ADMISSIBLE, ModelParams
from .exactmath import ExactPoly
from .qsystem import enumerate_pairs
from .sovrep import (
    SOV_N_CAP,
    extract_eigenvector,
    sh_map,
    singular_sov_basis,
    sklyanin_ops,
    transfer_B_sov,
    weight_fn_eigencheck,
)
from .spectra import (
    eigenbasis_uniqueness_check,
    match_pairs_spectrum,
    simple_spectrum_certificate,
    spectrum_report,
)
from .spinchain import N_CAP, bethe_vector, transfer_B

OUT_ENV = "BETHELAB_OUT"
EXIT_OK, EXIT_RESOURCE, EXIT_MATH, EXIT_USAGE = 0, 1, 2, 64

DEFAULT_TOLS = {
    "residual": 1e-10,
    "dedup": 1e-7,
    "spectrum": 1e-6,
    "match": 1e-8,
}

_MODES = ("exact", "numeric", "auto")
_METHODS = ("eigen_seeded", "newton_multistart", "exact_elimination")


class UsageError(ValueError):
    """The invocation cannot be turned into a valid job."""


@dataclass(frozen=True)
class JobConfig:
    """One validated invocation: what to run and with which knobs."""

    command: str
    n: int
    l: int
    z: tuple = None
    mode: str = "auto"
    method: str = "eigen_seeded"
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    out: str = None
    threads: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.n < 1:
            raise UsageError("--n must be at least 1")
        if self.l < 0:
            raise UsageError("--l must be non-negative")
        if 2 * self.l > self.n:
            raise UsageError(f"need 2l <= n, got n={self.n} l={self.l}")
        cap = SOV_N_CAP if self.command == "sov-check" else N_CAP
        if self.n > cap:
            raise UsageError(
                f"--n {self.n} is over the {self.command} cap {cap}")
        if self.mode not in _MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.method not in _METHODS:
            raise UsageError(f"unknown method {self.method!r}")
        if self.threads < 1:
            raise UsageError("--threads must be positive")
        raw = self.z if self.z is not None else (0,) * self.n
        try:
            z = tuple(Fraction(v) for v in raw)
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise UsageError(f"bad --z entry: {exc}")
        if len(z) != self.n:
            raise UsageError(f"--z needs {self.n} entries, got {len(z)}")
        object.__setattr__(self, "z", z)
        tols = dict(DEFAULT_TOLS)
        tols.update(self.tolerances)
        object.__setattr__(self, "tolerances", tols)

    @property
    def params(self) -> ModelParams:
        return ModelParams(n=self.n, l=self.l, z=self.z)


def _num(x):
    """JSON form of one scalar under the report conventions."""
    if isinstance(x, (int, Fraction, np.integer)):
        f = Fraction(x)
        return f"{f.numerator}/{f.denominator}"
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    return float(x)


def _plain(v):
    """Strip numpy scalar wrappers; json rejects them (np.bool_ hard)."""
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _poly(p) -> list:
    return [_num(c) for c in p.coeffs]


def _config_block(cfg: JobConfig) -> dict:
    return {
        "command": cfg.command,
        "n": cfg.n,
        "l": cfg.l,
        "z": [_num(v) for v in cfg.z],
        "mode": cfg.mode,
        "method": cfg.method,
        "seed": cfg.seed,
        "threads": cfg.threads,
    }


def _finish(report: dict, cfg: JobConfig, tol_keys, failures, t0) -> dict:
    report["config"] = _config_block(cfg)
    report["tolerances"] = {k: cfg.tolerances[k] for k in tol_keys}
    report["version"] = __version__
    report["failures"] = failures
    report["status"] = "fail" if failures else "pass"
    report["timings"] = {"total_s": time.perf_counter() - t0}
    return report


def cmd_pairs(config: JobConfig) -> dict:
    """Enumerate Wronskian pairs, certify each, and compare the count
    against the dimension formula."""
    t0 = time.perf_counter()
    tols = config.tolerances
    solve = enumerate_pairs(config.params, config.method, seed=config.seed,
                            dedup_tol=tols["dedup"], threads=config.threads)
    entries = []
    failures = []
    for i, (pair, cert) in enumerate(zip(solve.pairs, solve.certificates)):
        entries.append({
            "f": _poly(pair.f),
            "g": _poly(pair.g),
            "h": [_num(v) for v in pair.h],
            "roots": {"t": [_num(v) for v in pair.roots.t],
                      "classification": pair.roots.classification},
            "gauge": pair.gauge,
            "certificate": {
                "status": cert.status,
                "residuals": {k: float(v)
                              for k, v in cert.residuals.items()}},
        })
        if cert.status == "failed" or (
                cert.status == "numeric"
                and cert.max_residual > tols["residual"]):
            failures.append(f"pair {i} certificate {cert.status} "
                            f"(max residual {cert.max_residual:.3e})")
    if solve.found != solve.expected:
        failures.append(
            f"found {solve.found} pairs, expected {solve.expected}")
    report = {
        "command": "pairs",
        "expected": solve.expected,
        "found": solve.found,
        "all_exact": solve.all_exact,
        "pairs": entries,
        "stats": solve.stats,
    }
    return _finish(report, config, ("residual", "dedup"), failures, t0)


def cmd_spectrum(config: JobConfig) -> dict:
    """Joint-diagonalize the commuting family on the singular space and
    certify simple spectrum and eigenbasis uniqueness."""
    t0 = time.perf_counter()
    tols = config.tolerances
    rep = spectrum_report(config.params, seed=config.seed)
    ok, evidence = simple_spectrum_certificate(rep, tol=tols["spectrum"])
    unique, table = eigenbasis_uniqueness_check(rep, tol=tols["spectrum"])
    failures = []
    if not ok:
        failures.append(f"simple-spectrum certificate failed: {evidence}")
    if not unique:
        failures.append("eigenbasis uniqueness check failed")
    report = {
        "command": "spectrum",
        "dim": int(rep.dim),
        "tuples": [[_num(v) for v in t] for t in rep.tuples],
        "min_separation": float(rep.min_separation),
        "max_commutator": float(rep.max_commutator),
        "max_leakage": float(rep.max_leakage),
        "certificate": {"ok": bool(ok),
                        "evidence": {k: _plain(v)
                                     for k, v in evidence.items()}},
        "uniqueness": {"ok": bool(unique),
                       "separating": {f"{i},{j}": int(k)
                                      for (i, j), k in sorted(table.items())}},
        "seed": int(rep.seed),
    }
    return _finish(report, config, ("spectrum",), failures, t0)


def cmd_match(config: JobConfig) -> dict:
    """Full pipeline: pairs, spectrum, the bijection between them, and one
    eigenvector per pair - the Bethe vector at admissible roots, the
    extracted line where the Bethe vector vanishes."""
    t0 = time.perf_counter()
    params = config.params
    tols = config.tolerances
    solve = enumerate_pairs(params, config.method, seed=config.seed,
                            dedup_tol=tols["dedup"], threads=config.threads)
    rep = spectrum_report(params, seed=config.seed)
    table = match_pairs_spectrum(solve, rep, tol=tols["match"])
    failures = []
    vectors = []
    for i, j, dist in table.entries:
        pair = solve.pairs[i]
        line = np.asarray(rep.lines[:, j], dtype=complex)
        admissible = pair.roots.classification == ADMISSIBLE
        if admissible:
            vec = np.asarray(
                bethe_vector(pair.roots.t, params, "numeric"), dtype=complex)
            via = "bethe_vector"
        elif params.n <= SOV_N_CAP:
            # the Bethe vector vanishes identically here; pull the line
            # out of the separated-variables module instead
            if config.mode == "exact" and pair.is_exact:
                h = pair.h
            else:
                h = tuple(complex(v) for v in pair.h)
            vec = np.asarray(extract_eigenvector(h, params, config.l),
                             dtype=complex)
            via = "extract"
        else:
            vectors.append({"pair": i, "tuple": j, "distance": dist,
                            "via": "unavailable", "overlap": None})
            continue
        ov = abs(np.vdot(vec, line)) \
            / (np.linalg.norm(vec) * np.linalg.norm(line))
        vectors.append({"pair": i, "tuple": j, "distance": float(dist),
                        "via": via, "overlap": float(ov)})
        if ov < 1 - tols["match"]:
            failures.append(
                f"pair {i} eigenvector overlap {ov:.12f} via {via}")
    report = {
        "command": "match",
        "expected": solve.expected,
        "found": solve.found,
        "dim": int(rep.dim),
        "size": table.size,
        "matches": [{"pair": i, "tuple": j, "distance": float(d)}
                    for i, j, d in table.entries],
        "pair_h": [[_num(v) for v in p.h] for p in solve.pairs],
        "tuples": [[_num(v) for v in t] for t in rep.tuples],
        "eigenvectors": vectors,
        "max_leakage": float(rep.max_leakage),
    }
    return _finish(report, config, ("residual", "dedup", "spectrum", "match"),
                   failures, t0)


def cmd_sov_check(config: JobConfig) -> dict:
    """Separated-variables verification: vacuum rows, singular dimension,
    the surplus-sample consistency of sh, exact operator transport, and
    the ladder eigenproblem residuals of every pair's weight vector."""
    t0 = time.perf_counter()
    params = config.params
    l = config.l
    tols = config.tolerances
    failures = []

    t11, t22, _, _ = sklyanin_ops(params, 0)
    vacuum = (tuple(c[0, 0] for c in t11.coeffs) == params.a_poly.coeffs
              and tuple(c[0, 0] for c in t22.coeffs) == params.d_poly.coeffs)
    if not vacuum:
        failures.append("vacuum rows differ from a(u), d(u)")

    Sb = singular_sov_basis(params, l)
    sh = sh_map(params, l)
    _, Hs = transfer_B_sov(params, l)
    _, Ht = transfer_B(params, "exact")
    widx = [i for i in range(1 << params.n) if bin(i).count("1") == l]
    dev = Fraction(0)
    for k in range(params.n + 1):
        delta = sh @ Hs[k] - Ht[k][np.ix_(widx, widx)] @ sh
        dev = max(dev, max(abs(v) for v in delta.flat))
    if dev != 0:
        failures.append(f"operator transport deviates by {dev}")

    solve = enumerate_pairs(params, config.method, seed=config.seed,
                            dedup_tol=tols["dedup"], threads=config.threads)
    checks = []
    for i, pair in enumerate(solve.pairs):
        res = weight_fn_eigencheck(pair, params)
        exact = all(isinstance(v, (int, Fraction)) for v in res.values())
        if exact:
            if any(v != 0 for v in res.values()):
                failures.append(f"pair {i} has a nonzero exact residual")
        elif max(abs(v) for v in res.values()) > tols["residual"]:
            failures.append(f"pair {i} numeric residual over tolerance")
        checks.append({
            "pair": i,
            "h": [_num(v) for v in pair.h],
            "status": "exact" if exact else "numeric",
            "residuals": {k: _num(v) if exact else float(abs(v))
                          for k, v in res.items()},
        })
    report = {
        "command": "sov-check",
        "vacuum_rows": "exact" if vacuum else "mismatch",
        "level_dim": int(Sb.shape[0]),
        "singular_dim": int(Sb.shape[1]),
        "sh_shape": [int(sh.shape[0]), int(sh.shape[1])],
        "sh_surplus_consistency": "pass",
        "transport_max_dev": _num(dev),
        "weight_checks": checks,
    }
    return _finish(report, config, ("residual", "dedup"), failures, t0)


COMMANDS = {
    "pairs": cmd_pairs,
    "spectrum": cmd_spectrum,
    "match": cmd_match,
    "sov-check": cmd_sov_check,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bethelab",
                     description="Wronskian pairs, joint spectra, and the "
                                 "bijection between them for the spin-1/2 "
                                 "chain; reports are JSON files.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, handler in COMMANDS.items():
        p = sub.add_parser(name, help=handler.__doc__.splitlines()[0])
        p.add_argument("--n", type=int, required=True, help="number of sites")
        p.add_argument("--l", type=int, required=True,
                       help="number of excitations (2l <= n)")
        p.add_argument("--z", default=None,
                       help="comma-separated rational evaluation points")
        p.add_argument("--mode", default="auto", choices=_MODES)
        p.add_argument("--method", default="eigen_seeded", choices=_METHODS)
        p.add_argument("--tol-residual", type=float, default=None)
        p.add_argument("--tol-dedup", type=float, default=None)
        p.add_argument("--tol-spectrum", type=float, default=None)
        p.add_argument("--tol-match", type=float, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="report file path")
        p.add_argument("--threads", type=int, default=1)
    return parser


def _config_from_args(args: argparse.Namespace) -> JobConfig:
    if args.command is None:
        raise UsageError("a subcommand is required")
    z = None
    if args.z is not None:
        z = tuple(part.strip() for part in args.z.split(","))
    tols = {}
    for key in DEFAULT_TOLS:
        val = getattr(args, f"tol_{key}")
        if val is not None:
            tols[key] = val
    return JobConfig(command=args.command, n=args.n, l=args.l, z=z,
                     mode=args.mode, method=args.method, tolerances=tols,
                     seed=args.seed, out=args.out, threads=args.threads)


def _out_path(cfg: JobConfig) -> Path:
    if cfg.out:
        return Path(cfg.out)
    base = os.environ.get(OUT_ENV, ".")
    name = f"{cfg.command.replace('-', '_')}_n{cfg.n}_l{cfg.l}.json"
    return Path(base) / name


def write_report(report: dict, cfg: JobConfig) -> Path:
    path = _out_path(cfg)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        config = _config_from_args(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report = COMMANDS[config.command](config)
    except RuntimeError as exc:
        print(f"resource/solver failure: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ArithmeticError, AssertionError) as exc:
        print(f"mathematical assertion failure: {exc}", file=sys.stderr)
        return EXIT_MATH
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    path = write_report(report, config)
    print(f"{config.command}: {report['status']} -> {path}")
    return EXIT_OK if report["status"] == "pass" else EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
