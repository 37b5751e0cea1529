"""Command-line interface.

Subcommands: privatize, sample-orbit, pack, cover, bounds, audit, bench,
selftest.  Exit codes: 0 success, 1 usage error, 2 input validation error,
3 flagged diagnostics present under --strict.

Artifacts are byte-identical across runs with the same seed; wall-clock
timings are therefore excluded from output files unless --timing is given.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import selftest as selftest_mod
from .bench import ExperimentSpec, audit_privacy, result_to_csv, run_experiment
from .geometry import BoundConstants, evaluate_bounds, greedy_orbit_cover, greedy_orbit_packing
from .linalg import Dataset, Spectrum, ValidationError
from .mechanisms import private_orbit_approximation, private_rank_k_approximation
from .sampler import SamplerConfig
from .serialize import (
    certificate_to_dict,
    dumps,
    load_matrix_or_dataset,
    orbit_point_to_dict,
    transcript_to_dict,
)

USAGE_ERROR, VALIDATION_ERROR, STRICT_FLAGGED = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _spectrum_arg(text: str) -> Spectrum:
    vals = np.array([float(x) for x in text.split(",")])
    return Spectrum(vals, rank_k=int(np.count_nonzero(vals)) or 1)


def _emit(args, payload: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        if not args.quiet:
            print(f"wrote {args.out}")
    elif not args.quiet:
        sys.stdout.write(payload)


def _sampler_from_args(args) -> SamplerConfig:
    return SamplerConfig(chain_length=args.chain_length, burn_in=args.burn_in,
                         step_size=args.step_size, diagnostics_on=args.diagnostics)


def _add_sampler_args(p):
    p.add_argument("--chain-length", type=int, default=20000, dest="chain_length")
    p.add_argument("--burn-in", type=int, default=5000, dest="burn_in")
    p.add_argument("--step-size", type=float, default=0.3, dest="step_size")
    p.add_argument("--diagnostics", action="store_true")


def build_parser() -> _Parser:
    parser = _Parser(prog="orbitdp", description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=str, default=None)
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--strict", action="store_true",
                        help="exit 3 when any transcript carries flags")
    parser.add_argument("--timing", action="store_true",
                        help="include wall-clock fields (breaks byte-determinism)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("privatize", help="rank-k approximation of a matrix/dataset file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    _add_sampler_args(p)

    p = sub.add_parser("sample-orbit", help="orbit approximation with a public spectrum")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--lambda", dest="lam", type=_spectrum_arg, required=True)
    p.add_argument("--eps", type=float, required=True)
    _add_sampler_args(p)

    p = sub.add_parser("pack", help="orbit packing certificate")
    p.add_argument("--lambda", dest="lam", type=_spectrum_arg, required=True)
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--omega", type=float, default=float("inf"))
    p.add_argument("--budget", type=int, default=200)

    p = sub.add_parser("cover", help="greedy orbit covering centers")
    p.add_argument("--lambda", dest="lam", type=_spectrum_arg, required=True)
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--budget", type=int, default=200)

    p = sub.add_parser("bounds", help="closed-form bound report")
    p.add_argument("--gamma", type=_spectrum_arg, required=True)
    p.add_argument("--lambda", dest="lam", type=_spectrum_arg, default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--zeta", type=float, default=None)
    p.add_argument("--constant-c", type=float, default=1.0)

    p = sub.add_parser("audit", help="d=2 privacy audit (output-ratio test)")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--runs", type=int, default=100000)
    p.add_argument("--bins", type=int, default=24)
    p.add_argument("--mutated", action="store_true",
                   help="audit the deliberately broken mechanism (test power)")

    p = sub.add_parser("bench", help="run an experiment spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--wishart-norm", choices=("samples", "dim"), default=None,
                   dest="wishart_norm", help="override the spec file's Wishart normalization")

    sub.add_parser("selftest", help="run the deterministic invariant suite")
    return parser


def _cmd_privatize(args) -> int:
    data = load_matrix_or_dataset(args.input)
    tr = private_rank_k_approximation(data, args.k, args.eps,
                                      _sampler_from_args(args), args.seed)
    _emit(args, dumps(transcript_to_dict(tr)))
    return STRICT_FLAGGED if args.strict and tr.flags else 0


def _cmd_sample_orbit(args) -> int:
    data = load_matrix_or_dataset(args.input)
    mat = data.covariance() if isinstance(data, Dataset) else data
    tr = private_orbit_approximation(mat, args.lam, args.eps,
                                     _sampler_from_args(args), args.seed)
    _emit(args, dumps(transcript_to_dict(tr)))
    return STRICT_FLAGGED if args.strict and tr.flags else 0


def _cmd_pack(args) -> int:
    cert = greedy_orbit_packing(args.lam, args.i, args.j, args.zeta, args.omega,
                                args.seed, budget=args.budget)
    _emit(args, dumps(certificate_to_dict(cert)))
    return 0


def _cmd_cover(args) -> int:
    centers = greedy_orbit_cover(args.lam, args.zeta, args.seed, budget=args.budget)
    payload = {"count": len(centers), "zeta": args.zeta,
               "centers": [orbit_point_to_dict(c) for c in centers]}
    _emit(args, dumps(payload))
    return 0


def _cmd_bounds(args) -> int:
    gamma = args.gamma
    lam = args.lam
    if lam is None:
        vals = np.array(gamma.values)
        vals[args.k:] = 0.0
        lam = Spectrum(vals, rank_k=args.k)
    else:
        lam = Spectrum(lam.values, rank_k=args.k)
    report = evaluate_bounds(gamma, lam, gamma.dim, args.k, args.eps, args.beta,
                             BoundConstants(c=args.constant_c), zeta=args.zeta)
    _emit(args, dumps(report.to_dict()))
    if not args.quiet and args.out:
        print(report.to_text_table())
    return 0


def _cmd_audit(args) -> int:
    report = audit_privacy(args.eps, pairs=args.pairs, runs_per_pair=args.runs,
                           bins=args.bins, rng=args.seed, mutated=args.mutated)
    _emit(args, dumps(report.to_dict()))
    if not report.passed:
        if not args.quiet:
            print("audit FAILED: output ratios exceed the privacy cap", file=sys.stderr)
        return STRICT_FLAGGED if args.strict else 0
    return 0


def _cmd_bench(args) -> int:
    with open(args.spec, "r", encoding="utf-8") as fh:
        spec_data = json.load(fh)
    if args.seed and "seed" not in spec_data:
        spec_data["seed"] = args.seed
    if args.wishart_norm is not None:
        spec_data["wishart_norm"] = args.wishart_norm
    spec = ExperimentSpec.from_dict(spec_data)
    result = run_experiment(spec, workers=args.workers)
    if args.format == "csv":
        payload = result_to_csv(result, spec.k, include_timing=args.timing)
    else:
        payload = dumps(result.to_dict(include_timing=args.timing))
    if spec.output_path and not args.out:
        args.out = spec.output_path
    _emit(args, payload)
    flagged = any(r["flags"] for r in result.per_trial)
    if not args.quiet and not args.timing:
        print(f"wall_clock_seconds={result.wall_clock_seconds:.3f}", file=sys.stderr)
    return STRICT_FLAGGED if args.strict and flagged else 0


_COMMANDS = {
    "privatize": _cmd_privatize,
    "sample-orbit": _cmd_sample_orbit,
    "pack": _cmd_pack,
    "cover": _cmd_cover,
    "bounds": _cmd_bounds,
    "audit": _cmd_audit,
    "bench": _cmd_bench,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        if args.command == "selftest":
            ok = selftest_mod.run_selftest(seed=args.seed, quiet=args.quiet)
            return 0 if ok else VALIDATION_ERROR
        return _COMMANDS[args.command](args)
    except (ValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return VALIDATION_ERROR


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
