"""Command-line entry point.

Exit codes: 0 success, 1 a checked property failed, 2 bad input or a violated
precondition (including a resource without maximal Schmidt number).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import astuple

import numpy as np

from . import analysis, discretizer as dz, protocol, verify
from .statekit import PIPELINE_ATOL, PureState, SchmidtNumberError, SchmidtVector, random_schmidt, sample_haar_state

EXIT_OK, EXIT_FAIL, EXIT_PRECONDITION = 0, 1, 2


class ConfigError(ValueError):
    pass


def parse_alpha(text: str, d: int) -> SchmidtVector:
    if text == "uniform":
        return SchmidtVector.uniform(d)
    if text.startswith("random:"):
        return random_schmidt(d, np.random.default_rng(int(text.split(":", 1)[1])))
    try:
        vals = np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"cannot parse --alpha {text!r}") from exc
    if vals.shape[0] != d:
        raise ConfigError(f"--alpha has {vals.shape[0]} entries but d = {d}")
    # A zero entry survives normalization and is reported by SchmidtVector.
    return SchmidtVector(vals / np.linalg.norm(vals))


def parse_beta(text: str, d: int) -> PureState:
    if text.startswith("random:"):
        return sample_haar_state(d, int(text.split(":", 1)[1]))
    try:
        vals = np.array([complex(v.replace(" ", "")) for v in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"cannot parse --beta {text!r}") from exc
    if vals.shape[0] != d:
        raise ConfigError(f"--beta has {vals.shape[0]} entries but d = {d}")
    norm = np.linalg.norm(vals)
    if norm == 0:
        raise ConfigError("--beta is the zero vector")
    return PureState(vals / norm)


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_run(args) -> int:
    alpha = parse_alpha(args.alpha, args.d)
    beta = parse_beta(args.beta, args.d)
    result = protocol.run(alpha, beta, args.variant, seed=args.seed)
    _emit(_dumps(result.to_dict()), args.output)
    return EXIT_OK if result.fidelity_achieved >= 1 - PIPELINE_ATOL else EXIT_FAIL


def cmd_branches(args) -> int:
    alpha = parse_alpha(args.alpha, args.d)
    beta = parse_beta(args.beta, args.d)
    results = protocol.run_all_branches(alpha, beta, args.variant)
    if args.format == "csv":
        lines = ["k1,k2,k3,probability,fidelity_achieved,total_bits"]
        for r in results:
            k1, k2, k3 = r.outcome_path
            lines.append(f"{k1},{k2},{k3},{r.probability!r},{r.fidelity_achieved!r},{r.transcript.total_bits!r}")
        text = "\n".join(lines) + "\n"
    else:
        text = _dumps([r.to_dict() for r in results])
    _emit(text, args.output)
    ok = all(r.fidelity_achieved >= 1 - PIPELINE_ATOL for r in results)
    ok &= abs(sum(r.probability for r in results) - 1) <= PIPELINE_ATOL
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    results = verify.run_all(args.d_max, args.trials, args.seed, fault=args.inject_fault)
    if args.format == "json":
        text = _dumps([{"name": r.name, "passed": r.passed, "margin": r.margin, "detail": r.detail} for r in results])
    else:
        text = "\n".join(r.line() for r in results) + "\n"
    _emit(text, args.output)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_figure(args) -> int:
    points = analysis.figure1_dataset(args.d, args.n_points)
    if args.format == "json":
        text = _dumps([dict(zip(analysis.CSV_HEADER, astuple(p))) for p in points])
    else:
        text = analysis.to_csv(points)
    _emit(text, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exactrsp", description="Exact remote state preparation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_choices, fmt_default):
        p.add_argument("--d", type=int, default=2, help="local dimension (default 2)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", "-o", help="write to this path instead of stdout")
        p.add_argument("--format", choices=fmt_choices, default=fmt_default)

    def states(p):
        p.add_argument("--alpha", default="uniform",
                       help="resource Schmidt coefficients: uniform, random:SEED, or a comma list")
        p.add_argument("--beta", default="random:0",
                       help="target state: random:SEED or a comma list of complex numbers, e.g. 0.6,0.8j")
        p.add_argument("--variant", choices=dz.VARIANTS, default="plain")

    p = sub.add_parser("run", help="one protocol execution, printed as JSON")
    common(p, ["json"], "json")
    states(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("branches", help="enumerate every measurement-outcome branch")
    common(p, ["json", "csv"], "json")
    states(p)
    p.set_defaults(func=cmd_branches)

    p = sub.add_parser("verify", help="run the invariant suites")
    common(p, ["text", "json"], "text")
    p.add_argument("--d-max", type=int, default=6)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--inject-fault", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("figure", help="cost-versus-entanglement sweep")
    common(p, ["csv", "json"], "csv")
    p.add_argument("--n-points", type=int, default=200)
    p.set_defaults(func=cmd_figure)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchmidtNumberError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
