"""Command-line driver: ``bethe-ising {generate,fixed-point,thermo-sweep,convergence,verify}``.

Exit codes: 0 success, 2 verification failure, 3 fixed point not converged.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from bethe_ising import experiments, suites
from bethe_ising.config import ExperimentConfig
from bethe_ising.errors import NotConverged

EXIT_OK = 0
EXIT_VERIFY_FAILED = 2
EXIT_NOT_CONVERGED = 3


def _floats(s):
    return [float(x) for x in s.split(",") if x]


def _ints(s):
    return [int(float(x)) for x in s.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--workers", type=int)
    common.add_argument("--law", type=json.loads, help='degree law as JSON, e.g. \'{"family":"regular","params":{"k":3}}\'')
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="bethe-ising", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write random graph edge lists")
    g.add_argument("--sizes", type=_ints)
    g.add_argument("--replicas", type=int)
    g.add_argument("--graph-model", choices=["configuration", "erdos_renyi"])

    fp = sub.add_parser("fixed-point", parents=[common], help="solve the cavity fixed point")
    fp.add_argument("--beta", type=float)
    fp.add_argument("-B", "--field", dest="B", type=float)
    fp.add_argument("--pool-size", type=int)
    fp.add_argument("--t-max", type=int)
    fp.add_argument("--tol", type=float)

    ts = sub.add_parser("thermo-sweep", parents=[common], help="phi, M, U, chi, C over a grid")
    ts.add_argument("--betas", type=_floats)
    ts.add_argument("--fields", type=_floats)
    ts.add_argument("--pool-size", type=int)
    ts.add_argument("--mc-samples", type=int)
    ts.add_argument("--no-derivatives", dest="derivatives", action="store_const", const=False)

    cv = sub.add_parser("convergence", parents=[common], help="finite-n pressure vs the limit")
    cv.add_argument("--sizes", type=_ints)
    cv.add_argument("--replicas", type=int)
    cv.add_argument("--beta", type=float)
    cv.add_argument("-B", "--field", dest="B", type=float)
    cv.add_argument("--sweeps", type=int)
    cv.add_argument("--burn-in", type=int)
    cv.add_argument("--pool-size", type=int)

    vf = sub.add_parser("verify", parents=[common], help="run the property suites")
    vf.add_argument("--suites", type=lambda s: s.split(","))
    vf.add_argument("--suite-scale", type=float)
    return p


_NOT_CONFIG = {"command", "config", "verbose"}


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    return cfg.updated(**overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = load_config(args)

    if args.command == "generate":
        for path in experiments.run_generate(cfg):
            print(path)
        return EXIT_OK

    if args.command == "fixed-point":
        try:
            _, diag = experiments.run_fixed_point(cfg)
        except NotConverged as exc:
            print(f"not converged: {exc}", file=sys.stderr)
            return EXIT_NOT_CONVERGED
        print(json.dumps({k: diag[k] for k in ("iterations", "bracket_gap", "w1_residual", "h_mean")}))
        return EXIT_OK

    if args.command == "thermo-sweep":
        try:
            pts = experiments.run_thermo_sweep(cfg)
        except NotConverged as exc:
            print(f"not converged: {exc}", file=sys.stderr)
            return EXIT_NOT_CONVERGED
        print(f"wrote {len(pts)} rows to {Path(cfg.out) / 'thermo.csv'}")
        return EXIT_OK

    if args.command == "convergence":
        try:
            rep = experiments.run_convergence(cfg)
        except NotConverged as exc:
            print(f"not converged: {exc}", file=sys.stderr)
            return EXIT_NOT_CONVERGED
        print(f"phi = {rep['phi']:.6f}")
        for row in rep["summary"]:
            print(f"n={row['n']:>8d}  psi_n={row['psi_mean']:.6f}  spread={row['spread']:.2e}  |psi_n-phi|={row['abs_error']:.2e}")
        return EXIT_OK

    if args.command == "verify":
        results = suites.run_suites(cfg.suites, cfg.seed, cfg.suite_scale)
        for r in results:
            print(r.line())
            for msg in r.messages:
                print(f"    {msg}")
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        experiments.write_json(out / "verify.json", {
            **cfg.metadata(),
            "suites": [{"name": r.name, "passed": r.passed, "checks": r.checks,
                        "failures": r.failures, "worst": r.worst} for r in results]})
        return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY_FAILED

    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
