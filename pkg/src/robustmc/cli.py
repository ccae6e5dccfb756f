"""Command line interface: ``gen``, ``solve``, ``phase`` and ``verify``."""

import argparse
import logging
import sys

from . import harness, io, oracles
from .problem import make_instance
from .solver import BetaMode, SolverConfig, run_algorithm
from .thresholding import DEFAULT_SCAD_A, ThresholdKind

TRACE_HEADER = "t,xi,successive_change,support_size,rel_inf_error,support_in_truth,wall_ms"


def write_trace_csv(trace, path):
    lines = [TRACE_HEADER]
    for rec in trace.records:
        rel = "" if rec.rel_inf_error is None else io.fmt(rec.rel_inf_error)
        inside = "" if rec.support_in_truth is None else str(int(rec.support_in_truth))
        lines.append(",".join([
            str(rec.t),
            io.fmt(rec.xi),
            io.fmt(rec.successive_change),
            str(rec.support_size),
            rel,
            inside,
            str(rec.wall_ms),
        ]))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_gen(args):
    truth, obs, stats = make_instance(args.n1, args.n2, args.rank, args.p, args.alpha, args.seed)
    io.write_observations(obs, f"{args.out_prefix}.obs")
    io.write_truth(truth, f"{args.out_prefix}.truth")
    print(f"wrote {args.out_prefix}.obs ({len(obs)} entries, {stats.total_outliers} outliers) "
          f"and {args.out_prefix}.truth")
    return 0


def cmd_solve(args):
    obs = io.read_observations(args.input)
    truth = io.read_truth(args.beta_oracle, p=obs.sample_rate_p) if args.beta_oracle else None
    if args.beta is None and truth is None:
        beta_mode = BetaMode.DATA_DRIVEN
    else:
        beta_mode = BetaMode.ORACLE
    cfg = SolverConfig(
        rank_r=args.rank,
        kind=ThresholdKind.from_name(args.threshold, args.scad_a),
        beta=args.beta,
        gamma=args.gamma,
        max_iters=args.max_iters,
        stop_tol=args.tol,
        beta_mode=beta_mode,
        beta_factor=args.beta_factor,
        svd_method=args.svd,
        svd_seed=args.seed,
    )
    trace = run_algorithm(args.threshold, obs, cfg, truth, timing=not args.no_timing)
    if args.trace_out:
        write_trace_csv(trace, args.trace_out)
    if args.output:
        io.write_dense(trace.l_hat, args.output)
    msg = f"{trace.termination.value} after {trace.iterations} iterations (beta={trace.beta:.6g})"
    if trace.final_rel_inf_error is not None:
        msg += f", rel_inf_error={trace.final_rel_inf_error:.3e}"
    if trace.error:
        msg += f": {trace.error}"
    print(msg)
    return 1 if trace.error else 0


def cmd_phase(args):
    with open(args.config) as fh:
        text = fh.read()
    grid = harness.parse_config_text(text)
    result = harness.run_grid(grid, workers=args.workers, timing=not args.no_timing)
    for path in harness.write_outputs(result, args.out_dir, text):
        print(path)
    return 0


def cmd_verify(args):
    reports = oracles.run_checks(args.lemma, args.trials, args.seed)
    for rep in reports:
        print(rep.line())
    return 0 if all(rep.ok for rep in reports) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="robustmc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic instance")
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="recover a low-rank matrix from an observation file")
    p.add_argument("--input", required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--threshold", choices=("soft", "scad", "hard"), default="soft")
    p.add_argument("--scad-a", type=float, default=DEFAULT_SCAD_A)
    beta = p.add_mutually_exclusive_group()
    beta.add_argument("--beta", type=float)
    beta.add_argument("--beta-oracle", metavar="TRUTH_FILE")
    p.add_argument("--beta-factor", type=float, default=1.1)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0, help="seed of the block SVD start")
    p.add_argument("--svd", choices=("auto", "full", "block"), default="auto")
    p.add_argument("--trace-out")
    p.add_argument("--output", help="write the recovered matrix (dense format)")
    p.add_argument("--no-timing", action="store_true", help="write 0 for wall-clock columns")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("phase", help="run a phase-transition grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="write 0 for wall-clock columns")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("verify", help="numerically check the matrix lemmas")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lemma", choices=oracles.LEMMAS + ("all",), default="all")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
