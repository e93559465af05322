"""Command-line interface: ``bwhmm {init,train,loglik,decode,sample,oracle}``.

Exit status: 0 success, 1 usage error, 2 data or validation error,
3 training stopped at --max-iterations without converging. Errors go to
standard error prefixed with ``error:``.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import inference, io, oracle
from .errors import HmmError
from .model import VARIANCE_FLOOR, Categorical, Gaussian, random_init
from .training import FitConfig, fit

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOT_CONVERGED = 3

MAX_SEED = 2**64 - 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2**64), got {text!r}")
    return value


def _emission_spec(text):
    if text == "gaussian":
        return Gaussian()
    kind, _, m = text.partition(":")
    if kind == "categorical" and m:
        return Categorical(_positive_int(m))
    raise argparse.ArgumentTypeError(f"expected 'categorical:M' or 'gaussian', got {text!r}")


def _kind_of(spec):
    return "gaussian" if isinstance(spec, Gaussian) else "categorical"


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bwhmm", description="Train and apply hidden Markov models with Baum-Welch.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("init", help="write a seeded random model")
    p.add_argument("--states", type=_positive_int, required=True)
    p.add_argument("--emission", type=_emission_spec, required=True, help="categorical:M or gaussian")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--model-out", required=True)

    def data_command(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--model", required=True)
        p.add_argument("--data", required=True)
        p.add_argument("--emission", type=_emission_spec,
                       help="optional; must agree with the model's emission kind")
        return p

    p = data_command("train", "fit a model to sequences with Baum-Welch")
    p.add_argument("--model-out", required=True)
    p.add_argument("--max-iterations", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--transition-floor", type=float, default=0.0)
    p.add_argument("--emission-floor", type=float, default=0.0)
    p.add_argument("--variance-floor", type=float, default=VARIANCE_FLOOR)
    p.add_argument("--jobs", type=_positive_int, default=1, help="threads for the E-step")
    p.add_argument("--report", help="also write the fit report to this file")

    data_command("loglik", "print per-sequence and total log-likelihoods")
    data_command("decode", "print the Viterbi path and its log joint for each sequence")
    p = data_command("oracle", "print brute-force likelihood and posteriors for one small sequence")
    p.add_argument("--index", type=int, default=0, help="which sequence in the file")

    p = sub.add_parser("sample", help="write sequences drawn from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--count", type=_positive_int, default=1)
    p.add_argument("--length", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", help="sequence file to write (default: standard output)")
    return parser


def _load(args):
    params = io.load_model(args.model)
    if args.emission is not None and _kind_of(args.emission) != params.kind:
        raise HmmError(f"--emission {_kind_of(args.emission)} does not match the model's {params.kind} emissions")
    return params, io.load_sequences(args.data, params.kind)


def cmd_init(args, out):
    params = random_init(args.states, args.emission, args.seed)
    io.save_model(params, args.model_out)
    return EXIT_OK


def cmd_train(args, out):
    try:
        config = FitConfig(
            max_iterations=args.max_iterations,
            rel_tolerance=args.tolerance,
            transition_floor=args.transition_floor,
            emission_floor=args.emission_floor,
            variance_floor=args.variance_floor,
        )
    except HmmError as exc:
        raise UsageError(str(exc)) from exc
    params, sequences = _load(args)
    report = io.FitReport(out)
    result = fit(params, sequences, config, n_jobs=args.jobs, callback=report.iteration)
    report.finish(result.converged, result.iterations)
    io.save_model(result.params, args.model_out)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            copy = io.FitReport(fh)
            for n, ll in enumerate(result.log_likelihood_trace):
                copy.iteration(n, ll)
            copy.finish(result.converged, result.iterations)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _per_sequence(sequences, func):
    for k, seq in enumerate(sequences):
        try:
            yield k, func(seq)
        except HmmError as exc:
            raise HmmError(f"sequence {k}: {exc}") from exc


def cmd_loglik(args, out):
    params, sequences = _load(args)
    values = []
    for k, ll in _per_sequence(sequences, lambda s: inference.log_likelihood(params, s)):
        values.append(ll)
        out.write(f"{k}\t{io.format_real(ll)}\n")
    out.write(f"total\t{io.format_real(sum(values))}\n")
    return EXIT_OK


def cmd_decode(args, out):
    params, sequences = _load(args)
    for _, (path, score) in _per_sequence(sequences, lambda s: inference.viterbi(params, s)):
        out.write(" ".join(str(int(s)) for s in path) + f"\t{io.format_real(score)}\n")
    return EXIT_OK


def cmd_sample(args, out):
    params = io.load_model(args.model)
    rng = np.random.default_rng(args.seed)
    sequences = [inference.sample(params, args.length, rng)[1] for _ in range(args.count)]
    text = io.render_sequences(sequences)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_oracle(args, out):
    params, sequences = _load(args)
    if not 0 <= args.index < len(sequences):
        raise UsageError(f"--index {args.index} out of range for {len(sequences)} sequences")
    obs = inference.as_observations(params, sequences[args.index])
    exact = oracle.enumerate_posteriors(params, obs)
    out.write(f"likelihood\t{io.format_real(exact.likelihood)}\n")
    for t, row in enumerate(exact.gamma):
        out.write(f"gamma[{t}]\t" + " ".join(io.format_real(v) for v in row) + "\n")
    return EXIT_OK


COMMANDS = {
    "init": cmd_init,
    "train": cmd_train,
    "loglik": cmd_loglik,
    "decode": cmd_decode,
    "sample": cmd_sample,
    "oracle": cmd_oracle,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (HmmError, OSError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DATA


def entry_point():
    sys.exit(main())
