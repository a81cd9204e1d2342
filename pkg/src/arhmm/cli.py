"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from arhmm.errors import DataError, NumericalError
from arhmm.inference import loglikelihood, viterbi
from arhmm.io import (
    DEFAULT_MISSING_TOKENS,
    impute_missing,
    load_csv,
    load_model,
    save_model,
    write_csv,
    write_path_csv,
)
from arhmm.labeling import label_g1, label_g2, mean_table
from arhmm.lags import DEFAULT_ALPHA, DEFAULT_KMAX, pacf_report
from arhmm.model import count_parameters
from arhmm.structure import MODES, SemConfig, effective_length, fit_sem_multistart, report_bic, to_dot
from arhmm.synth import builtin_scenarios, parse_blocks, sample

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

logger = logging.getLogger("arhmm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x):
    return repr(float(x))


def _float_list(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _max_lag(text):
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a non-negative integer") from None
    if value < 0:
        raise argparse.ArgumentTypeError("max lag must be non-negative")
    return value


def _read_data(args):
    tokens = DEFAULT_MISSING_TOKENS if args.missing is None else set(args.missing.split(","))
    return impute_missing(load_csv(args.data, tokens))


def _labels(model, args):
    v = np.ones(model.n_vars) if args.v is None else args.v
    kappa = np.zeros(model.n_vars) if args.kappa is None else args.kappa
    if v.size not in (1, model.n_vars) or kappa.size not in (1, model.n_vars):
        raise UsageError(f"--v and --kappa need 1 or {model.n_vars} values")
    return (label_g1 if args.g == 1 else label_g2)(model, v, kappa)


def cmd_train(args):
    dataset = _read_data(args)
    config = SemConfig(
        n_states=args.states,
        mode=args.mode,
        max_lag=args.max_lag,
        kmax=args.kmax,
        alpha=args.alpha,
        rel_tol=args.tol,
        max_iter=args.max_iter,
    )
    seeds = tuple(range(args.seed, args.seed + args.restarts))
    model, report, _ = fit_sem_multistart(config, dataset, seeds)
    save_model(model, args.out)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "loglik"])
            k = 0
            for em in report.em_reports:
                for ll in em.ll_trace:
                    writer.writerow([k, _fmt(ll)])
                    k += 1
    ll = loglikelihood(model, dataset)
    print(f"loglik {_fmt(ll)}")
    print(f"bic {_fmt(report_bic(model, dataset, ll))}")
    print(f"n_params {count_parameters(model)}")
    print(f"max_lag {model.max_lag}")


def cmd_decode(args):
    model = load_model(args.model)
    dataset = _read_data(args)
    path, _ = viterbi(model, dataset)
    times = np.arange(model.max_lag, dataset.T + 1)
    extra = {}
    if args.g is not None:
        extra["g"] = _labels(model, args)[path]
    out = args.out if args.out else sys.stdout
    if out is sys.stdout:
        writer = csv.writer(sys.stdout)
        writer.writerow(["t", "state", *extra])
        for k, (t, q) in enumerate(zip(times, path)):
            writer.writerow([t, q, *(_fmt(col[k]) for col in extra.values())])
    else:
        write_path_csv(out, times, path, extra)


def cmd_score(args):
    model = load_model(args.model)
    dataset = _read_data(args)
    ll = loglikelihood(model, dataset)
    print(f"loglik {_fmt(ll)}")
    print(f"bic {_fmt(report_bic(model, dataset, ll))}")
    print(f"n_params {count_parameters(model)}")
    print(f"t_eff {effective_length(model, dataset)}")


def cmd_label(args):
    model = load_model(args.model)
    nu = mean_table(model)
    g = _labels(model, args)
    header = ["state", *(f"nu_{m}" for m in range(model.n_vars)), f"g{args.g}"]
    print(",".join(header))
    for i in range(model.n_states):
        print(",".join([str(i), *(_fmt(v) for v in nu[i]), _fmt(g[i])]))


def cmd_lags(args):
    dataset = _read_data(args)
    for m, name in enumerate(dataset.names):
        rep = pacf_report(dataset.values[:, m], args.kmax, args.alpha)
        print(f"# {name}: order {rep.order} (critical {_fmt(rep.critical)})")
        print("k,rho,pacf,significant")
        for k in range(args.kmax):
            sig = "yes" if rep.significant[k] else "no"
            print(f"{k + 1},{_fmt(rep.rho[k])},{_fmt(rep.phi_kk[k])},{sig}")


def sidecar_path(out):
    out = Path(out)
    return out.with_name(out.stem + ".states.csv")


def cmd_generate(args):
    spec = builtin_scenarios(seed=args.seed)[args.scenario - 1]
    try:
        blocks = parse_blocks(args.blocks)
        spec = spec.with_blocks(blocks)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    dataset, path = sample(spec)
    write_csv(dataset, args.out)
    write_path_csv(sidecar_path(args.out), np.arange(path.size), path)


def cmd_export_dot(args):
    model = load_model(args.model)
    names = args.names.split(",") if args.names else None
    if names is not None and len(names) != model.n_vars:
        raise UsageError(f"--names needs {model.n_vars} entries")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(model.n_states):
        (out_dir / f"state_{i}.dot").write_text(to_dot(model, i, names))


def build_parser():
    parser = _Parser(prog="arhmm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_args(p):
        p.add_argument("--data", required=True)
        p.add_argument("--missing", help="comma-separated missing-value tokens")

    def label_args(p, default_g):
        p.add_argument("--g", type=int, choices=(1, 2), default=default_g)
        p.add_argument("--v", type=_float_list)
        p.add_argument("--kappa", type=_float_list)

    p = sub.add_parser("train", help="learn structure and parameters")
    data_args(p)
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--mode", choices=MODES, default="ar-aslg")
    p.add_argument("--max-lag", type=_max_lag, default="auto")
    p.add_argument("--kmax", type=int, default=DEFAULT_KMAX)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--seed", type=int, default=0, help="first seed of the random restarts")
    p.add_argument("--restarts", type=int, default=4, help="number of random restarts")
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="write the EM log-likelihood trace as CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="Viterbi path as t,state CSV")
    p.add_argument("--model", required=True)
    data_args(p)
    p.add_argument("--out")
    label_args(p, None)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("score", help="log-likelihood, BIC and parameter count")
    p.add_argument("--model", required=True)
    data_args(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("label", help="implied state means and g labels")
    p.add_argument("--model", required=True)
    label_args(p, 1)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("lags", help="partial autocorrelations and AR orders per column")
    data_args(p)
    p.add_argument("--kmax", type=int, default=DEFAULT_KMAX)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.set_defaults(func=cmd_lags)

    p = sub.add_parser("generate", help="synthetic scenario signal")
    p.add_argument("--scenario", type=int, choices=(1, 2), required=True)
    p.add_argument("--blocks", default="train", help="train, test1..test4 or state:length,...")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("export-dot", help="one DOT digraph per hidden state")
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--names", help="comma-separated variable names")
    p.set_defaults(func=cmd_export_dot)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"arhmm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"arhmm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"arhmm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"arhmm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
