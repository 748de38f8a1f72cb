"""Command-line interface.

    blockgibbs simulate      write a simulated (X, Y) pair as CSV
    blockgibbs run           run chains on CSV data, write sigma2/beta traces and reports
    blockgibbs diagnose      lag-one ACF, ESS and summaries for a sigma2 trace
    blockgibbs dacf          lag-one ACF grid over (n, p) for both kernels
    blockgibbs bound         geometric-ergodicity bound constants and values
    blockgibbs check-lemma2  fuzz the quadratic-form ratio envelope
    blockgibbs replay        re-run the command recorded in a manifest

Exit codes: 0 success, 2 invalid parameters, 3 I/O, 4 numerical failure,
5 property violation.
"""

import argparse
import csv
import datetime
import functools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import dacf_grid, ess_ar, summarize
from .errors import CsvParse, DimensionMismatch, InvalidParameter, ShrinkageError
from .kernels import KernelKind, run_chain
from .model import DesignData, ElasticNet, Lasso, SpikeSlab, StudentT, standardize
from .numerics import derive_seed
from .simdata import SimConfig, simulate
from .theory import (BoundParams, bound_terms, counterexample_instance, fuzz_lemma2,
                     lemma2_ratio, tv_bound)

EXIT_OK, EXIT_PARAM, EXIT_IO, EXIT_NUMERIC, EXIT_PROPERTY = 0, 2, 3, 4, 5
PRIORS = ("lasso", "spike-slab", "student-t", "elastic-net")


def fmt(x):
    return format(float(x), ".17g")


# -- CSV ---------------------------------------------------------------------


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path):
    """Return ``(header, float matrix)``; errors carry the 1-based line number."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParse(path, 1, "empty file") from None
        rows = []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise CsvParse(path, line, f"expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise CsvParse(path, line, str(exc)) from None
    if not rows:
        raise CsvParse(path, 2, "no data rows")
    return [h.strip() for h in header], np.array(rows, dtype=float)


# -- manifests ---------------------------------------------------------------


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def manifest(args, argv, started, outputs):
    params = {k: v for k, v in vars(args).items() if k != "func"}
    return {
        "command": args.command,
        "argv": list(argv),
        "params": params,
        "seed": params.get("seed"),
        "version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": [str(p) for p in outputs],
    }


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, KernelKind):
        return o.value
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


# -- priors from flags -------------------------------------------------------


_FLAGS = {"lam": "--lambda", "w": "--w", "kappa": "--kappa", "zeta": "--zeta", "nu": "--nu",
          "eta": "--eta", "lam1": "--lambda1", "lam2": "--lambda2"}


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            flag = _FLAGS.get(name, "--" + name.replace("_", "-"))
            raise InvalidParameter(f"{flag} is required for --prior {args.prior}")


def prior_choice(args):
    """Collect the prior name and its hyperparameters from parsed flags."""
    if args.prior == "lasso":
        _need(args, "lam")
        return ("lasso", {"lam": args.lam})
    if args.prior == "spike-slab":
        _need(args, "w", "kappa", "zeta")
        return ("spike-slab", {"w": args.w, "kappa": args.kappa, "zeta": args.zeta})
    if args.prior == "student-t":
        _need(args, "nu", "eta")
        return ("student-t", {"nu": args.nu, "eta": args.eta})
    _need(args, "lambda1", "lambda2")
    return ("elastic-net", {"lam1": args.lambda1, "lam2": args.lambda2})


def build_prior(name, hyper, p):
    if name == "lasso":
        return Lasso(hyper["lam"])
    if name == "spike-slab":
        return SpikeSlab.build(p, hyper["w"], hyper["kappa"], hyper["zeta"])
    if name == "student-t":
        return StudentT.build(p, hyper["nu"], hyper["eta"])
    return ElasticNet(hyper["lam1"], hyper["lam2"])


def check_prior(name, hyper, p):
    """Build once up front so a bad hyperparameter is reported by flag."""
    try:
        return build_prior(name, hyper, p)
    except InvalidParameter as exc:
        flags = " ".join(f"{_FLAGS[k]} {v}" for k, v in hyper.items())
        raise InvalidParameter(f"{flags}: {exc}") from None


def _add_prior_flags(sp):
    g = sp.add_argument_group("prior")
    g.add_argument("--prior", choices=PRIORS, default="lasso")
    g.add_argument("--lambda", dest="lam", type=float, help="lasso penalty")
    g.add_argument("--w", type=float, help="spike-and-slab prior slab probability")
    g.add_argument("--kappa", type=float, help="spike-and-slab slab/spike variance ratio")
    g.add_argument("--zeta", type=float, help="spike-and-slab spike variance")
    g.add_argument("--nu", type=float, help="Student-t degrees of freedom")
    g.add_argument("--eta", type=float, help="Student-t scale")
    g.add_argument("--lambda1", type=float, help="elastic-net L1 penalty")
    g.add_argument("--lambda2", type=float, help="elastic-net L2 penalty")


def _check(cond, flag, message):
    if not cond:
        raise InvalidParameter(f"{flag}: {message}")


# -- commands ------------------------------------------------------------------


def cmd_simulate(args, argv):
    started = _now()
    _check(args.n >= 2, "--n", "must be at least 2")
    _check(args.p >= 1, "--p", "must be at least 1")
    _check(0.0 <= args.rho < 1.0, "--rho", "must lie in [0, 1)")
    _check(0.0 < args.sparsity <= 1.0, "--sparsity", "must lie in (0, 1]")
    _check(args.seed >= 0, "--seed", "must be non-negative")
    data, Y, _ = simulate(SimConfig(args.n, args.p, args.rho, args.sparsity, args.seed))
    write_csv(args.out_x, [f"x{j + 1}" for j in range(args.p)], data.X.tolist())
    write_csv(args.out_y, ["y"], [[v] for v in Y])
    mpath = args.manifest or f"{args.out_x}.manifest.json"
    write_json(mpath, manifest(args, argv, started, [args.out_x, args.out_y]))
    return EXIT_OK


def load_design(x_path, y_path, do_standardize):
    _, X = read_csv(x_path)
    _, Y = read_csv(y_path)
    if Y.shape[1] != 1:
        raise InvalidParameter(f"--y: expected one column, got {Y.shape[1]}")
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatch(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if do_standardize:
        return standardize(X, Y[:, 0])
    return DesignData.from_arrays(X, Y[:, 0])


def _chain_job(job):
    data, name, hyper, kind, iters, burn_in, seed, keep_beta = job
    prior = build_prior(name, hyper, data.p)
    return run_chain(data, prior, kind, iters, burn_in, seed=seed, keep_beta=keep_beta)


def _map(fn, jobs, threads):
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def cmd_run(args, argv):
    started = _now()
    _check(args.iters > 0, "--iters", "must be positive")
    _check(args.burnin >= 0, "--burnin", "must be non-negative")
    _check(args.chains >= 1, "--chains", "must be positive")
    _check(args.seed >= 0, "--seed", "must be non-negative")
    _check(args.threads >= 1, "--threads", "must be positive")
    name, hyper = prior_choice(args)
    data = load_design(args.x, args.y, args.standardize)
    check_prior(name, hyper, data.p)
    kind = KernelKind(args.kernel)
    seeds = [derive_seed(args.seed, c) for c in range(args.chains)]
    jobs = [(data, name, hyper, kind, args.iters, args.burnin, s, args.keep_beta) for s in seeds]
    outputs = _map(_chain_job, jobs, args.threads)

    out_dir = Path(args.out_dir)
    width = max(2, len(str(args.chains - 1)))
    written = []
    chain_dirs = []
    for c, out in enumerate(outputs):
        d = out_dir / f"chain_{c:0{width}d}"
        chain_dirs.append(d)
        it = np.arange(args.burnin + 1, args.burnin + args.iters + 1)
        write_csv(d / "sigma2.csv", ["iter", "sigma2"], zip(it.tolist(), out.sigma2_samples.tolist()))
        written.append(d / "sigma2.csv")
        if args.keep_beta:
            header = ["iter"] + [f"beta_{j + 1}" for j in range(data.p)]
            write_csv(d / "beta.csv", header,
                      ([i] + row for i, row in zip(it.tolist(), out.beta_samples.tolist())))
            written.append(d / "beta.csv")
    m = manifest(args, argv, started, written)
    for c, (out, d) in enumerate(zip(outputs, chain_dirs)):
        report = summarize(out.sigma2_samples).to_dict()
        report.update(kernel=out.kernel.value, prior=out.prior, seed=out.seed, chain=c,
                      wall_time_s=out.wall_time, manifest=m)
        write_json(d / "report.json", report)
    write_json(out_dir / "manifest.json", m)
    return EXIT_OK


def cmd_diagnose(args, argv):
    header, M = read_csv(args.chain)
    if args.column not in header:
        raise InvalidParameter(f"--column: {args.chain} has no column {args.column!r}")
    series = M[:, header.index(args.column)]
    ess_ar(series)  # surfaces TooShort / ConstantSeries as errors for this command
    report = summarize(series).to_dict()
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _int_list(flag, text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidParameter(f"{flag}: expected comma-separated integers, got {text!r}") from None
    _check(vals and all(v > 0 for v in vals), flag, "values must be positive")
    return vals


def _p_for_n(mults, n):
    return [m * n for m in mults]


def cmd_dacf(args, argv):
    started = _now()
    n_list = _int_list("--n-list", args.n_list)
    _check((args.p_list is None) != (args.p_mult is None), "--p-list",
           "give exactly one of --p-list and --p-mult")
    if args.p_list is not None:
        p_list = _int_list("--p-list", args.p_list)
    else:
        p_list = functools.partial(_p_for_n, _int_list("--p-mult", args.p_mult))
    _check(args.reps >= 1, "--reps", "must be positive")
    _check(args.iters >= 3, "--iters", "must be at least 3")
    _check(args.burnin >= 0, "--burnin", "must be non-negative")
    _check(args.seed >= 0, "--seed", "must be non-negative")
    _check(args.threads >= 1, "--threads", "must be positive")
    _check(0.0 <= args.rho < 1.0, "--rho", "must lie in [0, 1)")
    _check(0.0 < args.sparsity <= 1.0, "--sparsity", "must lie in (0, 1]")
    name, hyper = prior_choice(args)
    check_prior(name, hyper, 1)
    prior = functools.partial(build_prior, name, hyper)
    cells = dacf_grid(n_list, p_list, args.reps, args.iters, args.burnin, prior, args.seed,
                      rho=args.rho, sparsity_frac=args.sparsity, workers=args.threads)
    rows = [(c.n, c.p, c.kernel.value, c.mean_lag1_acf, c.n_reps) for c in cells]
    write_csv(args.out, ["n", "p", "kernel", "mean_lag1_acf", "n_reps"], rows)
    write_json(f"{args.out}.manifest.json", manifest(args, argv, started, [args.out]))
    return EXIT_OK


def cmd_bound(args, argv):
    _check(args.k >= 1, "--k", "must be positive")
    _check(0.0 < args.gamma < 1.0, "--gamma", "must lie in (0, 1)")
    _check(0.0 < args.r < 1.0, "--r", "must lie in (0, 1)")
    params = BoundParams(args.n, args.p, args.gamma, args.d, args.r, args.lam,
                         args.beta0_norm2, args.sigma0_2)
    t = bound_terms(params)
    header = ["k", "bound", "b", "d_min", "eps", "U", "alpha"]
    rows = [(k, tv_bound(params, k), t.b, t.d_min, t.eps, t.U, t.alpha)
            for k in range(1, args.k + 1)]
    if args.out:
        write_csv(args.out, header, rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([row[0]] + [fmt(v) for v in row[1:]])
    return EXIT_OK


def cmd_check_lemma2(args, argv):
    _check(args.trials >= 1, "--trials", "must be positive")
    _check(args.max_n >= 2, "--max-n", "must be at least 2")
    _check(args.max_p >= 1, "--max-p", "must be at least 1")
    rep = fuzz_lemma2(args.trials, args.max_n, args.max_p, args.seed)
    data, tau = counterexample_instance()
    ratio = lemma2_ratio(data, tau)
    out = {
        "trials": rep.trials, "evaluated": rep.evaluated, "skipped": rep.skipped,
        "max_ratio_over_tau_l1": rep.max_ratio_over_l1,
        "max_ratio_over_quarter_tau_l1": rep.max_ratio_over_quarter_l1,
        "violations_tau_l1": rep.violations_l1,
        "violations_quarter_tau_l1": rep.violations_quarter_l1,
        "worst_instance": rep.worst,
        "counterexample": {"n": 2, "p": 1, "tau": 1.0, "ratio": ratio,
                           "quarter_tau_l1": float(tau.sum()) / 4.0},
        "envelope_holds": rep.violations_l1 == 0,
    }
    text = json.dumps(out, indent=2, default=_json_default)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK if rep.violations_l1 == 0 else EXIT_PROPERTY


def cmd_replay(args, argv):
    recorded = json.loads(Path(args.manifest).read_text())
    return main(recorded["argv"])


# -- parser ------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="blockgibbs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--version", action="version", version=f"blockgibbs {__version__}")
        sp.set_defaults(func=func)
        return sp

    sp = add("simulate", cmd_simulate, "Write simulated standardized X and response Y as CSV.")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--rho", type=float, default=0.2, help="pairwise covariate correlation")
    sp.add_argument("--sparsity", type=float, default=0.2, help="fraction of nonzero coefficients")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-x", required=True)
    sp.add_argument("--out-y", required=True)
    sp.add_argument("--manifest", help="manifest path (default: <out-x>.manifest.json)")

    sp = add("run", cmd_run, "Run Gibbs chains on CSV data.")
    sp.add_argument("--x", required=True, help="design CSV with a header row")
    sp.add_argument("--y", required=True, help="response CSV with a single column")
    _add_prior_flags(sp)
    sp.add_argument("--kernel", choices=[k.value for k in KernelKind], default="two-block")
    sp.add_argument("--iters", type=int, default=10000, help="retained iterations per chain")
    sp.add_argument("--burnin", type=int, default=1000)
    sp.add_argument("--chains", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--keep-beta", action="store_true")
    sp.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True,
                    help="standardize X and center Y (default); --no-standardize only centers Y")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    sp = add("diagnose", cmd_diagnose, "Summarize a sigma2 trace CSV.")
    sp.add_argument("--chain", required=True)
    sp.add_argument("--column", default="sigma2")
    sp.add_argument("--out")

    sp = add("dacf", cmd_dacf, "Mean lag-one sigma2 autocorrelation over an (n, p) grid.")
    sp.add_argument("--n-list", required=True, help="comma-separated sample sizes")
    sp.add_argument("--p-list", help="comma-separated numbers of covariates")
    sp.add_argument("--p-mult", help="comma-separated multiples of n, instead of --p-list")
    sp.add_argument("--reps", type=int, default=10)
    sp.add_argument("--iters", type=int, default=10000)
    sp.add_argument("--burnin", type=int, default=1000)
    _add_prior_flags(sp)
    sp.add_argument("--rho", type=float, default=0.2)
    sp.add_argument("--sparsity", type=float, default=0.2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    sp = add("bound", cmd_bound, "Total-variation bound for the two-block lasso chain.")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--d", type=float, required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--k", type=int, required=True, help="largest iteration count")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--beta0-norm2", type=float, required=True)
    sp.add_argument("--sigma0-2", type=float, required=True)
    sp.add_argument("--out")

    sp = add("check-lemma2", cmd_check_lemma2, "Fuzz the quadratic-form ratio envelope.")
    sp.add_argument("--trials", type=int, default=100000)
    sp.add_argument("--max-n", type=int, default=6)
    sp.add_argument("--max-p", type=int, default=6)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")

    sp = add("replay", cmd_replay, "Re-run the command recorded in a manifest.")
    sp.add_argument("--manifest", required=True)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, argv)
    except ShrinkageError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
