"""Command-line driver: ``modalpca {fit,bench,influence,lbbp,synth,specdist}``.

Every option may also come from a JSON object given with ``--config``;
keys are the long option names with dashes or underscores. Flags given on
the command line override the file. Exit status is 0 on success, 2 for
configuration or input errors and 3 for numerical failures.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as mio
from .baseline import cpca_fit, specdist
from .errors import (ConfigError, DegenerateSampleError, ModalPCAError, OptimizationError,
                     SingularSystemError)
from .estimator import FitConfig, fit
from .grid import GridConfig
from .robustness import (InfluenceOperator, breakdown_experiment, breakdown_fraction,
                         calibrate_sigma_z, cpca_refit, influence_numeric, lbbp)
from .seeding import derive_seed
from .synth import ScenarioSpec, generate, ground_truth

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

NUMERIC_ERRORS = (OptimizationError, SingularSystemError, DegenerateSampleError, ArithmeticError)


class UsageError(Exception):
    """Bad command-line usage detected after parsing."""


# --------------------------------------------------------------------------
# Argument parsing


def _float_list(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return [x.strip() for x in str(text).split(",") if x.strip()]


def _add_scenario(p, family="gaussian-diag", d=20, n=200, eps=0.0):
    p.add_argument("--family", default=family, help="gaussian-diag, laplace-scaled or lbbp-3d")
    p.add_argument("--d", type=int, default=d, help="dimension")
    p.add_argument("--n", type=int, default=n, help="sample size")
    p.add_argument("--eps", type=float, default=eps, help="outlier fraction in [0, 1)")
    p.add_argument("--sigma-z", type=float, default=None, help="third-coordinate spread (lbbp-3d)")


def _add_fit(p):
    p.add_argument("--grid-points", type=int, default=21)
    p.add_argument("--grid-cycles", type=int, default=10)
    p.add_argument("--grid-passes", type=int, default=1)
    p.add_argument("--mad-scale", type=float, default=1.0,
                   help="factor applied to the raw MAD in the bandwidth rule")
    p.add_argument("--outer-tol", type=float, default=1e-7)
    p.add_argument("--max-outer", type=int, default=200)


def _add_common(p):
    p.add_argument("--config", default=None, help="JSON file with option values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".", help="directory for output files")


def build_parser():
    parser = argparse.ArgumentParser(prog="modalpca", description="Modal principal component analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit MPCA to a CSV file or a synthetic scenario")
    _add_common(p)
    p.add_argument("--input", default=None, help="dataset CSV")
    p.add_argument("--header", action="store_true", default=False)
    p.add_argument("--label-column", default=None)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--scenario", default=None, help="synthetic family instead of --input")
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--sigma-z", type=float, default=None)
    p.add_argument("--components", type=int, default=None,
                   help="number of minor components (scenario default: d - k)")
    p.add_argument("--output", default="model.json")
    _add_fit(p)

    p = sub.add_parser("bench", help="specdist sweep over outlier fraction or sample size")
    _add_common(p)
    _add_scenario(p, eps=0.2)
    p.add_argument("--eps-values", type=_float_list, default=[0.0, 0.1, 0.2, 0.3])
    p.add_argument("--n-values", type=_int_list, default=None,
                   help="sweep sample size at fixed --eps instead of sweeping eps")
    p.add_argument("--seeds", type=int, default=20, help="number of repetitions")
    p.add_argument("--methods", type=_str_list, default=["mpca", "cpca"])
    p.add_argument("--output", default="bench.csv")
    _add_fit(p)

    p = sub.add_parser("influence", help="norm of the influence function of MC_k on a 2-D grid")
    _add_common(p)
    p.add_argument("--method", choices=["mpca", "cpca"], default="mpca")
    p.add_argument("--input", default=None, help="2-D dataset CSV (default: N(0, diag(2,1)))")
    p.add_argument("--header", action="store_true", default=False)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--h", type=float, default=1.0, help="bandwidth for the MPCA influence function")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--lim", type=float, default=4.0)
    p.add_argument("--resolution", type=int, default=81)
    p.add_argument("--epsilon", type=float, default=1e-3, help="contamination for the numeric path")
    p.add_argument("--output", default="influence.csv")
    _add_fit(p)

    p = sub.add_parser("lbbp", help="breakdown-point lower bound and breakdown sweep")
    _add_common(p)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--sigma-z", type=float, default=None)
    p.add_argument("--target", type=float, default=None, help="calibrate sigma_z to this bound")
    p.add_argument("--alphas", type=_float_list, default=[i / 100 for i in range(1, 51)])
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--threshold", type=float, default=0.1)
    _add_fit(p)

    p = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    _add_common(p)
    _add_scenario(p)
    p.add_argument("--output", default="data.csv")

    p = sub.add_parser("specdist", help="spectral distance between two bases")
    p.add_argument("--config", default=None)
    p.add_argument("first", help="basis CSV (one row per coordinate) or model JSON")
    p.add_argument("second")
    return parser


def _explicit_dests(parser, argv):
    """Destinations of options actually typed on the command line."""
    sentinel = object()
    probe = argparse.ArgumentParser(add_help=False)
    sub = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)][0]
    cmd_parser = sub.choices[argv[0]]
    for action in cmd_parser._actions:
        if action.option_strings and action.dest != "help":
            kwargs = {"dest": action.dest, "default": sentinel}
            if isinstance(action, argparse._StoreTrueAction):
                kwargs["action"] = "store_true"
            else:
                kwargs["nargs"] = action.nargs
            probe.add_argument(*action.option_strings, **kwargs)
    known, _ = probe.parse_known_args(argv[1:])
    return {k for k, v in vars(known).items() if v is not sentinel}


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config: cannot read {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config: file must hold a JSON object")
    explicit = _explicit_dests(parser, argv)
    sub = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)][0]
    actions = {a.dest: a for a in sub.choices[args.command]._actions}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("help", "config", "command") or dest not in actions:
            raise ConfigError(f"{key}: unknown option for '{args.command}'")
        if dest in explicit:
            continue
        action = actions[dest]
        if action.type is not None and isinstance(value, (str, int, float)) and not isinstance(value, bool):
            try:
                value = action.type(value) if action.type not in (_float_list, _int_list, _str_list) \
                    else action.type(str(value))
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"{key}: {exc}") from None
        elif isinstance(value, list) and action.type in (_float_list, _int_list, _str_list):
            value = action.type(",".join(str(v) for v in value))
        setattr(args, dest, value)
    return args


# --------------------------------------------------------------------------
# Helpers


def thread_count():
    raw = os.environ.get("MODALPCA_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


@contextmanager
def worker_map():
    """Ordered ``map`` over a thread pool capped by ``MODALPCA_THREADS``."""
    n = thread_count()
    if n == 1:
        yield map
        return
    with ThreadPoolExecutor(max_workers=n) as pool:
        yield pool.map


def fit_config(args, n_components):
    grid = GridConfig(n_grid=args.grid_points, n_cycles=args.grid_cycles, n_passes=args.grid_passes)
    return FitConfig(n_components=n_components, grid=grid, outer_tol=args.outer_tol,
                     max_outer=args.max_outer, seed=args.seed, mad_scale=args.mad_scale)


def scenario(args, n=None, eps=None, seed=None):
    return ScenarioSpec(args.family, d=args.d, n=args.n if n is None else n,
                        outlier_fraction=args.eps if eps is None else eps,
                        seed=args.seed if seed is None else seed, sigma_z=args.sigma_z)


def _out(args, name):
    path = Path(name)
    if not path.is_absolute():
        path = Path(args.out_dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(x):
    return mio.format_float(x)


# --------------------------------------------------------------------------
# Commands


def cmd_fit(args):
    if (args.input is None) == (args.scenario is None):
        raise UsageError("fit needs exactly one of --input and --scenario")
    truth = None
    if args.scenario is not None:
        args.family = args.scenario
        spec = scenario(args)
        X, _, truth = generate(spec)
        r = args.components if args.components is not None else spec.d - truth.shape[1]
    else:
        X = mio.read_csv(args.input, header=args.header, label_column=args.label_column,
                         delimiter=args.delimiter).data
        r = args.components if args.components is not None else 1
    model = fit(X, fit_config(args, r))
    path = _out(args, args.output)
    mio.write_model(model, path)
    for c in model.components:
        print(f"k={c.index} mode={_fmt(c.mode)} objective={_fmt(c.objective)} iterations={c.iterations}")
    if truth is not None:
        p = truth.shape[1]
        if r == model.dim - p or r == model.dim:
            print(f"specdist={_fmt(specdist(model.principal_subspace(p), truth))}")
        else:
            print(f"specdist: skipped (needs {model.dim - p} components for a {p}-dim PC subspace)")
    print(f"model written to {path}")
    return EXIT_OK


def _bench_cell(args, methods, sweep_value, sweep_kind, rep):
    data_seed = derive_seed(args.seed, rep) if sweep_kind == "epsilon" else \
        derive_seed(args.seed, int(sweep_value), rep)
    if sweep_kind == "epsilon":
        spec = scenario(args, eps=sweep_value, seed=data_seed % 2 ** 63)
    else:
        spec = scenario(args, n=int(sweep_value), seed=data_seed % 2 ** 63)
    X, _, truth = generate(spec)
    p = truth.shape[1]
    rows = []
    for method in methods:
        if method == "mpca":
            model = fit(X, fit_config(args, spec.d - p))
            basis = model.principal_subspace(p)
        else:
            basis, _ = cpca_fit(X, p)
        rows.append((method, sweep_value, rep, float(specdist(basis, truth))))
    return rows


def cmd_bench(args):
    methods = list(args.methods or [])
    if not methods:
        raise ConfigError("methods: at least one method is required")
    bad = [m for m in methods if m not in ("mpca", "cpca")]
    if bad:
        raise ConfigError(f"methods: unknown method(s) {', '.join(bad)}")
    if args.seeds < 1:
        raise ConfigError("seeds: must be >= 1")
    if args.n_values:
        kind, values = "n", [int(v) for v in args.n_values]
    else:
        kind, values = "epsilon", [float(v) for v in args.eps_values]
        if not values:
            raise ConfigError("eps_values: empty sweep")
    scenario(args, n=max(values) if kind == "n" else None,
             eps=max(values) if kind == "epsilon" else None)  # validate early
    cells = [(v, rep) for v in values for rep in range(args.seeds)]
    with worker_map() as pmap:
        results = list(pmap(lambda c: _bench_cell(args, methods, c[0], kind, c[1]), cells))
    rows = [row for cell in results for row in cell]
    path = _out(args, args.output)
    mio.write_table(path, ["method", kind, "seed", "specdist"], rows)
    print(f"{len(rows)} rows written to {path}")
    return EXIT_OK


def _influence_sample(args):
    if args.input is not None:
        X = mio.read_csv(args.input, header=args.header).data
    else:
        from .seeding import stream
        X = stream(args.seed, 0).standard_normal((args.n, 2)) * np.sqrt([2.0, 1.0])
    if X.shape[1] != 2:
        raise ConfigError("input: influence grids need two-dimensional data")
    model = fit(X, fit_config(args, 2))
    return X - model.center, model


def cmd_influence(args):
    if args.resolution < 1:
        raise ConfigError("resolution: must be >= 1")
    if not args.lim > 0:
        raise ConfigError("lim: must be > 0")
    Xc, model = _influence_sample(args)
    if args.method == "mpca":
        op = InfluenceOperator(Xc, model, args.h, args.k)
        evaluate = op
    else:
        def evaluate(u):
            return influence_numeric(Xc, cpca_refit, u, args.k, args.epsilon)
    axis = [0.0] if args.resolution == 1 else np.linspace(-args.lim, args.lim, args.resolution)

    def column(u1):
        return [(float(u1), float(u2), float(np.linalg.norm(evaluate(np.array([u1, u2])))))
                for u2 in axis]

    with worker_map() as pmap:
        rows = [r for col in pmap(column, axis) for r in col]
    path = _out(args, args.output)
    mio.write_table(path, ["u1", "u2", "norm"], rows)
    print(f"{len(rows)} rows written to {path}")
    return EXIT_OK


def cmd_lbbp(args):
    if args.sigma_z is None and args.target is None:
        raise ConfigError("sigma_z: give --sigma-z or --target")
    if args.seeds < 1:
        raise ConfigError("seeds: must be >= 1")
    cfg = fit_config(args, 3)
    if args.sigma_z is None:
        sigma_z, _ = calibrate_sigma_z(args.target, n=args.n, seed=args.seed, cfg=cfg,
                                       restarts=args.restarts)
    else:
        sigma_z = args.sigma_z
    spec = ScenarioSpec("lbbp-3d", 3, args.n, 0.0, seed=args.seed, sigma_z=sigma_z)
    X, _, _ = generate(spec)
    model = fit(X, cfg)
    report = lbbp(X - model.center, model, restarts=args.restarts, seed=args.seed)
    mio.write_table(_out(args, "lbbp.csv"), ["a", "M_a", "M_a_star", "b_star", "bound"],
                    [(report.a, report.M_a, report.M_a_star, report.b_star, report.bound)])
    seeds = [derive_seed(args.seed, s) % 2 ** 63 for s in range(args.seeds)]
    with worker_map() as pmap:
        rows = breakdown_experiment(spec, args.alphas, seeds, cfg, mapper=pmap)
    mio.write_table(_out(args, "breakdown.csv"), ["alpha", "seed", "cosine"],
                    [(r.alpha, i // len(args.alphas), r.cosine) for i, r in enumerate(rows)])
    bd = breakdown_fraction(rows, args.threshold)
    print(f"sigma_z={_fmt(sigma_z)} bound={_fmt(report.bound)} b_star={report.b_star} "
          f"breakdown={'none' if bd is None else _fmt(bd)}")
    return EXIT_OK


def cmd_synth(args):
    X, mask, _ = generate(scenario(args))
    path = _out(args, args.output)
    mio.write_csv(path, X, mask)
    print(f"{X.shape[0]} rows written to {path}")
    return EXIT_OK


def cmd_specdist(args):
    a, b = mio.read_basis(args.first), mio.read_basis(args.second)
    print(_fmt(specdist(a, b)))
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "bench": cmd_bench, "influence": cmd_influence, "lbbp": cmd_lbbp,
            "synth": cmd_synth, "specdist": cmd_specdist}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ModalPCAError, UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
