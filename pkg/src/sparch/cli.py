"""Command-line interface.

Subcommands::

    sparch weights spec.json --out w.csv        # build a weights matrix
    sparch simulate model.json --seed 7 --out real.csv
    sparch fit data.csv weights.csv --out fit.json
    sparch diagnose data.csv --weights w.csv --max-lag 3 --out diag.csv
    sparch experiment config.json --out results/

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure (singular system, inadmissible draw).  All randomness is seeded
(``--seed``, default 0), so every command is reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .diagnostics import spatial_acf
from .domain import SpatialDomain
from .exceptions import NumericalError, UsageError
from .experiments import ExperimentConfig, run_experiment
from .fitting import FitConfig, fit_ml
from .process import SpArchModel, simulate, simulate_sar_sparch, validate_model
from .serialization import load_json, load_series_csv, parse_model, parse_weights
from .weights import SparseWeights, support_bound

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    """argparse parser whose errors map to exit code 1, not 2."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed", type=int, default=0, help="base RNG seed (default 0)"
    )
    common.add_argument(
        "--threads", type=int, default=1, help="worker processes (default 1)"
    )
    common.add_argument("--out", help="output path (file or directory per command)")

    parser = _Parser(prog="sparch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sparch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser(
        "weights", parents=[common], help="build a weights matrix from a JSON spec"
    )
    p.add_argument("spec", help="weights document (JSON)")
    p.set_defaults(func=_cmd_weights)

    p = sub.add_parser(
        "simulate", parents=[common], help="simulate a model given as JSON"
    )
    p.add_argument("model", help="model document (JSON)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser(
        "fit", parents=[common], help="fit the spatial ARCH model by exact ML"
    )
    p.add_argument("data", help="observation CSV (headed; see --column)")
    p.add_argument("weights", help="weights matrix as triplet CSV (header i,j,w)")
    p.add_argument("--column", default="y", help="data column to fit (default y)")
    p.add_argument(
        "--n", type=int, default=None, help="site count override for the weights CSV"
    )
    p.add_argument(
        "--error",
        default="gaussian",
        help="innovation family: 'gaussian' or an inline JSON object",
    )
    p.add_argument(
        "--parameterization",
        choices=("auto", "triangular", "general"),
        default="auto",
    )
    p.add_argument("--max-iter", type=int, default=500, help="optimizer budget")
    p.add_argument("--gtol", type=float, default=1e-8, help="gradient tolerance")
    p.add_argument("--alpha0", type=float, default=None, help="starting alpha")
    p.add_argument("--rho0", type=float, default=0.1, help="starting rho")
    p.add_argument("--residuals", default=None, help="also write residual CSV here")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser(
        "diagnose",
        parents=[common],
        help="Moran's I of a series and its square over lag bands",
    )
    p.add_argument("data", help="observation CSV (headed; see --column)")
    p.add_argument("--column", default="y", help="data column (default y)")
    p.add_argument(
        "--weights", default=None, help="contiguity pattern as triplet CSV"
    )
    p.add_argument(
        "--lattice",
        type=int,
        default=None,
        help="treat sites as a d x d lattice (queen contiguity)",
    )
    p.add_argument("--n", type=int, default=None, help="site count for --weights")
    p.add_argument("--max-lag", type=int, default=3, help="largest lag band")
    p.add_argument(
        "--no-squares",
        action="store_true",
        help="skip the squared series",
    )
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser(
        "experiment", parents=[common], help="run a Monte Carlo experiment"
    )
    p.add_argument("config", help="experiment document (JSON)")
    p.set_defaults(func=_cmd_experiment)

    return parser


def _parse_error_arg(text: str):
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--error is not valid JSON: {exc}") from exc
    return text


def _cmd_weights(args) -> int:
    spec = load_json(args.spec)
    w = parse_weights(spec, context=args.spec)
    out = args.out or "weights.csv"
    w.to_csv(out)
    bound = support_bound(w)
    triangular = w.solve_order() is not None
    print(
        f"wrote {out}: n={w.n}, nnz={w.nnz}, "
        f"triangularizable={'yes' if triangular else 'no'}, "
        f"support_bound={bound!r}"
    )
    return 0


def _cmd_simulate(args) -> int:
    doc = load_json(args.model)
    model = parse_model(doc, context=args.model)
    out = args.out or "realization.csv"
    if isinstance(model, SpArchModel):
        report = validate_model(model)
        real = simulate(model, args.seed)
        real.to_csv(out)
        print(
            f"wrote {out}: n={real.n}, seed={args.seed}, "
            f"validity={report.certificate}"
        )
    else:
        real = simulate_sar_sparch(model, args.seed)
        real.to_csv(out)
        print(f"wrote {out}: n={real.n}, seed={args.seed}")
    return 0


def _cmd_fit(args) -> int:
    y = load_series_csv(args.data, column=args.column)
    w = SparseWeights.from_csv(args.weights, n=args.n)
    config = FitConfig(
        parameterization=args.parameterization,
        max_iter=args.max_iter,
        gtol=args.gtol,
        alpha0=args.alpha0,
        rho0=args.rho0,
    )
    result = fit_ml(y, w, error=_parse_error_arg(args.error), config=config)
    out = args.out or "fit.json"
    result.to_json(out)
    if args.residuals:
        result.residuals_to_csv(args.residuals)
    est = result.estimates
    print(
        f"wrote {out}: alpha={est['alpha']!r}, rho={est['rho']!r}, "
        f"loglik={result.loglik!r}, aic={result.aic!r}, "
        f"converged={'yes' if result.converged else 'no'}"
    )
    return 0 if result.converged else 2


def _cmd_diagnose(args) -> int:
    x = load_series_csv(args.data, column=args.column)
    if (args.weights is None) == (args.lattice is None):
        raise UsageError("diagnose needs exactly one of --weights or --lattice")
    if args.max_lag < 1:
        raise UsageError(f"--max-lag must be >= 1, got {args.max_lag}")
    if args.lattice is not None:
        domain = SpatialDomain.lattice(args.lattice)
        if domain.n_sites != x.shape[0]:
            raise UsageError(
                f"--lattice {args.lattice} implies {domain.n_sites} sites but "
                f"the data has {x.shape[0]}"
            )
        acfs = [(args.column, spatial_acf(x, domain=domain, max_lag=args.max_lag))]
        if not args.no_squares:
            acfs.append(
                (args.column + "2", spatial_acf(x * x, domain=domain, max_lag=args.max_lag))
            )
    else:
        base = SparseWeights.from_csv(args.weights, n=args.n)
        if base.n != x.shape[0]:
            raise UsageError(
                f"weights have {base.n} sites but the data has {x.shape[0]}"
            )
        acfs = [(args.column, spatial_acf(x, base=base, max_lag=args.max_lag))]
        if not args.no_squares:
            acfs.append(
                (args.column + "2", spatial_acf(x * x, base=base, max_lag=args.max_lag))
            )

    out = args.out or "diagnostics.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        fh.write("series,lag,I,expectation,std,z,p\n")
        for series, acf in acfs:
            for name, lag, res in acf.rows(series):
                fh.write(
                    f"{name},{lag},{res.statistic!r},{res.expectation!r},"
                    f"{res.std!r},{res.zscore!r},{res.pvalue!r}\n"
                )
    print(f"wrote {out}: {sum(len(a.results) for _, a in acfs)} rows")
    return 0


def _cmd_experiment(args) -> int:
    doc = load_json(args.config)
    doc = dict(doc)
    # command line overrides the config file
    if args.seed != 0 or "base_seed" not in doc:
        doc["base_seed"] = args.seed
    if args.threads != 1 or "threads" not in doc:
        doc["threads"] = args.threads
    outdir = args.out or doc.pop("out", "results")
    doc.pop("out", None)
    config = ExperimentConfig.from_dict(doc)
    result = run_experiment(config)
    paths = result.write(outdir)
    for path in paths:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
