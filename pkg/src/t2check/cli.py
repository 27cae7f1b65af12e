"""Command line interface.

Subcommands: wasserstein, entropy, orlicz-norm, poincare, check, flow, report.
Exit codes: 0 success, 1 asserted-inequality failures, 2 file/parse errors,
3 parameter errors, 4 solver failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, ParameterError, ParseError, SolverError, ValidationError
from .entropy import TAU, TAU_STAR, gauge_norm, product_weights, relative_entropy
from .flow import (
    default_time_grid,
    entropy_trace,
    grid_flow_generator,
    metropolis_generator,
    p_norm_trace,
    w2_flow_trace,
)
from .loaders import load_density, load_families, load_space
from .report import RunConfig, load_run_config, run_suite
from .spectral import grid_gradient_form, poincare_constant
from .transport import cost_matrix, dual_certificate, solve_entropic, solve_exact

EXIT_OK = 0
EXIT_CHECK_FAILURES = 1
EXIT_PARSE = 2
EXIT_PARAMS = 3
EXIT_SOLVER = 4


def _emit(doc: dict) -> None:
    print(json.dumps(doc, indent=2))


def _cmd_wasserstein(args) -> int:
    space = load_space(args.space)
    nu = load_density(args.nu, space)
    if args.method == "exact":
        plan = solve_exact(space, nu, None, args.p)
        pair = dual_certificate(space, nu, None, args.p)
        gap = plan.cost - pair.value
        _emit({"cost": plan.cost, "wp": plan.wp, "gap": gap, "iters": plan.iters})
    else:
        eps = args.eps
        if eps is None:
            eps = 1e-3 * float(cost_matrix(space, args.p).max())
        plan = solve_entropic(space, nu, None, args.p, eps_reg=eps, tol=args.tol)
        _emit({"cost": plan.cost, "wp": plan.wp, "gap": None, "iters": plan.iters})
    return EXIT_OK


def _cmd_entropy(args) -> int:
    space = load_space(args.space)
    nu = load_density(args.nu, space)
    _emit({"value": relative_entropy(space, nu)})
    return EXIT_OK


def _cmd_orlicz_norm(args) -> int:
    space = load_space(args.space)
    psi = {"tau": TAU, "tau_star": TAU_STAR}[args.psi]
    if args.g == "dist":
        g = space.dist if args.product else space.d_to_base()
    elif args.g == "dist2":
        g = space.dist ** 2 if args.product else space.d_to_base() ** 2
    else:
        doc = json.loads(Path(args.g).read_text(encoding="utf-8"))
        g = np.asarray(doc["g"], dtype=float)
    weights = product_weights(space) if args.product else space.mu
    norm = gauge_norm(np.asarray(g).ravel(), psi, weights,
                      "mu(x)mu" if args.product else "mu")
    _emit({"value": norm.value})
    return EXIT_OK


def _cmd_poincare(args) -> int:
    space = load_space(args.space)
    if args.form == "grid":
        form = grid_gradient_form(space)
    else:
        gen = metropolis_generator(space)
        form = gen.dirichlet_form()
    res = poincare_constant(form)
    _emit({"value": res.value, "gap": 1.0 / res.value})
    return EXIT_OK


def _parse_a_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _cmd_check(args) -> int:
    space_doc = json.loads(Path(args.space).read_text(encoding="utf-8"))
    fams = load_families(args.family)
    params = {}
    if args.p is not None:
        params["p"] = args.p
    if args.alpha is not None:
        params["alpha"] = args.alpha
    if args.q is not None:
        params["q"] = args.q
    if args.C is not None:
        params["C"] = args.C
    if args.cases is not None:
        params["cases"] = args.cases
    a_values = _parse_a_list(args.a) if args.a else [math.e ** 2]
    suites = [s.strip() for s in args.suite.split(",") if s.strip()]
    total_failures = 0
    all_reports = []
    for a in a_values:
        cfg = RunConfig(
            space=space_doc,
            families=fams,
            suites=suites,
            params={**params, "a": a},
            out_dir=str(Path(args.out) / (f"a={a:g}" if len(a_values) > 1 else "")),
            seed=args.seed,
            threads=args.threads,
        )
        summary, reports = run_suite(cfg)
        total_failures += summary.failures
        for suite, reps in reports.items():
            all_reports.extend(r.as_dict() for r in reps)
    _emit({"failures": total_failures, "reports": len(all_reports), "out": args.out})
    return EXIT_CHECK_FAILURES if total_failures else EXIT_OK


def _cmd_report(args) -> int:
    cfg = load_run_config(args.config)
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    summary, _ = run_suite(cfg)
    _emit({
        "failures": summary.failures,
        "constants": summary.constants,
        "out": cfg.out_dir,
        "version": __version__,
    })
    return EXIT_CHECK_FAILURES if summary.failures else EXIT_OK


def _parse_times(spec: str, gen) -> np.ndarray:
    if spec.startswith("geometric:"):
        return default_time_grid(gen, int(spec.split(":", 1)[1]))
    if spec.startswith("linear:"):
        num = int(spec.split(":", 1)[1])
        c_p = 1.0 / gen.spectral_gap
        return np.linspace(1e-3 * c_p, 20.0 * c_p, num)
    return np.asarray([float(tok) for tok in spec.split(",")], dtype=float)


def _cmd_flow(args) -> int:
    space = load_space(args.space)
    if args.V:
        doc = json.loads(Path(args.V).read_text(encoding="utf-8"))
        gen = metropolis_generator(space, np.asarray(doc["V"], dtype=float))
    elif args.generator == "metropolis":
        gen = metropolis_generator(space)
    else:
        gen = grid_flow_generator(space)
    h0 = load_density(args.h0, space)
    times = _parse_times(args.times, gen)
    quantities = [q.strip() for q in args.trace.split(",") if q.strip()]
    columns = {"time": times}
    if "entropy" in quantities:
        columns["entropy"] = entropy_trace(gen, h0, times).values
    if "pnorm" in quantities:
        columns["pnorm"] = p_norm_trace(gen, h0, args.p, times).values
    if "w2" in quantities:
        w2tr, rate, ratio = w2_flow_trace(gen, space, h0, times)
        columns["w2"] = w2tr.values
        columns["dirichlet_sqrt_rate"] = rate.values
        columns["w2_decay_ratio"] = np.concatenate([ratio, [np.nan]])
    out = Path(args.out) if args.out else Path("flow.csv")
    if out.is_dir():
        out = out / "flow.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        names = list(columns)
        w.writerow(names)
        for i in range(len(times)):
            w.writerow([repr(float(columns[name][i])) for name in names])
    _emit({"rows": len(times), "columns": list(columns), "out": str(out)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="t2check",
        description="Transport, entropy, Orlicz and spectral inequality checks "
                    "on finite metric measure spaces",
    )
    parser.add_argument("--version", action="version", version=f"t2check {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pw = sub.add_parser("wasserstein", help="W_p distance with a dual certificate")
    pw.add_argument("--space", required=True)
    pw.add_argument("--nu", required=True)
    pw.add_argument("--p", type=float, default=2.0)
    pw.add_argument("--method", choices=("exact", "entropic"), default="exact")
    pw.add_argument("--eps", type=float, default=None,
                    help="entropic regularization (default 1e-3 * max cost)")
    pw.add_argument("--tol", type=float, default=1e-9)
    pw.set_defaults(func=_cmd_wasserstein)

    pe = sub.add_parser("entropy", help="relative entropy H(nu, mu)")
    pe.add_argument("--space", required=True)
    pe.add_argument("--nu", required=True)
    pe.set_defaults(func=_cmd_entropy)

    po = sub.add_parser("orlicz-norm", help="gauge norm of a function")
    po.add_argument("--space", required=True)
    po.add_argument("--psi", choices=("tau", "tau_star"), default="tau_star")
    po.add_argument("--g", default="dist2",
                    help="dist | dist2 | path to a JSON file with {'g': [...]}")
    po.add_argument("--product", action="store_true",
                    help="norm over mu (x) mu instead of mu")
    po.set_defaults(func=_cmd_orlicz_norm)

    pp = sub.add_parser("poincare", help="spectral-gap constant of a grid space")
    pp.add_argument("--space", required=True)
    pp.add_argument("--form", choices=("grid", "metropolis"), default="grid")
    pp.set_defaults(func=_cmd_poincare)

    pc = sub.add_parser("check", help="run inequality suites over a family")
    pc.add_argument("--space", required=True)
    pc.add_argument("--family", required=True)
    pc.add_argument("--suite", required=True,
                    help="comma separated suite names")
    pc.add_argument("--a", default=None,
                    help="truncation level(s), comma separated (default e^2)")
    pc.add_argument("--p", type=float, default=None)
    pc.add_argument("--alpha", type=float, default=None)
    pc.add_argument("--q", type=float, default=None)
    pc.add_argument("--C", type=float, default=None)
    pc.add_argument("--cases", type=int, default=None)
    pc.add_argument("--seed", type=int, default=None)
    pc.add_argument("--out", default="out")
    pc.add_argument("--threads", type=int, default=1)
    pc.set_defaults(func=_cmd_check)

    pf = sub.add_parser("flow", help="heat-semigroup traces along time")
    pf.add_argument("--space", required=True)
    pf.add_argument("--h0", required=True)
    pf.add_argument("--V", default=None, help="JSON file with {'V': [...]}")
    pf.add_argument("--generator", choices=("grid", "metropolis"), default="metropolis")
    pf.add_argument("--trace", default="entropy,pnorm,w2")
    pf.add_argument("--p", type=float, default=1.5)
    pf.add_argument("--times", default="geometric:40",
                    help="geometric:K | linear:K | comma separated times")
    pf.add_argument("--out", default="flow.csv")
    pf.set_defaults(func=_cmd_flow)

    pr = sub.add_parser("report", help="full suite run from a config file")
    pr.add_argument("--config", required=True)
    pr.add_argument("--out", default=None)
    pr.add_argument("--seed", type=int, default=None)
    pr.add_argument("--threads", type=int, default=None)
    pr.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: cannot read input ({exc})", file=sys.stderr)
        return EXIT_PARSE
    except (ParameterError, ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except SolverError as exc:
        residual = f" (residual {exc.residual:g})" if exc.residual is not None else ""
        print(f"error: {exc}{residual}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
