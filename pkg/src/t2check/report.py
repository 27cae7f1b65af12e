"""Batch orchestration: run configured suites over a family, write the JSON
report, CSV summaries, plot-data CSVs and matplotlib figures.

Reruns with an identical config produce byte-identical JSON and CSV output:
all reductions are ordered, no timestamps are written, and floats are emitted
with repr round-tripping.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParameterError
from .entropy import log_plus
from .inequalities import InequalityReport
from .loaders import family_from_dict, family_to_dict, space_from_dict, _read_json
from .space import DensityFamily, MetricMeasureSpace, sample_family
from .suites import ASSERTING_SLACK, SUITE_NAMES, run_suite_checks

E32 = math.exp(1.5)
_NEEDS_LARGE_A = ("truncated-entropy", "truncation-cost", "tail-second-moment", "small-entropy")


@dataclass
class RunConfig:
    """Validated description of a batch run."""

    space: dict
    families: list[DensityFamily]
    suites: list[str]
    params: dict = field(default_factory=dict)
    out_dir: str = "out"
    seed: int | None = None
    threads: int = 1

    def __post_init__(self):
        if not self.suites:
            raise ParameterError("suite list must not be empty")
        for s in self.suites:
            if s not in SUITE_NAMES:
                raise ParameterError(f"unknown suite {s!r}")
        p = self.params.get("p")
        if p is not None and not (1.0 <= float(p) <= 2.0):
            raise ParameterError("p must lie in [1, 2]")
        alpha = self.params.get("alpha")
        if alpha is not None and not (0.0 <= float(alpha) <= 1.0):
            raise ParameterError("alpha must lie in [0, 1]")
        a = self.params.get("a")
        if a is not None and not float(a) > 0:
            raise ParameterError("a must be positive")
        if a is not None and float(a) <= E32 and any(s in self.suites for s in _NEEDS_LARGE_A):
            raise ParameterError("the requested suites need a > e^(3/2)")
        q = self.params.get("q")
        if q is not None and not float(q) > 0:
            raise ParameterError("q must be positive")
        c = self.params.get("C")
        if c is not None and not float(c) > 0:
            raise ParameterError("C must be positive")
        eps = self.params.get("eps_reg")
        if eps is not None and not float(eps) > 0:
            raise ParameterError("eps_reg must be positive")
        if self.threads < 1:
            raise ParameterError("threads must be at least 1")


def load_run_config(path) -> RunConfig:
    doc = _read_json(path)
    base = Path(path).resolve().parent
    space = doc.get("space")
    if isinstance(space, dict) and "path" in space:
        space = _read_json(base / space["path"])
    if space is None:
        raise ParameterError("config is missing the space")
    fams = [family_from_dict(d) for d in doc.get("families", [])]
    return RunConfig(
        space=space,
        families=fams,
        suites=list(doc.get("suites", [])),
        params=dict(doc.get("params", {})),
        out_dir=str(doc.get("out", "out")),
        seed=doc.get("seed"),
        threads=int(doc.get("threads", 1)),
    )


@dataclass
class SuiteSummary:
    """Aggregate over all reports of a run, keyed by report name."""

    family_size: int
    counts: dict
    min_margin: dict
    argmin_witness: dict
    constants: dict
    failures: int

    def as_dict(self) -> dict:
        return {
            "family_size": self.family_size,
            "counts": self.counts,
            "min_margin": self.min_margin,
            "argmin_witness": self.argmin_witness,
            "constants": self.constants,
            "failures": self.failures,
        }


def family_members(space: MetricMeasureSpace, specs, seed_override=None):
    """Instantiate all family specs with stable witness identifiers."""
    members = []
    for i, spec in enumerate(specs):
        if seed_override is not None:
            spec = DensityFamily(
                seed=int(seed_override) + i,
                kind=spec.kind,
                size=spec.size,
                tilt_lo=spec.tilt_lo,
                tilt_hi=spec.tilt_hi,
                cut_levels=spec.cut_levels,
            )
        for k, nu in enumerate(sample_family(space, spec)):
            members.append((f"f{i}-{spec.kind}-{k:04d}", nu))
    return members


def _summarize(reports_by_suite: dict, family_size: int) -> SuiteSummary:
    counts = {}
    min_margin = {}
    argmin = {}
    constants = {}
    failures = 0
    sup_keys = {
        "t2-ratio": "t2_lower_bound",
        "truncation-cost-ratio": "truncation_cost_sup",
        "tail-second-moment-ratio": "tail_second_moment_sup",
        "small-entropy-log-factor": "small_entropy_log_sup",
        "small-entropy-sqrt-factor": "small_entropy_sqrt_sup",
        "bolley-villani-ratio": "bolley_villani_sup",
    }
    for suite, reports in reports_by_suite.items():
        slack = ASSERTING_SLACK.get(suite)
        for rep in reports:
            c = counts.setdefault(rep.name, {"passed": 0, "failed": 0, "out_of_domain": 0})
            if not rep.in_domain:
                c["out_of_domain"] += 1
            elif rep.margin is None:
                c["passed"] += 1
            elif slack is not None and rep.margin < -slack:
                c["failed"] += 1
                failures += 1
            else:
                c["passed"] += 1
            if rep.in_domain and rep.margin is not None:
                if rep.name not in min_margin or rep.margin < min_margin[rep.name]:
                    min_margin[rep.name] = rep.margin
                    argmin[rep.name] = rep.witness
            key = sup_keys.get(rep.name)
            if key and rep.in_domain and rep.lhs is not None:
                constants[key] = max(constants.get(key, 0.0), rep.lhs)
    return SuiteSummary(
        family_size=family_size,
        counts=counts,
        min_margin=min_margin,
        argmin_witness=argmin,
        constants=constants,
        failures=failures,
    )


def run_suite(config: RunConfig) -> tuple[SuiteSummary, dict]:
    """Execute the configured suites; write all artifacts; return the summary
    and the per-suite report lists."""
    space = space_from_dict(config.space)
    members = family_members(space, config.families, config.seed)
    params = dict(config.params)
    params.setdefault("seed", config.seed if config.seed is not None else 0)
    reports_by_suite = {}
    for suite in config.suites:
        reports_by_suite[suite] = run_suite_checks(suite, space, members, params)
    if "modified-t2" in config.suites and "C_alpha" not in params and space.is_line:
        from .spectral import grid_gradient_form, poincare_constant

        constants_cp = poincare_constant(grid_gradient_form(space)).value
    else:
        constants_cp = params.get("C_alpha")
    summary = _summarize(reports_by_suite, len(members))
    if constants_cp is not None:
        summary.constants["poincare"] = float(constants_cp)
    write_artifacts(config, summary, reports_by_suite)
    return summary, reports_by_suite


def _config_echo(config: RunConfig) -> dict:
    return {
        "space": config.space if "grid" in config.space else {"points": len(config.space.get("mu", []))},
        "families": [family_to_dict(f) for f in config.families],
        "suites": list(config.suites),
        "params": {k: config.params[k] for k in sorted(config.params)},
        "seed": config.seed,
        "threads": config.threads,
    }


def write_artifacts(config: RunConfig, summary: SuiteSummary, reports_by_suite: dict) -> None:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "version": __version__,
        "config": _config_echo(config),
        "summary": summary.as_dict(),
        "reports": {
            suite: [r.as_dict() for r in reports]
            for suite, reports in reports_by_suite.items()
        },
    }
    (out / "report.json").write_text(json.dumps(doc, indent=2), encoding="utf-8")
    _write_summary_csv(out / "summary.csv", summary)
    _write_reports_csv(out / "reports.csv", reports_by_suite)
    _write_plot_data(out, reports_by_suite)
    render_figures(out, reports_by_suite)


def emit_report(summary: SuiteSummary, out_dir, fmt: str = "json") -> Path:
    """Write the aggregate summary alone, as JSON or CSV, same numbers."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out / "summary.json"
        path.write_text(json.dumps(summary.as_dict(), indent=2), encoding="utf-8")
        return path
    if fmt == "csv":
        path = out / "summary.csv"
        _write_summary_csv(path, summary)
        return path
    raise ParameterError(f"unknown report format {fmt!r}")


def _write_summary_csv(path, summary: SuiteSummary) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "passed", "failed", "out_of_domain", "min_margin", "argmin_witness"])
        for name in summary.counts:
            c = summary.counts[name]
            w.writerow([
                name, c["passed"], c["failed"], c["out_of_domain"],
                _fmt(summary.min_margin.get(name)), summary.argmin_witness.get(name, ""),
            ])
        w.writerow([])
        w.writerow(["constant", "value", "", "", "", ""])
        for key in sorted(summary.constants):
            w.writerow([key, _fmt(summary.constants[key]), "", "", "", ""])


def _write_reports_csv(path, reports_by_suite: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["suite", "name", "witness", "lhs", "rhs", "margin", "in_domain"])
        for suite, reports in reports_by_suite.items():
            for r in reports:
                w.writerow([suite, r.name, r.witness, _fmt(r.lhs), _fmt(r.rhs),
                            _fmt(r.margin), int(r.in_domain)])


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _write_plot_data(out: Path, reports_by_suite: dict) -> None:
    if "t2" in reports_by_suite:
        with open(out / "t2_scatter.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["witness", "H", "ratio"])
            for r in reports_by_suite["t2"]:
                if r.in_domain:
                    w.writerow([r.witness, _fmt(r.params.get("H")), _fmt(r.lhs)])
    if "small-entropy" in reports_by_suite:
        with open(out / "small_entropy_scatter.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["witness", "H", "shape", "fitted_C"])
            for r in reports_by_suite["small-entropy"]:
                if r.name == "small-entropy-sqrt-factor" and r.in_domain:
                    h_ent = r.params.get("H")
                    shape = 1.0 + math.sqrt(float(log_plus(1.0 / h_ent)))
                    w.writerow([r.witness, _fmt(h_ent), _fmt(shape), _fmt(r.lhs)])
    if "concentration" in reports_by_suite:
        with open(out / "concentration.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "mass", "bound", "margin"])
            for r in reports_by_suite["concentration"]:
                w.writerow([_fmt(r.params.get("r")), _fmt(r.lhs), _fmt(r.rhs), _fmt(r.margin)])


def render_figures(out: Path, reports_by_suite: dict) -> list[Path]:
    """Render diagnostic figures next to the delimited output."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    figdir = out / "figures"
    figdir.mkdir(parents=True, exist_ok=True)
    written = []

    if "t2" in reports_by_suite:
        pts = [(r.params["H"], r.lhs) for r in reports_by_suite["t2"] if r.in_domain]
        if pts:
            h, ratio = zip(*pts)
            fig, ax = plt.subplots(figsize=(6.0, 4.0))
            ax.semilogx(h, ratio, ".", ms=4, alpha=0.7)
            ax.axhline(1.0, color="crimson", lw=1.0, label="Gaussian constant 1")
            ax.set_xlabel("relative entropy H")
            ax.set_ylabel("W2^2 / (2H)")
            ax.set_title("Quadratic transport ratio over the family")
            ax.legend(frameon=False)
            fig.tight_layout()
            path = figdir / "t2_ratio.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            written.append(path)

    if "small-entropy" in reports_by_suite:
        pts = [
            (r.params["H"], r.lhs)
            for r in reports_by_suite["small-entropy"]
            if r.name == "small-entropy-sqrt-factor" and r.in_domain
        ]
        if pts:
            h, c = zip(*pts)
            shape = [1.0 + math.sqrt(float(log_plus(1.0 / v))) for v in h]
            fig, ax = plt.subplots(figsize=(6.0, 4.0))
            ax.semilogx(h, np.array(c) * np.array(shape), ".", ms=4, alpha=0.7,
                        label="W2^2 / H")
            ax.semilogx(h, shape, "-", lw=1.0, color="gray",
                        label="1 + sqrt(log+(1/H))")
            ax.set_xlabel("relative entropy H")
            ax.set_ylabel("growth against entropy")
            ax.set_title("Small-entropy transport growth")
            ax.legend(frameon=False)
            fig.tight_layout()
            path = figdir / "small_entropy.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            written.append(path)

    margin_pts = []
    for suite, reports in reports_by_suite.items():
        if suite in ASSERTING_SLACK:
            margin_pts.extend(r.margin for r in reports if r.in_domain and r.margin is not None)
    if margin_pts:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        vals = np.asarray(margin_pts)
        vals = np.log10(np.maximum(vals, 1e-16))
        ax.hist(vals, bins=40, color="steelblue")
        ax.set_xlabel("log10(margin)")
        ax.set_ylabel("count")
        ax.set_title("Margins of asserted inequalities")
        fig.tight_layout()
        path = figdir / "margins.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    if "concentration" in reports_by_suite:
        reps = reports_by_suite["concentration"]
        if reps:
            r_vals = [r.params["r"] for r in reps]
            fig, ax = plt.subplots(figsize=(6.0, 4.0))
            ax.semilogy(r_vals, [r.lhs for r in reps], "o-", label="enlargement mass")
            ax.semilogy(r_vals, [r.rhs for r in reps], "s--", label="Gaussian bound")
            ax.set_xlabel("enlargement radius r")
            ax.set_ylabel("measure")
            ax.set_title("Concentration profile")
            ax.legend(frameon=False)
            fig.tight_layout()
            path = figdir / "concentration.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            written.append(path)

    return written
