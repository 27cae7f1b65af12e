"""Check suites: named batteries of inequality checks over density families.

Suites in ``ASSERTING_SLACK`` verify inequalities that hold unconditionally at
the measure level (up to arithmetic slack); a negative margin there is a real
failure and drives the process exit code.  All other suites are diagnostics:
they report margins and fitted constants but can never fail a run, because
their continuum statements carry constants the discretization does not
quantify.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, ParameterError
from .entropy import (
    TAU,
    TAU_STAR,
    gauge_norm,
    holder_orlicz_margin,
    large_entropy_bound,
    log_plus_moment,
    relative_entropy,
    young_margin,
)
from .inequalities import (
    InequalityReport,
    bolley_villani_ratio_report,
    concentration_check,
    cutoff_decomposition_check,
    cutoff_mass_check,
    modified_t2_check,
    pnorm_deficit_check,
    small_entropy_check,
    t2_ratio,
    tail_entropy_check,
    tail_second_moment_ratio,
    truncated_entropy_check,
    truncation_cost_ratio,
)
from .space import Density, MetricMeasureSpace
from .spectral import grid_gradient_form, poincare_constant

P_GRID = (1.0, 1.25, 1.5, 1.75, 1.875, 1.9375, 1.99)

# suite -> slack; margins below -slack count as failures
ASSERTING_SLACK = {
    "tail-entropy": 1e-12,
    "truncated-entropy": 1e-12,
    "pnorm-deficit": 1e-12,
    "cutoff-decomposition": 1e-9,
    "cutoff-mass": 1e-12,
    "young": 1e-12,
    "holder-orlicz": 1e-10,
    "gauge-bound": 1e-10,
    "entropy-surplus": 1e-12,
    "large-entropy": 1e-9,
}

DIAGNOSTIC_SUITES = (
    "t2",
    "modified-t2",
    "small-entropy",
    "truncation-cost",
    "tail-second-moment",
    "bolley-villani",
    "concentration",
)

SUITE_NAMES = tuple(ASSERTING_SLACK) + DIAGNOSTIC_SUITES


def slack_for(report_name: str, suite: str) -> float:
    return ASSERTING_SLACK.get(suite, math.inf)


def run_suite_checks(
    suite: str,
    space: MetricMeasureSpace,
    members: list[tuple[str, Density]],
    params: dict,
) -> list[InequalityReport]:
    """Dispatch one suite over the family; deterministic report order."""
    if suite not in SUITE_NAMES:
        raise ParameterError(f"unknown suite {suite!r}")
    handler = _HANDLERS[suite]
    return handler(space, members, params)


def _per_member(fn):
    def run(space, members, params):
        out = []
        for wid, nu in members:
            result = fn(space, nu, params, wid)
            if isinstance(result, InequalityReport):
                out.append(result)
            else:
                out.extend(result)
        return out

    return run


def _a(params) -> float:
    return float(params.get("a", math.e ** 2))


def _q(params) -> float:
    return float(params.get("q", 0.5))


def _tail_entropy(space, nu, params, wid):
    return tail_entropy_check(space, nu, _a(params), wid)


def _truncated_entropy(space, nu, params, wid):
    return truncated_entropy_check(space, nu, _a(params), wid)


def _pnorm_deficit(space, members, params):
    reports = []
    fixed = params.get("p_deficit")
    for k, (wid, nu) in enumerate(members):
        p = float(fixed) if fixed is not None else P_GRID[k % len(P_GRID)]
        reports.append(pnorm_deficit_check(space, nu, p, wid))
    return reports


def _cutoff_decomposition(space, nu, params, wid):
    return cutoff_decomposition_check(space, nu, _a(params), wid)


def _cutoff_mass(space, nu, params, wid):
    return cutoff_mass_check(space, nu, _q(params), wid)


def _truncation_cost(space, nu, params, wid):
    try:
        return truncation_cost_ratio(space, nu, _a(params), wid)
    except DomainError:
        return []


def _tail_second_moment(space, nu, params, wid):
    try:
        return tail_second_moment_ratio(space, nu, _a(params), wid)
    except DomainError:
        return []


def _small_entropy(space, nu, params, wid):
    return small_entropy_check(space, nu, _a(params), _q(params), wid)


def _t2(space, nu, params, wid):
    p = float(params.get("p", 2.0))
    h_ent = relative_entropy(space, nu)
    if h_ent <= 0.0:
        return InequalityReport(
            name="t2-ratio", lhs=None, rhs=None, margin=None,
            params={"p": p, "H": h_ent}, witness=wid, in_domain=False,
        )
    return InequalityReport(
        name="t2-ratio", lhs=t2_ratio(space, nu, p), rhs=None, margin=None,
        params={"p": p, "H": h_ent}, witness=wid,
    )


def _modified_t2(space, members, params):
    c_alpha = params.get("C_alpha")
    if c_alpha is None:
        c_alpha = poincare_constant(grid_gradient_form(space)).value
    alpha = float(params.get("alpha", 0.0))
    return [modified_t2_check(space, nu, alpha, float(c_alpha), wid) for wid, nu in members]


def _large_entropy(space, members, params):
    p = float(params.get("p", 2.0))
    out = []
    for wid, nu in members:
        res = large_entropy_bound(space, nu, p)
        out.append(
            InequalityReport(
                name="large-entropy",
                lhs=res.cost,
                rhs=res.bound,
                margin=res.bound - res.cost,
                params={"p": p, "H": res.entropy, "orlicz": res.orlicz_value},
                witness=wid,
                in_domain=res.in_domain,
            )
        )
    return out


def _bolley_villani(space, nu, params, wid):
    p = float(params.get("p", 2.0))
    return bolley_villani_ratio_report(space, nu, p, wid)


def _young(space, members, params):
    cases = int(params.get("cases", 200))
    rng = np.random.default_rng(int(params.get("seed", 0)) + 101)
    uv = rng.uniform(0.0, 10.0, size=(cases, 2))
    uv[0] = (math.e, 2.0)  # the exact equality point
    out = []
    for i, (u, v) in enumerate(uv):
        out.append(
            InequalityReport(
                name="young", lhs=float(u * v),
                rhs=float(u * v + young_margin(u, v)),
                margin=float(young_margin(u, v)),
                params={"u": float(u), "v": float(v)}, witness=f"case-{i:04d}",
            )
        )
    return out


def _holder_orlicz(space, members, params):
    cases = int(params.get("cases", 200))
    rng = np.random.default_rng(int(params.get("seed", 0)) + 202)
    out = []
    for i in range(cases):
        scale_f = math.exp(rng.normal(0.0, 1.0))
        scale_g = math.exp(rng.normal(0.0, 1.0))
        f = np.abs(rng.standard_normal(space.n)) * scale_f
        g = np.abs(rng.standard_normal(space.n)) * scale_g
        margin = holder_orlicz_margin(f, g, space.mu)
        product = float((f * g) @ space.mu)
        out.append(
            InequalityReport(
                name="holder-orlicz", lhs=product, rhs=product + margin,
                margin=margin, params={}, witness=f"case-{i:04d}",
            )
        )
    return out


def _gauge_bound(space, members, params):
    cases = int(params.get("cases", 200))
    rng = np.random.default_rng(int(params.get("seed", 0)) + 303)
    out = []
    for i in range(cases):
        g = np.abs(rng.standard_normal(space.n)) * math.exp(rng.normal(0.0, 1.5))
        for psi in (TAU, TAU_STAR):
            norm = gauge_norm(g, psi, space.mu).value
            with np.errstate(over="ignore"):
                integral = float(np.minimum(psi(g), 1e300) @ space.mu)
            bound = max(1.0, integral)
            out.append(
                InequalityReport(
                    name="gauge-bound", lhs=norm, rhs=bound, margin=bound - norm,
                    params={"psi": psi.kind}, witness=f"case-{i:04d}",
                )
            )
    return out


def _entropy_surplus(space, nu, params, wid):
    h_ent = relative_entropy(space, nu)
    lhs = log_plus_moment(space, nu)
    rhs = h_ent + 1.0 / math.e
    return InequalityReport(
        name="entropy-surplus", lhs=lhs, rhs=rhs, margin=rhs - lhs,
        params={"H": h_ent}, witness=wid,
    )


def left_half_indices(space: MetricMeasureSpace) -> np.ndarray:
    """Default concentration set: left half of a line, else greedy heavy atoms."""
    if space.is_line:
        med = float(np.median(space.labels))
        return np.flatnonzero(space.labels <= med)
    order = np.argsort(-space.mu, kind="stable")
    cum = np.cumsum(space.mu[order])
    k = int(np.searchsorted(cum, 0.5 - 1e-15)) + 1
    return np.sort(order[:k])


def _concentration(space, members, params):
    c = float(params.get("C", 1.05))
    r_values = params.get("r_values", (1.0, 1.5, 2.0, 2.5, 3.0))
    subset = params.get("subset")
    idx = np.asarray(subset, dtype=int) if subset is not None else left_half_indices(space)
    return [concentration_check(space, idx, float(r), c) for r in r_values]


_HANDLERS = {
    "tail-entropy": _per_member(_tail_entropy),
    "truncated-entropy": _per_member(_truncated_entropy),
    "pnorm-deficit": _pnorm_deficit,
    "cutoff-decomposition": _per_member(_cutoff_decomposition),
    "cutoff-mass": _per_member(_cutoff_mass),
    "truncation-cost": _per_member(_truncation_cost),
    "tail-second-moment": _per_member(_tail_second_moment),
    "small-entropy": _per_member(_small_entropy),
    "t2": _per_member(_t2),
    "modified-t2": _modified_t2,
    "large-entropy": _large_entropy,
    "bolley-villani": _per_member(_bolley_villani),
    "young": _young,
    "holder-orlicz": _holder_orlicz,
    "gauge-bound": _gauge_bound,
    "entropy-surplus": _per_member(_entropy_surplus),
    "concentration": _concentration,
}
