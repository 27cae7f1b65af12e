"""Named inequality checks on finite metric measure spaces.

Every check produces an :class:`InequalityReport` with the two sides of the
inequality, the margin rhs - lhs, the parameters used, and an in-domain flag.
Checks whose hypotheses fail report out-of-domain instead of failing.  Ratio
style checks (constant estimators) carry the fitted constant in ``lhs`` and
leave rhs / margin empty; their family suprema estimate constants the theory
only proves to exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError, ValidationError
from .entropy import bolley_villani_ratio, log_plus, relative_entropy, xlogx
from .space import Density, MetricMeasureSpace, nu_weights, validate_density
from .transport import solve_exact

E = math.e
E32 = math.exp(1.5)


@dataclass(frozen=True)
class InequalityReport:
    """lhs <= rhs with margin = rhs - lhs; margin >= -slack means pass."""

    name: str
    lhs: float | None
    rhs: float | None
    margin: float | None
    params: dict = field(default_factory=dict)
    witness: str = ""
    in_domain: bool = True

    def passed(self, slack: float) -> bool | None:
        """True/False for margin checks in domain; None when not applicable."""
        if not self.in_domain or self.margin is None:
            return None
        return self.margin >= -slack

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "params": dict(self.params),
            "witness": self.witness,
            "in_domain": self.in_domain,
        }


def _report(name, lhs, rhs, params, witness="", in_domain=True) -> InequalityReport:
    lhs = None if lhs is None else float(lhs)
    rhs = None if rhs is None else float(rhs)
    margin = None if (lhs is None or rhs is None) else rhs - lhs
    return InequalityReport(
        name=name, lhs=lhs, rhs=rhs, margin=margin,
        params=params, witness=witness, in_domain=in_domain,
    )


def truncate_density(space: MetricMeasureSpace, nu: Density, a: float) -> tuple[Density, float]:
    """Cut-off density nu_a = h 1_{h <= a} mu / nu(h <= a) and the kept mass.

    Errors when the truncation removes all mass.  When h <= a everywhere the
    density is returned unchanged (mass 1).
    """
    if not a > 0:
        raise ParameterError("truncation level must be positive")
    keep = nu.h <= a
    mass = float((nu.h * keep) @ space.mu)
    if mass <= 0.0:
        raise DomainError("truncation set nu(h <= a) has zero mass")
    if bool(keep.all()):
        return nu, 1.0
    return validate_density(space, nu.h * keep / mass), mass


def tail_entropy_check(space, nu: Density, a: float, witness: str = "") -> list[InequalityReport]:
    """Unconditional tail bounds for a > e.

    (1)  (1 - 1/log a) * int_{h>a} h log h dmu  <=  H
    (2)  nu(h > a)  <=  H / (log a - 1)
    """
    if not a > E:
        raise ParameterError("tail entropy bounds need a > e")
    h_ent = relative_entropy(space, nu)
    tail = nu.h > a
    tail_ent = float((xlogx(nu.h) * tail) @ space.mu)
    tail_mass = float((nu.h * tail) @ space.mu)
    la = math.log(a)
    params = {"a": a}
    return [
        _report("tail-entropy-1", (1.0 - 1.0 / la) * tail_ent, h_ent, params, witness),
        _report("tail-entropy-2", tail_mass, h_ent / (la - 1.0), params, witness),
    ]


def truncated_entropy_check(space, nu: Density, a: float, witness: str = "") -> InequalityReport:
    """Entropy of the cut-off density against the original for small entropy:

    H(nu_a, mu) <= (1 + 1/(2(log a - 3/2)) + 2/(log a - 1)) H(nu, mu)

    needs a > e^{3/2} and H <= 1/2; otherwise reported out of domain.
    """
    h_ent = relative_entropy(space, nu)
    params = {"a": a, "H": h_ent}
    if not a > E32:
        return _report("truncated-entropy", None, None, params, witness, in_domain=False)
    la = math.log(a)
    factor = 1.0 + 1.0 / (2.0 * (la - 1.5)) + 2.0 / (la - 1.0)
    if h_ent > 0.5:
        return _report("truncated-entropy", None, None, {**params, "factor": factor},
                       witness, in_domain=False)
    nu_a, _ = truncate_density(space, nu, a)
    lhs = relative_entropy(space, nu_a)
    return _report("truncated-entropy", lhs, factor * h_ent, {**params, "factor": factor}, witness)


def pnorm_deficit_check(space, nu: Density, p: float, witness: str = "") -> InequalityReport:
    """Deficit of the p/2 moment against entropy, for p in [1, 2):

    1 - (int h^{p/2} dmu)^{2/p}  <=  (2/p)(1 - p/2) H
    """
    p = float(p)
    if not (1.0 <= p < 2.0):
        raise ParameterError("p must lie in [1, 2)")
    h_ent = relative_entropy(space, nu)
    mp = float((nu.h ** (p / 2.0)) @ space.mu)
    lhs = 1.0 - mp ** (2.0 / p)
    rhs = (2.0 / p) * (1.0 - p / 2.0) * h_ent
    return _report("pnorm-deficit", lhs, rhs, {"p": p, "H": h_ent}, witness)


def quadratic_envelope(space: MetricMeasureSpace) -> np.ndarray:
    """q2(x) = 2 d^2(x, x0) + 2 int d^2(y, x0) dmu(y), the pointwise bound on
    any normalized dual potential for the quadratic cost."""
    d2 = space.d_to_base() ** 2
    return 2.0 * d2 + 2.0 * float(d2 @ space.mu)


def cutoff_decomposition_check(space, nu: Density, a: float, witness: str = "") -> InequalityReport:
    """Transport decomposition across the cut-off, exact W2 on both sides:

    W2^2(nu, mu) <= W2^2(nu_a, mu) + int q2 h 1_{h>a} dmu
    """
    if not a > 0:
        raise ParameterError("truncation level must be positive")
    nu_a, _ = truncate_density(space, nu, a)
    w2_full = solve_exact(space, nu, None, 2.0).cost
    w2_trunc = solve_exact(space, nu_a, None, 2.0).cost
    tail_term = float((quadratic_envelope(space) * nu.h * (nu.h > a)) @ space.mu)
    return _report(
        "cutoff-decomposition", w2_full, w2_trunc + tail_term,
        {"a": a, "tail_term": tail_term}, witness,
    )


def modified_t2_prefactor(alpha: float) -> float:
    """D(alpha) = 16 exp((1-alpha)/2 (1 - log(1-alpha))), D(1) = 16 by limit."""
    if not (0.0 <= alpha <= 1.0):
        raise ParameterError("alpha must lie in [0, 1]")
    if alpha == 1.0:
        return 16.0
    rem = 1.0 - alpha
    return 16.0 * math.exp(0.5 * rem * (1.0 - math.log(rem)))


def optimal_cost_exponent(alpha: float, big_k: float) -> float:
    """Optimizing exponent p = 2 - (1 - alpha)/log K of the moment bound."""
    if not (0.0 <= alpha <= 1.0):
        raise ParameterError("alpha must lie in [0, 1]")
    if not big_k > 1.0:
        raise ParameterError("K must exceed 1")
    return 2.0 - (1.0 - alpha) / math.log(big_k)


def modified_t2_check(space, nu: Density, alpha: float, c_alpha: float,
                      witness: str = "") -> InequalityReport:
    """Spectral-gap driven transport bound for bounded densities:

    W2(nu, mu) <= D(alpha) (log K)^{(1-alpha)/2} sqrt(C(alpha) H),  K = max h.

    The optimized form requires log K >= 1 - alpha (so the optimizing
    exponent stays in [1, 2)); smaller K reports out of domain, as does
    h identically 1.
    """
    if not c_alpha > 0:
        raise ParameterError("C(alpha) must be positive")
    big_k = float(nu.h.max())
    h_ent = relative_entropy(space, nu)
    params = {"alpha": alpha, "K": big_k, "C": c_alpha, "H": h_ent}
    if big_k <= 1.0 or h_ent <= 0.0:
        return _report("modified-t2", None, None, params, witness, in_domain=False)
    if math.log(big_k) < 1.0 - alpha:
        return _report("modified-t2", None, None, params, witness, in_domain=False)
    lhs = solve_exact(space, nu, None, 2.0).wp
    rhs = (
        modified_t2_prefactor(alpha)
        * math.log(big_k) ** (0.5 * (1.0 - alpha))
        * math.sqrt(c_alpha * h_ent)
    )
    return _report("modified-t2", lhs, rhs, params, witness)


def t2_ratio(space, nu: Density, p: float = 2.0) -> float:
    """W_p^2 / (2H); its family supremum lower-bounds the T_p constant."""
    h_ent = relative_entropy(space, nu)
    if h_ent <= 0.0:
        raise DomainError("T_p ratio undefined at zero entropy")
    wp = solve_exact(space, nu, None, p).wp
    return float(wp * wp / (2.0 * h_ent))


def estimate_tp_constant(space, densities, p: float = 2.0) -> float:
    """Supremum of W_p^2/(2H) over a family; monotone under extension."""
    best = 0.0
    for nu in densities:
        h_ent = relative_entropy(space, nu)
        if h_ent <= 0.0:
            continue
        best = max(best, t2_ratio(space, nu, p))
    return best


def truncation_cost_ratio(space, nu: Density, a: float,
                          witness: str = "") -> list[InequalityReport]:
    """Transport cost of the truncation against entropy.

    The first report carries the fitted constant W2^2(nu_a, nu) / H (family
    suprema estimate the constant in the truncation criterion).  The second
    checks the mass-transport comparison
    W2^2(nu, nu_a) <= 2 int d^2(x, x0) d|nu - nu_a| with the standard
    constant fixed at 2.
    """
    h_ent = relative_entropy(space, nu)
    if h_ent <= 0.0:
        raise DomainError("ratio undefined at zero entropy")
    params = {"a": a, "H": h_ent}
    in_domain = a > E32 and h_ent <= 0.5
    nu_a, kept = truncate_density(space, nu, a)
    w2sq = solve_exact(space, nu, nu_weights(space, nu_a), 2.0).cost
    ratio = w2sq / h_ent
    tv_term = 2.0 * float(
        (space.d_to_base() ** 2) @ np.abs(nu_weights(space, nu) - nu_weights(space, nu_a))
    )
    return [
        _report("truncation-cost-ratio", ratio, None,
                {**params, "kept_mass": kept}, witness, in_domain),
        _report("truncation-cost-villani", w2sq, tv_term,
                {**params, "constant": 2.0}, witness),
    ]


def tail_second_moment_ratio(space, nu: Density, a: float,
                             witness: str = "") -> InequalityReport:
    """Fitted constant of int d^2(x, x0) 1_{h>a} dnu <= D(a) H."""
    h_ent = relative_entropy(space, nu)
    if h_ent <= 0.0:
        raise DomainError("ratio undefined at zero entropy")
    in_domain = a > E32 and h_ent <= 0.5
    tail = float(((space.d_to_base() ** 2) * nu.h * (nu.h > a)) @ space.mu)
    return _report("tail-second-moment-ratio", tail / h_ent, None,
                   {"a": a, "H": h_ent, "tail_moment": tail}, witness, in_domain)


def cutoff_mass_check(space, nu: Density, q: float, witness: str = "") -> InequalityReport:
    """Mass above the entropic cut-off K = H^{-q}:

    nu(h > K) <= H / (q log(1/H)).

    In domain when H in (0, 1/2] and K > e (i.e. q log(1/H) > 1), the regime
    where the cut-off level is meaningful.
    """
    if not q > 0:
        raise ParameterError("q must be positive")
    h_ent = relative_entropy(space, nu)
    params = {"q": q, "H": h_ent}
    if not (0.0 < h_ent <= 0.5):
        return _report("cutoff-mass", None, None, params, witness, in_domain=False)
    big_k = h_ent ** (-q)
    params["K"] = big_k
    if big_k <= E:
        return _report("cutoff-mass", None, None, params, witness, in_domain=False)
    mass = float((nu.h * (nu.h > big_k)) @ space.mu)
    bound = h_ent / (q * math.log(1.0 / h_ent))
    return _report("cutoff-mass", mass, bound, params, witness)


def small_entropy_check(space, nu: Density, a: float, q: float,
                        witness: str = "") -> list[InequalityReport]:
    """Small-entropy transport bounds; fitted constants per density.

    Branch 1 (needs a > e^{3/2}): smallest c with
        W2^2(nu, mu) <= W2^2(nu_a, mu) + c H log(1/H).
    Branch 2: smallest C with
        W2^2(nu, mu) <= C (1 + sqrt(log+(1/H))) H.
    Both need H in (0, 1/2]; the entropic cut-off mass bound is attached as a
    sub-report.  Constants are outputs, never asserted.
    """
    h_ent = relative_entropy(space, nu)
    params = {"a": a, "q": q, "H": h_ent}
    reports = []
    in_domain = 0.0 < h_ent <= 0.5
    if not in_domain:
        reports.append(_report("small-entropy-log-factor", None, None, params, witness, False))
        reports.append(_report("small-entropy-sqrt-factor", None, None, params, witness, False))
        reports.append(_report("cutoff-mass", None, None, params, witness, False))
        return reports

    w2_full = solve_exact(space, nu, None, 2.0).cost
    if a > E32:
        nu_a, _ = truncate_density(space, nu, a)
        w2_trunc = solve_exact(space, nu_a, None, 2.0).cost
        denom = h_ent * math.log(1.0 / h_ent)
        fitted_c = max(0.0, (w2_full - w2_trunc) / denom)
        reports.append(_report("small-entropy-log-factor", fitted_c, None,
                               {**params, "w2sq": w2_full, "w2sq_trunc": w2_trunc},
                               witness))
    else:
        reports.append(_report("small-entropy-log-factor", None, None, params, witness, False))
    shape = (1.0 + math.sqrt(float(log_plus(1.0 / h_ent)))) * h_ent
    reports.append(_report("small-entropy-sqrt-factor", w2_full / shape, None,
                           {**params, "w2sq": w2_full}, witness))
    reports.append(cutoff_mass_check(space, nu, q, witness))
    return reports


def bolley_villani_ratio_report(space, nu: Density, p: float = 2.0,
                                witness: str = "") -> InequalityReport:
    """W_p^p / (H + sqrt(H)) as a fitted-constant report; out of domain at H=0."""
    h_ent = relative_entropy(space, nu)
    if h_ent <= 0.0:
        return _report("bolley-villani-ratio", None, None,
                       {"p": p, "H": h_ent}, witness, in_domain=False)
    return _report("bolley-villani-ratio", bolley_villani_ratio(space, nu, p), None,
                   {"p": p, "H": h_ent}, witness)


def concentration_check(space, subset, r: float, c: float) -> InequalityReport:
    """Gaussian-type enlargement bound derived from a T-style inequality:

    mu{d(., A) >= r} <= exp(-(1/2C) (r - sqrt(2C log(1/mu(A))))^2)

    needs mu(A) >= 1/2.  The bound branch is only meaningful for
    r >= sqrt(2C log(1/mu(A))); smaller r is reported with the same formula
    but flagged out of domain.
    """
    if not c > 0:
        raise ParameterError("C must be positive")
    if not r >= 0:
        raise ParameterError("r must be nonnegative")
    idx = np.asarray(subset, dtype=int)
    if idx.size == 0 or idx.min() < 0 or idx.max() >= space.n:
        raise ValidationError("subset indices out of range")
    mass_a = float(space.mu[idx].sum())
    if mass_a < 0.5:
        raise DomainError(f"mu(A) = {mass_a!r} < 1/2")
    d_to_a = space.dist[:, idx].min(axis=1)
    far_mass = float(space.mu[d_to_a >= r].sum())
    threshold = math.sqrt(2.0 * c * math.log(1.0 / mass_a)) if mass_a < 1.0 else 0.0
    bound = math.exp(-((r - threshold) ** 2) / (2.0 * c))
    return _report(
        "concentration", far_mass, bound,
        {"r": r, "C": c, "mu_A": mass_a, "threshold": threshold},
        in_domain=r >= threshold,
    )
