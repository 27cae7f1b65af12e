"""Relative entropy, the Young pair tau / tau*, Orlicz gauge norms,
exponential integrals, and the entropy-driven transport bounds.

The Young function used throughout is tau(u) = u log+(u) with Legendre
conjugate tau*(v) = v for v < 1 and exp(v - 1) for v >= 1.  Gauge norms
N_psi(g) = inf{lambda > 0 : int psi(g / lambda) <= 1} are computed by
bracketing plus bisection; the returned value is the upper bisection
endpoint, so Hoelder-Orlicz products never underestimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .space import Density, MetricMeasureSpace, nu_weights
from .transport import cost_matrix, solve_exact

GAUGE_REL_TOL = 1e-10
_EXP_MAX = 700.0  # exp argument guard


def log_plus(u) -> np.ndarray:
    """Elementwise max(log u, 0) with the convention log+(0) = 0."""
    u = np.asarray(u, dtype=float)
    return np.log(np.maximum(u, 1.0))


def xlogx(u) -> np.ndarray:
    """Elementwise u log u with 0 log 0 = 0."""
    u = np.asarray(u, dtype=float)
    return np.where(u > 0.0, u * np.log(np.where(u > 0.0, u, 1.0)), 0.0)


def relative_entropy(space: MetricMeasureSpace, nu: Density) -> float:
    """Kullback-Leibler divergence H(nu, mu) = sum mu h log h.

    Densities are Radon-Nikodym vectors by construction, so the divergence is
    always finite here; the infinite branch of the general definition cannot
    be reached.  H >= 0, with equality exactly when h = 1 on the support of mu.
    """
    return float(xlogx(nu.h) @ space.mu)


def log_plus_moment(space: MetricMeasureSpace, nu: Density) -> float:
    """The positive-part entropy sum mu h log+(h); at most H + 1/e."""
    return float((nu.h * log_plus(nu.h)) @ space.mu)


@dataclass(frozen=True)
class YoungFunction:
    """Convex nondecreasing function on [0, inf) vanishing at 0."""

    kind: str  # "tau" | "tau_star"

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "tau":
            return u * log_plus(u)
        out = np.where(u < 1.0, u, np.exp(np.minimum(u - 1.0, _EXP_MAX)))
        return np.where(np.minimum(u - 1.0, _EXP_MAX) < _EXP_MAX, out, np.inf)


TAU = YoungFunction("tau")
TAU_STAR = YoungFunction("tau_star")


@dataclass(frozen=True)
class OrliczNorm:
    """Gauge norm value together with the Young function and reference tag."""

    value: float
    psi: YoungFunction
    reference: str = "mu"


def _psi_integral(psi: YoungFunction, g: np.ndarray, weights: np.ndarray, lam: float) -> float:
    with np.errstate(over="ignore"):
        vals = psi(g / lam)
    if np.any(np.isinf(vals[weights > 0])):
        return math.inf
    return float(vals @ weights)


def gauge_norm(g, psi: YoungFunction, weights, reference: str = "mu") -> OrliczNorm:
    """N_psi(g) = inf{lambda > 0 : sum_i w_i psi(g_i / lambda) <= 1}.

    ``weights`` is the reference probability vector (mu, or the flattened
    product mu (x) mu).  The bracket starts at max(1, int psi(g)), which is
    always an upper bound for the norm by convexity, then bisects to relative
    tolerance 1e-10.  Zero exactly when g vanishes on the support.
    """
    g = np.asarray(g, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    if g.shape != weights.shape:
        raise ValidationError("g and reference weights differ in length")
    if np.any(g < 0):
        raise ValidationError("gauge norms are defined for nonnegative g")
    if not np.all(np.isfinite(g)):
        raise ValidationError("g must be finite")
    if float((g * (weights > 0)).max(initial=0.0)) == 0.0:
        return OrliczNorm(0.0, psi, reference)
    hi = max(1.0, _psi_integral(psi, g, weights, 1.0))
    if not math.isfinite(hi):
        hi = 1.0
        while not math.isfinite(_psi_integral(psi, g, weights, hi)) or _psi_integral(
            psi, g, weights, hi
        ) > 1.0:
            hi *= 2.0
    lo = hi
    while _psi_integral(psi, g, weights, lo) <= 1.0:
        lo *= 0.5
        if lo < hi * 2.0 ** -200:
            return OrliczNorm(0.0, psi, reference)
    # invariant: integral(lo) > 1 >= integral(hi)
    while hi - lo > GAUGE_REL_TOL * hi:
        mid = 0.5 * (lo + hi)
        if _psi_integral(psi, g, weights, mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return OrliczNorm(float(hi), psi, reference)


def product_weights(space: MetricMeasureSpace) -> np.ndarray:
    """Flattened weights of mu (x) mu, matching cost matrices raveled."""
    return np.outer(space.mu, space.mu).ravel()


def distance_gauge_norm(space: MetricMeasureSpace, p: float, psi: YoungFunction = TAU_STAR) -> OrliczNorm:
    """Gauge norm of d^p as a function on the product space (mu (x) mu)."""
    return gauge_norm(cost_matrix(space, p).ravel(), psi, product_weights(space), "mu(x)mu")


def holder_orlicz_margin(f, g, weights) -> float:
    """Slack of the Hoelder-Orlicz inequality int f g <= 2 N_tau(f) N_tau*(g)."""
    f = np.asarray(f, dtype=float).ravel()
    g = np.asarray(g, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    if np.any(f < 0) or np.any(g < 0):
        raise ValidationError("Hoelder-Orlicz check expects nonnegative functions")
    nf = gauge_norm(f, TAU, weights).value
    ng = gauge_norm(g, TAU_STAR, weights).value
    return float(2.0 * nf * ng - (f * g) @ weights)


def exp_integral(space: MetricMeasureSpace, eps: float, p: float = 2.0) -> float:
    """Exponential moment sum mu exp(eps d(x, x0)^p), always finite here.

    Raises when the largest exponent would overflow; reduce eps in that case.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if not (1.0 <= float(p) <= 2.0):
        raise ValidationError("p must lie in [1, 2]")
    expo = eps * space.d_to_base() ** p
    if float(expo.max()) > _EXP_MAX:
        raise ValidationError(
            f"exp integral overflows at eps={eps!r}; use eps below "
            f"{_EXP_MAX / float((space.d_to_base() ** p).max()):.3e}"
        )
    return float(np.exp(expo) @ space.mu)


@dataclass(frozen=True)
class LargeEntropyBound:
    """Outcome of the large-entropy transport bound W_p^p <= 2(1+1/e) N H."""

    bound: float
    holds: bool
    in_domain: bool
    entropy: float
    orlicz_value: float
    cost: float


def large_entropy_bound(space: MetricMeasureSpace, nu: Density, p: float = 2.0) -> LargeEntropyBound:
    """Check W_p^p(nu, mu) <= 2 (1 + 1/e) N_tau*(d^p) H(nu, mu).

    The guarantee branch needs H >= 1; below that the bound is still computed
    but flagged out of domain.
    """
    h_ent = relative_entropy(space, nu)
    norm = distance_gauge_norm(space, p).value
    bound = 2.0 * (1.0 + 1.0 / math.e) * norm * h_ent
    cost = solve_exact(space, nu, None, p).cost
    holds = cost <= bound + 1e-9 * max(1.0, bound)
    return LargeEntropyBound(
        bound=float(bound),
        holds=bool(holds),
        in_domain=h_ent >= 1.0,
        entropy=h_ent,
        orlicz_value=norm,
        cost=cost,
    )


def bolley_villani_ratio(space: MetricMeasureSpace, nu: Density, p: float = 2.0) -> float:
    """W_p^p / (H + sqrt(H)); its family supremum estimates the constant in
    the Bolley-Villani refinement of the exponential-integrability bound."""
    h_ent = relative_entropy(space, nu)
    if h_ent <= 0.0:
        raise DomainError("ratio undefined at zero entropy")
    cost = solve_exact(space, nu, None, p).cost
    return float(cost / (h_ent + math.sqrt(h_ent)))


def young_margin(u: float, v: float) -> float:
    """Slack of Young's inequality u v <= tau(u) + tau*(v) for scalars."""
    return float(TAU(np.array(u)) + TAU_STAR(np.array(v)) - u * v)
