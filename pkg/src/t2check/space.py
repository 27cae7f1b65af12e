"""Finite metric measure spaces, densities on them, and seeded density families.

A space is a finite point set carrying a symmetric distance matrix that
satisfies the triangle inequality, a reference probability vector ``mu`` and a
distinguished base point ``x0``.  Grid spaces discretize a one dimensional
Boltzmann-type weight exp(-V) on an equally spaced grid; they keep their node
coordinates, which unlocks fast monotone-coupling transport.

Densities are Radon-Nikodym vectors h with sum(h * mu) = 1, so nu = h mu is
always absolutely continuous with respect to mu by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

TRIANGLE_TOL = 1e-12
MASS_TOL = 1e-12
DENSITY_MASS_TOL = 1e-9

FAMILY_KINDS = ("exponential-tilt", "truncation", "indicator-mixture", "far-spike")


def _finite_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class MetricMeasureSpace:
    """Finite metric space with reference probability weights and a base point.

    ``labels`` holds per-point coordinates for grid-built spaces and is None
    for spaces given by a raw distance matrix.  Instances are immutable after
    construction (arrays are marked read-only) and safe to share across
    workers.
    """

    dist: np.ndarray
    mu: np.ndarray
    x0: int = 0
    labels: np.ndarray | None = None

    def __post_init__(self):
        dist = _finite_array(self.dist, "dist")
        mu = _finite_array(self.mu, "mu")
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise ValidationError("dist must be a square matrix")
        n = dist.shape[0]
        if n < 1:
            raise ValidationError("space needs at least one point")
        if mu.shape != (n,):
            raise ValidationError("mu length does not match dist")
        if np.any(dist < 0):
            raise ValidationError("dist has negative entries")
        if np.max(np.abs(np.diagonal(dist))) > TRIANGLE_TOL:
            raise ValidationError("dist diagonal must be zero")
        if np.max(np.abs(dist - dist.T)) > TRIANGLE_TOL:
            raise ValidationError("dist must be symmetric")
        _check_triangle(dist)
        if np.any(mu < 0):
            raise ValidationError("mu has negative entries")
        total = float(mu.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValidationError(f"mu must sum to 1 (got {total!r})")
        if not (0 <= int(self.x0) < n):
            raise ValidationError("x0 out of range")
        labels = self.labels
        if labels is not None:
            labels = _finite_array(labels, "labels")
            if labels.shape != (n,):
                raise ValidationError("labels length does not match dist")
            gap = np.abs(np.abs(labels[:, None] - labels[None, :]) - dist)
            if gap.max() > TRIANGLE_TOL * max(1.0, float(dist.max())):
                raise ValidationError("labels are inconsistent with dist")
            labels = labels.copy()
            labels.setflags(write=False)

        dist = dist.copy()
        mu = mu / total
        dist.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "x0", int(self.x0))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def is_line(self) -> bool:
        """True when the space is isometric to points on the real line."""
        return self.labels is not None

    def d_to_base(self) -> np.ndarray:
        """Distance of every point to the base point x0."""
        return self.dist[:, self.x0]


def _check_triangle(dist: np.ndarray) -> None:
    n = dist.shape[0]
    tol = TRIANGLE_TOL * max(1.0, float(dist.max()))
    for k in range(n):
        slack = dist[:, k][:, None] + dist[k, :][None, :] - dist
        if slack.min() < -tol:
            i, j = np.unravel_index(np.argmin(slack), slack.shape)
            raise ValidationError(
                f"triangle inequality violated on triple ({i},{k},{j})"
            )


@dataclass(frozen=True)
class Density:
    """Radon-Nikodym vector h of a probability measure nu = h mu.

    Construct through :func:`validate_density`; it enforces nonnegativity and
    unit mass against a concrete space.
    """

    h: np.ndarray

    def __post_init__(self):
        h = _finite_array(self.h, "h")
        if h.ndim != 1:
            raise ValidationError("h must be a vector")
        if np.any(h < 0):
            raise ValidationError("h has negative entries")
        h = h.copy()
        h.setflags(write=False)
        object.__setattr__(self, "h", h)


def validate_density(space: MetricMeasureSpace, h) -> Density:
    """Check h against the space and return an exactly normalized Density.

    Rejects negative entries and masses off by more than 1e-9; smaller drift
    is renormalized away so downstream identities hold to machine precision.
    """
    h = _finite_array(h, "h")
    if h.shape != (space.n,):
        raise ValidationError("density length does not match space")
    if np.any(h < 0):
        raise ValidationError("density has negative entries")
    mass = float(h @ space.mu)
    if abs(mass - 1.0) > DENSITY_MASS_TOL:
        raise ValidationError(f"density mass is {mass!r}, expected 1")
    return Density(h / mass)


def nu_weights(space: MetricMeasureSpace, nu: Density) -> np.ndarray:
    """Measure weights of nu = h mu as a plain probability vector."""
    return nu.h * space.mu


def build_grid_space(lo: float, hi: float, n: int, potential) -> MetricMeasureSpace:
    """Equally spaced grid on [lo, hi] with weights proportional to exp(-V).

    ``potential`` gives the value of V at each of the n nodes.  The base point
    is the mu-median node, which keeps exponential moments around x0 small.
    """
    if n < 2:
        raise ValidationError("grid needs at least two nodes")
    if not hi > lo:
        raise ValidationError("grid requires hi > lo")
    v = _finite_array(potential, "potential")
    if v.shape != (n,):
        raise ValidationError("potential length does not match n")
    x = np.linspace(float(lo), float(hi), n)
    w = np.exp(-(v - v.min()))
    mu = w / w.sum()
    dist = np.abs(x[:, None] - x[None, :])
    x0 = int(np.searchsorted(np.cumsum(mu), 0.5 - 1e-15))
    return MetricMeasureSpace(dist=dist, mu=mu, x0=x0, labels=x)


def gaussian_grid(lo: float = -6.0, hi: float = 6.0, n: int = 241) -> MetricMeasureSpace:
    """Reference discretization of the standard Gaussian weight on [lo, hi]."""
    x = np.linspace(float(lo), float(hi), n)
    return build_grid_space(lo, hi, n, 0.5 * x * x)


def grid_space_with_outposts(lo, hi, n, potential, outposts) -> MetricMeasureSpace:
    """Grid space extended by remote low-mass nodes ("outposts").

    ``outposts`` is a sequence of (coordinate, mass) pairs outside or inside
    [lo, hi]; their exact masses are carved out of the bulk weight.  Remote
    outposts give a bounded grid the far-tail structure that small-entropy
    transport bounds are sensitive to.
    """
    base = build_grid_space(lo, hi, n, potential)
    coords = list(base.labels)
    masses = list(base.mu)
    extra_mass = 0.0
    for pos, mass in outposts:
        pos, mass = float(pos), float(mass)
        if not (0.0 < mass < 1.0):
            raise ValidationError("outpost mass must lie in (0, 1)")
        extra_mass += mass
        coords.append(pos)
        masses.append(mass)
    if extra_mass >= 1.0:
        raise ValidationError("outpost masses must sum below 1")
    coords = np.asarray(coords)
    masses = np.asarray(masses)
    masses[: base.n] *= 1.0 - extra_mass
    order = np.argsort(coords, kind="stable")
    coords = coords[order]
    mu = masses[order]
    dist = np.abs(coords[:, None] - coords[None, :])
    x0 = int(np.searchsorted(np.cumsum(mu), 0.5 - 1e-15))
    return MetricMeasureSpace(dist=dist, mu=mu, x0=x0, labels=coords)


@dataclass(frozen=True)
class DensityFamily:
    """Seeded recipe for a reproducible population of test densities.

    kind selects the generator:

    - ``exponential-tilt``: h proportional to exp(s * g) where g is either a
      signed distance profile d(., anchor) or a Gaussian random field, with
      tilt strengths s swept geometrically over [tilt_lo, tilt_hi].  The last
      four members anchor the strongest tilts at the extreme points, so on a
      line the family always contains near-translation tilts.
    - ``truncation``: tilt members capped at a level from ``cut_levels``
      (water-filling renormalization keeps h below the cap exactly).
    - ``indicator-mixture``: convex mixtures of the flat density with a
      conditional measure on a random subset.
    - ``far-spike``: mass reweighted onto the two lightest atoms, with the
      spike weight swept geometrically over [tilt_lo, tilt_hi] (here the tilt
      bounds act as weights and must stay below 1).  These densities probe
      small-entropy transport against remote low-mass sites.

    Regeneration from the same seed is bit-for-bit identical.
    """

    seed: int
    kind: str
    size: int
    tilt_lo: float = 1e-3
    tilt_hi: float = 2.0
    cut_levels: tuple[float, ...] = (3.0, 7.38905609893065, 20.0)

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValidationError(f"unknown family kind {self.kind!r}")
        if self.size < 1:
            raise ValidationError("family size must be positive")
        if not (0 < self.tilt_lo <= self.tilt_hi):
            raise ValidationError("need 0 < tilt_lo <= tilt_hi")
        if self.kind == "truncation" and any(c <= 1.0 for c in self.cut_levels):
            raise ValidationError("truncation cut levels must exceed 1")
        if self.kind == "far-spike" and not self.tilt_hi < 1.0:
            raise ValidationError("far-spike weights must stay below 1")
        object.__setattr__(self, "cut_levels", tuple(float(c) for c in self.cut_levels))


def sample_family(space: MetricMeasureSpace, spec: DensityFamily) -> list[Density]:
    """Generate the densities described by ``spec`` on ``space``.

    Deterministic: one RNG stream seeded by spec.seed, a fixed number of draws
    per member, so identical specs reproduce identical vectors.
    """
    rng = np.random.default_rng(spec.seed)
    n = space.n
    scales = np.geomspace(spec.tilt_lo, spec.tilt_hi, spec.size) if spec.size > 1 \
        else np.array([spec.tilt_hi])
    support = np.flatnonzero(space.mu > 0)
    lightest = support[np.argsort(space.mu[support], kind="stable")][: min(2, len(support))]
    out: list[Density] = []
    for k in range(spec.size):
        if spec.kind in ("exponential-tilt", "truncation"):
            h = _tilt_member(space, rng, k, spec, scales[k])
            if spec.kind == "truncation":
                cap = spec.cut_levels[k % len(spec.cut_levels)]
                h = _cap_density(space.mu, h, cap)
        elif spec.kind == "far-spike":
            h = _spike_member(space, scales[k], int(lightest[k % len(lightest)]))
        else:
            h = _mixture_member(space, rng, n)
        out.append(validate_density(space, h))
    return out


def _tilt_member(space, rng, k, spec, scale) -> np.ndarray:
    n = space.n
    anchor = int(rng.integers(0, n))
    sign = float(rng.choice((-1.0, 1.0)))
    use_field = bool(rng.random() < 0.4)
    field = rng.standard_normal(n)
    if spec.size >= 8 and k >= spec.size - 4:
        # pin the strongest tilts to signed distance profiles from the extreme
        # points; on a grid these are near-translations of the base measure
        anchor = 0 if (spec.size - k) % 2 == 0 else n - 1
        sign = 1.0
        use_field = False
    g = field if use_field else sign * space.dist[:, anchor]
    t = scale * (g - g.max())
    w = np.exp(t)
    return w / (w @ space.mu)


def _spike_member(space, weight, idx) -> np.ndarray:
    h = np.full(space.n, 1.0 - weight)
    h[idx] += weight / space.mu[idx]
    return h


def _mixture_member(space, rng, n) -> np.ndarray:
    m = int(rng.integers(1, n)) if n > 1 else 1
    idx = rng.choice(n, size=m, replace=False)
    w = float(rng.uniform(0.05, 0.95))
    mass = float(space.mu[idx].sum())
    if mass <= 0.0:
        idx = np.array([int(np.argmax(space.mu))])
        mass = float(space.mu[idx].sum())
    h = np.full(n, 1.0 - w)
    h[idx] += w / mass
    return h


def _cap_density(mu: np.ndarray, h: np.ndarray, cap: float) -> np.ndarray:
    """Rescale then cap h at ``cap`` so that the result still integrates to 1.

    Solves sum(min(c*h, cap) * mu) = 1 for c by bisection; the left side is
    continuous and nondecreasing in c with supremum cap > 1, so a root exists.
    """
    def mass(c):
        return float(np.minimum(c * h, cap) @ mu)

    if mass(1.0) >= 1.0 - 1e-15:
        return np.minimum(h, cap)
    c_lo, c_hi = 1.0, 2.0
    while mass(c_hi) < 1.0:
        c_hi *= 2.0
        if c_hi > 1e18:
            raise ValidationError("cap too close to 1 for this density")
    for _ in range(200):
        c_mid = 0.5 * (c_lo + c_hi)
        if mass(c_mid) < 1.0:
            c_lo = c_mid
        else:
            c_hi = c_mid
    return np.minimum(c_hi * h, cap)
