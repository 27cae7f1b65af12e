"""Dirichlet forms and spectral constants: Poincare / spectral gap, and the
Latala-Oleszkiewicz interpolation functional between variance and entropy.

Two form modes exist.  ``rate-matrix`` wraps a reversible rate matrix Q and
uses the energy E(f, f) = -<Qf, f>_mu.  ``grid-gradient`` is the finite
difference quadratic form sum_i w_i (f_{i+1} - f_i)^2 on an equally spaced
grid, with w_i the midpoint weight (mu_i + mu_{i+1}) / 2 divided by dx^2;
its generator is a birth-death chain reversible for mu and the form converges
to int |f'|^2 dmu as the mesh refines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, ValidationError
from .space import MetricMeasureSpace
from .entropy import xlogx

REVERSIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class DirichletForm:
    """Discrete stand-in for the energy f -> int |grad f|^2 dmu."""

    mode: str  # "rate-matrix" | "grid-gradient"
    mu: np.ndarray
    rates: np.ndarray | None = None    # rate-matrix mode
    weights: np.ndarray | None = None  # grid mode, length n-1

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if np.any(mu < 0) or abs(mu.sum() - 1.0) > 1e-9:
            raise ValidationError("mu must be a probability vector")
        mu = mu / mu.sum()
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        if self.mode == "rate-matrix":
            q = np.asarray(self.rates, dtype=float)
            n = len(mu)
            if q.shape != (n, n):
                raise ValidationError("rate matrix shape mismatch")
            off = q - np.diag(np.diag(q))
            if off.min() < 0:
                raise ValidationError("off-diagonal rates must be nonnegative")
            flux = mu[:, None] * q
            scale = max(1.0, float(np.abs(flux).max()))
            if np.abs(flux - flux.T).max() > REVERSIBILITY_TOL * scale:
                raise ValidationError("rate matrix is not reversible for mu")
            q = q.copy()
            np.fill_diagonal(q, 0.0)
            np.fill_diagonal(q, -q.sum(axis=1))
            q.setflags(write=False)
            object.__setattr__(self, "rates", q)
        elif self.mode == "grid-gradient":
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (len(mu) - 1,) or np.any(w < 0):
                raise ValidationError("grid weights must be n-1 nonnegative reals")
            w = w.copy()
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)
        else:
            raise ValidationError(f"unknown form mode {self.mode!r}")

    @property
    def n(self) -> int:
        return len(self.mu)

    def energy(self, f) -> float:
        """E(f, f) >= 0; zero on constants."""
        f = np.asarray(f, dtype=float)
        if self.mode == "grid-gradient":
            df = np.diff(f)
            return float(self.weights @ (df * df))
        diff = f[None, :] - f[:, None]
        return float(0.5 * np.sum(self.mu[:, None] * self.rates * diff * diff))

    def generator_matrix(self) -> np.ndarray:
        """Rate matrix Q with E(f, f) = -<Qf, f>_mu; rows sum to zero."""
        if self.mode == "rate-matrix":
            return np.asarray(self.rates)
        n = self.n
        if np.any(self.mu <= 0):
            raise ValidationError("grid-gradient generator needs mu > 0 everywhere")
        q = np.zeros((n, n))
        idx = np.arange(n - 1)
        q[idx, idx + 1] = self.weights / self.mu[:-1]
        q[idx + 1, idx] = self.weights / self.mu[1:]
        np.fill_diagonal(q, -q.sum(axis=1))
        return q

    def variance(self, f) -> float:
        f = np.asarray(f, dtype=float)
        mean = float(f @ self.mu)
        return float(((f - mean) ** 2) @ self.mu)

    def entropy_of_square(self, f) -> float:
        """Ent_mu(f^2) = int f^2 log f^2 - (int f^2) log(int f^2)."""
        f2 = np.asarray(f, dtype=float) ** 2
        mean = float(f2 @ self.mu)
        return float(xlogx(f2) @ self.mu - xlogx(np.array(mean)))


def grid_gradient_form(space: MetricMeasureSpace) -> DirichletForm:
    """Finite-difference Dirichlet form of an equally spaced grid space."""
    if not space.is_line:
        raise ValidationError("grid-gradient form needs a grid space")
    x = space.labels
    steps = np.diff(x)
    dx = float(steps[0])
    if np.abs(steps - dx).max() > 1e-9 * max(1.0, abs(dx)):
        raise ValidationError("grid spacing must be uniform")
    w = 0.5 * (space.mu[:-1] + space.mu[1:]) / (dx * dx)
    return DirichletForm(mode="grid-gradient", mu=space.mu, weights=w)


@dataclass(frozen=True)
class PoincareResult:
    """Best constant in Var_mu(f) <= C E(f, f) with an optimizing witness."""

    value: float
    witness: np.ndarray


def _check_connected(form: DirichletForm) -> None:
    if form.mode == "grid-gradient":
        if np.any(form.weights <= 0):
            raise DomainError("grid form disconnected: some edge weight is zero")
        return
    q = form.generator_matrix()
    adj = (np.abs(q) > 0).astype(int)
    np.fill_diagonal(adj, 0)
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp > 1:
        raise DomainError("generator support is disconnected; constant is infinite")


def poincare_constant(form: DirichletForm) -> PoincareResult:
    """Inverse spectral gap of the reversible generator attached to the form.

    Solves the symmetric eigenproblem of D^{1/2} (-Q) D^{-1/2} with
    D = diag(mu); the second smallest eigenvalue is the gap and its
    eigenvector maps back to a witness achieving Var = C E.
    """
    _check_connected(form)
    if np.any(form.mu <= 0):
        raise DomainError("Poincare constant needs mu > 0 on every state")
    q = form.generator_matrix()
    root = np.sqrt(form.mu)
    sym = -(root[:, None] * q / root[None, :])
    sym = 0.5 * (sym + sym.T)
    vals, vecs = scipy.linalg.eigh(sym)
    gap = float(vals[1])
    if gap <= 1e-14 * max(1.0, float(vals[-1])):
        raise DomainError("spectral gap is numerically zero; constant is infinite")
    witness = vecs[:, 1] / root
    return PoincareResult(value=1.0 / gap, witness=witness)


LO_P_GRID = np.concatenate(([1.0], 2.0 - 0.5 ** np.arange(1, 41)))


def lo_alpha_value(form: DirichletForm, f, alpha: float) -> float:
    """Latala-Oleszkiewicz functional for |f|, divided by the energy of f.

    Computes sup over p in {1} union {2 - 2^-k, k = 1..40} of
    (int f^2 - (int |f|^p)^{2/p}) / (2 - p)^alpha, then divides by E(f, f).
    At alpha = 0 the supremum sits at p = 1 and equals Var(|f|); as p -> 2
    the difference quotient at alpha = 1 approaches Ent(f^2) / 2.
    """
    if not (0.0 <= alpha <= 1.0):
        raise ValidationError("alpha must lie in [0, 1]")
    f = np.abs(np.asarray(f, dtype=float))
    energy = form.energy(f)
    if energy <= 0.0:
        raise DomainError("energy vanishes (constant f); functional undefined")
    m2 = float((f * f) @ form.mu)
    best = -np.inf
    for p in LO_P_GRID:
        mp = float((f ** p) @ form.mu)
        if mp <= 0.0:
            continue
        num = m2 - mp ** (2.0 / p)
        best = max(best, num / (2.0 - p) ** alpha)
    return float(best / energy)
