"""The trivariate exponential family on the upper-half plane.

Densities have the form

    p(x, y) = (D e^{2D} / pi) exp(-(a(x^2+y^2) + 2bx + c)/y) / y^2,

with natural parameter the SPD matrix [[a,b],[b,c]] and D = sqrt(ac - b^2).
This module carries the cumulant and its conjugate, the moment map and its
inverse, closed-form divergences (KL, squared Hellinger, Neyman chi-squared,
Jeffreys, skew Jensen, Chernoff), entropy, the Fisher information matrix, the
cubic tensor, and the maximum-likelihood estimator.

The cumulant is exposed in two equivalent normalizations: the full
log-normalizer ``log pi - log D - 2D`` and the reduced Bregman generator
``-log D - 2D`` (they differ by the constant log pi, which cancels in every
divergence).  The conjugate machinery runs on the reduced form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import DualDomainError, Moment2, SpdParam2, UpperHalfPoint
from .specfun import exp_gamma0

__all__ = [
    "CumulantPair",
    "SufficientStat",
    "log_density",
    "log_density_xy",
    "cumulant",
    "grad_cumulant",
    "conjugate",
    "grad_conjugate",
    "kld",
    "hellinger_sq",
    "neyman_chi2",
    "jeffreys",
    "skew_jensen",
    "kld_via_skew_limit",
    "chernoff",
    "entropy",
    "expected_log_y",
    "modified_entropy",
    "fim",
    "cubic_tensor",
    "sufficient_stat",
    "mle",
]

_LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class CumulantPair:
    """Full and reduced log-normalizer; full - reduced = log(pi) exactly."""

    full: float
    reduced: float


class SufficientStat(NamedTuple):
    vector: np.ndarray  # -( (x^2+y^2)/y, x/y, 1/y )
    matrix: np.ndarray  # -(1/y) [[x^2+y^2, x], [x, 1]]


# ---------------------------------------------------------------------------
# Density and cumulant
# ---------------------------------------------------------------------------


def log_density_xy(theta: SpdParam2, x, y):
    """Log density at chart coordinates; accepts scalars or numpy arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = theta.sqrt_det()
    quad = (theta.a * (x * x + y * y) + 2.0 * theta.b * x + theta.c) / y
    return math.log(d) + 2.0 * d - _LOG_PI - quad - 2.0 * np.log(y)


def log_density(theta: SpdParam2, z: UpperHalfPoint) -> float:
    return float(log_density_xy(theta, z.x, z.y))


def cumulant(theta: SpdParam2) -> CumulantPair:
    d = theta.sqrt_det()
    reduced = -math.log(d) - 2.0 * d
    return CumulantPair(full=_LOG_PI + reduced, reduced=reduced)


def grad_cumulant(theta: SpdParam2) -> Moment2:
    """Moment parameter eta = -(1/2 + D) theta^{-1}; identical for both normalizations."""
    coeff = -(0.5 + theta.sqrt_det())
    inv = theta.inverse_matrix()
    return Moment2(coeff * inv[0, 0], coeff * inv[0, 1], coeff * inv[1, 1])


def _grad_cumulant_vec(theta: SpdParam2) -> np.ndarray:
    # Gradient in (a, b, c) coordinates; off-diagonal entry doubled relative
    # to the matrix form because b appears twice in the matrix pairing.
    eta = grad_cumulant(theta)
    return np.array([eta.m11, 2.0 * eta.m12, eta.m22])


def grad_conjugate(eta: Moment2) -> SpdParam2:
    """Invert the moment map: the unique theta with grad_cumulant(theta) = eta.

    Feasible iff det(eta) > 1; the scalar reduction solves
    D (sqrt(det eta) - 1) = 1/2 for D = sqrt(det theta).
    """
    det = eta.det()
    root = math.sqrt(det)
    if root <= 1.0:
        raise DualDomainError(
            f"moment parameter has det {det:.6g} <= 1; it is not the moment "
            "of any cone parameter (points coincide or are inconsistent)"
        )
    d = 0.5 / (root - 1.0)
    coeff = -(0.5 + d)
    m = eta.as_matrix()
    inv = np.array([[m[1, 1], -m[0, 1]], [-m[0, 1], m[0, 0]]]) / det
    t = coeff * inv
    return SpdParam2(float(t[0, 0]), 0.5 * float(t[0, 1] + t[1, 0]), float(t[1, 1]))


def conjugate(eta: Moment2) -> float:
    """Convex conjugate of the reduced cumulant at eta: <eta, theta(eta)> - F(theta(eta))."""
    theta = grad_conjugate(eta)
    d = theta.sqrt_det()
    return -(1.0 + 2.0 * d) - cumulant(theta).reduced


# ---------------------------------------------------------------------------
# Divergences
# ---------------------------------------------------------------------------


def kld(theta: SpdParam2, theta2: SpdParam2) -> float:
    """Kullback-Leibler divergence KL[p_theta : p_theta2] in closed form."""
    u, u2 = theta.det(), theta2.det()
    d, d2 = math.sqrt(u), math.sqrt(u2)
    tr = float(np.trace(theta2.as_matrix() @ theta.inverse_matrix()))
    return 0.5 * math.log(u / u2) + 2.0 * (d - d2) + (0.5 + d) * (tr - 2.0)


def _log_bhattacharyya(theta: SpdParam2, theta2: SpdParam2) -> float:
    # log BC = log 2 + (log u + log u')/4 + D + D' - log s / 2 - sqrt(s),
    # s = det(theta + theta').
    u, u2 = theta.det(), theta2.det()
    s = (theta.a + theta2.a) * (theta.c + theta2.c) - (theta.b + theta2.b) ** 2
    return (
        math.log(2.0)
        + 0.25 * (math.log(u) + math.log(u2))
        + math.sqrt(u)
        + math.sqrt(u2)
        - 0.5 * math.log(s)
        - math.sqrt(s)
    )


def hellinger_sq(theta: SpdParam2, theta2: SpdParam2) -> float:
    """Squared Hellinger divergence (generator (sqrt(u)-1)^2/2); in [0, 1), symmetric."""
    return -math.expm1(_log_bhattacharyya(theta, theta2))


def neyman_chi2(theta: SpdParam2, theta2: SpdParam2) -> float:
    """Neyman chi-squared divergence; +inf when 2*theta2 - theta leaves the cone."""
    a = 2.0 * theta2.a - theta.a
    b = 2.0 * theta2.b - theta.b
    c = 2.0 * theta2.c - theta.c
    det_m = a * c - b * b
    scale = max(abs(a), abs(b), abs(c))
    if not (a > 0.0 and c > 0.0 and det_m > 1e-12 * scale * scale):
        return math.inf
    u, u2 = theta.det(), theta2.det()
    log_ratio = (
        math.log(u2)
        + 4.0 * math.sqrt(u2)
        - 0.5 * math.log(u)
        - 0.5 * math.log(det_m)
        - 2.0 * (math.sqrt(u) + math.sqrt(det_m))
    )
    return math.expm1(log_ratio)


def jeffreys(theta: SpdParam2, theta2: SpdParam2) -> float:
    """Symmetrized KL divergence; symmetric but not a metric in any positive power."""
    return kld(theta, theta2) + kld(theta2, theta)


def skew_jensen(theta: SpdParam2, theta2: SpdParam2, alpha: float) -> float:
    """Skew Jensen divergence of the reduced cumulant at the mix (1-alpha) theta + alpha theta2.

    Equals the alpha-Bhattacharyya divergence between the two densities;
    at alpha = 1/2 it is -log(1 - hellinger_sq).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    w = 1.0 - alpha
    mix_a = w * theta.a + alpha * theta2.a
    mix_b = w * theta.b + alpha * theta2.b
    mix_c = w * theta.c + alpha * theta2.c
    u_mix = mix_a * mix_c - mix_b * mix_b
    u, u2 = theta.det(), theta2.det()
    return 0.5 * (math.log(u_mix) - w * math.log(u) - alpha * math.log(u2)) + 2.0 * (
        math.sqrt(u_mix) - (w * math.sqrt(u) + alpha * math.sqrt(u2))
    )


def kld_via_skew_limit(theta: SpdParam2, theta2: SpdParam2, eps: float = 0.01) -> float:
    """First-order KL approximation (1/(eps(1-eps))) * skew_jensen; error O(eps)."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return skew_jensen(theta, theta2, eps) / (eps * (1.0 - eps))


def chernoff(theta: SpdParam2, theta2: SpdParam2) -> tuple:
    """Chernoff information: maximize the skew Jensen value over alpha in (0, 1).

    The objective is strictly concave in alpha, so golden-section search
    converges to the unique optimum; returns (alpha*, value).
    """
    same = (theta.a, theta.b, theta.c) == (theta2.a, theta2.b, theta2.c)
    if same:
        return (0.5, 0.0)

    def objective(alpha: float) -> float:
        return skew_jensen(theta, theta2, alpha)

    lo, hi = 1e-12, 1.0 - 1e-12
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    while hi - lo > 1e-8:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = objective(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = objective(x1)
    alpha = 0.5 * (lo + hi)
    return (alpha, objective(alpha))


# ---------------------------------------------------------------------------
# Entropies
# ---------------------------------------------------------------------------


def entropy(theta: SpdParam2) -> float:
    """Differential entropy, 1 + log(pi D) - 2 log a - 2 e^{4D} Gamma(0, 4D)."""
    d = theta.sqrt_det()
    return 1.0 + math.log(math.pi * d) - 2.0 * math.log(theta.a) - 2.0 * exp_gamma0(4.0 * d)


def expected_log_y(theta: SpdParam2) -> float:
    """E[log y] = log(D/a) - e^{4D} Gamma(0, 4D)."""
    d = theta.sqrt_det()
    return math.log(d / theta.a) - exp_gamma0(4.0 * d)


def modified_entropy(theta: SpdParam2) -> float:
    """Entropy against the invariant measure dx dy / y^2: 1 + log(pi / D).

    Unlike :func:`entropy` this depends on theta only through its determinant
    and is therefore invariant under the SL(2,R) action.
    """
    return 1.0 + _LOG_PI - math.log(theta.sqrt_det())


# ---------------------------------------------------------------------------
# Information geometry
# ---------------------------------------------------------------------------

# Hessian of u(a,b,c) = ac - b^2, a constant matrix.
_HESS_U = np.array([[0.0, 0.0, 1.0], [0.0, -2.0, 0.0], [1.0, 0.0, 0.0]])


def _phi_derivs(u: float) -> tuple:
    # phi(u) = -log(u)/2 - 2 sqrt(u); returns phi', phi'', phi'''.
    su = math.sqrt(u)
    p1 = -0.5 / u - 1.0 / su
    p2 = 0.5 / (u * u) + 0.5 / (u * su)
    p3 = -1.0 / (u * u * u) - 0.75 / (u * u * su)
    return p1, p2, p3


def fim(theta: SpdParam2) -> np.ndarray:
    """Fisher information matrix in (a, b, c) coordinates: the Hessian of the cumulant."""
    u = theta.det()
    g = np.array([theta.c, -2.0 * theta.b, theta.a])
    p1, p2, _ = _phi_derivs(u)
    return p2 * np.outer(g, g) + p1 * _HESS_U


def fim_dual(eta: Moment2) -> np.ndarray:
    """Hessian of the conjugate at eta, in the vector coordinates dual to (a, b, c).

    By Legendre duality this is the matrix inverse of the Fisher information
    at the corresponding cone parameter; validated against finite differences
    of :func:`conjugate` in the test suite.
    """
    return np.linalg.inv(fim(grad_conjugate(eta)))


def cubic_tensor(theta: SpdParam2) -> np.ndarray:
    """Totally symmetric third-derivative tensor of the cumulant in (a, b, c)."""
    u = theta.det()
    g = np.array([theta.c, -2.0 * theta.b, theta.a])
    _, p2, p3 = _phi_derivs(u)
    t = p3 * np.einsum("i,j,k->ijk", g, g, g)
    t += p2 * (
        np.einsum("ij,k->ijk", _HESS_U, g)
        + np.einsum("ik,j->ijk", _HESS_U, g)
        + np.einsum("jk,i->ijk", _HESS_U, g)
    )
    return t


# ---------------------------------------------------------------------------
# Sufficient statistics and MLE
# ---------------------------------------------------------------------------


def sufficient_stat(z: UpperHalfPoint) -> SufficientStat:
    """Sufficient statistic in vector and matrix form; the matrix has det 1."""
    r2 = z.x * z.x + z.y * z.y
    vec = -np.array([r2 / z.y, z.x / z.y, 1.0 / z.y])
    mat = np.array([[vec[0], vec[1]], [vec[1], vec[2]]])
    return SufficientStat(vector=vec, matrix=mat)


def _as_xy_array(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"expected an (n, 2) array, got shape {pts.shape}")
        return pts
    arr = np.array([(p.x, p.y) for p in points], dtype=float)
    return arr


def suff_stats_xy(points) -> np.ndarray:
    """Sufficient-statistic vectors, one row per point: -((x^2+y^2)/y, x/y, 1/y)."""
    pts = _as_xy_array(points)
    x, y = pts[:, 0], pts[:, 1]
    return -np.column_stack(((x * x + y * y) / y, x / y, 1.0 / y))


def mle(points) -> SpdParam2:
    """Maximum-likelihood estimate from at least two distinct points.

    Averages the sufficient statistics with compensated summation (the result
    must not depend on how callers shard the data) and inverts the moment map.
    """
    pts = _as_xy_array(points)
    n = pts.shape[0]
    if n < 2:
        raise DualDomainError(f"MLE needs at least 2 points, got {n}")
    stats = suff_stats_xy(pts)
    means = [math.fsum(stats[:, j].tolist()) / n for j in range(3)]
    eta = Moment2(means[0], means[1], means[2])
    return grad_conjugate(eta)
