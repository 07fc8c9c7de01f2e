"""The exponential family on the forward hyperboloid sheet.

In chart coordinates (x_1..x_d) the density against Lebesgue measure is

    p(x) = c_d(|theta|) exp(-[theta, lift(x)]) / sqrt(1 + |x|^2),

with [.,.] the Minkowski form, |theta| = [theta,theta]^(1/2), and
c_d(t) = t^((d-1)/2) / (2 (2 pi)^((d-1)/2) K_((d-1)/2)(t)).

Divergences with a closed form (KL, squared Hellinger, Neyman chi-squared)
are computed from the cumulant and the normalizer ratio, which reproduces the
d = 2 specializations exactly and stays consistent for every d.  The Fisher
information matrix is provided in closed form for d = 2.
"""

from __future__ import annotations

import math
import numpy as np

from .geometry import DualDomainError, HyperboloidPoint, LorentzParam
from .specfun import bessel_k, bessel_k_logderiv

__all__ = [
    "log_normalizer_c",
    "log_density",
    "log_density_chart",
    "cumulant",
    "grad_cumulant",
    "kld",
    "hellinger_sq",
    "neyman_chi2",
    "jeffreys",
    "skew_jensen",
    "fim2",
    "modified_entropy2",
    "mle",
]

_LOG_2PI = math.log(2.0 * math.pi)


def log_normalizer_c(d: int, t: float) -> float:
    """log c_d(t), the log of the density normalizing constant at norm t."""
    nu = 0.5 * (d - 1)
    return nu * math.log(t) - math.log(2.0) - nu * _LOG_2PI - bessel_k(nu, t).log_value


def cumulant(theta: LorentzParam) -> float:
    """Log-normalizer F(theta) = -log c_d(|theta|); for d=2 this is -log t - t + log(2 pi)."""
    return -log_normalizer_c(theta.d, theta.minkowski_norm())


def _metric_times(theta_vec: np.ndarray) -> np.ndarray:
    out = -theta_vec.copy()
    out[0] = theta_vec[0]
    return out


def grad_cumulant(theta: LorentzParam) -> np.ndarray:
    """Gradient of the cumulant; equals the mean of the sufficient statistic (-x0~, x1..xd)."""
    t = theta.minkowski_norm()
    nu = 0.5 * (theta.d - 1)
    fprime = bessel_k_logderiv(nu, t) - nu / t
    return (fprime / t) * _metric_times(theta.vec)


def log_density_chart(theta: LorentzParam, points) -> np.ndarray:
    """Log density at chart coordinates; ``points`` is an (n, d) array (or a single row)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != theta.d:
        raise ValueError(
            f"points have dimension {pts.shape[1]}, parameter has d={theta.d}"
        )
    x0 = np.sqrt(1.0 + np.einsum("ij,ij->i", pts, pts))
    tv = theta.vec
    pairing = tv[0] * x0 - pts @ tv[1:]
    return log_normalizer_c(theta.d, theta.minkowski_norm()) - pairing - np.log(x0)


def log_density(theta: LorentzParam, p: HyperboloidPoint) -> float:
    if p.d != theta.d:
        raise ValueError(f"point has d={p.d}, parameter has d={theta.d}")
    return float(log_density_chart(theta, p.vec)[0])


# ---------------------------------------------------------------------------
# Divergences
# ---------------------------------------------------------------------------


def kld(theta: LorentzParam, theta2: LorentzParam) -> float:
    """KL divergence as the Bregman divergence of the cumulant (reverse argument order).

    For d = 2 this agrees with the explicit form
    log(t/t') - t' + [th,th']/[th,th] + [th,th']/t - 1.
    """
    if theta.d != theta2.d:
        raise ValueError(f"dimension mismatch: d={theta.d} vs d={theta2.d}")
    grad = grad_cumulant(theta)
    diff = theta2.vec - theta.vec
    return cumulant(theta2) - cumulant(theta) - float(grad @ diff)


def hellinger_sq(theta: LorentzParam, theta2: LorentzParam) -> float:
    """Squared Hellinger divergence, 1 - sqrt(c_d(t) c_d(t')) / c_d(|theta+theta2|/2)."""
    if theta.d != theta2.d:
        raise ValueError(f"dimension mismatch: d={theta.d} vs d={theta2.d}")
    d = theta.d
    s = LorentzParam(theta.vec + theta2.vec).minkowski_norm()
    log_bc = (
        0.5
        * (
            log_normalizer_c(d, theta.minkowski_norm())
            + log_normalizer_c(d, theta2.minkowski_norm())
        )
        - log_normalizer_c(d, 0.5 * s)
    )
    return -math.expm1(log_bc)


def neyman_chi2(theta: LorentzParam, theta2: LorentzParam) -> float:
    """Neyman chi-squared divergence; +inf when 2*theta2 - theta leaves the cone."""
    if theta.d != theta2.d:
        raise ValueError(f"dimension mismatch: d={theta.d} vs d={theta2.d}")
    m = 2.0 * theta2.vec - theta.vec
    mink_sq = float(m[0] * m[0] - m[1:] @ m[1:])
    scale = float(np.max(np.abs(m)))
    if not (m[0] > 0.0 and mink_sq > 1e-12 * scale * scale):
        return math.inf
    d = theta.d
    log_ratio = (
        2.0 * log_normalizer_c(d, theta2.minkowski_norm())
        - log_normalizer_c(d, theta.minkowski_norm())
        - log_normalizer_c(d, math.sqrt(mink_sq))
    )
    return math.expm1(log_ratio)


def jeffreys(theta: LorentzParam, theta2: LorentzParam) -> float:
    return kld(theta, theta2) + kld(theta2, theta)


def skew_jensen(theta: LorentzParam, theta2: LorentzParam, alpha: float) -> float:
    """Skew Jensen divergence of the cumulant at the mix (1-alpha) theta + alpha theta2."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if theta.d != theta2.d:
        raise ValueError(f"dimension mismatch: d={theta.d} vs d={theta2.d}")
    mix = LorentzParam((1.0 - alpha) * theta.vec + alpha * theta2.vec)
    return (
        (1.0 - alpha) * cumulant(theta)
        + alpha * cumulant(theta2)
        - cumulant(mix)
    )


# ---------------------------------------------------------------------------
# d = 2 closed forms
# ---------------------------------------------------------------------------


def fim2(theta: LorentzParam) -> np.ndarray:
    """Fisher information matrix for d = 2 in closed form.

    Equals (1/t^4) [ (2+t) (G theta)(G theta)^T - t^2 (1+t) G ] with
    G = diag(1,-1,-1); this is the Hessian of the cumulant.
    """
    if theta.d != 2:
        raise ValueError(f"closed-form FIM needs d=2, got d={theta.d}")
    t = theta.minkowski_norm()
    gtheta = _metric_times(theta.vec)
    g = np.diag([1.0, -1.0, -1.0])
    return ((2.0 + t) * np.outer(gtheta, gtheta) - t * t * (1.0 + t) * g) / t**4


def modified_entropy2(theta: LorentzParam) -> float:
    """Entropy against the invariant measure on the d = 2 sheet: 1 + log(2 pi / |theta|)."""
    if theta.d != 2:
        raise ValueError(f"closed-form entropy needs d=2, got d={theta.d}")
    return 1.0 + _LOG_2PI - math.log(theta.minkowski_norm())


# ---------------------------------------------------------------------------
# MLE
# ---------------------------------------------------------------------------


def _as_chart_array(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"expected an (n, d) array, got shape {pts.shape}")
        return pts
    rows = [p.vec if isinstance(p, HyperboloidPoint) else np.asarray(p, float) for p in points]
    return np.array(rows, dtype=float)


def suff_stats_chart(points) -> np.ndarray:
    """Sufficient-statistic vectors (-x0~, x1..xd), one row per chart point."""
    pts = _as_chart_array(points)
    x0 = np.sqrt(1.0 + np.einsum("ij,ij->i", pts, pts))
    return np.column_stack((-x0, pts))


def _neg_fprime(d: int, t: float) -> float:
    nu = 0.5 * (d - 1)
    return nu / t - bessel_k_logderiv(nu, t)


def mle_from_moment(eta: np.ndarray, d: int) -> LorentzParam:
    """Invert the moment map: solve |F'(t)| = sqrt([eta,eta]) then rescale G eta."""
    eta = np.asarray(eta, dtype=float)
    mink_sq = float(eta[0] * eta[0] - eta[1:] @ eta[1:])
    if not (eta[0] < 0.0 and mink_sq > 0.0):
        raise DualDomainError(
            f"moment vector {eta} is not in the dual cone (needs eta_0 < 0 and "
            "positive Minkowski square)"
        )
    m = math.sqrt(mink_sq)
    if m <= 1.0 + 1e-13:
        raise DualDomainError(
            f"moment vector has Minkowski norm {m}; inversion needs norm > 1 "
            "(all observations coincide)"
        )
    if d == 2:
        # -F'(t) = 1 + 1/t, so t = 1/(m-1) exactly.
        t = 1.0 / (m - 1.0)
    else:
        from scipy.optimize import brentq

        lo, hi = 1e-10, 1.0
        while _neg_fprime(d, hi) > m:
            lo = hi
            hi *= 2.0
            if hi > 1e12:
                raise DualDomainError(f"moment inversion bracket failed for {eta}")
        t = float(brentq(lambda s: _neg_fprime(d, s) - m, lo, hi, xtol=1e-14, rtol=1e-14))
    g_eta = eta.copy()
    g_eta[1:] = -g_eta[1:]
    return LorentzParam(-(t / m) * g_eta)


def mle(points) -> LorentzParam:
    """Maximum-likelihood estimate from at least two distinct chart points."""
    pts = _as_chart_array(points)
    n, d = pts.shape
    if n < 2:
        raise DualDomainError(f"MLE needs at least 2 points, got {n}")
    stats = suff_stats_chart(pts)
    eta = np.array([math.fsum(stats[:, j].tolist()) / n for j in range(d + 1)])
    return mle_from_moment(eta, d)
