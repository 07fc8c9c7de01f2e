"""Finite mixtures of half-plane or hyperboloid components, fitted by EM.

Both component families are exponential families, so the EM fit is Bregman
soft clustering: the E-step sets responsibilities from component log
densities (the carrier term cancels inside a family), and the M-step averages
sufficient statistics under the responsibilities and maps the averages back
through the inverse moment map.  The average log-likelihood is nondecreasing
across iterations; the trace records it.

Initialization draws k-means++ style seeds in sufficient-statistic space and
hardens the nearest-seed assignment into starting responsibilities.  A fixed
responsibility matrix can be injected instead, which makes the whole fit a
deterministic function of the data (used by the equivariance tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from . import hyperboloid as hb
from . import poincare as pc
from .geometry import DualDomainError, LorentzParam, Moment2, SpdParam2
from .sampling import RngStream, hyperboloid_sample, poincare_sample

__all__ = ["Mixture", "EmTrace", "FitError", "mixture_log_density", "mixture_sample", "em_fit"]


class FitError(RuntimeError):
    """EM failed to produce a non-degenerate mixture within the retry budget."""


@dataclass(frozen=True)
class Mixture:
    """A finite mixture: nonnegative weights summing to one over cone parameters."""

    family: str  # "poincare" | "hyperboloid"
    weights: tuple
    components: tuple

    def __post_init__(self) -> None:
        if self.family not in ("poincare", "hyperboloid"):
            raise ValueError(f"unknown family {self.family!r}")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0.0) or abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError(f"weights must be nonnegative and sum to 1, got {w}")
        if len(self.weights) != len(self.components):
            raise ValueError("one weight per component required")

    @property
    def k(self) -> int:
        return len(self.components)


@dataclass
class EmTrace:
    """Per-iteration average log-likelihood and the final effective counts."""

    loglik: list = field(default_factory=list)
    effective_counts: Optional[np.ndarray] = None
    iterations: int = 0
    restarts: int = 0


class _PoincareOps:
    family = "poincare"

    @staticmethod
    def logpdf(theta: SpdParam2, pts: np.ndarray) -> np.ndarray:
        return pc.log_density_xy(theta, pts[:, 0], pts[:, 1])

    @staticmethod
    def suff(pts: np.ndarray) -> np.ndarray:
        return pc.suff_stats_xy(pts)

    @staticmethod
    def eta_to_theta(eta: np.ndarray) -> SpdParam2:
        return pc.grad_conjugate(Moment2(eta[0], eta[1], eta[2]))

    @staticmethod
    def sample(theta: SpdParam2, n: int, rng: RngStream) -> np.ndarray:
        return poincare_sample(theta, n, rng)


class _HyperboloidOps:
    family = "hyperboloid"

    @staticmethod
    def logpdf(theta: LorentzParam, pts: np.ndarray) -> np.ndarray:
        return hb.log_density_chart(theta, pts)

    @staticmethod
    def suff(pts: np.ndarray) -> np.ndarray:
        return hb.suff_stats_chart(pts)

    @staticmethod
    def eta_to_theta(eta: np.ndarray) -> LorentzParam:
        return hb.mle_from_moment(eta, eta.size - 1)

    @staticmethod
    def sample(theta: LorentzParam, n: int, rng: RngStream) -> np.ndarray:
        return hyperboloid_sample(theta, n, rng)


def _ops_for(family: str):
    if family == "poincare":
        return _PoincareOps
    if family == "hyperboloid":
        return _HyperboloidOps
    raise ValueError(f"unknown family {family!r}")


def mixture_log_density(m: Mixture, point) -> float:
    """Log of the mixture density at one point (log-sum-exp over components)."""
    if hasattr(point, "as_complex"):
        row = (point.x, point.y)
    elif hasattr(point, "coords"):
        row = point.coords
    else:
        row = point
    return float(mixture_log_density_array(m, np.atleast_2d(np.asarray(row, float)))[0])


def mixture_log_density_array(m: Mixture, pts: np.ndarray) -> np.ndarray:
    ops = _ops_for(m.family)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    logs = np.stack([ops.logpdf(c, pts) for c in m.components], axis=1)
    return logsumexp(logs + np.log(np.asarray(m.weights)), axis=1)


def mixture_sample(
    m: Mixture, n: int, rng: RngStream, return_labels: bool = False
):
    """Ancestral sampling: a categorical component index, then the component law."""
    gen = rng.derive(0).generator()
    labels = gen.choice(m.k, size=n, p=np.asarray(m.weights, dtype=float))
    out = np.empty((n, 2))
    for j, comp in enumerate(m.components):
        idx = np.nonzero(labels == j)[0]
        if idx.size:
            out[idx] = _ops_for(m.family).sample(comp, idx.size, rng.derive(j + 1))
    if return_labels:
        return out, labels
    return out


def _kmeanspp_responsibilities(
    stats: np.ndarray, k: int, gen: np.random.Generator
) -> np.ndarray:
    n = stats.shape[0]
    centers = [stats[gen.integers(n)]]
    d2 = np.sum((stats - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            centers.append(stats[gen.integers(n)])
            continue
        pick = gen.choice(n, p=d2 / total)
        centers.append(stats[pick])
        d2 = np.minimum(d2, np.sum((stats - centers[-1]) ** 2, axis=1))
    dists = np.stack(
        [np.sum((stats - c) ** 2, axis=1) for c in centers], axis=1
    )
    resp = np.zeros((n, k))
    resp[np.arange(n), np.argmin(dists, axis=1)] = 1.0
    return resp


def _m_step(ops, stats: np.ndarray, resp: np.ndarray):
    counts = resp.sum(axis=0)
    if np.any(counts < 2.0):
        raise FitError(f"component collapse: effective counts {counts}")
    weights = counts / resp.shape[0]
    etas = (resp.T @ stats) / counts[:, None]
    components = tuple(ops.eta_to_theta(etas[j]) for j in range(resp.shape[1]))
    return weights, components


def em_fit(
    points,
    k: int,
    family: str,
    rng: RngStream,
    max_iter: int = 200,
    tol: float = 1e-8,
    init_resp: Optional[np.ndarray] = None,
    retries: int = 5,
):
    """Fit a k-component mixture by EM; returns (Mixture, EmTrace).

    Raises :class:`FitError` when every restart collapses a component (an
    effective count below 2 or a degenerate moment average).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    if n < 2 * k:
        raise FitError(f"need at least 2k={2 * k} points, got {n}")
    ops = _ops_for(family)
    stats = ops.suff(pts)

    attempts = 1 if init_resp is not None else max(1, retries)
    last_err: Optional[Exception] = None
    for attempt in range(attempts):
        trace = EmTrace(restarts=attempt)
        if init_resp is not None:
            resp = np.asarray(init_resp, dtype=float)
            if resp.shape != (n, k):
                raise ValueError(f"init_resp must have shape {(n, k)}, got {resp.shape}")
        else:
            resp = _kmeanspp_responsibilities(
                stats, k, rng.derive(1000 + attempt).generator()
            )
        try:
            weights, components = _m_step(ops, stats, resp)
            prev = -math.inf
            for it in range(max_iter):
                logs = np.stack(
                    [ops.logpdf(c, pts) for c in components], axis=1
                ) + np.log(weights)
                per_point = logsumexp(logs, axis=1)
                avg_ll = float(np.mean(per_point))
                trace.loglik.append(avg_ll)
                trace.iterations = it + 1
                resp = np.exp(logs - per_point[:, None])
                weights, components = _m_step(ops, stats, resp)
                if avg_ll - prev < tol and it > 0:
                    break
                prev = avg_ll
            trace.effective_counts = resp.sum(axis=0)
            mixture = Mixture(
                family=family, weights=tuple(weights), components=components
            )
            return mixture, trace
        except (FitError, DualDomainError) as err:
            last_err = err
            if init_resp is not None:
                raise FitError(str(err)) from err
    raise FitError(
        f"EM failed after {attempts} initializations: {last_err}"
    ) from last_err
