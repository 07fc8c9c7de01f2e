"""Hyperbolic-model geometry: points, parameter cones, group actions, invariants.

Two models are supported end to end: the upper-half plane (natural parameters
are 2x2 symmetric positive-definite matrices, the group is SL(2,R) acting by
linear fractional transformations) and the Minkowski hyperboloid (natural
parameters live in the open forward cone, the group is the identity component
of the Lorentz group).  The module also carries the parameter and point maps
that identify the two pictures when d = 2, plus the Cayley transform to the
unit disk.

All types are immutable values; every operation is pure.  Random-element
helpers take an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ConeError",
    "DualDomainError",
    "SpdParam2",
    "UpperHalfPoint",
    "Moment2",
    "LorentzParam",
    "HyperboloidPoint",
    "Mobius",
    "LorentzTransform",
    "InvariantTriple",
    "minkowski_inner",
    "mobius_act_point",
    "mobius_act_param",
    "poincare_invariant",
    "lorentz_invariant",
    "lorentz_random_element",
    "random_mobius",
    "random_spd",
    "random_lorentz_param",
    "param_h_to_l",
    "param_l_to_h",
    "point_h_to_l",
    "point_l_to_h",
    "point_h_to_disk",
    "point_disk_to_h",
    "upper_half_distance",
]

# Relative tolerance for cone membership: determinants this close to the
# boundary would poison every divergence formula that divides by them.
_CONE_RTOL = 1e-12


class ConeError(ValueError):
    """A natural parameter fell outside (or numerically on) its open cone."""


class DualDomainError(ValueError):
    """A moment parameter is not realizable by any cone parameter."""


# ---------------------------------------------------------------------------
# Parameter and point containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpdParam2:
    """Natural parameter of an upper-half-plane model: the SPD matrix [[a,b],[b,c]]."""

    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        a, b, c = float(self.a), float(self.b), float(self.c)
        scale = max(abs(a), abs(b), abs(c))
        det = a * c - b * b
        if not (a > 0.0 and c > 0.0 and det > _CONE_RTOL * scale * scale):
            raise ConeError(
                f"(a={a}, b={b}, c={c}) violates a>0, c>0, ac-b^2>0 "
                f"(det={det:.3e})"
            )

    def det(self) -> float:
        return self.a * self.c - self.b * self.b

    def sqrt_det(self) -> float:
        return math.sqrt(self.det())

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.b, self.c]], dtype=float)

    def as_vector(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=float)

    def inverse_matrix(self) -> np.ndarray:
        d = self.det()
        return np.array([[self.c, -self.b], [-self.b, self.a]], dtype=float) / d

    @classmethod
    def from_matrix(cls, m: np.ndarray, sym_tol: float = 1e-12) -> "SpdParam2":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise ConeError(f"expected a 2x2 matrix, got shape {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if abs(m[0, 1] - m[1, 0]) > sym_tol * scale:
            raise ConeError(
                f"matrix is not symmetric: off-diagonals {m[0, 1]} != {m[1, 0]}"
            )
        return cls(float(m[0, 0]), 0.5 * float(m[0, 1] + m[1, 0]), float(m[1, 1]))


@dataclass(frozen=True)
class UpperHalfPoint:
    """A sample point x + iy of the upper-half plane (y > 0)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not self.y > 0.0:
            raise ValueError(f"upper-half point needs y > 0, got y={self.y}")

    def as_complex(self) -> complex:
        return complex(self.x, self.y)


@dataclass(frozen=True)
class Moment2:
    """Moment (dual) parameter of the half-plane model: a negative-definite 2x2 matrix."""

    m11: float
    m12: float
    m22: float

    def __post_init__(self) -> None:
        det = self.m11 * self.m22 - self.m12 * self.m12
        if not (self.m11 < 0.0 and self.m22 < 0.0 and det > 0.0):
            raise DualDomainError(
                f"[[{self.m11},{self.m12}],[{self.m12},{self.m22}]] "
                "is not negative definite"
            )

    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m12

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m12, self.m22]], dtype=float)


class LorentzParam:
    """Natural parameter of a hyperboloid model: a (d+1)-vector in the open forward cone."""

    __slots__ = ("theta",)

    def __init__(self, theta: Iterable[float]):
        t = tuple(float(v) for v in theta)
        if len(t) < 3:
            raise ConeError(f"hyperboloid parameters need d >= 2, got {len(t) - 1}")
        scale = max(abs(v) for v in t)
        mink_sq = t[0] * t[0] - sum(v * v for v in t[1:])
        if not (t[0] > 0.0 and mink_sq > _CONE_RTOL * scale * scale):
            raise ConeError(
                f"{t} is outside the forward cone "
                f"(theta_0 must exceed the spatial norm)"
            )
        object.__setattr__(self, "theta", t)

    def __setattr__(self, name, value):
        raise AttributeError("LorentzParam is immutable")

    def __repr__(self) -> str:
        return f"LorentzParam(theta={self.theta})"

    def __eq__(self, other) -> bool:
        return isinstance(other, LorentzParam) and self.theta == other.theta

    def __hash__(self) -> int:
        return hash(self.theta)

    @property
    def d(self) -> int:
        return len(self.theta) - 1

    @property
    def vec(self) -> np.ndarray:
        return np.array(self.theta, dtype=float)

    def minkowski_sq(self) -> float:
        t = self.theta
        return t[0] * t[0] - sum(v * v for v in t[1:])

    def minkowski_norm(self) -> float:
        return math.sqrt(self.minkowski_sq())


class HyperboloidPoint:
    """Chart coordinates (x_1..x_d) of a point on the forward hyperboloid sheet."""

    __slots__ = ("coords",)

    def __init__(self, coords: Iterable[float]):
        xs = tuple(float(v) for v in coords)
        if len(xs) < 2:
            raise ValueError(f"hyperboloid points need d >= 2, got d={len(xs)}")
        object.__setattr__(self, "coords", xs)

    def __setattr__(self, name, value):
        raise AttributeError("HyperboloidPoint is immutable")

    def __repr__(self) -> str:
        return f"HyperboloidPoint(coords={self.coords})"

    def __eq__(self, other) -> bool:
        return isinstance(other, HyperboloidPoint) and self.coords == other.coords

    def __hash__(self) -> int:
        return hash(self.coords)

    @property
    def d(self) -> int:
        return len(self.coords)

    @property
    def vec(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)

    def lift(self) -> np.ndarray:
        """The ambient point (sqrt(1+|x|^2), x_1..x_d); satisfies [lift,lift] = 1."""
        x = self.vec
        return np.concatenate(([math.sqrt(1.0 + float(x @ x))], x))


@dataclass(frozen=True)
class Mobius:
    """An element of SL(2,R) acting on the upper-half plane."""

    g11: float
    g12: float
    g21: float
    g22: float

    def __post_init__(self) -> None:
        det = self.g11 * self.g22 - self.g12 * self.g21
        scale = max(abs(self.g11), abs(self.g12), abs(self.g21), abs(self.g22), 1.0)
        if abs(det - 1.0) > 1e-12 * scale * scale:
            raise ValueError(f"Mobius matrix must have det 1, got det={det!r}")

    @classmethod
    def identity(cls) -> "Mobius":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Mobius":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g21, self.g22]], dtype=float)

    def inverse_matrix(self) -> np.ndarray:
        # det = 1, so the inverse is the adjugate.
        return np.array([[self.g22, -self.g12], [-self.g21, self.g11]], dtype=float)


@dataclass(frozen=True, eq=False)
class LorentzTransform:
    """An element of SO_0(1,d): preserves the Minkowski form and the forward sheet."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", a)
        n = a.shape[0]
        if a.ndim != 2 or a.shape[1] != n or n < 3:
            raise ValueError(f"expected a square (d+1)x(d+1) matrix, got {a.shape}")
        g = _mink_metric(n - 1)
        err = np.max(np.abs(a.T @ g @ a - g))
        if err > 1e-10 or a[0, 0] <= 0.0:
            raise ValueError(
                f"matrix is not in SO_0(1,{n - 1}): metric defect {err:.2e}, "
                f"A00={a[0, 0]}"
            )

    @property
    def d(self) -> int:
        return self.matrix.shape[0] - 1

    def apply_param(self, theta: LorentzParam) -> LorentzParam:
        return LorentzParam(self.matrix @ theta.vec)

    def apply_point(self, p: HyperboloidPoint) -> HyperboloidPoint:
        lifted = self.matrix @ p.lift()
        return HyperboloidPoint(lifted[1:])


@dataclass(frozen=True)
class InvariantTriple:
    """The three canonical terms every f-divergence factors through."""

    s1: float
    s2: float
    s3: float

    def as_tuple(self) -> tuple:
        return (self.s1, self.s2, self.s3)


# ---------------------------------------------------------------------------
# Minkowski form and group actions
# ---------------------------------------------------------------------------


def _mink_metric(d: int) -> np.ndarray:
    g = -np.eye(d + 1)
    g[0, 0] = 1.0
    return g


def minkowski_inner(u: Sequence[float], v: Sequence[float]) -> float:
    """The Minkowski bilinear form u0*v0 - sum_i ui*vi."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(u[0] * v[0] - u[1:] @ v[1:])


def mobius_act_point(g: Mobius, z: UpperHalfPoint) -> UpperHalfPoint:
    """Linear fractional action (az+b)/(cz+d) on the upper-half plane."""
    w = (g.g11 * z.as_complex() + g.g12) / (g.g21 * z.as_complex() + g.g22)
    return UpperHalfPoint(w.real, w.imag)


def mobius_act_param(g: Mobius, theta: SpdParam2) -> SpdParam2:
    """Parameter action g.theta = g^{-T} theta g^{-1}; preserves the determinant."""
    ginv = g.inverse_matrix()
    m = ginv.T @ theta.as_matrix() @ ginv
    return SpdParam2(float(m[0, 0]), 0.5 * float(m[0, 1] + m[1, 0]), float(m[1, 1]))


def poincare_invariant(theta: SpdParam2, theta2: SpdParam2) -> InvariantTriple:
    """Maximal invariant (det theta, det theta', tr(theta' theta^{-1})) of the SL(2,R) action."""
    tr = float(np.trace(theta2.as_matrix() @ theta.inverse_matrix()))
    return InvariantTriple(theta.det(), theta2.det(), tr)


def lorentz_invariant(theta: LorentzParam, theta2: LorentzParam) -> InvariantTriple:
    """Maximal invariant ([t,t], [t',t'], [t,t']) of the SO_0(1,d) action."""
    if theta.d != theta2.d:
        raise ValueError(f"dimension mismatch: d={theta.d} vs d={theta2.d}")
    return InvariantTriple(
        theta.minkowski_sq(),
        theta2.minkowski_sq(),
        minkowski_inner(theta.vec, theta2.vec),
    )


def _random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    # Haar-ish rotation from the QR of a Gaussian matrix, det fixed to +1.
    m = rng.standard_normal((d, d))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _spatial_block(rot: np.ndarray) -> np.ndarray:
    d = rot.shape[0]
    out = np.eye(d + 1)
    out[1:, 1:] = rot
    return out


def lorentz_random_element(d: int, rng: np.random.Generator) -> LorentzTransform:
    """A random SO_0(1,d) element: rotation * bounded boost * rotation.

    Rapidity is capped at 2 so that invariance tests do not run into
    catastrophic cancellation from extreme boosts.
    """
    if d < 2:
        raise ValueError(f"need d >= 2, got d={d}")
    phi = rng.uniform(-2.0, 2.0)
    boost = np.eye(d + 1)
    boost[0, 0] = boost[1, 1] = math.cosh(phi)
    boost[0, 1] = boost[1, 0] = math.sinh(phi)
    a = _spatial_block(_random_rotation(d, rng)) @ boost @ _spatial_block(
        _random_rotation(d, rng)
    )
    return LorentzTransform(a)


def random_mobius(rng: np.random.Generator, max_log_scale: float = 1.0) -> Mobius:
    """A random SL(2,R) element: rotation * diag(s, 1/s) * rotation, s bounded."""

    def rot(t: float) -> np.ndarray:
        return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])

    s = math.exp(rng.uniform(-max_log_scale, max_log_scale))
    m = rot(rng.uniform(0, 2 * math.pi)) @ np.diag([s, 1.0 / s]) @ rot(
        rng.uniform(0, 2 * math.pi)
    )
    return Mobius.from_matrix(m)


def random_spd(rng: np.random.Generator, log_scale: float = 1.2) -> SpdParam2:
    """A random cone parameter with eigenvalues roughly in e^{+-log_scale}."""
    lam = np.exp(rng.uniform(-log_scale, log_scale, size=2))
    t = rng.uniform(0, 2 * math.pi)
    r = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    m = r @ np.diag(lam) @ r.T
    return SpdParam2(float(m[0, 0]), 0.5 * float(m[0, 1] + m[1, 0]), float(m[1, 1]))


def random_lorentz_param(
    d: int, rng: np.random.Generator, log_scale: float = 1.2
) -> LorentzParam:
    """A random forward-cone parameter with Minkowski norm roughly in e^{+-log_scale}."""
    norm = math.exp(rng.uniform(-log_scale, log_scale))
    u = rng.standard_normal(d)
    u = u / np.linalg.norm(u)
    rapidity = rng.uniform(0.0, 1.5)
    theta = np.concatenate(([math.cosh(rapidity)], math.sinh(rapidity) * u)) * norm
    return LorentzParam(theta)


# ---------------------------------------------------------------------------
# Model correspondence maps
# ---------------------------------------------------------------------------


def param_h_to_l(theta: SpdParam2) -> LorentzParam:
    """Half-plane parameter to hyperboloid parameter: (a+c, a-c, 2b).

    Satisfies [out,out] = 4 det(theta) and, pairwise, [out,out'] =
    2 det(theta) tr(theta' theta^{-1}).
    """
    return LorentzParam((theta.a + theta.c, theta.a - theta.c, 2.0 * theta.b))


def param_l_to_h(theta: LorentzParam) -> SpdParam2:
    """Inverse of :func:`param_h_to_l` (d = 2 only)."""
    if theta.d != 2:
        raise ValueError(f"parameter correspondence needs d=2, got d={theta.d}")
    t0, t1, t2 = theta.theta
    return SpdParam2(0.5 * (t0 + t1), 0.5 * t2, 0.5 * (t0 - t1))


def point_h_to_l(z: UpperHalfPoint) -> HyperboloidPoint:
    """Half-plane point to hyperboloid chart: (X, Y) = ((1-x^2-y^2)/(2y), x/y)."""
    r2 = z.x * z.x + z.y * z.y
    return HyperboloidPoint(((1.0 - r2) / (2.0 * z.y), z.x / z.y))


def point_l_to_h(p: HyperboloidPoint) -> UpperHalfPoint:
    """Inverse chart map: the positive root of y^2 (1+Y^2) + 2 X y - 1 = 0."""
    if p.d != 2:
        raise ValueError(f"point correspondence needs d=2, got d={p.d}")
    big_x, big_y = p.coords
    y = (math.sqrt(1.0 + big_x * big_x + big_y * big_y) - big_x) / (1.0 + big_y * big_y)
    return UpperHalfPoint(y * big_y, y)


def point_h_to_disk(z: UpperHalfPoint) -> tuple:
    """Cayley transform w = (z - i)/(z + i) onto the open unit disk."""
    w = (z.as_complex() - 1j) / (z.as_complex() + 1j)
    return (w.real, w.imag)


def point_disk_to_h(u: float, v: float) -> UpperHalfPoint:
    """Inverse Cayley transform z = i (1 + w)/(1 - w)."""
    if u * u + v * v >= 1.0:
        raise ValueError(f"({u}, {v}) is not inside the unit disk")
    w = complex(u, v)
    z = 1j * (1 + w) / (1 - w)
    return UpperHalfPoint(z.real, z.imag)


def upper_half_distance(z1: UpperHalfPoint, z2: UpperHalfPoint) -> float:
    """Hyperbolic distance on the upper-half plane."""
    dx = z1.x - z2.x
    dy = z1.y - z2.y
    return math.acosh(1.0 + (dx * dx + dy * dy) / (2.0 * z1.y * z2.y))
