"""Ensembles, potentials, prefactors and shared numerical helpers.

Partition functions considered here all reduce to eigenvalue integrals

    I = int prod_i exp(-V(u_i; sigma)) |Delta(u)|^beta du

over an interval (a, b)^N.  The physical partition function is
``prefactor * I`` up to the bookkeeping in :func:`log_reduced_from_integral`;
every API works with natural logarithms because the values leave double range
already at modest N.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

LOG_2PI = math.log(2.0 * math.pi)
SIGMA_MIN = 1e-8


class Space(str, enum.Enum):
    PD_REAL = "PD_real"
    PD_COMPLEX = "PD_complex"
    PD_QUATERNION = "PD_quaternion"
    SIEGEL = "Siegel"

    @property
    def native_beta(self) -> float:
        return _NATIVE_BETA[self]

    @property
    def is_pd(self) -> bool:
        return self is not Space.SIEGEL


_NATIVE_BETA = {
    Space.PD_REAL: 1.0,
    Space.PD_COMPLEX: 2.0,
    Space.PD_QUATERNION: 4.0,
    Space.SIEGEL: 1.0,
}


class PotentialKind(str, enum.Enum):
    SW = "SW"  # log^2(x) / (2 sigma^2) on (0, inf)
    S = "S"  # arccosh^2(x) / (8 sigma^2) on (1, inf)
    Q = "Q"  # x^2 / (2 sigma^2) on the real line


_DOMAINS = {
    PotentialKind.SW: (0.0, math.inf),
    PotentialKind.S: (1.0, math.inf),
    PotentialKind.Q: (-math.inf, math.inf),
}


@dataclass(frozen=True)
class Potential:
    kind: PotentialKind

    def __post_init__(self):
        object.__setattr__(self, "kind", PotentialKind(self.kind))

    @property
    def domain(self) -> tuple[float, float]:
        return _DOMAINS[self.kind]

    def eval(self, x, sigma):
        return potential_eval(self, x, sigma)

    def deriv(self, x, sigma):
        return potential_deriv(self, x, sigma)


def potential_for(space: Space) -> Potential:
    """Eigenvalue potential of a symmetric space: SW for PD cones, S for Siegel."""
    return Potential(PotentialKind.S if Space(space) is Space.SIEGEL else PotentialKind.SW)


@dataclass(frozen=True)
class EnsembleSpec:
    """A Gaussian distribution on one of the supported symmetric spaces.

    ``beta`` defaults to the Dyson index of ``space``.  Any other positive
    value is only accepted with ``generalized_beta=True`` (large-N work).
    """

    space: Space
    N: int
    sigma: float
    beta: float | None = None
    generalized_beta: bool = False

    def __post_init__(self):
        space = Space(self.space)
        object.__setattr__(self, "space", space)
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if not (self.sigma >= SIGMA_MIN and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be finite and >= {SIGMA_MIN}, got {self.sigma!r}")
        beta = space.native_beta if self.beta is None else float(self.beta)
        if not beta > 0:
            raise DomainError(f"beta must be positive, got {beta!r}")
        if beta != space.native_beta and not self.generalized_beta:
            raise DomainError(
                f"{space.value} has beta={space.native_beta:g}; pass generalized_beta=True "
                f"to use beta={beta:g}"
            )
        object.__setattr__(self, "beta", beta)

    @classmethod
    def from_t(cls, space, N, t, **kw) -> "EnsembleSpec":
        return cls(space, N, math.sqrt(t / N), **kw)

    @property
    def t(self) -> float:
        """'t Hooft parameter N sigma^2."""
        return self.N * self.sigma**2

    @property
    def potential(self) -> Potential:
        return potential_for(self.space)


@dataclass(frozen=True)
class PrefactorConvention:
    """Constants the normalizations depend on but that are left open.

    ``omega_beta_N`` multiplies the PD prefactor and ``vol_UN`` the Siegel
    one.  Both default to 1 so that results are comparable across routes.
    """

    omega_beta_N: float = 1.0
    vol_UN: float = 1.0
    include_prefactor: bool = True

    def __post_init__(self):
        if not (self.omega_beta_N > 0 and self.vol_UN > 0):
            raise DomainError("prefactor constants must be strictly positive")

    def as_dict(self) -> dict:
        return {
            "omega_beta_N": self.omega_beta_N,
            "vol_UN": self.vol_UN,
            "include_prefactor": self.include_prefactor,
        }


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    SKEW_POLY = "skew_poly"
    MONTE_CARLO = "monte_carlo"
    QUADRATURE = "quadrature"
    LARGE_N = "large_n"


@dataclass(frozen=True)
class PartitionResult:
    """log Z (or its reduced part) together with how it was obtained."""

    log_value: float
    method: Method
    error_estimate: float
    convention: PrefactorConvention
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.error_estimate >= 0:
            raise ValueError("error_estimate must be a nonnegative number")

    @classmethod
    def from_reduced(cls, log_reduced, spec, conv, method, error, **details):
        value = log_reduced + (log_prefactor(spec, conv) if conv.include_prefactor else 0.0)
        # double rounding of the assembled value
        error = float(error) + 4 * np.finfo(float).eps * abs(value)
        return cls(float(value), method, error, conv, details)


# --------------------------------------------------------------------------
# potentials


def _check_domain(kind, x, strict_left):
    lo, _ = _DOMAINS[kind]
    bad = (x <= lo) if strict_left else (x < lo)
    if np.any(bad) or np.any(~np.isfinite(x)):
        raise DomainError(f"potential {kind.value}: argument outside the domain {_DOMAINS[kind]}")


def potential_eval(p: Potential, x, sigma: float):
    """Value of the potential at ``x``; vectorized over arrays."""
    kind = PotentialKind(p.kind if isinstance(p, Potential) else p)
    x = np.asarray(x, dtype=float)
    if kind is PotentialKind.Q:
        _check_domain(kind, x, True)
        out = x**2 / (2 * sigma**2)
    elif kind is PotentialKind.SW:
        _check_domain(kind, x, True)
        out = np.log(x) ** 2 / (2 * sigma**2)
    else:
        # arccosh is continuous at the closed end, V_S(1) = 0
        _check_domain(kind, x, False)
        out = np.arccosh(x) ** 2 / (8 * sigma**2)
    return out[()] if out.ndim == 0 else out


def potential_deriv(p: Potential, x, sigma: float):
    """Analytic derivative of :func:`potential_eval` with respect to ``x``."""
    kind = PotentialKind(p.kind if isinstance(p, Potential) else p)
    x = np.asarray(x, dtype=float)
    _check_domain(kind, x, True)
    if kind is PotentialKind.Q:
        out = x / sigma**2
    elif kind is PotentialKind.SW:
        out = np.log(x) / (sigma**2 * x)
    else:
        out = np.arccosh(x) / (4 * sigma**2 * np.sqrt(x * x - 1))
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------
# prefactors


def n_beta(N: int, beta: float) -> float:
    return beta / 2 * (N - 1) + 1


def log_prefactor(spec: EnsembleSpec, conv: PrefactorConvention = PrefactorConvention()) -> float:
    """log of the constant in front of the eigenvalue integral.

    PD spaces: ``log C_{N,beta}(sigma)`` with
    ``C = omega (2 pi)^N 2^{-N N_beta} exp(-N N_beta^2 sigma^2 / 2)``.
    Siegel: ``log(vol_UN 2^{N(N+1)/2} N!)``.
    """
    N = spec.N
    if spec.space is Space.SIEGEL:
        return math.log(conv.vol_UN) + N * (N + 1) / 2 * math.log(2.0) + math.lgamma(N + 1)
    nb = n_beta(N, spec.beta)
    return (
        math.log(conv.omega_beta_N)
        + N * LOG_2PI
        - N * nb * math.log(2.0)
        - N * nb**2 * spec.sigma**2 / 2
    )


def log_reduced_from_integral(spec: EnsembleSpec, log_integral: float) -> float:
    """Map log I (bare eigenvalue integral) to log of Z / prefactor.

    PD: ``Z = C / ((2 pi)^N N!) * I``; Siegel: ``Z = prefactor * I``.
    """
    if spec.space is Space.SIEGEL:
        return log_integral
    return log_integral - spec.N * LOG_2PI - math.lgamma(spec.N + 1)


def log_integral_from_reduced(spec: EnsembleSpec, log_reduced: float) -> float:
    if spec.space is Space.SIEGEL:
        return log_reduced
    return log_reduced + spec.N * LOG_2PI + math.lgamma(spec.N + 1)


# --------------------------------------------------------------------------
# Vandermonde


def log_vandermonde(u, beta: float = 1.0) -> float:
    """``beta * sum_{i<j} log|u_i - u_j|``; ``-inf`` if two points coincide."""
    u = np.asarray(u, dtype=float).ravel()
    if u.size < 1:
        raise DomainError("log_vandermonde needs at least one point")
    iu = np.triu_indices(u.size, 1)
    gaps = np.abs(np.subtract.outer(u, u)[iu])
    if np.any(gaps == 0):
        return -math.inf
    return float(beta * np.sum(np.log(gaps)))


# --------------------------------------------------------------------------
# quadrature helpers


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0):
    x, w = np.polynomial.legendre.leggauss(n)
    return a + (b - a) * (x + 1) / 2, w * (b - a) / 2


def cosine_rule(a: float, b: float, n: int, theta0: float = 0.0, theta1: float = math.pi):
    """Gauss-Legendre in theta for x = a + (b - a)(1 - cos theta)/2.

    Square-root (and inverse square-root) endpoint behaviour becomes smooth
    in theta, so master-field integrals converge geometrically.  Returns
    nodes x and weights that already include dx/dtheta.
    """
    th, wt = gauss_legendre(n, theta0, theta1)
    x = a + (b - a) * (1 - np.cos(th)) / 2
    return x, wt * (b - a) / 2 * np.sin(th)


def pv_integral(f, a: float, b: float, pole: float, n: int = 128):
    """Cauchy principal value of ``int_a^b f(x) / (pole - x) dx``.

    Singularity subtraction: the regular part ``(f(x) - f(pole)) / (pole - x)``
    is integrated with :func:`cosine_rule` on each side of the pole and the
    remainder ``f(pole) log((pole - a) / (b - pole))`` is added analytically.

    ``f`` must be vectorized; it may return an array whose last axis runs over
    the sample points, in which case one principal value per leading index is
    returned.
    """
    if not (a < pole < b):
        raise DomainError(f"pole {pole!r} must lie strictly inside ({a!r}, {b!r})")
    theta_p = math.acos(1 - 2 * (pole - a) / (b - a))
    fp = np.asarray(f(np.array([pole], dtype=float)))[..., 0]
    total = 0.0
    for th0, th1 in ((0.0, theta_p), (theta_p, math.pi)):
        x, w = cosine_rule(a, b, n, th0, th1)
        fx = np.asarray(f(x))
        total = total + np.sum(w * (fx - fp[..., None]) / (pole - x), axis=-1)
    return total + fp * math.log((pole - a) / (b - pole))
