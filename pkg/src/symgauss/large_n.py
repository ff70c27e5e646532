"""Large-N limit: master fields, the universal free energy and Li_3.

Conventions.  With sigma^2 = t / N the eigenvalue gas exp(-sum V + beta
log|Delta|) concentrates on a density rho that satisfies

    V'(lam; 1) / (beta t) = PV int rho(l) / (lam - l) dl

on its support.  The closed-form semicircle and Stieltjes-Wigert fields
returned for parameter t are the beta = 2 solutions; a gas at (beta, t)
follows the field at beta t / 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev
from scipy.integrate import cumulative_simpson

from .core import (
    EnsembleSpec,
    Method,
    PartitionResult,
    PotentialKind,
    PrefactorConvention,
    Space,
    cosine_rule,
    gauss_legendre,
    potential_deriv,
    pv_integral,
)
from .errors import DomainError, QuadratureError, SolverError

SCHEMA_VERSION = 1
EDGE_MARGIN = 0.01
F_UNI_TOL = 1e-7
TRILOG_TOL = 1e-14
_CDF_POINTS = 4097


@dataclass
class MasterField:
    """A continuum eigenvalue density on ``support``.

    ``density`` is vectorized and vanishes outside the support.  ``info``
    carries solver diagnostics (endpoint, residuals, configuration) for
    fields that are not closed forms.
    """

    kind: PotentialKind
    t: float
    support: tuple[float, float]
    density: Callable = field(repr=False)
    source: str = "closed_form"
    info: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.kind = PotentialKind(self.kind)
        a, b = self.support
        if not a < b:
            raise DomainError(f"empty support [{a}, {b}]")
        self.support = (float(a), float(b))
        self._cdf_table = None

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        a, b = self.support
        inside = (lam > a) & (lam < b)
        out = np.zeros_like(lam)
        if np.any(inside):
            out[inside] = self.density(lam[inside])
        return out[()] if out.ndim == 0 else out

    @property
    def width(self) -> float:
        return self.support[1] - self.support[0]

    def integrate(self, g=None, n: int = 400) -> float:
        """``int g(lam) rho(lam) dlam`` by the cosine rule (g = 1 by default)."""
        lam, w = cosine_rule(*self.support, n)
        vals = self.density(lam)
        if g is not None:
            vals = vals * g(lam)
        return float(np.sum(w * vals))

    def normalization(self, n: int = 400) -> float:
        return self.integrate(None, n)

    def _table(self):
        if self._cdf_table is None:
            a, b = self.support
            th = np.linspace(0.0, math.pi, _CDF_POINTS)
            lam = a + (b - a) * (1 - np.cos(th)) / 2
            g = np.zeros_like(th)
            g[1:-1] = self.density(lam[1:-1]) * (b - a) / 2 * np.sin(th[1:-1])
            # the integrand in theta is bounded at both ends; extrapolate linearly
            g[0] = 2 * g[1] - g[2]
            g[-1] = 2 * g[-2] - g[-3]
            cdf = cumulative_simpson(g, x=th, initial=0.0)
            self._cdf_table = (th, lam, np.clip(cdf, 0.0, None))
        return self._cdf_table

    def cdf(self, lam):
        a, b = self.support
        th, _, cdf = self._table()
        z = np.clip((np.asarray(lam, dtype=float) - a) / (b - a), 0.0, 1.0)
        out = np.clip(np.interp(np.arccos(1 - 2 * z), th, cdf), 0.0, 1.0)
        return out[()] if out.ndim == 0 else out

    def quantile(self, q):
        _, lam, cdf = self._table()
        return np.interp(np.asarray(q, dtype=float), np.maximum.accumulate(cdf), lam)

    def header(self) -> dict:
        info = {k: v for k, v in self.info.items() if k != "coefficients"}
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind.value,
            "t": self.t,
            "support": list(self.support),
            "source": self.source,
            **info,
        }

    def to_csv(self, path, grid: int = 512, extra: dict | None = None) -> Path:
        """Write ``lambda,rho`` on a uniform grid, preceded by a JSON header line."""
        if grid < 2:
            raise DomainError("grid must have at least 2 points")
        path = Path(path)
        lam = np.linspace(*self.support, grid)
        rho = self(lam)
        head = {**self.header(), **(extra or {}), "grid": grid}
        with open(path, "w") as fh:
            fh.write("# " + json.dumps(head, sort_keys=True) + "\n")
            fh.write("lambda,rho\n")
            for x, y in zip(lam, rho):
                fh.write(f"{float(x)!r},{float(y)!r}\n")
        return path


def read_master_field_csv(path) -> tuple[dict, np.ndarray]:
    with open(path) as fh:
        head = json.loads(fh.readline()[2:])
    return head, np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)


# --------------------------------------------------------------------------
# closed-form fields


def _check_t(t):
    if not (t > 0 and math.isfinite(t)):
        raise DomainError(f"t must be positive and finite, got {t!r}")


def master_field_q(t: float) -> MasterField:
    """Semicircle of radius 2 sqrt(t)."""
    _check_t(t)
    r = 2 * math.sqrt(t)

    def density(lam):
        return np.sqrt(np.maximum(r * r - lam * lam, 0.0)) / (2 * math.pi * t)

    return MasterField(PotentialKind.Q, t, (-r, r), density)


def sw_support(t: float) -> tuple[float, float]:
    """Ordered endpoints of the Stieltjes-Wigert support.

    Equal to ``2e^{2t} - e^t -/+ 2 e^{3t/2} sqrt(e^t - 1)``, written as
    ``(1 + s)^{-2}`` and ``(1 + s)^2 e^{2t}`` with ``s = sqrt(1 - e^{-t})``
    to avoid cancellation at small t.
    """
    _check_t(t)
    s = math.sqrt(-math.expm1(-t))
    return 1 / (1 + s) ** 2, (1 + s) ** 2 * math.exp(2 * t)


def master_field_sw(t: float) -> MasterField:
    """Stieltjes-Wigert master field.

    ``rho(lam) = arctan(sqrt(4 lam - (1 + q lam)^2) / (1 + q lam)) / (pi t lam)``
    with ``q = e^{-t}``; the radicand factorizes as ``q^2 (lam - a)(b - lam)``.
    """
    a, b = sw_support(t)
    q = math.exp(-t)

    def density(lam):
        g = q * np.sqrt(np.maximum((lam - a) * (b - lam), 0.0))
        return np.arctan(g / (1 + q * lam)) / (math.pi * t * lam)

    return MasterField(PotentialKind.SW, t, (a, b), density)


# --------------------------------------------------------------------------
# saddle-point equation


def saddle_lhs(kind, lam, beta: float, t: float):
    """Left side ``V'(lam; sigma=1) / (beta t)`` of the saddle-point equation."""
    return potential_deriv(PotentialKind(kind), lam, 1.0) / (beta * t)


def saddle_residual(mf: MasterField, beta: float, probes, t: float | None = None, n: int = 128):
    """LHS minus PV integral of the field at each probe point.

    ``t`` defaults to ``mf.t``.  Probes closer than 1% of the support width
    to an edge (or outside it) are rejected individually: their entry is NaN.
    """
    t = mf.t if t is None else t
    if not beta > 0:
        raise DomainError("beta must be positive")
    a, b = mf.support
    margin = EDGE_MARGIN * (b - a)
    probes = np.atleast_1d(np.asarray(probes, dtype=float))
    out = np.full(probes.shape, np.nan)
    for i, p in enumerate(probes):
        if a + margin <= p <= b - margin:
            out[i] = saddle_lhs(mf.kind, p, beta, t) - pv_integral(mf.density, a, b, p, n)
    return out


def interior_probes(mf: MasterField, k: int = 10) -> np.ndarray:
    """``k`` points spread over the support, clear of the edge margin."""
    a, b = mf.support
    return a + (b - a) * np.linspace(0.05, 0.95, k)


# --------------------------------------------------------------------------
# free energy


def _f_uni_at(mf: MasterField, n: int) -> float:
    a, b = mf.support
    t = mf.t
    lam, w = cosine_rule(a, b, n)
    potential = -np.sum(w * mf.density(lam) * np.log(lam) ** 2) / (2 * t)
    # int int rho rho log|x - y| = 2 int_0^L log(d) G(d) dd with the
    # autocorrelation G(d) = int rho(y) rho(y + d) dy; d = L s^3 grades
    # the mesh towards the log singularity
    L = b - a
    s, ws = gauss_legendre(n, 0.0, 1.0)
    d = L * s**3
    jd = 3 * L * s**2
    y, wy = cosine_rule(0.0, 1.0, n)
    ylo = a + np.outer(L - d, y)
    G = np.sum(wy * (L - d)[:, None] * mf.density(ylo) * mf.density(ylo + d[:, None]), axis=1)
    interaction = 2 * np.sum(ws * jd * np.log(d) * G)
    return float(potential + interaction)


def f_uni_estimate(t: float, n: int = 200) -> tuple[float, float]:
    """F_uni(t) at grid n and the change under refinement to 2n."""
    mf = master_field_sw(t)
    coarse = _f_uni_at(mf, n)
    fine = _f_uni_at(mf, 2 * n)
    return fine, abs(fine - coarse)


def f_uni(t: float, n: int = 200, tol: float = F_UNI_TOL) -> float:
    """Planar free energy of the Stieltjes-Wigert gas.

    ``-1/(2t) int rho log^2 + int int rho rho log|x - y|`` over the master
    field at ``t``.  Raises :class:`QuadratureError` when doubling the grid
    moves the value by more than ``tol``.
    """
    value, err = f_uni_estimate(t, n)
    if not err <= tol:
        raise QuadratureError(f"F_uni({t}) did not converge: grid refinement changed it by {err:.3g}", achieved=err)
    return value


def large_n_log_reduced(N: int, t: float, beta: float = 2.0) -> tuple[float, float]:
    """Planar approximation ``N^2 (beta/2) F_uni(beta t / 2)`` of the reduced log Z.

    Returns (value, quadrature error).  The truncation of the genus
    expansion is not part of the error.
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    value, err = f_uni_estimate(beta * t / 2)
    if not err <= F_UNI_TOL:
        raise QuadratureError(f"F_uni({beta * t / 2}) did not converge", achieved=err)
    scale = N * N * beta / 2
    return scale * value, scale * err


def large_n_partition(spec: EnsembleSpec, conv: PrefactorConvention = PrefactorConvention()) -> PartitionResult:
    if spec.space is Space.SIEGEL:
        raise DomainError("no planar free energy is available for the Siegel domain")
    value, err = large_n_log_reduced(spec.N, spec.t, spec.beta)
    return PartitionResult.from_reduced(
        value, spec, conv, Method.LARGE_N, err, t=spec.t, beta=spec.beta, truncation="genus expansion beyond planar order not included"
    )


# --------------------------------------------------------------------------
# trilogarithm


def _zeta3() -> tuple[float, float]:
    K = 50_000
    k = np.arange(1, K + 1, dtype=float)
    head = math.fsum(1.0 / k**3)
    # sum_{k > K} k^-3 lies in [1/(2(K+1)^2), 1/(2K^2)]
    lo, hi = 1 / (2 * (K + 1) ** 2), 1 / (2 * K**2)
    # fsum rounds the head once
    return head + (lo + hi) / 2, (hi - lo) / 2 + 2e-16


def _series(x: float) -> tuple[float, float]:
    """Direct summation for |x| <= 0.75 or -1 <= x < 0."""
    ax = abs(x)
    if ax == 0:
        return 0.0, 0.0
    terms = []
    k = 0
    chunk = 4096
    while True:
        ks = np.arange(k + 1, k + chunk + 1, dtype=float)
        terms.append(np.power(x, ks) / ks**3)
        k += chunk
        nxt = ax ** (k + 1) / (k + 1) ** 3
        # alternating series: first omitted term; positive: geometric majorant
        bound = nxt if x < 0 else nxt / (1 - ax)
        if bound < 1e-17:
            break
    return math.fsum(np.concatenate(terms)), bound + 1e-16


def trilog_with_bound(x: float) -> tuple[float, float]:
    """Li_3(x) on [-1, 1] with an upper bound on its absolute error.

    x = 1 sums the p-series and brackets its tail.  Points in (0.75, 1) are
    mapped by the inversion identity
    ``Li3(x) + Li3(1-x) + Li3(1-1/x) = zeta(3) + L^3/6 + zeta(2) L - L^2 log(1-x)/2``
    with ``L = log x``, whose series all converge geometrically.
    """
    x = float(x)
    if not -1.0 <= x <= 1.0:
        raise DomainError(f"trilog needs |x| <= 1, got {x!r}")
    if x == 1.0:
        return _zeta3()
    if x <= 0.75:
        return _series(x)
    z3, e0 = _zeta3()
    s1, e1 = _series(1 - x)
    s2, e2 = _series(1 - 1 / x)
    L = math.log(x)
    rest = L**3 / 6 + math.pi**2 / 6 * L - 0.5 * L * L * math.log1p(-x)
    return z3 + rest - s1 - s2, e0 + e1 + e2 + 8e-16 * (abs(z3) + abs(rest))


def trilog(x: float) -> float:
    """Trilogarithm sum_k x^k / k^3 for |x| <= 1."""
    return trilog_with_bound(x)[0]


def z2_asymptotic(N: int, t: float) -> float:
    """Large-N formula for (1/N^2) log Z_2 at sigma^2 = t / N.

    Includes an N-dependent constant that assumes a particular omega_2(N);
    it is a diagnostic, see :func:`f_uni` for the omega-free planar value.
    """
    if N < 1:
        raise DomainError("N must be a positive integer")
    _check_t(t)
    zeta3 = trilog(1.0)
    return -0.5 * math.log(2 * N / math.pi) + 0.75 + t / 6 - (trilog(math.exp(-t)) - zeta3) / t**2


# --------------------------------------------------------------------------
# Siegel saddle-point equation


def _siegel_basis(lam, b, K):
    x = 2 * (lam - 1) / (b - 1) - 1
    w = np.sqrt(np.maximum(b - lam, 0.0) / np.maximum(lam - 1, 1e-300))
    return chebyshev.chebvander(x, K - 1).T * w


def _siegel_density(c, b):
    def density(lam):
        lam = np.asarray(lam, dtype=float)
        x = 2 * (lam - 1) / (b - 1) - 1
        return chebyshev.chebval(x, c) * np.sqrt(np.maximum(b - lam, 0.0) / (lam - 1))

    return density


def _siegel_norm(c, b):
    # int T_j(x) sqrt((1-x)/(1+x)) dx = pi [j=0] - pi/2 [j=1]
    c1 = c[1] if len(c) > 1 else 0.0
    return (b - 1) / 2 * math.pi * (c[0] - c1 / 2)


def siegel_saddle_solve(t: float, basis_size: int = 16, collocation: int | None = None,
                        b0: float | None = None, pv_nodes: int = 120, tol: float = 1e-12,
                        max_iter: int = 40) -> MasterField:
    """Numerical master field for the arccosh^2 potential at beta = 1.

    Ansatz ``rho = h(lam) sqrt((b - lam)/(lam - 1))`` on [1, b] with ``h`` a
    Chebyshev series of ``basis_size`` terms in the mapped variable.  For a
    fixed ``b`` the collocated saddle equation is linear in the coefficients
    and is solved exactly (least squares if ``collocation > basis_size``);
    the right endpoint is then found by damped Newton on the normalization.
    """
    _check_t(t)
    K = int(basis_size)
    if K < 4:
        raise DomainError("basis_size must be at least 4")
    m = K if collocation is None else int(collocation)
    if m < K:
        raise DomainError("need at least as many collocation nodes as basis functions")
    nodes = np.cos(math.pi * (np.arange(m) + 0.5) / m)

    def project(b):
        lams = 1 + (b - 1) * (1 + nodes) / 2
        A = np.array([pv_integral(lambda l: _siegel_basis(l, b, K), 1.0, b, p, pv_nodes) for p in lams])
        rhs = saddle_lhs(PotentialKind.S, lams, 1.0, t)
        c = np.linalg.lstsq(A, rhs, rcond=None)[0] if m > K else np.linalg.solve(A, rhs)
        return _siegel_norm(c, b) - 1.0, c, float(np.max(np.abs(A @ c - rhs)))

    b = 1 + 4 * t if b0 is None else float(b0)
    if not b > 1:
        raise DomainError("initial endpoint must exceed 1")
    r, c, coll = project(b)
    history = [(b, r, coll)]
    for _ in range(max_iter):
        if abs(r) < tol:
            break
        h = 1e-6 * (b - 1)
        deriv = (project(b + h)[0] - project(b - h)[0]) / (2 * h)
        if not (deriv != 0 and math.isfinite(deriv)):
            raise SolverError("normalization is insensitive to the endpoint", history)
        step = -r / deriv
        damp = 1.0
        while True:
            bn = b + damp * step
            if bn > 1:
                rn, cn, colln = project(bn)
                if abs(rn) < abs(r):
                    break
            damp /= 2
            if damp < 1e-6:
                raise SolverError("damped Newton step failed to reduce the residual", history)
        b, r, c, coll = bn, rn, cn, colln
        history.append((b, r, coll))
    else:
        if abs(r) >= tol:
            raise SolverError(f"no convergence after {max_iter} iterations (normalization residual {r:.3g})", history)

    density = _siegel_density(c, b)
    grid = 1 + (b - 1) * (1 - np.cos(np.linspace(0, math.pi, 4001)[1:-1])) / 2
    hmin = float(np.min(chebyshev.chebval(2 * (grid - 1) / (b - 1) - 1, c)))
    if hmin < -1e-10:
        raise SolverError(f"solution has negative density (min h = {hmin:.3g})", history)
    mf = MasterField(PotentialKind.S, t, (1.0, b), density, source="solver")
    probes = 1 + (b - 1) * np.linspace(0.02, 0.98, 49)
    residual = saddle_residual(mf, 1.0, probes, n=pv_nodes)
    mf.info = {
        "b": b,
        "max_residual": float(np.nanmax(np.abs(residual))),
        "collocation_residual": coll,
        "normalization_residual": r,
        "iterations": len(history) - 1,
        "history": [list(map(float, h)) for h in history],
        "solver": {"basis_size": K, "collocation": m, "pv_nodes": pv_nodes, "tol": tol, "b0": history[0][0]},
        "coefficients": [float(v) for v in c],
    }
    return mf
