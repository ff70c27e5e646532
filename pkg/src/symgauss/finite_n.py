"""Finite-N partition functions.

* ``Z_2`` in closed form (Stieltjes-Wigert product formula).
* ``Z_1`` and ``Z_S`` through skew-orthogonal polynomials: a skew moment
  matrix is computed in extended precision and reduced to standard
  symplectic form; the product of leading coefficients is a Pfaffian.
* A brute-force tensor-product quadrature of the eigenvalue integral for
  N <= 4, used as an oracle for the other routes.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from mpmath.calculus.quadrature import GaussLegendre

from .core import (
    EnsembleSpec,
    Method,
    PartitionResult,
    Potential,
    PotentialKind,
    PrefactorConvention,
    Space,
    log_prefactor,
    log_reduced_from_integral,
    n_beta,
)
from .errors import DomainError, PrecisionError, QuadratureError

DEFAULT_BITS = 256
MAX_BITS = 2048
MAX_SKEW_N = 24
STANDARD_FORM_TOL = 1e-20
SCHEMA_VERSION = 1

# The pairing under which the leading-coefficient formulas hold exactly is
# 1/2 int int f(x) g(y) sign(y - x) w(x) w(y), i.e. -1/4 of the stored
# <f, g>_1 = 2 int int f(x) g(y) sign(x - y) w(x) w(y).
PFAFFIAN_PAIRING_SCALE = -0.25


def _context(bits: int) -> mpmath.MPContext:
    ctx = mpmath.MPContext()
    ctx.prec = int(bits)
    return ctx


# --------------------------------------------------------------------------
# closed form for beta = 2


def z2_log_reduced(N: int, sigma: float) -> float:
    """log of Z_2 / C_{N,2}; free of omega_2(N)."""
    s2 = sigma * sigma
    k = np.arange(1, N)
    tail = float(np.sum((N - k) * np.log(-np.expm1(-k * s2)))) if N > 1 else 0.0
    return (
        N / 2 * math.log(2 * math.pi * s2)
        - N * math.log(2 * math.pi)
        + (N**3 - N) * s2 / 6
        + N**3 * s2 / 2
        + tail
    )


def z2_closed_form(N: int, sigma: float, conv: PrefactorConvention = PrefactorConvention()) -> PartitionResult:
    """Exact log Z_2 for Hermitian positive definite matrices."""
    spec = EnsembleSpec(Space.PD_COMPLEX, N, sigma)
    return PartitionResult.from_reduced(
        z2_log_reduced(N, sigma), spec, conv, Method.CLOSED_FORM, 0.0
    )


# --------------------------------------------------------------------------
# extended-precision panel quadrature


class _PanelRule:
    """Gauss-Legendre nodes on [-1, 1] plus a spectral integration matrix.

    ``S[k][m]`` integrates the interpolant through the nodes from -1 up to
    node k, so cumulative integrals cost one small matrix product per panel.
    """

    def __init__(self, ctx, degree=4):
        nodes = sorted(GaussLegendre(ctx).calc_nodes(degree, ctx.prec), key=lambda p: p[0])
        self.y = [ctx.mpf(x) for x, _ in nodes]
        self.w = [ctx.mpf(w) for _, w in nodes]
        n = len(self.y)
        # Legendre values P_l(y_k) for l = 0..n
        P = [[ctx.one] * n, list(self.y)]
        for l in range(1, n):
            P.append([((2 * l + 1) * y * p1 - l * p0) / (l + 1) for y, p1, p0 in zip(self.y, P[l], P[l - 1])])
        # int_{-1}^{y} P_l = (P_{l+1} - P_{l-1}) / (2l + 1), and y + 1 for l = 0
        Q = [[y + 1 for y in self.y]]
        for l in range(1, n):
            Q.append([(P[l + 1][k] - P[l - 1][k]) / (2 * l + 1) for k in range(n)])
        self.S = [
            [
                ctx.fsum((2 * l + 1) * Q[l][k] * P[l][m] for l in range(n)) * self.w[m] / 2
                for m in range(n)
            ]
            for k in range(n)
        ]
        self.n = n


class _SubstitutedWeight:
    """e^{-V(x)} dx written in a variable z where it is Gaussian-like.

    SW: x = e^z on the real line; S: x = cosh z on z > 0.
    """

    def __init__(self, kind: PotentialKind, sigma, ctx):
        self.kind = kind
        self.ctx = ctx
        self.sigma = ctx.mpf(sigma)

    def span(self, N: int, tol_log: float):
        s = float(self.sigma)
        if self.kind is PotentialKind.SW:
            half = s * math.sqrt(2 * tol_log) + 1.0 * s
            return -half, N * s * s + half, s
        half = 2 * s * math.sqrt(2 * tol_log) + 2.0 * s
        return 0.0, 4 * s * s * N + half, 2 * s

    def x_and_density(self, z):
        """x(z) and e^{-V(x(z))} x'(z)."""
        ctx = self.ctx
        if self.kind is PotentialKind.SW:
            return ctx.exp(z), ctx.exp(z - z * z / (2 * self.sigma**2))
        return ctx.cosh(z), ctx.sinh(z) * ctx.exp(-z * z / (8 * self.sigma**2))


@dataclass
class _MomentTables:
    W: list  # quadrature weight * density at each node
    powers: list  # powers[k][j] = x_k^j
    F: list  # F[k][j] = int_a^{x_k} y^j w(y) dy
    total: list  # total[j] = int_a^b y^j w(y) dy


def _moment_tables(weight: _SubstitutedWeight, N: int, lo, hi, panels: int, rule: _PanelRule) -> _MomentTables:
    ctx = weight.ctx
    h = (ctx.mpf(hi) - lo) / panels
    W, powers, F = [], [], []
    running = [ctx.zero] * N
    for p in range(panels):
        a = lo + p * h
        gvals = []
        for y, w in zip(rule.y, rule.w):
            z = a + h * (y + 1) / 2
            x, dens = weight.x_and_density(z)
            row = [ctx.one]
            for _ in range(1, N):
                row.append(row[-1] * x)
            powers.append(row)
            W.append(w * h / 2 * dens)
            gvals.append([dens * r for r in row])
        for k in range(rule.n):
            F.append(
                [
                    running[j] + h / 2 * ctx.fdot(rule.S[k], (g[j] for g in gvals))
                    for j in range(N)
                ]
            )
        for j in range(N):
            running[j] += h / 2 * ctx.fdot(rule.w, (g[j] for g in gvals))
    return _MomentTables(W, powers, F, running)


def _skew_entries(tab: _MomentTables, N: int, ctx):
    """Upper triangle of 2 int x^i w(x) (2 F_j(x) - F_j(inf)) dx."""
    out = {}
    for i in range(N):
        wi = [W * pw[i] for W, pw in zip(tab.W, tab.powers)]
        for j in range(i + 1, N):
            out[i, j] = 2 * ctx.fdot(wi, (2 * Fk[j] - tab.total[j] for Fk in tab.F))
    return out


# --------------------------------------------------------------------------
# skew moment matrix


def _potential(p) -> Potential:
    return p if isinstance(p, Potential) else Potential(p)


@dataclass
class SkewMomentMatrix:
    """Skew products <x^i, x^j>_1 = 2 int int x^i y^j sign(x - y) w(x) w(y).

    ``M`` holds mpmath numbers (list of rows) at ``bits`` of mantissa;
    ``error`` is the per-entry absolute error estimate and ``delta`` its
    signed version (fine minus coarse quadrature).
    """

    M: list
    potential: Potential
    sigma: float
    bits: int
    error: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    moments: list = field(default_factory=list)

    @property
    def N(self) -> int:
        return len(self.M)

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.M])

    def scaled(self, factor) -> list:
        ctx = _context(self.bits)
        f = ctx.mpf(factor)
        return [[f * ctx.mpf(v) for v in row] for row in self.M]

    def cache_key(self) -> str:
        return moment_cache_key(self.potential.kind, self.sigma, self.N, self.bits)

    def to_json_dict(self) -> dict:
        ctx = _context(self.bits)
        digits = int(self.bits * math.log10(2)) + 3

        def enc(rows):
            return [[ctx.nstr(ctx.mpf(v), digits, strip_zeros=False) for v in row] for row in rows]

        return {
            "schema_version": SCHEMA_VERSION,
            "layout": "symgauss.skew_moment_matrix",
            "potential": self.potential.kind.value,
            "sigma": repr(float(self.sigma)),
            "N": self.N,
            "mantissa_bits": self.bits,
            "cache_key": self.cache_key(),
            "M": enc(self.M),
            "error": enc(self.error),
            "delta": enc(self.delta),
            "moments": [ctx.nstr(ctx.mpf(v), digits, strip_zeros=False) for v in self.moments],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SkewMomentMatrix":
        if d.get("schema_version") != SCHEMA_VERSION or d.get("layout") != "symgauss.skew_moment_matrix":
            raise ValueError("not a symgauss skew moment matrix (version %r)" % d.get("schema_version"))
        ctx = _context(d["mantissa_bits"])

        def dec(rows):
            return [[ctx.mpf(v) for v in row] for row in rows]

        return cls(
            M=dec(d["M"]),
            potential=Potential(d["potential"]),
            sigma=float(d["sigma"]),
            bits=int(d["mantissa_bits"]),
            error=dec(d["error"]),
            delta=dec(d["delta"]),
            moments=[ctx.mpf(v) for v in d["moments"]],
        )


def moment_cache_key(kind, sigma: float, N: int, bits: int) -> str:
    payload = json.dumps(
        {"potential": PotentialKind(kind).value, "sigma": repr(float(sigma)), "N": int(N), "bits": int(bits)},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def skew_moment_matrix(p, sigma: float, N: int, bits: int = DEFAULT_BITS, rel_tol=None, max_doublings: int = 6) -> SkewMomentMatrix:
    """Skew moment matrix of the SW or S weight for degrees 0..N-1.

    Adaptive panel Gauss-Legendre in the substituted variable: the panel
    count doubles until fine and coarse matrices agree to ``rel_tol``
    relative to ``2 mu_i mu_j`` (``mu`` the single moments).  Raises
    :class:`QuadratureError` naming the worst entry otherwise.
    """
    p = _potential(p)
    if p.kind not in (PotentialKind.SW, PotentialKind.S):
        raise DomainError("skew moments are implemented for the SW and S potentials")
    if N < 2 or N % 2:
        raise DomainError(f"N must be even and >= 2, got {N}")
    ctx = _context(bits)
    if rel_tol is None:
        rel_tol = 2.0 ** (-bits / 2)
    tol_log = (bits + 16) * math.log(2)
    weight = _SubstitutedWeight(p.kind, sigma, ctx)
    lo, hi, width = weight.span(N, tol_log)
    rule = _PanelRule(ctx)
    panels = max(4, math.ceil((hi - lo) / width))

    tab = _moment_tables(weight, N, lo, hi, panels, rule)
    coarse = _skew_entries(tab, N, ctx)
    worst, where = math.inf, None
    for _ in range(max_doublings):
        panels *= 2
        tab = _moment_tables(weight, N, lo, hi, panels, rule)
        fine = _skew_entries(tab, N, ctx)
        worst, where = 0.0, None
        for (i, j), v in fine.items():
            rel = float(abs(v - coarse[i, j]) / (2 * tab.total[i] * tab.total[j]))
            if rel > worst:
                worst, where = rel, (i, j)
        if worst <= rel_tol:
            break
        coarse = fine
    else:
        raise QuadratureError(
            f"skew moments did not converge: relative change {worst:.3g} > {rel_tol:.3g}",
            achieved=worst,
            where=where,
        )

    zero = ctx.zero
    M = [[zero] * N for _ in range(N)]
    err = [[zero] * N for _ in range(N)]
    dlt = [[zero] * N for _ in range(N)]
    for (i, j), v in fine.items():
        d = v - coarse[i, j]
        M[i][j], M[j][i] = v, -v
        dlt[i][j], dlt[j][i] = d, -d
        err[i][j] = err[j][i] = abs(d)
    return SkewMomentMatrix(M, p, float(sigma), int(bits), err, dlt, list(tab.total))


def sw_single_moment(k: int, sigma: float, ctx=None):
    """int_0^inf x^k exp(-log^2 x / (2 sigma^2)) dx = sqrt(2 pi) sigma e^{(k+1)^2 sigma^2 / 2}."""
    ctx = ctx or _context(DEFAULT_BITS)
    s = ctx.mpf(sigma)
    return ctx.sqrt(2 * ctx.pi) * s * ctx.exp((k + 1) ** 2 * s * s / 2)


# --------------------------------------------------------------------------
# symplectic Gram-Schmidt


@dataclass
class SkewBasis:
    """Polynomials R_0..R_{N-1} in standard symplectic form.

    ``coeffs[j][i]`` is the coefficient of x^i in R_j (zero for i > j);
    ``leading[j]`` is the x^j coefficient.  Even members are monic.
    """

    coeffs: list
    leading: list
    defect: float
    bits: int

    def log_leading_product(self) -> float:
        ctx = _context(self.bits)
        prod = ctx.fprod(ctx.mpf(a) for a in self.leading)
        if prod <= 0:
            raise ArithmeticError("product of leading coefficients is not positive")
        return float(ctx.log(prod))

    def to_json_dict(self) -> dict:
        ctx = _context(self.bits)
        digits = int(self.bits * math.log10(2)) + 3
        return {
            "schema_version": SCHEMA_VERSION,
            "layout": "symgauss.skew_basis",
            "mantissa_bits": self.bits,
            "defect": self.defect,
            "coeffs": [[ctx.nstr(ctx.mpf(v), digits, strip_zeros=False) for v in row] for row in self.coeffs],
            "leading": [ctx.nstr(ctx.mpf(v), digits, strip_zeros=False) for v in self.leading],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SkewBasis":
        if d.get("schema_version") != SCHEMA_VERSION or d.get("layout") != "symgauss.skew_basis":
            raise ValueError("not a symgauss skew basis")
        ctx = _context(d["mantissa_bits"])
        return cls(
            coeffs=[[ctx.mpf(v) for v in row] for row in d["coeffs"]],
            leading=[ctx.mpf(v) for v in d["leading"]],
            defect=float(d["defect"]),
            bits=int(d["mantissa_bits"]),
        )


def _as_rows(M, ctx):
    if isinstance(M, SkewMomentMatrix):
        M = M.M
    return [[ctx.mpf(v) for v in row] for row in (M.tolist() if isinstance(M, np.ndarray) else M)]


def pairing_matrix(basis: SkewBasis, M, scale=1) -> list:
    """C (scale * M) C^T for the coefficient matrix C of ``basis``."""
    ctx = _context(basis.bits)
    P = _as_rows(M, ctx)
    s = ctx.mpf(scale)
    C = basis.coeffs
    N = len(C)
    CP = [[ctx.fdot(C[a], (P[i][j] for i in range(N))) for j in range(N)] for a in range(N)]
    return [[s * ctx.fdot(CP[a], C[b]) for b in range(N)] for a in range(N)]


def symplectic_gram_schmidt(M, scale=1, bits: int | None = None, guard_bits: int = 32) -> SkewBasis:
    """Bring the antisymmetric pairing ``scale * M`` to standard form.

    Modified symplectic Gram-Schmidt over the monomials.  For every pair
    the even member stays monic and the odd member absorbs the pivot, so
    ``leading = (1, 1/c_0, 1, 1/c_1, ...)`` and ``prod(leading)`` is the
    inverse Pfaffian.  A pivot lost in rounding raises
    :class:`PrecisionError` with a doubled mantissa request.
    """
    if bits is None:
        bits = M.bits if isinstance(M, SkewMomentMatrix) else DEFAULT_BITS
    ctx = _context(bits)
    s = ctx.mpf(scale)
    P = [[s * v for v in row] for row in _as_rows(M, ctx)]
    N = len(P)
    if N % 2 or any(len(r) != N for r in P):
        raise DomainError("pairing matrix must be square with even size")
    absP = [[abs(v) for v in row] for row in P]

    def pair(u, v, Mat=P):
        return ctx.fdot(u, (ctx.fdot(Mat[i], v) for i in range(N)))

    R = []
    leading = []
    for k in range(N // 2):
        pq = []
        for deg in (2 * k, 2 * k + 1):
            v = [ctx.zero] * N
            v[deg] = ctx.one
            for l in range(k):
                e, o = R[2 * l], R[2 * l + 1]
                ao, ae = pair(v, o), pair(v, e)
                v = [vi - ao * ei + ae * oi for vi, ei, oi in zip(v, e, o)]
            pq.append(v)
        p, q = pq
        c = pair(p, q)
        magnitude = pair([abs(x) for x in p], [abs(x) for x in q], absP)
        if c == 0 or abs(c) <= magnitude * ctx.ldexp(1, guard_bits - bits):
            raise PrecisionError(
                f"pivot {k} lost to cancellation at {bits} bits", required_bits=2 * bits
            )
        R.extend([p, [x / c for x in q]])
        leading.extend([ctx.one, 1 / c])

    basis = SkewBasis(R, leading, 0.0, bits)
    G = pairing_matrix(basis, P)
    defect = ctx.zero
    for a in range(N):
        for b in range(N):
            target = 1 if (a % 2 == 0 and b == a + 1) else (-1 if (b % 2 == 0 and a == b + 1) else 0)
            defect = max(defect, abs(G[a][b] - target))
    basis.defect = float(defect)
    return basis


# --------------------------------------------------------------------------
# Z_1 and Z_S


@dataclass
class _SkewRoute:
    log_leading: float
    error: float
    bits: int
    defect: float
    moments: SkewMomentMatrix
    basis: SkewBasis


def _skew_route(p, sigma, N, bits, max_bits, moments_cache=None) -> _SkewRoute:
    p = _potential(p)
    if N % 2 or N < 2:
        raise DomainError(f"the skew route needs even N >= 2, got {N}")
    if N > MAX_SKEW_N:
        raise DomainError(f"N={N} exceeds the skew-route cap {MAX_SKEW_N}; use the large-N route")
    b = bits
    last = None
    while b <= max_bits:
        moments = moments_cache(p, sigma, N, b) if moments_cache else skew_moment_matrix(p, sigma, N, b)
        try:
            basis = symplectic_gram_schmidt(moments, PFAFFIAN_PAIRING_SCALE, bits=b)
        except PrecisionError as exc:
            last = exc
            b = exc.required_bits
            continue
        if basis.defect > STANDARD_FORM_TOL:
            last = PrecisionError(f"standard-form defect {basis.defect:.3g} at {b} bits", 2 * b)
            b *= 2
            continue
        log_lead = basis.log_leading_product()
        coarse = [[v - d for v, d in zip(r, dr)] for r, dr in zip(moments.M, moments.delta)]
        log_coarse = symplectic_gram_schmidt(coarse, PFAFFIAN_PAIRING_SCALE, bits=b).log_leading_product()
        return _SkewRoute(log_lead, abs(log_lead - log_coarse), b, basis.defect, moments, basis)
    raise PrecisionError(f"skew route failed up to {max_bits} bits: {last}", required_bits=2 * max_bits)


def log_integral_skew(p, sigma, N, bits=DEFAULT_BITS, max_bits=MAX_BITS) -> tuple[float, float]:
    """log of int_{(a,b)^N} prod w |Delta| via the Pfaffian identity, with error."""
    r = _skew_route(p, sigma, N, bits, max_bits)
    m = N // 2
    return math.lgamma(N + 1) + m * math.log(2.0) - r.log_leading, r.error


def z1_finite(N: int, sigma: float, conv: PrefactorConvention = PrefactorConvention(), bits: int = DEFAULT_BITS, max_bits: int = MAX_BITS, moments_cache=None) -> PartitionResult:
    """log Z_1 for real SPD matrices, N even, from SW skew-orthogonal polynomials.

    ``Z_1 = omega / 2^{N m} exp(-N ((N-1)/2 + 1)^2 sigma^2 / 2) / prod_l a_l``
    with ``a_l`` the leading coefficients for all N degrees 0..N-1.
    """
    spec = EnsembleSpec(Space.PD_REAL, N, sigma)
    r = _skew_route(PotentialKind.SW, sigma, N, bits, max_bits, moments_cache)
    m = N // 2
    log_z1 = (
        math.log(conv.omega_beta_N)
        - N * m * math.log(2.0)
        - N * n_beta(N, 1.0) ** 2 * sigma**2 / 2
        - r.log_leading
    )
    reduced = log_z1 - log_prefactor(spec, conv)
    return PartitionResult.from_reduced(
        reduced, spec, conv, Method.SKEW_POLY, r.error,
        mantissa_bits=r.bits, standard_form_defect=r.defect, log_leading_product=r.log_leading,
    )


def zS_finite(N: int, sigma: float, conv: PrefactorConvention = PrefactorConvention(), bits: int = DEFAULT_BITS, max_bits: int = MAX_BITS, moments_cache=None) -> PartitionResult:
    """log Z_S for the Siegel domain, N even, from S skew-orthogonal polynomials.

    The Pfaffian gives ``I_S = N! 2^m / prod_l b_l`` for the |Delta|
    integral over (1, inf)^N, which is then multiplied by
    ``vol_UN 2^{N(N+1)/2} N!``.
    """
    spec = EnsembleSpec(Space.SIEGEL, N, sigma)
    r = _skew_route(PotentialKind.S, sigma, N, bits, max_bits, moments_cache)
    m = N // 2
    log_integral = math.lgamma(N + 1) + m * math.log(2.0) - r.log_leading
    return PartitionResult.from_reduced(
        log_reduced_from_integral(spec, log_integral), spec, conv, Method.SKEW_POLY, r.error,
        mantissa_bits=r.bits, standard_form_defect=r.defect, log_leading_product=r.log_leading,
    )


# --------------------------------------------------------------------------
# brute-force quadrature oracle

_DEFAULT_GRID = {1: 200, 2: 100, 3: 48, 4: 32}
MAX_QUAD_N = 4


def _ordered_rule(spec: EnsembleSpec, n: int):
    """Per-axis rules for the ordered chamber z_1 < ... < z_N.

    Coordinates are the smallest substituted variable and the N - 1 gaps, in
    which |Delta| is smooth; the full orthant is N! times the chamber.
    """
    s = spec.sigma
    kmax = 1 + spec.beta * (spec.N - 1)
    if spec.space is Space.SIEGEL:
        lo, hi = 0.0, 4 * s * s * kmax + 20 * s
    else:
        lo, hi = -10 * s, kmax * s * s + 10 * s
    first = _gl_rule(n, lo, hi)
    gap = _gl_rule(n, 0.0, hi - lo)
    return first, gap


def _gl_rule(n, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    return a + (b - a) * (x + 1) / 2, w * (b - a) / 2


def _log_chamber_integral(spec: EnsembleSpec, n: int) -> float:
    N, beta, s = spec.N, spec.beta, spec.sigma
    (z1, w1), (g, wg) = _ordered_rule(spec, n)
    siegel = spec.space is Space.SIEGEL
    grids = np.meshgrid(*([g] * (N - 1)), indexing="ij") if N > 1 else []
    gaps = [x.ravel() for x in grids]
    logw_gaps = np.zeros(n ** (N - 1))
    for k in range(N - 1):
        idx = np.unravel_index(np.arange(n ** (N - 1)), (n,) * (N - 1))[k]
        logw_gaps += np.log(wg[idx])
    terms = []
    for a, wa in zip(z1, w1):
        z = [np.full_like(logw_gaps, a)]
        for k in range(N - 1):
            z.append(z[-1] + gaps[k])
        if siegel:
            x = [np.cosh(v) for v in z]
            logf = sum(-v * v / (8 * s * s) + np.log(np.sinh(v)) for v in z)
        else:
            x = [np.exp(v) for v in z]
            logf = sum(-v * v / (2 * s * s) + v for v in z)
        for i in range(N):
            for j in range(i + 1, N):
                with np.errstate(divide="ignore"):
                    logf = logf + beta * np.log(x[j] - x[i])
        terms.append(math.log(wa) + logw_gaps + logf)
    allt = np.concatenate(terms)
    allt = allt[np.isfinite(allt)]
    top = allt.max()
    return math.lgamma(N + 1) + top + math.log(np.sum(np.exp(allt - top)))


def direct_quadrature_logZ(spec: EnsembleSpec, gridpoints: int | None = None, conv: PrefactorConvention = PrefactorConvention()) -> PartitionResult:
    """Tensor-product quadrature of the N-dimensional eigenvalue integral.

    The integrand uses |Delta|^beta over the full orthant (for Siegel as
    well).  Two grids, ``gridpoints`` and twice that, are evaluated; the
    finer value is returned and their difference is the error estimate.
    """
    if spec.N > MAX_QUAD_N:
        raise DomainError(
            f"direct quadrature costs (2 * gridpoints)^N evaluations; N={spec.N} exceeds {MAX_QUAD_N}"
        )
    n = gridpoints or _DEFAULT_GRID[spec.N]
    if n < 2:
        raise DomainError("gridpoints must be at least 2")
    coarse = _log_chamber_integral(spec, n)
    fine = _log_chamber_integral(spec, 2 * n)
    return PartitionResult.from_reduced(
        log_reduced_from_integral(spec, fine), spec, conv, Method.QUADRATURE, abs(fine - coarse),
        log_integral=fine, gridpoints=2 * n,
    )
