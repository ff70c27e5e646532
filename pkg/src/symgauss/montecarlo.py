"""Stochastic oracles.

``mc_log_partition`` estimates the bare eigenvalue integral by importance
sampling with a proposal that absorbs the one-body weight exactly.
``coulomb_metropolis`` samples the eigenvalue gas exp(N^2 V_eff) so that
its empirical density can be compared with master fields.

All randomness comes from a Philox counter-based generator seeded by the
caller; identical seeds and settings give bit-identical output.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.special import gammaln

from . import _gas_kernel
from .core import (
    LOG_2PI,
    EnsembleSpec,
    Method,
    PartitionResult,
    PotentialKind,
    PrefactorConvention,
    Space,
    log_reduced_from_integral,
    log_vandermonde,
)
from .errors import DomainError, TuningError

RNG_NAME = f"numpy.random.Philox (numpy {np.__version__})"
SCHEMA_VERSION = 1
MC_CHUNK = 1 << 16
_KIND_CODE = {PotentialKind.Q: 0, PotentialKind.SW: 1, PotentialKind.S: 2}


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


# --------------------------------------------------------------------------
# importance sampling


@dataclass(frozen=True)
class McEstimate:
    log_value: float
    std_error: float
    n_samples: int
    seed: int
    ess: float = math.nan
    warning: str | None = None
    proposal: str = "iid"


def proposal_params(spec: EnsembleSpec) -> tuple[float, float, float]:
    """(tau, mean, sd) of the Gaussian proposal in log u (PD) or theta (Siegel).

    ``tau`` is the Gaussian width of the one-body weight in that variable.
    The mean absorbs the Jacobian e^y and, on average, the Vandermonde
    pull; the width is inflated by the same factor so that the proposal
    tails dominate the target and the weights stay bounded.
    """
    tau = 2 * spec.sigma if spec.space is Space.SIEGEL else spec.sigma
    c2 = 1 + spec.beta * (spec.N - 1) / 2
    return tau, c2 * tau * tau, math.sqrt(c2) * tau


def _log_normal_pdf(x, sd):
    return -x * x / (2 * sd * sd) - math.log(math.sqrt(2 * math.pi) * sd)


def _log_weights(spec: EnsembleSpec, z: np.ndarray) -> np.ndarray:
    s = spec.sigma
    _, mu, sd = proposal_params(spec)
    y = mu + sd * z
    with np.errstate(divide="ignore"):
        if spec.space is Space.SIEGEL:
            # u = cosh(theta), theta = |y| follows a folded normal
            theta = np.abs(y)
            u = np.cosh(theta)
            log_q = np.logaddexp(_log_normal_pdf(theta - mu, sd), _log_normal_pdf(theta + mu, sd))
            lw = np.sum(-theta * theta / (8 * s * s) + np.log(np.sinh(theta)) - log_q, axis=1)
        else:
            u = np.exp(y)
            lw = np.sum(-y * y / (2 * s * s) + y - _log_normal_pdf(y - mu, sd), axis=1)
        N = spec.N
        for i in range(N):
            for j in range(i + 1, N):
                lw = lw + spec.beta * np.log(np.abs(u[:, i] - u[:, j]))
    return lw


def log_mehta(N: int, beta: float) -> float:
    """log of int_{R^N} prod e^{-x^2/2} |Delta(x)|^beta dx."""
    j = np.arange(1, N + 1)
    return N / 2 * LOG_2PI + float(np.sum(gammaln(1 + j * beta / 2) - gammaln(1 + beta / 2)))


def gaussian_beta_ensemble(rng: np.random.Generator, n: int, N: int, beta: float) -> np.ndarray:
    """``n`` draws from the density proportional to prod e^{-x^2/2} |Delta(x)|^beta.

    Tridiagonal model: normal diagonal, chi-distributed off-diagonal with
    ``beta (N-1), ..., beta`` degrees of freedom.
    """
    H = np.zeros((n, N, N))
    idx = np.arange(N)
    H[:, idx, idx] = math.sqrt(2.0) * rng.standard_normal((n, N))
    for k in range(N - 1):
        c = np.sqrt(rng.chisquare(beta * (N - 1 - k), n))
        H[:, k, k + 1] = c
        H[:, k + 1, k] = c
    return np.linalg.eigvalsh(H / math.sqrt(2.0))


def _log_sinhc(z):
    # log(sinh z / z), even in z
    z = np.abs(z)
    small = z < 1e-4
    zs = np.where(small, 1.0, z)
    return np.where(small, z * z / 6, zs + np.log1p(-np.exp(-2 * zs)) - np.log(2 * zs))


def _ensemble_chunk(spec: EnsembleSpec, rng, m: int) -> np.ndarray:
    tau, N, beta = spec.sigma, spec.N, spec.beta
    lam = gaussian_beta_ensemble(rng, m, N, beta)
    lw = np.zeros(m)
    for i in range(N):
        for j in range(i + 1, N):
            lw += beta * _log_sinhc(tau * (lam[:, i] - lam[:, j]) / 2)
    return lw


def _ensemble_offset(spec: EnsembleSpec) -> float:
    tau, N, beta = spec.sigma, spec.N, spec.beta
    k = 1 + beta * (N - 1) / 2
    return N * k * k * tau * tau / 2 + (N + beta * N * (N - 1) / 2) * math.log(tau) + log_mehta(N, beta)


def mc_log_partition(spec: EnsembleSpec, n_samples: int = 10**6, seed: int = 0, proposal: str = "auto") -> McEstimate:
    """Importance-sampling estimate of log of the bare eigenvalue integral.

    The integral carries no prefactors: it is ``int prod e^{-V} |Delta|^beta``
    over the full orthant.

    ``proposal="ensemble"`` (default for PD spaces) uses the identity
    ``|e^a - e^b| = 2 e^{(a+b)/2} |sinh((a-b)/2)|``: in y = log u the SW
    integrand is a shifted Gaussian beta-ensemble times
    ``prod (sinh z / z)^beta >= 1`` with ``z = (y_i - y_j)/2``, so the
    ensemble is sampled exactly and only that factor is averaged.
    ``proposal="iid"`` (the only choice for Siegel) uses independent
    coordinates, see :func:`proposal_params`.  Both are exact at N = 1 for
    SW.  The standard error on the log scale is ``se(mean) / mean``.
    """
    if n_samples < 1000:
        raise DomainError("n_samples must be at least 1000")
    if proposal == "auto":
        proposal = "iid" if spec.space is Space.SIEGEL else "ensemble"
    if proposal not in ("iid", "ensemble"):
        raise DomainError(f"unknown proposal {proposal!r}")
    if proposal == "ensemble" and spec.space is Space.SIEGEL:
        raise DomainError("the ensemble proposal is only available for PD spaces")
    rng = make_rng(seed)
    parts = []
    left = n_samples
    while left > 0:
        m = min(MC_CHUNK, left)
        if proposal == "ensemble":
            parts.append(_ensemble_chunk(spec, rng, m))
        else:
            parts.append(_log_weights(spec, rng.standard_normal((m, spec.N))))
        left -= m
    lw = np.concatenate(parts)
    top = np.max(lw)
    w = np.exp(lw - top)
    mean = w.mean()
    se = w.std(ddof=1) / math.sqrt(n_samples)
    ess = float(w.sum() ** 2 / np.sum(w * w))
    warning = None
    if ess < 0.01 * n_samples:
        warning = f"effective sample size {ess:.0f} is below 1% of {n_samples}; proposal is degenerate"
        warnings.warn(warning, RuntimeWarning, stacklevel=2)
    value = top + math.log(mean) + (_ensemble_offset(spec) if proposal == "ensemble" else 0.0)
    return McEstimate(float(value), float(se / mean), int(n_samples), int(seed), ess, warning, proposal)


def mc_partition(spec: EnsembleSpec, n_samples: int = 10**6, seed: int = 0,
                 conv: PrefactorConvention = PrefactorConvention(), proposal: str = "auto") -> PartitionResult:
    """:func:`mc_log_partition` assembled into a log partition function."""
    est = mc_log_partition(spec, n_samples, seed, proposal)
    return PartitionResult.from_reduced(
        log_reduced_from_integral(spec, est.log_value), spec, conv, Method.MONTE_CARLO, est.std_error,
        seed=est.seed, n_samples=est.n_samples, ess=est.ess, warning=est.warning, proposal=est.proposal,
    )


# --------------------------------------------------------------------------
# Coulomb gas


def gas_coefficient(kind, N: int, t: float) -> float:
    """Prefactor of the one-body term: V(x; sigma) at sigma^2 = t / N."""
    kind = PotentialKind(kind)
    return N / (8 * t) if kind is PotentialKind.S else N / (2 * t)


def log_gas_density(particles, kind, t: float, beta: float) -> float:
    """Unnormalized log density -sum V(x_i) + beta sum_{i<j} log|x_i - x_j|."""
    x = np.asarray(particles, dtype=float)
    kind = PotentialKind(kind)
    c = gas_coefficient(kind, x.size, t)
    if kind is PotentialKind.Q:
        one = np.sum(x * x)
    elif kind is PotentialKind.SW:
        one = np.sum(np.log(x) ** 2)
    else:
        one = np.sum(np.arccosh(x) ** 2)
    return -c * float(one) + log_vandermonde(x, beta)


def metropolis_acceptance(log_ratio: float) -> float:
    return 1.0 if log_ratio >= 0 else math.exp(log_ratio)


@dataclass
class GasState:
    particles: np.ndarray
    t: float
    beta: float
    kind: PotentialKind

    def __post_init__(self):
        self.kind = PotentialKind(self.kind)
        self.particles = np.array(self.particles, dtype=float)
        x = self.particles
        if x.ndim != 1 or x.size < 1:
            raise DomainError("particles must be a non-empty 1-d sequence")
        if not (self.t > 0 and self.beta > 0):
            raise DomainError("t and beta must be positive")
        lo = {PotentialKind.Q: -math.inf, PotentialKind.SW: 0.0, PotentialKind.S: 1.0}[self.kind]
        if np.any(x <= lo) or not np.all(np.isfinite(x)):
            raise DomainError(f"particles must lie inside the {self.kind.value} domain")
        if np.unique(x).size != x.size:
            raise DomainError("coincident particles have zero density")

    @property
    def N(self) -> int:
        return self.particles.size


@dataclass
class GasChain:
    snapshots: np.ndarray
    acceptance: float
    step: float
    initial_step: float
    kind: PotentialKind
    t: float
    beta: float
    seed: int
    sweeps: int
    burn_in: int
    stride: int
    final: GasState = field(repr=False, default=None)

    def states(self):
        for row in self.snapshots:
            yield GasState(row, self.t, self.beta, self.kind)

    def samples(self) -> np.ndarray:
        return self.snapshots.ravel()

    def manifest(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "symgauss.gas_snapshots",
            "seed": self.seed,
            "rng": RNG_NAME,
            "potential": self.kind.value,
            "N": int(self.snapshots.shape[1]),
            "t": self.t,
            "beta": self.beta,
            "sweeps": self.sweeps,
            "burn_in": self.burn_in,
            "stride": self.stride,
            "step_schedule": {"initial": self.initial_step, "final": self.step, "tuned_during_burn_in": self.burn_in > 0},
            "acceptance": self.acceptance,
            "n_snapshots": int(self.snapshots.shape[0]),
        }


def initial_gas_state(kind, N: int, t: float, beta: float) -> GasState:
    """Particles at the quantiles of the expected large-N density."""
    from . import large_n

    kind = PotentialKind(kind)
    q = (np.arange(N) + 0.5) / N
    if kind is PotentialKind.Q:
        field_ = large_n.master_field_q(beta * t / 2)
    elif kind is PotentialKind.SW:
        field_ = large_n.master_field_sw(beta * t / 2)
    else:
        return GasState(1 + 8 * beta * t * q**2, t, beta, kind)
    return GasState(field_.quantile(q), t, beta, kind)


def coulomb_metropolis(g: GasState, sweeps: int, step: float | None = None, seed: int = 0,
                       burn_in: float = 0.2, stride: int = 1, tune: bool = True,
                       chunk: int = 1000, target_acceptance: float = 0.35) -> GasChain:
    """Metropolis chain for the density exp(N^2 V_eff) of the eigenvalue gas.

    One sweep proposes a move for every particle in turn.  Moves are random
    walks in x (Q), log x (SW) or log(x - 1) (S).  During the burn-in the
    step is rescaled every window towards ``target_acceptance``; afterwards
    it is frozen and a snapshot is kept every ``stride`` sweeps.

    Raises :class:`TuningError` if the production acceptance rate falls
    outside [0.1, 0.7].
    """
    N = g.N
    if N < 2:
        raise DomainError("the gas needs at least two particles")
    kind = g.kind
    code = _KIND_CODE[kind]
    coef = gas_coefficient(kind, N, g.t)
    if step is None:
        step = math.sqrt(g.t) / N
    if not step > 0:
        raise DomainError("step must be positive")
    initial_step = float(step)
    n_burn = int(round(burn_in * sweeps))
    n_prod = sweeps - n_burn
    rng = make_rng(seed)
    x = g.particles.copy()
    empty = np.empty((0, N))

    window = max(10, n_burn // 20) if n_burn else 0
    done = 0
    while done < n_burn:
        m = min(window, n_burn - done)
        acc = _gas_kernel.run_sweeps(x, code, coef, g.beta, step, rng.standard_normal((m, N)), rng.random((m, N)), empty, 1)
        if tune:
            step *= math.exp(2.0 * (acc / (m * N) - target_acceptance))
        done += m

    snaps = np.empty((n_prod // stride, N))
    accepted = 0
    k = 0
    done = 0
    while done < n_prod:
        m = min(chunk, n_prod - done)
        # chunk boundaries must not break the stride pattern
        m -= m % stride if m > stride else 0
        m = max(m, 1)
        n_out = m // stride
        out = np.empty((n_out, N))
        accepted += _gas_kernel.run_sweeps(x, code, coef, g.beta, step, rng.standard_normal((m, N)), rng.random((m, N)), out, stride)
        take = min(n_out, snaps.shape[0] - k)
        snaps[k:k + take] = out[:take]
        k += take
        done += m
    acceptance = accepted / (max(n_prod, 1) * N)
    if n_prod and not 0.1 <= acceptance <= 0.7:
        raise TuningError(f"acceptance rate {acceptance:.3f} outside [0.1, 0.7] (step {step:.3g})", acceptance)
    return GasChain(snaps[:k], acceptance, float(step), initial_step, kind, g.t, g.beta, int(seed),
                    int(sweeps), n_burn, int(stride), GasState(x, g.t, g.beta, kind))


def write_snapshots(chain: GasChain, path, fmt: str = "csv") -> tuple[Path, Path]:
    """Write snapshots (CSV rows or .npy) plus a JSON sidecar manifest."""
    path = Path(path)
    if fmt == "csv":
        header = ",".join(f"x{i}" for i in range(chain.snapshots.shape[1]))
        np.savetxt(path, chain.snapshots, delimiter=",", header=header, comments="", fmt="%.17g")
    elif fmt == "npy":
        with open(path, "wb") as fh:
            np.save(fh, chain.snapshots)
    else:
        raise ValueError(f"unknown snapshot format {fmt!r}")
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps({**chain.manifest(), "format": fmt, "data": path.name}, indent=2, sort_keys=True))
    return path, side


def read_snapshots(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    if meta["format"] == "npy":
        data = np.load(path)
    else:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data, meta


# --------------------------------------------------------------------------
# empirical densities


def empirical_density(snapshots, bins: int = 100):
    """Normalized histogram of all particle positions: (edges, density)."""
    snaps = np.asarray(snapshots if not isinstance(snapshots, GasChain) else snapshots.snapshots)
    if snaps.ndim != 2 or snaps.shape[0] < 100:
        raise DomainError("need at least 100 snapshots")
    density, edges = np.histogram(snaps.ravel(), bins=bins, range=(snaps.min(), snaps.max()), density=True)
    return edges, density


def ks_distance(samples, master_field) -> float:
    """Kolmogorov-Smirnov distance between pooled samples and a master field."""
    x = np.asarray(samples, dtype=float).ravel()
    return float(stats.ks_1samp(x, master_field.cdf, method="asymp").statistic)


def histogram_ks(edges, density, master_field) -> float:
    """Sup distance of the histogram CDF to the field CDF at the bin edges."""
    cdf = np.concatenate([[0.0], np.cumsum(density * np.diff(edges))])
    return float(np.max(np.abs(cdf - master_field.cdf(edges))))
