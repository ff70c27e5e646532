"""Cross-route verification suites behind ``symgauss verify``.

Each check returns a :class:`Criterion` with the measured numbers, the
tolerance it was held to and its wall time.  Gas chains and Monte Carlo
estimates are memoized per run so suites can share them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import finite_n, large_n, montecarlo
from .core import EnsembleSpec, PotentialKind, PrefactorConvention, log_integral_from_reduced

SEED = 20240611
GAS_N = 64
GAS_SWEEPS = 100_000
MC_SAMPLES = 10**6

SUITES = {
    "oracles": ("closed_vs_quadrature", "skew_route", "trilog"),
    "saddle": ("saddle_gates",),
    "convergence": ("genus_convergence",),
    "universality": ("gas_master_fields", "gas_universality"),
    "siegel": ("siegel_solver",),
    "determinism": ("determinism",),
}
SUITES["all"] = tuple(c for s in ("oracles", "saddle", "convergence", "universality", "siegel", "determinism") for c in SUITES[s])


@dataclass
class Criterion:
    name: str
    passed: bool
    measured: dict
    tolerance: dict
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.measured}"

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "measured": self.measured,
                "tolerance": self.tolerance, "seconds": self.seconds}


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


@dataclass
class Verifier:
    seed: int = SEED
    gas_sweeps: int = GAS_SWEEPS
    mc_samples: int = MC_SAMPLES
    _chains: dict = field(default_factory=dict, repr=False)
    _mc: dict = field(default_factory=dict, repr=False)
    _siegel: dict = field(default_factory=dict, repr=False)

    # shared, memoized computations ---------------------------------------

    def chain(self, kind: str, t: float, beta: float, seed: int | None = None):
        key = (kind, t, beta, self.seed if seed is None else seed)
        if key not in self._chains:
            g = montecarlo.initial_gas_state(kind, GAS_N, t, beta)
            self._chains[key] = montecarlo.coulomb_metropolis(g, self.gas_sweeps, seed=key[3])
        return self._chains[key]

    def mc(self, space: str, N: int, sigma: float):
        key = (space, N, sigma)
        if key not in self._mc:
            self._mc[key] = montecarlo.mc_log_partition(EnsembleSpec(space, N, sigma), self.mc_samples, self.seed)
        return self._mc[key]

    def siegel(self, t: float):
        if t not in self._siegel:
            self._siegel[t] = large_n.siegel_saddle_solve(t)
        return self._siegel[t]

    # criteria --------------------------------------------------------------

    def closed_vs_quadrature(self) -> Criterion:
        worst = 0.0
        cases = {}
        for N in (1, 2, 3):
            for s in (0.25, 0.5, 1.0):
                closed = finite_n.z2_closed_form(N, s).log_value
                quad = finite_n.direct_quadrature_logZ(EnsembleSpec("PD_complex", N, s)).log_value
                rel = abs(closed - quad) / abs(quad)
                cases[f"N={N},sigma={s}"] = rel
                worst = max(worst, rel)
        return Criterion("closed form vs quadrature", worst <= 1e-6, {"max_rel_error": worst, "cases": cases}, {"rel": 1e-6})

    def skew_route(self) -> Criterion:
        raw = PrefactorConvention(include_prefactor=False)
        measured = {}
        ok = True
        for space, route in (("PD_real", finite_n.z1_finite), ("Siegel", finite_n.zS_finite)):
            for s in (0.25, 0.5):
                exact = route(2, s).log_value
                quad = finite_n.direct_quadrature_logZ(EnsembleSpec(space, 2, s)).log_value
                rel = abs(exact - quad) / abs(quad)
                spec = EnsembleSpec(space, 4, s)
                log_i = log_integral_from_reduced(spec, route(4, s, raw).log_value)
                est = self.mc(space, 4, s)
                z = (est.log_value - log_i) / est.std_error
                ok &= rel <= 1e-4 and abs(z) <= 3
                measured[f"{space},sigma={s}"] = {"N2_rel_error": rel, "N4_mc_z": z}
        return Criterion("skew route vs quadrature and Monte Carlo", ok, measured, {"rel": 1e-4, "z": 3})

    def saddle_gates(self) -> Criterion:
        measured = {}
        ok = True
        for t in (0.1, 0.25, 1.0):
            for name, mf, tol in (("Q", large_n.master_field_q(t), 1e-6), ("SW", large_n.master_field_sw(t), 1e-5)):
                r = float(np.max(np.abs(large_n.saddle_residual(mf, 2.0, large_n.interior_probes(mf, 10)))))
                ok &= r < tol
                measured[f"{name},t={t}"] = r
        return Criterion("saddle residuals of closed-form fields", ok, measured, {"Q": 1e-6, "SW": 1e-5})

    def genus_convergence(self) -> Criterion:
        measured = {}
        ok = True
        for t in (0.25, 1.0):
            F = large_n.f_uni(t)
            delta = {N: abs(finite_n.z2_log_reduced(N, math.sqrt(t / N)) / N**2 - F) for N in (16, 32, 64)}
            ratios = [delta[2 * N] / delta[N] for N in (16, 32)]
            ok &= all(0.15 <= r <= 0.4 for r in ratios)
            measured[f"t={t}"] = {"ratios": ratios, "delta": delta}
        return Criterion("genus expansion convergence", ok, measured, {"ratio_range": [0.15, 0.4]})

    def gas_master_fields(self) -> Criterion:
        measured = {}
        ok = True
        ch = self.chain("Q", 1.0, 2.0)
        d = montecarlo.ks_distance(ch.samples(), large_n.master_field_q(1.0))
        ok &= d <= 0.08
        measured["Q,beta=2,t=1"] = d
        for beta in (1.0, 2.0, 4.0):
            ch = self.chain("SW", 0.25, beta)
            d = montecarlo.ks_distance(ch.samples(), large_n.master_field_sw(beta * 0.25 / 2))
            ok &= d <= 0.08
            measured[f"SW,beta={beta:g},t=0.25"] = d
        return Criterion("Coulomb gas vs master fields", ok, measured, {"ks": 0.08})

    def gas_universality(self) -> Criterion:
        a = self.chain("SW", 0.25, 1.0).samples()
        b = self.chain("SW", 0.125, 2.0).samples()
        d = float(stats.ks_2samp(a, b, method="asymp").statistic)
        return Criterion("gas universality (beta=1, t) vs (beta=2, t/2)", d <= 0.05, {"ks": d}, {"ks": 0.05})

    def siegel_solver(self) -> Criterion:
        measured = {}
        ok = True
        ends = []
        for t in (0.1, 0.25):
            mf = self.siegel(t)
            lam = 1 + (mf.support[1] - 1) * np.linspace(1e-4, 1 - 1e-4, 5001)
            min_rho = float(np.min(mf(lam)))
            norm = abs(mf.normalization(2000) - 1)
            probes = 1 + (mf.support[1] - 1) * (np.arange(23) + 0.5) / 23
            res = float(np.nanmax(np.abs(large_n.saddle_residual(mf, 1.0, probes, n=240))))
            ks = montecarlo.ks_distance(self.chain("S", t, 1.0).samples(), mf)
            ok &= min_rho >= 0 and norm <= 1e-6 and res <= 1e-4 and ks <= 0.1
            ends.append(mf.support[1])
            measured[f"t={t}"] = {"b": mf.support[1], "min_rho": min_rho, "norm_error": norm, "residual": res, "ks": ks}
        ok &= ends[0] < ends[1]
        return Criterion("Siegel saddle solver", ok, measured, {"norm": 1e-6, "residual": 1e-4, "ks": 0.1})

    def trilog(self) -> Criterion:
        K = 10**6
        k = np.arange(1, K + 1, dtype=float)
        oracle = math.fsum(1 / k**3) + (1 / (2 * K**2) + 1 / (2 * (K + 1) ** 2)) / 2
        err1 = abs(large_n.trilog(1.0) - oracle)
        t, N = 20.0, 64
        limit = -0.5 * math.log(2 * N / math.pi) + 0.75 + t / 6 + oracle / t**2
        err2 = abs(large_n.z2_asymptotic(N, t) - limit)
        return Criterion("trilogarithm", err1 <= 1e-12 and err2 <= 1e-8,
                         {"zeta3_error": err1, "large_t_error": err2}, {"zeta3": 1e-12, "large_t": 1e-8})

    def determinism(self) -> Criterion:
        same = {}
        for space, N, s in list(self._mc) or [("PD_real", 4, 0.25)]:
            first = self.mc(space, N, s)
            again = montecarlo.mc_log_partition(EnsembleSpec(space, N, s), self.mc_samples, self.seed)
            same[f"mc:{space},{N},{s}"] = first == again
        for kind, t, beta, seed in list(self._chains) or [("SW", 0.25, 1.0, self.seed)]:
            first = self.chain(kind, t, beta, seed)
            g = montecarlo.initial_gas_state(kind, GAS_N, t, beta)
            again = montecarlo.coulomb_metropolis(g, self.gas_sweeps, seed=seed)
            same[f"gas:{kind},t={t},beta={beta:g}"] = bool(np.array_equal(first.snapshots, again.snapshots)) and first.step == again.step
        return Criterion("seeded reruns are bit-identical", all(same.values()), same, {})

    # driver ------------------------------------------------------------------

    def run(self, suite: str, echo=None) -> list[Criterion]:
        if suite not in SUITES:
            raise KeyError(suite)
        out = []
        for name in SUITES[suite]:
            start = time.perf_counter()
            c = getattr(self, name)()
            c.seconds = time.perf_counter() - start
            c.measured = _clean(c.measured)
            out.append(c)
            if echo:
                echo(c.line())
        return out
