import math
import warnings

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from symgauss.core import EnsembleSpec, log_integral_from_reduced, log_prefactor
from symgauss.errors import DomainError, TuningError
from symgauss.finite_n import z2_closed_form
from symgauss.large_n import master_field_q, master_field_sw
from symgauss.manifest import GAS_SIDECAR_SCHEMA
from symgauss.montecarlo import (
    GasState,
    coulomb_metropolis,
    empirical_density,
    histogram_ks,
    initial_gas_state,
    ks_distance,
    log_gas_density,
    log_mehta,
    mc_log_partition,
    mc_partition,
    metropolis_acceptance,
    read_snapshots,
    write_snapshots,
)


def siegel_single(sigma):
    return math.log(integrate.quad(lambda t: math.exp(-t * t / (8 * sigma**2)) * math.sinh(t), 0, 60 * sigma, epsrel=1e-13)[0])


# --- importance sampling ------------------------------------------------------------


def test_single_eigenvalue_is_exact():
    s = 0.4
    est = mc_log_partition(EnsembleSpec("PD_real", 1, s), 1000, seed=3)
    assert est.std_error == pytest.approx(0.0, abs=1e-14)
    assert est.log_value == pytest.approx(math.log(math.sqrt(2 * math.pi) * s) + s * s / 2, rel=1e-12)


def test_mehta_integral_small_cases():
    assert log_mehta(1, 2.0) == pytest.approx(0.5 * math.log(2 * math.pi))
    # int int e^{-(x^2 + y^2)/2} (x - y)^2 = 2 (2 pi)
    assert log_mehta(2, 2.0) == pytest.approx(math.log(4 * math.pi), rel=1e-14)


def test_two_by_two_complex_within_three_errors():
    spec = EnsembleSpec("PD_complex", 2, 0.5)
    est = mc_partition(spec, 10**5, seed=5)
    exact = z2_closed_form(2, 0.5).log_value
    assert abs(est.log_value - exact) <= 3 * est.error_estimate


def test_seeded_runs_are_identical():
    spec = EnsembleSpec("Siegel", 4, 0.25)
    a = mc_log_partition(spec, 5000, seed=9)
    assert a == mc_log_partition(spec, 5000, seed=9)
    assert a.log_value != mc_log_partition(spec, 5000, seed=10).log_value


def test_error_bars_cover_at_nominal_rate():
    s = 0.5
    exact = siegel_single(s)
    spec = EnsembleSpec("Siegel", 1, s)
    hits = 0
    for seed in range(200):
        est = mc_log_partition(spec, 1000, seed=seed)
        hits += abs(est.log_value - exact) <= 1.96 * est.std_error
    # 95% nominal; binomial sd over 200 seeds is about 1.5%
    assert 0.89 <= hits / 200 <= 0.995


def test_sampler_arguments():
    spec = EnsembleSpec("Siegel", 2, 0.3)
    with pytest.raises(DomainError):
        mc_log_partition(spec, 999)
    with pytest.raises(DomainError):
        mc_log_partition(spec, 1000, proposal="ensemble")
    with pytest.raises(DomainError):
        mc_log_partition(spec, 1000, proposal="bogus")
    assert mc_log_partition(EnsembleSpec("PD_real", 2, 0.3), 1000, proposal="iid").proposal == "iid"


def test_degenerate_proposal_warns():
    with pytest.warns(RuntimeWarning, match="effective sample size"):
        est = mc_log_partition(EnsembleSpec("Siegel", 8, 2.0), 2000, seed=1)
    assert est.warning is not None
    assert est.ess < 20


def test_mc_partition_reports_sampling_details():
    res = mc_partition(EnsembleSpec("PD_real", 2, 0.3), 2000, seed=4)
    assert res.details["seed"] == 4 and res.details["n_samples"] == 2000
    spec = EnsembleSpec("PD_real", 2, 0.3)
    raw = mc_log_partition(spec, 2000, seed=4).log_value
    assert log_integral_from_reduced(spec, res.log_value - log_prefactor(spec)) == pytest.approx(raw, rel=1e-13)


# --- Metropolis chain -----------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(kind=st.sampled_from(["Q", "SW", "S"]), seed=st.integers(0, 10**6), beta=st.sampled_from([1.0, 2.0, 4.0]))
def test_acceptance_satisfies_detailed_balance(kind, seed, beta):
    rng = np.random.default_rng(seed)
    lo = {"Q": -2.0, "SW": 0.1, "S": 1.01}[kind]
    x = np.sort(lo + 3 * rng.random(5))
    y = x.copy()
    y[rng.integers(5)] = lo + 3 * rng.random()
    if np.unique(y).size < 5:
        return
    lx, ly = log_gas_density(x, kind, 0.5, beta), log_gas_density(y, kind, 0.5, beta)
    forward = lx + math.log(metropolis_acceptance(ly - lx))
    backward = ly + math.log(metropolis_acceptance(lx - ly))
    assert forward == pytest.approx(backward, abs=1e-9)


def test_two_particle_gas_second_moment():
    # density e^{-(x1^2 + x2^2)/t} (x1 - x2)^beta: E[x1^2 + x2^2] = (beta + 2) t / 2
    for beta in (1.0, 2.0):
        ch = coulomb_metropolis(initial_gas_state("Q", 2, 1.0, beta), 60000, seed=1)
        assert np.mean(np.sum(ch.snapshots**2, axis=1)) == pytest.approx((beta + 2) / 2, rel=0.05)


@pytest.mark.parametrize("kind, x", [("SW", [0.5, -1.0]), ("S", [1.0, 2.0]), ("Q", [0.3, 0.3]), ("Q", [np.nan, 1.0]), ("Q", [])])
def test_gas_state_rejects_invalid(kind, x):
    with pytest.raises(DomainError):
        GasState(x, 0.5, 2.0, kind)


def test_gas_state_rejects_bad_parameters():
    with pytest.raises(DomainError):
        GasState([1.0, 2.0], 0.0, 2.0, "SW")
    with pytest.raises(DomainError):
        coulomb_metropolis(GasState([1.0], 0.5, 2.0, "SW"), 100)


def test_untuned_huge_step_raises():
    g = initial_gas_state("Q", 8, 1.0, 2.0)
    with pytest.raises(TuningError) as info:
        coulomb_metropolis(g, 500, step=1e3, tune=False)
    assert info.value.acceptance < 0.1


def test_no_collisions_at_huge_t():
    ch = coulomb_metropolis(initial_gas_state("SW", 2, 20.0, 2.0), 5000, seed=2)
    assert np.all(ch.snapshots[:, 0] != ch.snapshots[:, 1])
    assert np.all(np.isfinite(ch.snapshots))
    for state in list(ch.states())[:10]:
        assert state.N == 2


@pytest.fixture(scope="module")
def sw_chain():
    return coulomb_metropolis(initial_gas_state("SW", 64, 0.25, 2.0), 20000, seed=7)


def test_sw_gas_matches_field_and_support(sw_chain):
    mf = master_field_sw(0.25)
    assert ks_distance(sw_chain.samples(), mf) < 0.02
    a, b = mf.support
    lo, hi = np.quantile(sw_chain.samples(), [0.001, 0.999])
    assert a - 0.05 * (b - a) < lo < a + 0.1 * (b - a)
    assert b - 0.1 * (b - a) < hi < b + 0.05 * (b - a)


def test_empirical_density_normalized(sw_chain):
    edges, dens = empirical_density(sw_chain)
    assert np.sum(dens * np.diff(edges)) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DomainError):
        empirical_density(sw_chain.snapshots[:99])


def test_histogram_ks_stable_under_bin_refinement(sw_chain):
    mf = master_field_sw(0.25)
    coarse = histogram_ks(*empirical_density(sw_chain, 50), mf)
    fine = histogram_ks(*empirical_density(sw_chain, 200), mf)
    assert abs(coarse - fine) < 0.01
    assert fine < 0.02


@pytest.mark.parametrize("fmt", ["csv", "npy"])
def test_snapshot_round_trip(tmp_path, fmt):
    ch = coulomb_metropolis(initial_gas_state("Q", 6, 1.0, 2.0), 600, seed=3, stride=5)
    assert ch.snapshots.shape == (96, 6)
    path, side = write_snapshots(ch, tmp_path / f"gas.{fmt}", fmt)
    data, meta = read_snapshots(path)
    np.testing.assert_array_equal(data, ch.snapshots)
    jsonschema.validate(meta, GAS_SIDECAR_SCHEMA)
    assert meta["seed"] == 3 and meta["step_schedule"]["final"] == ch.step
    assert ks_distance(data, master_field_q(1.0)) < 0.2


def test_unknown_snapshot_format(tmp_path):
    ch = coulomb_metropolis(initial_gas_state("Q", 4, 1.0, 2.0), 200, seed=3)
    with pytest.raises(ValueError):
        write_snapshots(ch, tmp_path / "x", "parquet")


def test_chains_are_reproducible():
    g = initial_gas_state("S", 8, 0.25, 1.0)
    a = coulomb_metropolis(g, 1000, seed=11)
    b = coulomb_metropolis(g, 1000, seed=11)
    np.testing.assert_array_equal(a.snapshots, b.snapshots)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        c = coulomb_metropolis(g, 1000, seed=12)
    assert not np.array_equal(a.snapshots, c.snapshots)
