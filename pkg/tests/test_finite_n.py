import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from symgauss import finite_n
from symgauss.core import EnsembleSpec, PrefactorConvention, log_integral_from_reduced, log_prefactor
from symgauss.errors import DomainError, PrecisionError, QuadratureError
from symgauss.finite_n import (
    SkewBasis,
    SkewMomentMatrix,
    direct_quadrature_logZ,
    pairing_matrix,
    skew_moment_matrix,
    symplectic_gram_schmidt,
    z1_finite,
    z2_closed_form,
    z2_log_reduced,
    zS_finite,
)
from symgauss.montecarlo import mc_log_partition

RAW = PrefactorConvention(include_prefactor=False)


def signed_2d(f, lo, hi):
    """int int f(x, y) sign(x - y) over (lo, hi)^2, split along the diagonal."""
    below = integrate.dblquad(lambda y, x: f(x, y), lo, hi, lambda x: lo, lambda x: x, epsabs=1e-14, epsrel=1e-11)[0]
    above = integrate.dblquad(lambda y, x: f(x, y), lo, hi, lambda x: x, lambda x: hi, epsabs=1e-14, epsrel=1e-11)[0]
    return below - above


def sw_integral_2d(sigma, beta):
    # x = e^a keeps the scipy integrand smooth
    def f(b, a):
        x, y = math.exp(a), math.exp(b)
        return math.exp(-(a * a + b * b) / (2 * sigma**2) + a + b) * abs(x - y) ** beta

    L = 12 * sigma + 4 * sigma**2
    return math.log(integrate.dblquad(f, -L, L, -L, L, epsabs=0, epsrel=1e-12)[0])


def s_integral_2d(sigma):
    def f(b, a):
        return math.exp(-(a * a + b * b) / (8 * sigma**2)) * math.sinh(a) * math.sinh(b) * abs(math.cosh(a) - math.cosh(b))

    L = 24 * sigma + 16 * sigma**2
    return math.log(integrate.dblquad(f, 0, L, 0, L, epsabs=0, epsrel=1e-12)[0])


# --- closed form Z_2 -----------------------------------------------------------


def test_z2_single_eigenvalue():
    assert z2_closed_form(1, 1.0).log_value == pytest.approx(math.log(math.sqrt(2 * math.pi) / 2), rel=1e-14)


def test_z2_matches_two_dimensional_integral():
    sigma = 0.5
    spec = EnsembleSpec("PD_complex", 2, sigma)
    log_i = sw_integral_2d(sigma, 2.0)
    expected = log_prefactor(spec) - 2 * math.log(2 * math.pi) - math.log(2) + log_i
    assert z2_closed_form(2, sigma).log_value == pytest.approx(expected, rel=1e-6)


def test_z2_explicit_formula_with_omega():
    N, s, om = 5, 0.7, 3.0
    explicit = (math.log(om) - N * N * math.log(2) + N / 2 * math.log(2 * math.pi * s * s) + (N**3 - N) * s * s / 6
                + sum((N - k) * math.log(1 - math.exp(-k * s * s)) for k in range(1, N)))
    assert z2_closed_form(N, s, PrefactorConvention(omega_beta_N=om)).log_value == pytest.approx(explicit, rel=1e-13)


def test_z2_large_sigma_dominated_by_cubic_term():
    N = 3
    values = [z2_closed_form(N, s).log_value for s in (5.0, 20.0, 80.0)]
    assert values[0] < values[1] < values[2]
    assert values[2] / ((N**3 - N) * 80.0**2 / 6) == pytest.approx(1.0, rel=1e-3)


@settings(max_examples=50, deadline=None)
@given(N=st.integers(1, 60), sigma=st.floats(0.01, 2.0))
def test_z2_recurrence_in_N(N, sigma):
    s2 = sigma * sigma
    step = z2_closed_form(N + 1, sigma).log_value - z2_closed_form(N, sigma).log_value
    smooth = -(2 * N + 1) * math.log(2) + 0.5 * math.log(2 * math.pi * s2) + (3 * N * N + 3 * N) * s2 / 6
    added = math.fsum(math.log(-math.expm1(-k * s2)) for k in range(1, N + 1))
    assert step - smooth == pytest.approx(added, rel=1e-9, abs=1e-8)


def test_z2_reduced_consistent_with_prefactor():
    spec = EnsembleSpec("PD_complex", 7, 0.4)
    assert z2_log_reduced(7, 0.4) == pytest.approx(z2_closed_form(7, 0.4).log_value - log_prefactor(spec), rel=1e-14)


# --- skew moments ---------------------------------------------------------------


@pytest.fixture(scope="module")
def sw_moments():
    return skew_moment_matrix("SW", 0.3, 6)


def test_moment_matrix_antisymmetric_exactly(sw_moments):
    M = sw_moments.M
    for i in range(6):
        assert M[i][i] == 0
        for j in range(6):
            assert M[i][j] == -M[j][i]


def test_sw_single_moments_closed_form(sw_moments):
    for k, mu in enumerate(sw_moments.moments):
        with mpmath.workprec(256):
            exact = mpmath.sqrt(2 * mpmath.pi) * mpmath.mpf(0.3) * mpmath.exp((k + 1) ** 2 * mpmath.mpf(0.3) ** 2 / 2)
            assert abs(mpmath.mpf(mu) / exact - 1) < mpmath.mpf(2) ** -100


def test_sw_skew_moments_erf_closed_form(sw_moments):
    # 2 int int x^i y^j sign(x - y) w w = 2 (2 pi s^2) e^{((i+1)^2 + (j+1)^2) s^2 / 2} erf((i - j) s / 2)
    s = mpmath.mpf(0.3)
    with mpmath.workprec(256):
        for i in range(6):
            for j in range(6):
                exact = 4 * mpmath.pi * s * s * mpmath.exp(((i + 1) ** 2 + (j + 1) ** 2) * s * s / 2) * mpmath.erf((i - j) * s / 2)
                assert abs(mpmath.mpf(sw_moments.M[i][j]) - exact) <= mpmath.mpf(2) ** -110 * (1 + abs(exact))


def test_m01_sign_matches_brute_force():
    # the stored <1, x>_1 = 2 int int y sign(x - y) w w is negative: the x^1
    # weight shifts mass to larger y
    m = skew_moment_matrix("SW", 0.3, 2)
    brute = 2 * signed_2d(lambda x, y: math.exp(y) * math.exp(-(x * x + y * y) / 0.18 + x + y), -4.0, 4.0)
    assert float(m.M[0][1]) < 0
    assert float(m.M[0][1]) == pytest.approx(brute, rel=1e-6)


def test_s_moments_against_scipy():
    sigma = 0.4
    m = skew_moment_matrix("S", sigma, 4)
    L = 30 * sigma

    def entry(i, j):
        def f(a, b):
            x, y = math.cosh(a), math.cosh(b)
            return x**i * y**j * math.exp(-(a * a + b * b) / (8 * sigma**2)) * math.sinh(a) * math.sinh(b)

        return 2 * signed_2d(f, 0.0, L)

    for i, j in [(0, 1), (1, 2), (0, 3)]:
        assert float(m.M[i][j]) == pytest.approx(entry(i, j), rel=1e-6)


def test_moment_matrix_rejects_bad_input():
    with pytest.raises(DomainError):
        skew_moment_matrix("Q", 0.3, 4)
    with pytest.raises(DomainError):
        skew_moment_matrix("SW", 0.3, 3)


def test_moment_matrix_non_convergence_reports_entry():
    with pytest.raises(QuadratureError) as info:
        skew_moment_matrix("SW", 0.3, 4, rel_tol=1e-300, max_doublings=1)
    assert info.value.where is not None
    assert info.value.achieved > 0


def test_moment_matrix_json_round_trip(sw_moments):
    blob = json.dumps(sw_moments.to_json_dict())
    back = SkewMomentMatrix.from_json_dict(json.loads(blob))
    assert back.cache_key() == sw_moments.cache_key()
    for row, row2 in zip(back.M, sw_moments.M):
        for a, b in zip(row, row2):
            assert abs(a - b) <= abs(b) * mpmath.mpf(2) ** -250
    with pytest.raises(ValueError):
        SkewMomentMatrix.from_json_dict({"schema_version": 99})


def test_cache_keys_distinguish_inputs():
    keys = {finite_n.moment_cache_key(k, s, n, b) for k in ("SW", "S") for s in (0.3, 0.30000001) for n in (4, 6) for b in (256, 512)}
    assert len(keys) == 16
    assert finite_n.moment_cache_key("SW", 0.3, 4, 256) == finite_n.moment_cache_key("SW", 0.3, 4, 256)


# --- symplectic Gram-Schmidt ------------------------------------------------------------


def standard_form_defect(G):
    N = len(G)
    worst = 0
    for a in range(N):
        for b in range(N):
            target = 1 if (a % 2 == 0 and b == a + 1) else (-1 if (b % 2 == 0 and a == b + 1) else 0)
            worst = max(worst, abs(G[a][b] - target))
    return worst


def test_two_by_two_convention():
    c = mpmath.mpf("2.5")
    basis = symplectic_gram_schmidt([[0, c], [-c, 0]])
    assert basis.leading[0] == 1
    with mpmath.workprec(256):
        assert abs(basis.leading[1] - mpmath.mpf(2) / 5) < mpmath.mpf(2) ** -200


def test_gaussian_weight_standard_form():
    # Q weight e^{-x^2/2}: <x^i, x^j>_1 = 2 int x^i w(x) (2 G_j(x) - G_j(inf)) dx with
    # G_j(x) = int_{-inf}^x y^j w(y) dy from integration by parts
    N = 6
    with mpmath.workdps(80):
        def G(j, x):
            if j == 0:
                return mpmath.sqrt(mpmath.pi / 2) * (1 + mpmath.erf(x / mpmath.sqrt(2)))
            if j == 1:
                return -mpmath.exp(-x * x / 2)
            return -x ** (j - 1) * mpmath.exp(-x * x / 2) + (j - 1) * G(j - 2, x)

        M = [[mpmath.mpf(0)] * N for _ in range(N)]
        for i in range(N):
            for j in range(i + 1, N):
                total = G(j, mpmath.inf) if j % 2 == 0 else 0
                v = 2 * mpmath.quad(lambda x: x**i * mpmath.exp(-x * x / 2) * (2 * G(j, x) - total), [-mpmath.inf, 0, mpmath.inf])
                M[i][j], M[j][i] = v, -v
    basis = symplectic_gram_schmidt(M, bits=256)
    assert basis.defect < 1e-20


def test_pairing_reproduces_block_form(sw_moments):
    basis = symplectic_gram_schmidt(sw_moments, finite_n.PFAFFIAN_PAIRING_SCALE)
    G = pairing_matrix(basis, sw_moments, finite_n.PFAFFIAN_PAIRING_SCALE)
    assert standard_form_defect(G) < 1e-20
    assert basis.defect < 1e-20
    for j, row in enumerate(basis.coeffs):
        assert all(v == 0 for v in row[j + 1:])
        assert row[j] == basis.leading[j]


def test_leading_product_invariant_under_pair_rescaling(sw_moments):
    basis = symplectic_gram_schmidt(sw_moments, finite_n.PFAFFIAN_PAIRING_SCALE)
    coeffs, leading = [], []
    with mpmath.workprec(basis.bits):
        alphas = [mpmath.mpf(3), mpmath.mpf(1) / 5, mpmath.mpf(7)]
        for k, a in enumerate(alphas):
            coeffs += [[a * v for v in basis.coeffs[2 * k]], [v / a for v in basis.coeffs[2 * k + 1]]]
            leading += [a * basis.leading[2 * k], basis.leading[2 * k + 1] / a]
    other = SkewBasis(coeffs, leading, 0.0, basis.bits)
    G = pairing_matrix(other, sw_moments, finite_n.PFAFFIAN_PAIRING_SCALE)
    assert standard_form_defect(G) < 1e-20
    assert other.log_leading_product() == pytest.approx(basis.log_leading_product(), rel=1e-14)


def test_degenerate_pairing_requests_more_bits():
    with pytest.raises(PrecisionError) as info:
        symplectic_gram_schmidt([[0, 0], [0, 0]], bits=128)
    assert info.value.required_bits == 256


def test_basis_json_round_trip(sw_moments):
    basis = symplectic_gram_schmidt(sw_moments, finite_n.PFAFFIAN_PAIRING_SCALE)
    back = SkewBasis.from_json_dict(json.loads(json.dumps(basis.to_json_dict())))
    assert back.log_leading_product() == pytest.approx(basis.log_leading_product(), rel=1e-15)


# --- Z_1 and Z_S --------------------------------------------------------------------


def test_z1_two_by_two_against_scipy():
    sigma = 0.5
    spec = EnsembleSpec("PD_real", 2, sigma)
    expected = log_prefactor(spec) - 2 * math.log(2 * math.pi) - math.log(2) + sw_integral_2d(sigma, 1.0)
    assert z1_finite(2, sigma).log_value == pytest.approx(expected, rel=1e-8)


def test_zs_two_by_two_against_scipy():
    sigma = 0.5
    log_i = s_integral_2d(sigma)
    expected = math.log(2**3 * 2) + log_i
    assert zS_finite(2, sigma).log_value == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("space, route, sigma", [("PD_real", z1_finite, 0.3), ("Siegel", zS_finite, 0.25)])
def test_four_by_four_against_monte_carlo(space, route, sigma):
    spec = EnsembleSpec(space, 4, sigma)
    log_i = log_integral_from_reduced(spec, route(4, sigma, RAW).log_value)
    est = mc_log_partition(spec, 10**6, seed=11)
    assert abs(est.log_value - log_i) <= 3 * est.std_error


def test_z1_collapses_as_sigma_vanishes():
    values = [z1_finite(2, s, RAW).log_value for s in (0.3, 0.1, 0.03)]
    assert values[0] > values[1] > values[2]


def test_zs_stable_under_refinement():
    coarse = zS_finite(4, 0.4)
    fine_matrix = lambda p, s, N, b: skew_moment_matrix(p, s, N, b, rel_tol=2.0 ** (-0.6 * b))  # noqa: E731
    fine = zS_finite(4, 0.4, moments_cache=fine_matrix)
    assert abs(fine.log_value - coarse.log_value) <= max(coarse.error_estimate, 1e-12)


def test_result_details_and_convention():
    res = z1_finite(4, 0.3, PrefactorConvention(omega_beta_N=2.0))
    assert res.details["standard_form_defect"] < finite_n.STANDARD_FORM_TOL
    assert res.details["mantissa_bits"] >= 256
    assert res.convention.omega_beta_N == 2.0
    assert res.log_value - z1_finite(4, 0.3).log_value == pytest.approx(math.log(2.0))


def test_skew_route_limits():
    with pytest.raises(DomainError):
        z1_finite(3, 0.3)
    with pytest.raises(DomainError):
        zS_finite(26, 0.3)


# --- direct quadrature oracle ----------------------------------------------------------


def test_quadrature_single_sw():
    s = 0.6
    res = direct_quadrature_logZ(EnsembleSpec("PD_real", 1, s), conv=RAW)
    assert res.details["log_integral"] == pytest.approx(math.log(math.sqrt(2 * math.pi) * s) + s * s / 2, rel=1e-12)


def test_quadrature_matches_closed_form():
    res = direct_quadrature_logZ(EnsembleSpec("PD_complex", 2, 0.5))
    assert res.log_value == pytest.approx(z2_closed_form(2, 0.5).log_value, rel=1e-6)


def test_quadrature_single_s_both_parametrizations():
    s = 0.45
    direct = integrate.quad(lambda u: math.exp(-math.acosh(u) ** 2 / (8 * s * s)), 1, np.inf, epsrel=1e-12, limit=200)[0]
    theta = integrate.quad(lambda t: math.exp(-t * t / (8 * s * s)) * math.sinh(t), 0, 60 * s, epsrel=1e-12)[0]
    assert direct == pytest.approx(theta, rel=1e-8)
    res = direct_quadrature_logZ(EnsembleSpec("Siegel", 1, s))
    assert res.details["log_integral"] == pytest.approx(math.log(theta), rel=1e-9)


def test_quadrature_refuses_large_N():
    with pytest.raises(DomainError, match="exceeds"):
        direct_quadrature_logZ(EnsembleSpec("PD_real", 5, 0.3))
