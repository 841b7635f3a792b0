import numpy as np
import pytest
from scipy.integrate import quad

from rydbell import bound, core

LN2 = np.log(2.0)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def test_g_at_unit_entropy():
    assert np.isclose(bound.g_of_s(1.0), 2.0 * LN2, atol=1e-12)


def test_g_at_half_entropy():
    assert abs(bound.g_of_s(0.5) - 2.0573) < 1e-4


def test_g_matches_coefficient_form():
    rng = np.random.default_rng(2)
    for s in rng.uniform(1e-3, 1.0, size=20):
        c1 = 2.0 ** (-s / 2.0)
        c2 = np.sqrt(1.0 - 2.0 ** (-s))
        assert np.isclose(bound.g_of_s(s), LN2 * (c1 / c2) * (c1 + c2) ** 2, rtol=1e-12)


@pytest.mark.parametrize("s", [0.0, -0.1, 1.0 + 1e-9, 2.0])
def test_g_domain(s):
    with pytest.raises(ValueError):
        bound.g_of_s(s)


def test_g_small_s_divergence_exponent():
    # G ~ sqrt(ln2/s) as s -> 0, so shrinking s by 1e-2 scales G by 10
    assert abs(bound.g_of_s(1e-6) / bound.g_of_s(1e-4) - 10.0) < 0.2


def test_sdot_values():
    assert bound.sdot_optimal(0.0) == 0.0
    assert np.isclose(bound.sdot_optimal(1.0), 1.0 / (2.0 * LN2), atol=1e-12)
    with pytest.raises(ValueError):
        bound.sdot_optimal(-0.01)
    with pytest.raises(ValueError):
        bound.sdot_optimal(1.01)


def test_sdot_positive_inside():
    for s in np.linspace(0.05, 1.0, 20):
        assert bound.sdot_optimal(s) > 0.0


def test_eta_min_closed_vs_quadrature():
    closed, numeric = bound.eta_min()
    assert closed == 1.0 + np.pi / 2.0
    assert abs(closed - numeric) < 1e-9


def test_g_integral_monotone_in_lower_limit():
    full, _ = quad(lambda u: 2.0 * u * bound.g_of_s(u * u), 0.0, 1.0)
    upper, _ = quad(bound.g_of_s, 0.5, 1.0)
    assert upper < full


def duration_closed_form(s0: float) -> float:
    # substituting t = sqrt(2^s - 1) integrates ds/Sdot to ln t + 2 arctan t
    t0 = np.sqrt(2.0**s0 - 1.0)
    return np.pi / 2.0 - np.log(t0) - 2.0 * np.arctan(t0)


def test_optimal_duration_matches_closed_form():
    for s0 in (0.5, 0.1, 1e-2, 1e-4):
        assert np.isclose(bound.optimal_duration(s0), duration_closed_form(s0), atol=1e-10)


def test_optimal_duration_finite_and_divergent():
    t_half = bound.optimal_duration(0.5)
    assert 0.0 < t_half < 5.0
    t5, t4, t3, t2 = (bound.optimal_duration(10.0**-k) for k in (5, 4, 3, 2))
    assert t5 > t4 > t3 > t2
    # logarithmic divergence: successive decades of s0 add (1/2) ln 10 plus a
    # sqrt(s0) correction, so increment ratios approach 1 from below
    assert abs((t4 - t3) / (t3 - t2) - 0.9385) < 0.01  # frozen from closed form
    assert abs((t5 - t4) / (t4 - t3) - 1.0) < 0.05
    with pytest.raises(ValueError):
        bound.optimal_duration(0.0)


# ---------------------------------------------------------------------------
# numerical oracle
# ---------------------------------------------------------------------------


def test_oracle_matches_g_at_half_entropy_d2():
    res = bound.minimize_ratio_numeric(0.5, d=2, restarts=64, seed=1)
    g = bound.g_of_s(0.5)
    assert abs(res.ratio_min - g) / g < 1e-3
    assert res.restarts_used <= 64


def test_oracle_d3_boundary_support():
    res = bound.minimize_ratio_numeric(0.9, d=3, restarts=64, seed=2)
    g = bound.g_of_s(0.9)
    assert abs(res.ratio_min - g) / g < 1e-3
    assert res.argmin.coeffs[2] <= 1e-3  # only two Schmidt terms active


def test_oracle_argmin_balanced_overlaps():
    res = bound.minimize_ratio_numeric(0.5, d=2, restarts=48, seed=3)
    active = res.argmin.coeffs > 1e-3
    gap = np.abs(res.argmin.r_overlap_a[active] - res.argmin.r_overlap_b[active])
    assert np.max(gap) < 1e-3


def test_oracle_never_beats_bound():
    for s, seed in ((0.2, 4), (0.5, 5), (0.8, 6)):
        res = bound.minimize_ratio_numeric(s, d=2, restarts=24, seed=seed)
        g = bound.g_of_s(s)
        assert res.ratio_min >= g * (1.0 - 1e-3)


def test_g_times_sdot_equals_argmin_population():
    # the product G * Sdot is the Rydberg population of the minimizing state
    for s, seed in ((0.2, 7), (0.5, 8), (0.8, 9)):
        res = bound.minimize_ratio_numeric(s, d=2, restarts=24, seed=seed)
        p_r = 2.0 * np.sum(res.argmin.coeffs**2 * res.argmin.w)
        assert abs(bound.g_of_s(s) * bound.sdot_optimal(s) - p_r) < 1e-3


def test_oracle_input_validation():
    with pytest.raises(ValueError):
        bound.minimize_ratio_numeric(0.0, d=2)
    with pytest.raises(ValueError):
        bound.minimize_ratio_numeric(0.5, d=2, restarts=0)
    with pytest.raises(ValueError):
        bound.minimize_ratio_numeric(0.5, d=5)


def test_oracle_deterministic():
    a = bound.minimize_ratio_numeric(0.4, d=2, restarts=8, seed=11)
    b = bound.minimize_ratio_numeric(0.4, d=2, restarts=8, seed=11)
    assert a.ratio_min == b.ratio_min
    assert np.array_equal(a.argmin.coeffs, b.argmin.coeffs)


# ---------------------------------------------------------------------------
# weak bound
# ---------------------------------------------------------------------------


def test_weak_bound_f_values():
    assert bound.weak_bound_f(np.pi / 4.0) < 1e-15
    assert abs(bound.max_weak_bound_f() - 0.478) < 1e-3
    rng = np.random.default_rng(13)
    for theta in rng.uniform(0.05, np.pi / 2.0 - 0.05, size=10):
        assert np.isclose(bound.weak_bound_f(theta), bound.weak_bound_f(np.pi / 2.0 - theta))
    with pytest.raises(ValueError):
        bound.weak_bound_f(0.0)
    with pytest.raises(ValueError):
        bound.weak_bound_f(np.pi / 2.0)


def test_weak_bound_constants():
    rate_constant, eta_weak = bound.weak_bound_constants()
    assert abs(rate_constant - 0.956) < 1e-3
    assert abs(eta_weak - 1.05) < 0.01
    assert eta_weak < bound.eta_min()[0]
    assert abs(4.0 * bound.max_weak_bound_f() - 1.91) < 0.01


def test_vn_rate_product_state():
    state = core.BipartiteState(np.array([[1.0, 0.0], [0.0, 0.0]]), rydberg_index=1)
    check = bound.vn_rate_bound_check(state)
    assert check.lhs == 0.0
    assert check.satisfied


def test_vn_rate_no_rydberg_overlap():
    m = np.zeros((3, 3), dtype=complex)
    m[0, 0] = np.sqrt(0.6)
    m[1, 1] = np.sqrt(0.4)
    check = bound.vn_rate_bound_check(core.BipartiteState(m, rydberg_index=2))
    assert check.lhs == 0.0
    assert check.rhs == 0.0
    assert check.satisfied


def test_vn_rate_inequality_random_states():
    rng = np.random.default_rng(19)
    for _ in range(1000):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        state = core.BipartiteState(m / np.linalg.norm(m), rydberg_index=1)
        assert bound.vn_rate_bound_check(state).satisfied


def test_vn_rate_degenerate_handling():
    m = np.diag([np.sqrt(0.5), np.sqrt(0.5)]).astype(complex)
    state = core.BipartiteState(m, rydberg_index=1)
    with pytest.raises(core.DegeneracyError):
        bound.vn_rate_bound_check(state)
    check = bound.vn_rate_bound_check(state, fd_step=1e-5)
    assert np.isfinite(check.lhs)
    assert check.satisfied


def test_vn_rate_matches_finite_difference():
    rng = np.random.default_rng(21)
    for _ in range(10):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        state = core.BipartiteState(m / np.linalg.norm(m), rydberg_index=1)
        analytic = bound.vn_rate_bound(state)
        fd = bound._vn_rate_finite_difference(state, 1e-6)
        assert abs(analytic - fd) < 1e-6 * max(1.0, abs(analytic))
