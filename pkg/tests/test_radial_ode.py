import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import solve_ivp

from bubbletower import radial_ode as ode
from bubbletower.errors import (DomainError, NonConvergence, OutOfRange,
                                StopNotReached)


def unit_profile(n, r):
    return (1 + r**2 / (n * (n - 2))) ** (-(n - 2) / 2)


def scipy_first_zero(n, eps):
    """Independent oracle: DOP853 from a series start with a terminal event."""
    p = (n + 2) / (n - 2) - eps
    r0 = 1e-4
    y0 = [1 - r0**2 / (2 * n), -r0 / n]

    def f(r, y):
        return [y[1], -(n - 1) / r * y[1] - abs(y[0]) ** (p - 1) * y[0]]

    def hit(r, y):
        return y[0]

    hit.terminal = True
    hit.direction = -1
    sol = solve_ivp(f, (r0, 1e4), y0, method="DOP853", rtol=1e-13,
                    atol=1e-15, events=hit)
    return sol.t_events[0][0], sol.y_events[0][0][1]


def rk4_first_zero(n, eps, h=1e-4):
    """Fixed-step RK4 with a cubic Hermite locate of the sign change."""
    p = (n + 2) / (n - 2) - eps

    def f(r, w, v):
        return v, -(n - 1) / r * v - abs(w) ** (p - 1) * w

    r = 1e-3
    w, v = 1 - r**2 / (2 * n), -r / n
    while True:
        k1 = f(r, w, v)
        k2 = f(r + h / 2, w + h / 2 * k1[0], v + h / 2 * k1[1])
        k3 = f(r + h / 2, w + h / 2 * k2[0], v + h / 2 * k2[1])
        k4 = f(r + h, w + h * k3[0], v + h * k3[1])
        w1 = w + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        v1 = v + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if w1 < 0:
            break
        r, w, v = r + h, w1, v1

    def hermite(t):
        h00 = 2 * t**3 - 3 * t**2 + 1
        h10 = t**3 - 2 * t**2 + t
        h01 = -2 * t**3 + 3 * t**2
        h11 = t**3 - t**2
        return h00 * w + h10 * h * v + h01 * w1 + h11 * h * v1

    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if hermite(mid) > 0:
            lo = mid
        else:
            hi = mid
    return r + lo * h


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_critical_profile_matches_unit_profile(n):
    prof = ode.critical_profile(n, 30.0)
    r = np.linspace(0.0, 30.0, 3001)
    w, _ = ode.evaluate(prof, r)
    assert np.max(np.abs(w - unit_profile(n, r))) <= 1e-8
    assert prof.stop_reason is ode.StopReason.R_MAX
    assert prof.r_end == 30.0


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_pohozaev_functional_constant_at_critical_exponent(n):
    prof = ode.critical_profile(n, 30.0)
    H = ode.pohozaev_H(prof, prof.r[1:])
    assert np.max(np.abs(H)) <= 1e-10


def test_polytrope_first_zero_against_two_oracles():
    prof = ode.integrate_ivp(ode.ProblemParams(3, 2.0), 1.0, ode.KZeros(1))
    r1, slope = prof.events.zeros[0]
    r_dop, v_dop = scipy_first_zero(3, 2.0)
    assert abs(r1 - r_dop) <= 1e-9 * r1
    assert abs(slope - v_dop) <= 1e-8 * abs(slope)
    assert abs(r1 - rk4_first_zero(3, 2.0)) <= 1e-9 * r1
    assert r1 == pytest.approx(6.8968486, abs=1e-6)


@pytest.mark.parametrize("n, eps", [(3, 3.0), (3, 3.5), (4, 1.0), (5, 0.7)])
def test_first_zero_against_dop853(n, eps):
    prof = ode.integrate_ivp(ode.ProblemParams(n, eps), 1.0, ode.KZeros(1))
    r_dop, v_dop = scipy_first_zero(n, eps)
    assert prof.events.zeros[0][0] == pytest.approx(r_dop, rel=1e-9)
    assert prof.events.zeros[0][1] == pytest.approx(v_dop, rel=1e-8)


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0.05, 40.0), sign=st.sampled_from([1.0, -1.0]))
def test_dilation_symmetry(c, sign):
    """``w_c(r) = c w_1(c^{(p-1)/2} r)`` for the start value ``c``."""
    params = ode.ProblemParams(4, 0.3)
    base = ode.integrate_ivp(params, 1.0, ode.KZeros(2))
    other = ode.integrate_ivp(params, sign * c, ode.KZeros(2))
    lam = c ** ((params.p - 1) / 2)
    assert_allclose(other.events.zero_radii * lam, base.events.zero_radii,
                    rtol=1e-9)
    r = np.linspace(0, min(other.r_end, base.r_end / lam), 57)
    w_other, _ = ode.evaluate(other, r)
    w_base, _ = ode.evaluate(base, np.minimum(lam * r, base.r_end))
    assert_allclose(w_other, sign * c * w_base, atol=1e-9 * c)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_stop_after_k_zeros(k):
    prof = ode.integrate_ivp(ode.ProblemParams(3, 0.5), 1.0, ode.KZeros(k))
    ev = prof.events
    assert len(ev.zeros) == k
    assert len(ev.criticals) == k
    assert prof.stop_reason is ode.StopReason.ZEROS
    assert ev.is_interlaced()


@pytest.mark.parametrize("k", [2, 3, 4])
def test_stop_after_k_criticals(k):
    prof = ode.integrate_ivp(ode.ProblemParams(4, 0.2), 1.0, ode.KCriticals(k))
    ev = prof.events
    assert len(ev.criticals) == k
    assert len(ev.zeros) == k - 1
    assert ev.critical_radii[0] == 0.0
    assert np.all(np.diff(np.sign(ev.critical_values)) != 0)


def test_events_have_the_right_values():
    prof = ode.integrate_ivp(ode.ProblemParams(3, 0.5), 1.0, ode.KZeros(3))
    w_at_zeros, _ = ode.evaluate(prof, prof.events.zero_radii)
    _, v_at_crit = ode.evaluate(prof, prof.events.critical_radii[1:])
    scale = np.abs(prof.events.critical_values)
    assert np.all(np.abs(w_at_zeros) <= 1e-12 * scale.max())
    assert np.all(np.abs(v_at_crit) <= 1e-9 * np.abs(prof.events.zero_slopes).max())


def test_rmax_stop_is_exact():
    prof = ode.integrate_ivp(ode.ProblemParams(5, 0.1), 1.0, ode.RMax(12.5))
    assert prof.r_end == 12.5
    assert prof.stop_reason is ode.StopReason.R_MAX


def test_dense_output_against_dop853():
    n, eps = 4, 0.4
    p = (n + 2) / (n - 2) - eps
    prof = ode.integrate_ivp(ode.ProblemParams(n, eps), 1.0, ode.RMax(20.0))
    r0 = 1e-4

    def f(r, y):
        return [y[1], -(n - 1) / r * y[1] - abs(y[0]) ** (p - 1) * y[0]]

    r = np.linspace(0.01, 20.0, 400)
    ref = solve_ivp(f, (r0, 20.0), [1 - r0**2 / (2 * n), -r0 / n],
                    method="DOP853", rtol=1e-13, atol=1e-15, t_eval=r)
    w, v = ode.evaluate(prof, r)
    assert_allclose(w, ref.y[0], atol=1e-10)
    assert_allclose(v, ref.y[1], atol=1e-10)


def test_taylor_segment_near_origin():
    prof = ode.integrate_ivp(ode.ProblemParams(3, 1.0), 2.0, ode.KZeros(1))
    w, v = ode.evaluate(prof, [0.0, prof.r[1] / 2])
    assert w[0] == 2.0 and v[0] == 0.0
    assert 0 < 2.0 - w[1] < 1e-10


def test_running_integrals_match_quadrature():
    prof = ode.integrate_ivp(ode.ProblemParams(3, 0.3), 1.0, ode.KZeros(2))
    p = prof.params.p
    for e in (p, p + 1):
        aux = ode.weighted_power_integral(prof, e, 0.0, prof.r_end, method="aux")
        quad = ode.weighted_power_integral(prof, e, 0.0, prof.r_end, method="quad")
        assert aux == pytest.approx(quad, rel=1e-9)
    with pytest.raises(DomainError):
        ode.weighted_power_integral(prof, 2.5, 0.0, 1.0, method="aux")


@pytest.mark.parametrize("n, eps, k", [(3, 0.1, 3), (4, 0.02, 3), (6, 0.3, 2)])
def test_subcritical_pohozaev_and_flux(n, eps, k):
    prof = ode.integrate_ivp(ode.ProblemParams(n, eps), 1.0, ode.KZeros(k))
    assert ode.pohozaev_relative_residual(prof, 0.0, prof.r_end) <= 1e-9
    assert np.max(ode.flux_identity_residual(prof)) <= 1e-9


@pytest.mark.parametrize("n, eps, k", [(3, 0.1, 3), (4, 0.01, 3), (6, 0.3, 2)])
def test_ode_defect_stays_near_tolerance(n, eps, k):
    # regression bound: measured maxima are 10-200 local tolerances
    prof = ode.integrate_ivp(ode.ProblemParams(n, eps), 1.0, ode.KZeros(k))
    assert np.max(ode.ode_defect(prof)) <= 1e3


def test_quadrature_agrees_with_closed_form_at_critical_exponent():
    n = 3
    prof = ode.critical_profile(n, 10.0)
    got = ode.radial_quadrature(prof, lambda r, w, v: w**6 * r**2, 0.0, 10.0)
    from scipy.integrate import quad
    want, _ = quad(lambda r: unit_profile(n, r) ** 6 * r**2, 0, 10, epsrel=1e-13)
    assert got == pytest.approx(want, rel=1e-10)


def test_params_domain():
    with pytest.raises(DomainError):
        ode.ProblemParams(3, 0.0)
    with pytest.raises(DomainError):
        ode.ProblemParams(3, 4.0)
    with pytest.raises(DomainError):
        ode.ProblemParams(2, 0.1)
    assert ode.ProblemParams(3, 0.0, validation=True).p == 5.0
    params = ode.ProblemParams(4, 0.5)
    assert params.p == pytest.approx(2.5)
    assert params.scaling_exponent == pytest.approx(2 / (params.p - 1))


def test_stop_rule_domain():
    with pytest.raises(DomainError):
        ode.KZeros(0)
    with pytest.raises(DomainError):
        ode.KCriticals(1)
    with pytest.raises(DomainError):
        ode.RMax(-1.0)
    with pytest.raises(DomainError):
        ode.integrate_ivp(ode.ProblemParams(3, 0.5), 0.0, ode.KZeros(1))


def test_ceiling_and_budget_errors():
    params = ode.ProblemParams(3, 0.01)
    with pytest.raises(StopNotReached):
        ode.integrate_ivp(params, 1.0, ode.KZeros(3), r_ceiling=1e3)
    with pytest.raises(NonConvergence):
        ode.integrate_ivp(params, 1.0, ode.KZeros(3), max_steps=10)


def test_state_outside_range():
    prof = ode.integrate_ivp(ode.ProblemParams(3, 1.0), 1.0, ode.KZeros(1))
    with pytest.raises(OutOfRange):
        prof.state(prof.r_end * 1.01)
    with pytest.raises(OutOfRange):
        prof.state(-1.0)


def test_deep_tower_reaches_large_radius():
    prof = ode.integrate_ivp(ode.ProblemParams(3, 1e-3), 1.0, ode.KZeros(3))
    assert prof.r_end > 1e15
    assert math.isfinite(prof.events.zero_slopes[-1])
    assert ode.pohozaev_relative_residual(prof, 0.0, prof.r_end) <= 1e-9
