import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bubbletower import constants as cst
from bubbletower.errors import DomainError

FAMILIES = ("D", "d", "Z", "z", "Dt", "dt", "Zt", "zt")


def closed_and_recurrence():
    for n in range(3, 9):
        rec = cst.constants_via_recurrence(n, 8)
        for m in range(1, 9):
            yield n, m, cst.constants_table(n, m), rec[m]


@pytest.mark.parametrize("n, want", [(3, math.pi / 32), (4, 1 / 12), (6, 1 / 30)])
def test_kappa(n, want):
    assert cst.kappa(n) == pytest.approx(want, rel=1e-15)


@pytest.mark.parametrize("n", range(3, 9))
def test_base_case_values(n):
    t = cst.dirichlet_constants(n, 1)
    g = (n * (n - 2)) ** ((n - 2) / 4)
    assert t.D[1] == pytest.approx(g, rel=1e-14)
    assert t.Z[1] == pytest.approx(n ** ((n - 2) / 4) * (n - 2) ** ((n + 2) / 4),
                                   rel=1e-14)
    assert cst.gamma_n(n) == pytest.approx(g, rel=1e-15)


def test_base_case_n3():
    t = cst.dirichlet_constants(3, 1)
    assert t.D[1] == pytest.approx(3 ** 0.25, rel=1e-15)
    assert t.Z[1] == pytest.approx(3 ** 0.25, rel=1e-15)
    assert cst.base_case_limit(3) == pytest.approx(32 * math.sqrt(3) / math.pi,
                                                   rel=1e-14)


@pytest.mark.parametrize("n", range(3, 9))
@pytest.mark.parametrize("m", range(1, 9))
def test_zero_radius_formula_is_one_at_the_boundary(n, m):
    assert abs(cst.zero_radius_formula(n, m, 1) - 1.0) <= 4 * np.finfo(float).eps
    for k in range(2, m + 1):
        assert cst.zero_radius_formula(n, m, k) == cst.dirichlet_constants(n, m).z[k]


@pytest.mark.parametrize("m", range(2, 9))
def test_neumann_slope_by_dimension(m):
    assert cst.neumann_constants(3, m).Zt[1] == pytest.approx(
        3 ** 0.25 * (m - 1) ** -0.5, rel=1e-14)
    assert cst.neumann_constants(4, m).Zt[1] == pytest.approx(4 * math.sqrt(2),
                                                              rel=1e-14)


def test_neumann_small_cases():
    assert cst.neumann_constants(3, 2).Dt[1] == pytest.approx(3 ** 0.25, rel=1e-15)
    assert cst.neumann_constants(3, 2).zt[1] == pytest.approx(1.0, rel=1e-15)


def test_index_domains():
    m = 4
    t = cst.constants_table(5, m)
    domains = {"D": (1, m), "d": (1, m - 1), "Z": (1, m), "z": (2, m),
               "Dt": (1, m), "dt": (2, m - 1), "Zt": (1, m - 1), "zt": (1, m - 1)}
    for name, (lo, hi) in domains.items():
        fam = t.family(name)
        assert list(fam) == list(range(lo, hi + 1)), name
        with pytest.raises(IndexError):
            fam[lo - 1]
        with pytest.raises(IndexError):
            fam[hi + 1]
    assert list(t.alpha) == list(range(0, m + 1))
    assert list(t.beta) == list(range(1, m + 1))


def test_domain_errors():
    with pytest.raises(IndexError):
        cst.dirichlet_constants(3, 0)
    with pytest.raises(IndexError):
        cst.neumann_constants(3, 1)
    with pytest.raises(DomainError):
        cst.kappa(2)
    with pytest.raises(IndexError):
        cst.zero_radius_formula(3, 2, 3)
    with pytest.raises(IndexError):
        cst.constants_table(3, 1).family("Dt")
    assert cst.constants_table(3, 1).neumann is None
    assert cst.constants_table(3, 1).beta is None


def test_recurrence_matches_closed_form():
    worst = 0.0
    for n, m, closed, rec in closed_and_recurrence():
        for name in FAMILIES:
            if m == 1 and name in ("Dt", "dt", "Zt", "zt"):
                continue
            a, b = closed.family(name), rec.family(name)
            assert list(a) == list(b), (n, m, name)
            for k in a:
                worst = max(worst, abs(a[k] - b[k]) / abs(a[k]))
    assert worst <= 1e-12


@pytest.mark.parametrize("n", range(3, 9))
def test_recurrence_base_case_is_exact(n):
    rec = cst.constants_via_recurrence(n, 1)[1].dirichlet
    closed = cst.dirichlet_constants(n, 1)
    assert rec.D[1] == closed.D[1]
    assert rec.Z[1] == closed.Z[1]
    assert len(rec.d) == 0 and len(rec.z) == 0


def test_all_entries_positive():
    for n, m, closed, _ in closed_and_recurrence():
        d = closed.as_dict()
        for name in FAMILIES + ("alpha", "beta"):
            for v in d.get(name, {}).values():
                assert v > 0 and math.isfinite(v)


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 2.5, 7.3, 30.0, 99.5, 199.9, 200.0])
def test_log_gamma_against_mpmath(x):
    want = float(mpmath.loggamma(mpmath.mpf(x)))
    assert cst.log_gamma(x) == pytest.approx(want, rel=1e-13, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(1e-3, 200.0), y=st.floats(1e-3, 200.0))
def test_beta_against_mpmath(x, y):
    want = float(mpmath.beta(mpmath.mpf(x), mpmath.mpf(y)))
    assert cst.beta_function(x, y) == pytest.approx(want, rel=1e-13)


@pytest.mark.parametrize("k", range(1, 21))
def test_gamma_at_integers(k):
    assert cst.gamma_function(k) == pytest.approx(math.factorial(k - 1), rel=1e-15)


def test_beta_examples():
    assert cst.beta_function(0.5, 0.5) == pytest.approx(math.pi, rel=1e-15)
    assert cst.beta_function(1.5, 1.5) == pytest.approx(math.pi / 8, rel=1e-15)
    for bad in [(0.0, 1.0), (1.0, -2.0)]:
        with pytest.raises(DomainError):
            cst.beta_function(*bad)
    with pytest.raises(DomainError):
        cst.log_gamma(0.0)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_profile_beta_identity(n):
    ys = [n] + [n * (p + 1) / 2 for p in ((n + 2) / (n - 2) - e for e in (0.5, 0.1, 0.01))]
    for y in ys:
        got = cst.profile_beta_integral(n, y)
        assert got == pytest.approx(cst.profile_beta_closed_form(n, y), rel=1e-8)
    with pytest.raises(DomainError):
        cst.profile_beta_integral(n, n / 2)


@pytest.mark.parametrize("n", range(3, 9))
def test_base_case_limit_consistent_with_first_height(n):
    direct = ((n * (n - 2)) ** ((n - 2) / 2) * 4 * math.gamma(n)
              / ((n - 2) * math.gamma(n / 2) ** 2))
    via_table = cst.dirichlet_constants(n, 1).D[1] ** 2 / cst.kappa(n)
    assert direct == pytest.approx(via_table, rel=1e-12)
    assert cst.base_case_limit(n) == pytest.approx(direct, rel=1e-12)


def test_bubble_coefficient_examples():
    k3 = math.pi / 32
    alpha, beta = cst.bubble_coefficients(3, 1)
    assert alpha[1] == pytest.approx(k3 ** -0.5, rel=1e-14)
    assert beta is None
    alpha, _ = cst.bubble_coefficients(3, 2)
    assert alpha[0] == pytest.approx(math.sqrt(2) * k3 ** 0.5, rel=1e-14)
    for n in range(3, 7):
        for m in range(2, 6):
            _, beta = cst.bubble_coefficients(n, m)
            want = ((m - 1) * cst.kappa(n)) ** ((n - 2) / (2 * n))
            assert beta[1] == pytest.approx(want, rel=1e-13)


@pytest.mark.parametrize("n", range(3, 9))
@pytest.mark.parametrize("m", range(2, 9))
def test_beta_over_alpha_independent_of_k(n, m):
    alpha, beta = cst.bubble_coefficients(n, m)
    ratios = np.array([beta[k] / alpha[k] for k in beta])
    want = (m - 1) ** ((n - 2) / (2 * n)) * m ** 0.5 * cst.kappa(n) ** ((n - 1) / n)
    np.testing.assert_allclose(ratios, want, rtol=1e-12)


def test_whole_space_examples():
    w1 = cst.whole_space_constants(3, 1)
    assert w1.r_lim == pytest.approx(math.sqrt(3), rel=1e-15)
    assert w1.s_lim is None and w1.wval_lim is None
    w2 = cst.whole_space_constants(3, 2)
    assert w2.wval_lim == pytest.approx(1.0, rel=1e-15)
    assert w2.wprime_lim == pytest.approx(4 / math.sqrt(3), rel=1e-14)
    for n in range(3, 7):
        assert cst.whole_space_constants(n, 1).r_lim == pytest.approx(
            math.sqrt(n * (n - 2)), rel=1e-14)


def test_large_m_does_not_overflow():
    t = cst.constants_table(3, 50)
    assert all(math.isfinite(v) and v > 0 for v in t.dirichlet.Z.values())


def test_table_as_dict_keys():
    d = cst.constants_table(3, 2).as_dict()
    assert d["kappa"] == pytest.approx(math.pi / 32)
    assert set(FAMILIES) <= set(d)
    assert set(d["whole_space"]) == {"r_lim", "wprime_lim", "s_lim", "wval_lim"}
