import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import brentq

from bubbletower import bubbles as bub
from bubbletower import constants as cst
from bubbletower.errors import DomainError
from bubbletower.solutions import dirichlet_solution, neumann_solution


@pytest.mark.parametrize("n", [3, 4, 5, 6, 8])
def test_single_bubble_center_and_decay(n):
    g = cst.gamma_n(n)
    assert float(bub.single_bubble(n, 1.0, 0.0)) == pytest.approx(g, rel=1e-15)
    r = np.array([1e3, 1e4])
    vals = bub.single_bubble(n, 1.0, r)
    assert_allclose(vals * r ** (n - 2), g, rtol=1e-5)
    assert_allclose(bub.single_bubble(n, 1.0, r), g * (1 + r * r) ** ((2 - n) / 2),
                    rtol=1e-14)


def test_single_bubble_n3():
    assert float(bub.single_bubble(3, 1.0, 0.0)) == pytest.approx(3 ** 0.25, rel=1e-15)
    with pytest.raises(DomainError):
        bub.single_bubble(3, 0.0, 1.0)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_unit_profile_is_a_bubble(n):
    mu = (1 / (n * (n - 2))) ** ((n - 2) / 4)
    r = np.linspace(0, 50, 501)
    scaled = bub.single_bubble(n, mu, r) / (cst.gamma_n(n) * mu)
    assert_allclose(scaled, bub.unit_profile(n, r), rtol=1e-12)


@pytest.mark.parametrize("bc, n, m", [("dirichlet", 3, 3), ("dirichlet", 5, 4),
                                      ("neumann", 3, 3), ("neumann", 4, 4),
                                      ("whole-space", 3, 3)])
def test_tower_structure(bc, n, m):
    tower = bub.bubble_tower(bc, n, m, 0.01)
    # ball towers stack taller bubbles inward; the whole-space ansatz adds
    # ever flatter ones outward
    steps = np.diff(tower.heights)
    assert np.all(steps > 0) if bc != "whole-space" else np.all(steps < 0)
    assert tower.signs == tuple((-1) ** (k + 1) for k in range(1, m + 1))
    at_zero = tower.gamma_n * sum(s * mu for s, mu in zip(tower.signs, tower.heights))
    assert float(tower(0.0)) == pytest.approx(at_zero, rel=1e-13)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_one_bubble_dirichlet_tower_at_origin(n):
    eps = 0.07
    tower = bub.bubble_tower("dirichlet", n, 1, eps)
    want = cst.gamma_n(n) * cst.kappa(n) ** -0.5 * eps ** -0.5
    assert float(tower(0.0)) == pytest.approx(want, rel=1e-14)


def test_neumann_tower_at_origin():
    eps = 0.1
    _, beta = cst.bubble_coefficients(3, 2)
    tower = bub.bubble_tower("neumann", 3, 2, eps)
    want = cst.gamma_n(3) * (beta[1] * eps ** (1 / 6) - beta[2] * eps ** (1 / 6 - 1))
    assert float(tower(0.0)) == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_whole_space_first_term_is_normalized(n):
    assert float(bub.whole_space_ansatz(n, 0.05, 1)(0.0)) == pytest.approx(1.0, rel=1e-15)


def test_tower_domains():
    with pytest.raises(DomainError):
        bub.bubble_tower("neumann", 3, 1, 0.1)
    with pytest.raises(DomainError):
        bub.bubble_tower("dirichlet", 3, 2, 0.0)
    with pytest.raises(DomainError):
        bub.bubble_tower("whole-space", 3, 2, 0.1)(-1.0)
    with pytest.raises(DomainError):
        bub.dirichlet_remainder(3, 0.1, 1, grid=[0.5, 1.5])


def test_remainder_grid_layout():
    g = bub.remainder_grid()
    assert g.size == 2048 and g[-1] == 1.0 and g[0] > 1e-3
    assert_allclose(np.diff(np.log(g)), np.log(1e3) / 2048, rtol=1e-9)
    meta = bub.dirichlet_remainder(3, 0.1, 1).metadata
    assert meta["grid_points"] == 2048 and meta["spacing"] == "log"


def test_dirichlet_remainder_definition():
    eps = 0.05
    rem = bub.dirichlet_remainder(3, eps, 2)
    direct = eps ** -0.5 * (rem.tower(rem.grid) - rem.solution.value(rem.grid))
    assert_allclose(rem.values, direct, rtol=0, atol=0)
    assert rem.sup == np.max(np.abs(direct))


def test_neumann_remainder_scale():
    for n in range(3, 9):
        assert (3 * n - 2) / (2 * n) == pytest.approx(1 + (n - 2) / (2 * n), rel=1e-15)
    eps = 0.05
    rem = bub.neumann_remainder(4, eps, 2)
    direct = eps ** (-(3 * 4 - 2) / 8) * (rem.solution.value(rem.grid) - rem.tower(rem.grid))
    assert_allclose(rem.values, direct, rtol=1e-15)


def test_remainder_vanishes_where_tower_meets_solution():
    eps = 0.1
    sol = bub._oriented(dirichlet_solution(3, eps, 2))
    tower = bub.bubble_tower("dirichlet", 3, 2, eps)
    diff = lambda y: float(tower(y) - sol.value(y))
    grid = np.linspace(0.05, 1.0, 400)
    vals = np.array([diff(y) for y in grid])
    i = int(np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0])
    y0 = brentq(diff, grid[i], grid[i + 1], xtol=1e-15)
    rem = bub.dirichlet_remainder(3, eps, 2, grid=[y0], solution=sol)
    assert abs(rem.values[0]) < 1e-8 * rem.tower.gamma_n * rem.tower.heights[-1]


def test_dirichlet_remainder_trend_one_bubble():
    eps = [0.2, 0.1, 0.05, 0.025]
    rems = [bub.dirichlet_remainder(3, e, 1) for e in eps]
    dev = [r.k_deviation for r in rems]
    sups = [r.sup for r in rems]
    assert np.all(np.diff(dev) < 0)
    assert np.all(np.array(sups[1:]) / np.array(sups[:-1]) <= 1.5)


@pytest.mark.parametrize("eps", [0.1, 0.02])
def test_tower_and_solution_share_signs(eps):
    for bc, make in (("dirichlet", dirichlet_solution), ("neumann", neumann_solution)):
        sol = bub._oriented(make(3, eps, 3))
        tower = bub.bubble_tower(bc, 3, 3, eps)
        assert np.all(np.sign(tower(sol.deltas)) == np.sign(sol.delta_values))


def test_tower_matches_solution_at_critical_points():
    eps = 0.005
    for bc, make in (("dirichlet", dirichlet_solution), ("neumann", neumann_solution)):
        sol = bub._oriented(make(3, eps, 3))
        ratio = bub.bubble_tower(bc, 3, 3, eps)(sol.deltas) / sol.delta_values
        assert_allclose(ratio, 1.0, atol=0.03)


def test_whole_space_ansatz_single_bubble():
    rep = bub.whole_space_ansatz_check(3, 0.05, 1)
    assert rep.gaps[0] == 0.0
    assert rep.tail_sup <= 1.1 * rep.tail_bound


@pytest.mark.parametrize("n", [3, 4])
def test_whole_space_ansatz_two_bubbles(n):
    eps = [0.2, 0.1, 0.05, 0.02, 0.01]
    reps = [bub.whole_space_ansatz_check(n, e, 2) for e in eps]
    # the second bubble already lowers v(0) by kappa_n eps
    for e, rep in zip(eps, reps):
        assert rep.gaps[0] == pytest.approx(cst.kappa(n) * e, rel=1e-9)
        assert rep.tail_sup <= 1.1 * rep.tail_bound
    second = np.abs([rep.gaps[1] for rep in reps])
    assert np.all(np.diff(second) < 0)
    assert rep.tail_bound == pytest.approx(2 * math.gamma(2) * cst.kappa(n))


def test_blowup_profile_support_and_bound():
    sol = dirichlet_solution(3, 0.05, 2)
    L = abs(float(sol.delta_values[0])) ** ((sol.params.p - 1) / 2)
    assert float(bub.blowup_profile(sol, 0.0)) == 0.0
    assert float(bub.blowup_profile(sol, 1.01 * L)) == 0.0
    rep = bub.blowup_profile_check(3, 2, 0.05, solution=sol)
    assert rep.max_abs <= 1 + 1e-8
    with pytest.raises(DomainError):
        bub.blowup_profile(neumann_solution(3, 0.1, 2), [1.0])


def test_blowup_profile_converges():
    devs = [bub.blowup_profile_check(3, 2, e).sup_deviation
            for e in (0.2, 0.1, 0.05, 0.025)]
    assert np.all(np.diff(devs) < 0)


def test_remainder_csv():
    rem = bub.dirichlet_remainder(3, 0.1, 2, grid=bub.remainder_grid(16))
    text = bub.remainder_csv(rem, version="1.0")
    lines = text.splitlines()
    assert lines[0].startswith("# bc=dirichlet n=3 m=2")
    assert "k_deviation=" in lines[0] and "version=1.0" in lines[0]
    assert lines[1] == "r,u_numeric,tower,remainder"
    assert len(lines) == 18
    last = [float(x) for x in lines[-1].split(",")]
    assert last[0] == 1.0 and last[3] == rem.values[-1]
