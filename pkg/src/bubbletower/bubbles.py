"""Bubble towers and their distance to the computed solutions.

A bubble of height ``mu`` is ``gamma_n mu (1 + mu^{4/(n-2)} r^2)^{(2-n)/2}``;
a tower is an alternating sum of bubbles with well separated heights.
The remainder helpers subtract a tower from a numerical solution and
rescale the difference by the power of ``eps`` at which it should stay
bounded.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import constants as cst
from . import radial_ode as ode
from .errors import DomainError
from .solutions import (BoundaryCondition, NodalSolution, dirichlet_solution,
                        neumann_solution)

__all__ = [
    "BubbleTower", "Remainder", "AnsatzReport", "BlowupReport",
    "single_bubble", "unit_profile", "bubble_tower", "tower_value",
    "remainder_grid", "dirichlet_remainder", "neumann_remainder",
    "whole_space_ansatz", "whole_space_ansatz_check", "blowup_profile",
    "blowup_profile_check", "remainder_csv",
]

GRID_POINTS = 2048
GRID_LOW = 1e-3
K_LOW = 0.25


def single_bubble(n: int, mu: float, r):
    """Bubble of height ``gamma_n * mu`` centered at the origin."""
    if not mu > 0:
        raise DomainError("bubble height parameter must be positive")
    r = np.asarray(r, dtype=float)
    return cst.gamma_n(n) * mu * (1 + mu ** (4 / (n - 2)) * r * r) ** ((2 - n) / 2)


def unit_profile(n: int, r):
    """``U(r) = (1 + r^2/(n(n-2)))^{-(n-2)/2}``, the critical solution with ``U(0) = 1``."""
    r = np.asarray(r, dtype=float)
    return (1 + r * r / (n * (n - 2))) ** (-(n - 2) / 2)


@dataclass(frozen=True)
class BubbleTower:
    bc: BoundaryCondition
    n: int
    m: int
    eps: float
    heights: tuple
    signs: tuple
    gamma_n: float
    # gamma_n * mu_k, kept separately so whole-space products cancel exactly
    amplitudes: tuple = ()

    def __call__(self, r):
        return tower_value(self, r)


def bubble_tower(bc, n: int, m: int, eps: float) -> BubbleTower:
    """Tower with ``m`` bubbles at the limit coefficients.

    Ball towers are ordered from the outermost (flattest) bubble inward;
    the whole-space tower starts with the bubble of height one.
    """
    bc = BoundaryCondition.parse(bc)
    if not eps > 0:
        raise DomainError("eps must be positive")
    if bc is BoundaryCondition.DIRICHLET:
        alpha, _ = cst.bubble_coefficients(n, m)
        heights = [alpha[k] * eps ** (0.5 - k) for k in range(1, m + 1)]
    elif bc is BoundaryCondition.NEUMANN:
        if m < 2:
            raise DomainError("Neumann towers need m >= 2")
        _, beta = cst.bubble_coefficients(n, m)
        heights = [beta[k] * eps ** ((n - 2) / (2 * n) - (k - 1))
                   for k in range(1, m + 1)]
    else:
        if m < 1:
            raise DomainError("whole-space ansatz needs at least one bubble")
        g = cst.gamma_n(n)
        ke = cst.kappa(n) * eps
        amps = [math.gamma(k) * ke ** (k - 1) for k in range(1, m + 1)]
        heights = [a / g for a in amps]
    signs = [(-1) ** (k + 1) for k in range(1, m + 1)]
    g = cst.gamma_n(n)
    if bc is not BoundaryCondition.WHOLE_SPACE:
        amps = [g * mu for mu in heights]
    return BubbleTower(bc, n, m, float(eps), tuple(heights), tuple(signs), g,
                       tuple(amps))


def tower_value(tower: BubbleTower, r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be nonnegative")
    n = tower.n
    amps = tower.amplitudes or tuple(tower.gamma_n * mu for mu in tower.heights)
    out = np.zeros_like(r)
    for s, mu, a in zip(tower.signs, tower.heights, amps):
        out = out + s * a * (1 + mu ** (4 / (n - 2)) * r * r) ** ((2 - n) / 2)
    return out


def remainder_grid(points: int = GRID_POINTS, low: float = GRID_LOW) -> np.ndarray:
    """``points`` log-spaced radii in ``(low, 1]``."""
    return np.geomspace(low, 1.0, points + 1)[1:]


@dataclass(frozen=True)
class Remainder:
    """Scaled remainder on a grid; ``k_deviation`` is measured on ``[1/4, 1]``."""

    grid: np.ndarray
    values: np.ndarray
    sup: float
    k_deviation: Optional[float]
    solution: NodalSolution
    tower: BubbleTower

    @property
    def metadata(self) -> dict:
        g = self.grid
        return {"grid_points": int(g.size), "grid_low": float(g[0]),
                "grid_high": float(g[-1]), "spacing": "log",
                "k_interval": [K_LOW, 1.0]}


def _oriented(sol: NodalSolution) -> NodalSolution:
    # towers are positive on the outermost nodal region
    return sol if sol.delta_values[0] > 0 else sol.negated()


def _grid(grid):
    g = remainder_grid() if grid is None else np.asarray(grid, dtype=float)
    if g.size == 0 or np.any(g <= 0) or np.any(g > 1):
        raise DomainError("remainder grid must lie in (0, 1]")
    return g


def dirichlet_remainder(n: int, eps: float, m: int,
                        grid: Optional[Sequence[float]] = None, *,
                        solution: Optional[NodalSolution] = None) -> Remainder:
    """``f = eps^{-1/2} (tower - u)`` for the Dirichlet solution.

    ``k_deviation`` is ``max |f - gamma_n alpha_0|`` over grid points in
    ``[1/4, 1]``.
    """
    g = _grid(grid)
    sol = _oriented(solution or dirichlet_solution(n, eps, m))
    tower = bubble_tower(BoundaryCondition.DIRICHLET, n, m, eps)
    f = eps ** -0.5 * (tower_value(tower, g) - sol.value(g))
    alpha, _ = cst.bubble_coefficients(n, m)
    on_k = g >= K_LOW
    dev = (float(np.max(np.abs(f[on_k] - cst.gamma_n(n) * alpha[0])))
           if np.any(on_k) else None)
    return Remainder(g, f, float(np.max(np.abs(f))), dev, sol, tower)


def neumann_remainder(n: int, eps: float, m: int,
                      grid: Optional[Sequence[float]] = None, *,
                      solution: Optional[NodalSolution] = None) -> Remainder:
    """``g = eps^{-(3n-2)/(2n)} (u - tower)`` for the Neumann solution."""
    g = _grid(grid)
    sol = _oriented(solution or neumann_solution(n, eps, m))
    tower = bubble_tower(BoundaryCondition.NEUMANN, n, m, eps)
    vals = eps ** (-(3 * n - 2) / (2 * n)) * (sol.value(g) - tower_value(tower, g))
    return Remainder(g, vals, float(np.max(np.abs(vals))), None, sol, tower)


def whole_space_ansatz(n: int, eps: float, M: int) -> BubbleTower:
    return bubble_tower(BoundaryCondition.WHOLE_SPACE, n, M, eps)


@dataclass(frozen=True)
class AnsatzReport:
    """Critical-point gaps ``eps^{1-k}(|w(s_k)| - |v(s_k)|)`` and the tail sup.

    The tail is probed on ``[s_M, s_{M+1}]``; beyond it both functions
    only decay.
    """

    n: int
    eps: float
    M: int
    critical_radii: np.ndarray
    gaps: np.ndarray
    tail_sup: float
    tail_bound: float


def whole_space_ansatz_check(n: int, eps: float, M: int, *,
                             probe_points: int = 512) -> AnsatzReport:
    if M < 1:
        raise DomainError("M must be at least 1")
    prof = ode.integrate_ivp(ode.ProblemParams(n, eps), 1.0,
                             ode.KCriticals(M + 1))
    s = prof.events.critical_radii
    tower = whole_space_ansatz(n, eps, M)
    sk = s[:M]
    w_k, _ = ode.evaluate(prof, sk)
    v_k = tower_value(tower, sk)
    powers = eps ** (1.0 - np.arange(1, M + 1))
    gaps = powers * (np.abs(w_k) - np.abs(v_k))
    lo, hi = s[M - 1], s[M]
    if lo == 0.0:
        probe = np.linspace(0.0, hi, probe_points)
    else:
        probe = np.geomspace(lo, hi, probe_points)
    w_t, _ = ode.evaluate(prof, probe)
    tail = eps ** (1 - M) * (np.abs(w_t) + np.abs(tower_value(tower, probe)))
    bound = 2 * math.gamma(M) * cst.kappa(n) ** (M - 1)
    return AnsatzReport(n, float(eps), M, sk, gaps, float(np.max(tail)), bound)


def blowup_profile(sol: NodalSolution, x):
    """``z(x) = u(L^{-1} x) / u(delta_1)`` with ``L = u(delta_1)^{(p-1)/2}``.

    ``z`` vanishes outside ``rho_2 L <= |x| <= L``, the dilated outermost
    nodal region.
    """
    if sol.bc is not BoundaryCondition.DIRICHLET:
        raise DomainError("blow-up profile is defined for Dirichlet solutions")
    x = np.asarray(x, dtype=float)
    u1 = float(sol.delta_values[0])
    L = abs(u1) ** ((sol.params.p - 1) / 2)
    inner = float(sol.rhos[1]) if sol.m >= 2 else 0.0
    y = np.abs(x) / L
    inside = (y >= inner) & (y <= 1.0)
    out = np.zeros_like(y)
    if np.any(inside):
        out[inside] = sol.value(y[inside]) / u1
    return out


@dataclass(frozen=True)
class BlowupReport:
    eps: float
    sup_deviation: float
    max_abs: float


def blowup_profile_check(n: int, m: int, eps: float, *, points: int = 2048,
                         solution: Optional[NodalSolution] = None) -> BlowupReport:
    """``sup |z - U|`` on ``1/2 <= |x| <= 2`` and ``max |z|`` over the support."""
    sol = solution or dirichlet_solution(n, eps, m)
    k = np.linspace(0.5, 2.0, points)
    dev = float(np.max(np.abs(blowup_profile(sol, k) - unit_profile(n, k))))
    L = abs(float(sol.delta_values[0])) ** ((sol.params.p - 1) / 2)
    inner = float(sol.rhos[1]) if m >= 2 else 0.0
    support = np.concatenate([np.linspace(inner * L, L, points),
                              np.geomspace(max(inner * L, 1e-12 * L), L, points)])
    return BlowupReport(float(eps), dev,
                        float(np.max(np.abs(blowup_profile(sol, support)))))


def remainder_csv(rem: Remainder, *, version: str = "") -> str:
    """CSV rows ``r,u_numeric,tower,remainder`` with ``#`` metadata lines."""
    t = rem.tower
    meta = rem.metadata
    buf = io.StringIO()
    line = (f"# bc={t.bc.value} n={t.n} m={t.m} eps={t.eps:.17g}"
            f" grid_points={meta['grid_points']} grid_low={meta['grid_low']:.17g}"
            f" spacing={meta['spacing']} rtol={rem.solution.base_profile.rtol:.17g}"
            f" sup={rem.sup:.17g}")
    if rem.k_deviation is not None:
        line += f" k_deviation={rem.k_deviation:.17g}"
    if version:
        line += f" version={version}"
    buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["r", "u_numeric", "tower", "remainder"])
    u = rem.solution.value(rem.grid)
    tv = tower_value(t, rem.grid)
    for r, a, b, c in zip(rem.grid, u, tv, rem.values):
        writer.writerow([f"{r:.17g}", f"{a:.17g}", f"{b:.17g}", f"{c:.17g}"])
    return buf.getvalue()
