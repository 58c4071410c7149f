"""Dirichlet and Neumann nodal solutions on the unit ball.

A radial solution on the ball is a dilation of the whole-space trajectory
``w`` with ``w(0) = 1``: with ``R`` the ``m``-th zero (Dirichlet) or the
``m``-th critical point (Neumann) of ``w``,

    u(x) = A w(R x),    A = R^{2(n-2)/(4 - eps(n-2))}.

Features are indexed from the boundary inward: ``delta_1 > delta_2 > ...``
are critical points and ``rho_1 > rho_2 > ...`` are zeros.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import radial_ode as ode
from .constants import sphere_area
from .errors import DomainError

__all__ = [
    "BoundaryCondition", "NodalSolution", "dirichlet_solution",
    "neumann_solution", "solve", "check_neumann_integral_identity",
    "energy", "limiting_system_check", "solution_pohozaev_residual",
    "rescale_to_inner", "to_json_record", "dumps_json",
]


class BoundaryCondition(enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    WHOLE_SPACE = "whole-space"

    @classmethod
    def parse(cls, value) -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown boundary condition {value!r}") from None


@dataclass(frozen=True, eq=False)
class NodalSolution:
    """Radial solution on the unit ball with ``m`` nodal regions.

    ``deltas``/``delta_values`` are the critical points and ``u`` there;
    ``rhos``/``rho_slopes`` the zeros and ``u'`` there, all decreasing.
    """

    bc: BoundaryCondition
    params: ode.ProblemParams
    m: int
    scale_radius: float
    amplitude_factor: float
    deltas: np.ndarray
    delta_values: np.ndarray
    rhos: np.ndarray
    rho_slopes: np.ndarray
    base_profile: ode.RadialProfile

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def eps(self) -> float:
        return self.params.eps

    def value(self, x):
        """``u(x)`` for ``0 <= x <= 1``."""
        w, _ = ode.evaluate(self.base_profile, self._radius(x))
        return self.amplitude_factor * w

    def slope(self, x):
        """``u'(x)`` for ``0 <= x <= 1``."""
        _, v = ode.evaluate(self.base_profile, self._radius(x))
        return self.amplitude_factor * self.scale_radius * v

    def _radius(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > 1 + 1e-15):
            raise DomainError("solutions live on 0 <= |x| <= 1")
        return np.minimum(x, 1.0) * self.scale_radius

    def scaled(self, c: float) -> "NodalSolution":
        """``c * u``; a solution again only for ``c = +-1``."""
        return replace(self, amplitude_factor=c * self.amplitude_factor,
                       delta_values=c * self.delta_values,
                       rho_slopes=c * self.rho_slopes)

    def negated(self) -> "NodalSolution":
        return self.scaled(-1.0)


def _construct(bc, n, eps, m, rtol):
    params = ode.ProblemParams(n, eps)
    if bc is BoundaryCondition.DIRICHLET:
        if int(m) != m or m < 1:
            raise DomainError(f"Dirichlet solutions need m >= 1, got {m}")
        stop = ode.KZeros(int(m))
    else:
        if int(m) != m or m < 2:
            raise DomainError(f"Neumann solutions need m >= 2, got {m}")
        stop = ode.KCriticals(int(m))
    m = int(m)
    prof = ode.integrate_ivp(params, 1.0, stop, rtol=rtol)
    ev = prof.events
    rz, sl = ev.zero_radii, ev.zero_slopes
    sc, sv = ev.critical_radii, ev.critical_values
    if bc is BoundaryCondition.DIRICHLET:
        R = float(rz[m - 1])
        zeros = slice(m - 1, None, -1)
    else:
        R = float(sc[m - 1])
        zeros = slice(m - 2, None, -1)
    A = R ** params.scaling_exponent
    return NodalSolution(
        bc=bc, params=params, m=m, scale_radius=R, amplitude_factor=A,
        deltas=sc[m - 1::-1] / R, delta_values=A * sv[m - 1::-1],
        rhos=rz[zeros] / R, rho_slopes=A * R * sl[zeros], base_profile=prof)


def dirichlet_solution(n: int, eps: float, m: int, *,
                       rtol: float = 1e-12) -> NodalSolution:
    return _construct(BoundaryCondition.DIRICHLET, n, eps, m, rtol)


def neumann_solution(n: int, eps: float, m: int, *,
                     rtol: float = 1e-12) -> NodalSolution:
    return _construct(BoundaryCondition.NEUMANN, n, eps, m, rtol)


def solve(bc, n: int, eps: float, m: int, **kwargs) -> NodalSolution:
    bc = BoundaryCondition.parse(bc)
    if bc is BoundaryCondition.WHOLE_SPACE:
        raise DomainError("ball solutions need a Dirichlet or Neumann condition")
    return _construct(bc, n, eps, m, kwargs.get("rtol", 1e-12))


def rescale_to_inner(sol: NodalSolution) -> NodalSolution:
    """Dilate the inner part of ``sol`` back onto the unit ball.

    A Dirichlet solution with ``m`` regions cut at ``delta_1`` becomes the
    Neumann solution with ``m`` regions; a Neumann solution cut at
    ``rho_1`` becomes the Dirichlet solution with ``m - 1`` regions.  The
    map is ``v(x) = t^{2/(p-1)} u(t x)`` with ``t`` the cut radius.
    """
    p = sol.params
    if sol.bc is BoundaryCondition.DIRICHLET:
        if sol.m < 2:
            raise DomainError("need m >= 2 to cut at the outer critical point")
        t = float(sol.deltas[0])
        bc, m = BoundaryCondition.NEUMANN, sol.m
        drop_delta, drop_rho = 0, 1
    else:
        t = float(sol.rhos[0])
        bc, m = BoundaryCondition.DIRICHLET, sol.m - 1
        drop_delta, drop_rho = 1, 0
    f = t ** p.scaling_exponent
    R = sol.scale_radius * t
    return NodalSolution(
        bc=bc, params=p, m=m, scale_radius=R,
        amplitude_factor=sol.amplitude_factor * f,
        deltas=sol.deltas[drop_delta:] / t,
        delta_values=f * sol.delta_values[drop_delta:],
        rhos=sol.rhos[drop_rho:] / t,
        rho_slopes=f * t * sol.rho_slopes[drop_rho:],
        base_profile=sol.base_profile)


def check_neumann_integral_identity(sol: NodalSolution, *,
                                    rtol: float = 1e-10) -> float:
    """Relative gap in the identity fixing ``|u(1)|^{p-1}`` from ``rho_1``.

    ``|u(1)|^{p-1} = (n-2) rho_1^{n-2} / int_{rho_1}^1 F(u/u(1)) s (s^{n-2} -
    rho_1^{n-2}) ds`` with ``F(t) = |t|^{p-1} t``.  Holds only for true
    solutions, so a rescaled ``c * u`` fails it.
    """
    if sol.bc is not BoundaryCondition.NEUMANN:
        raise DomainError("the boundary-value identity concerns Neumann solutions")
    n, p = sol.n, sol.params.p
    A, R = sol.amplitude_factor, sol.scale_radius
    u1 = float(sol.delta_values[0])
    rho = float(sol.rhos[0])
    rho_pow = rho ** (n - 2)

    def integrand(r, w, v):
        t = A * w / u1
        s = r / R
        return np.abs(t) ** (p - 1) * t * s * (s ** (n - 2) - rho_pow) / R

    integral = ode.radial_quadrature(sol.base_profile, integrand, rho * R, R,
                                     rtol=rtol)
    lhs = abs(u1) ** (p - 1)
    rhs = (n - 2) * rho_pow / integral
    return abs(lhs - rhs) / abs(lhs)


def energy(sol: NodalSolution, *, rtol: float = 1e-10) -> tuple[float, float]:
    """``(int_B |grad u|^2, int_B |u|^{p+1})``.

    The gradient term is integrated on the dense output; the power term is
    read off the running integral carried by the integrator, so equality of
    the two is an independent check.
    """
    n, p = sol.n, sol.params.p
    A, R = sol.amplitude_factor, sol.scale_radius
    prof = sol.base_profile
    area = sphere_area(n)
    grad = ode.radial_quadrature(prof, lambda r, w, v: v * v * r ** (n - 1),
                                 0.0, R, rtol=rtol)
    lp = ode.weighted_power_integral(prof, p + 1, 0.0, R, method="aux")
    grad_sq = area * A * A * R ** (2 - n) * grad
    lp_integral = area * abs(A) ** (p + 1) * R ** (-n) * lp
    return grad_sq, lp_integral


def limiting_system_check(sol: NodalSolution) -> tuple[float, float]:
    """``|u(1)|^{p-1} rho_1^{2-n}`` and ``|u'(rho_1)| rho_1^{n-1} |u(1)|^{-p}``."""
    if sol.bc is not BoundaryCondition.NEUMANN:
        raise DomainError("limiting system concerns Neumann solutions")
    n, p = sol.n, sol.params.p
    u1 = abs(float(sol.delta_values[0]))
    rho = float(sol.rhos[0])
    slope = abs(float(sol.rho_slopes[0]))
    return u1 ** (p - 1) * rho ** (2 - n), slope * rho ** (n - 1) * u1 ** (-p)


def solution_pohozaev_residual(sol: NodalSolution) -> float:
    """Relative Pohozaev residual of ``u`` over ``[0, 1]``."""
    n, p = sol.n, sol.params.p
    A, R = sol.amplitude_factor, sol.scale_radius
    u1, du1 = float(sol.value(1.0)), float(sol.slope(1.0))
    h1 = (du1 ** 2 / (2 * n) + (n - 2) / (2 * n) * du1 * u1
          + abs(u1) ** (p + 1) / (n * (p + 1)))
    lp = abs(A) ** (p + 1) * R ** (-n) * ode.weighted_power_integral(
        sol.base_profile, p + 1, 0.0, R, method="aux")
    source = (1.0 / (p + 1) - (n - 2) / (2.0 * n)) * lp
    scale = max(abs(h1), abs(source), 1e-300)
    return abs(h1 - source) / scale


def to_json_record(sol: NodalSolution, grid_points: int = 65) -> dict:
    """Plain-data record: parameters, features and a uniform sample grid."""
    x = np.linspace(0.0, 1.0, grid_points)
    return {
        "bc": sol.bc.value,
        "n": sol.n,
        "eps": sol.eps,
        "p": sol.params.p,
        "m": sol.m,
        "scale_radius": sol.scale_radius,
        "amplitude_factor": sol.amplitude_factor,
        "deltas": sol.deltas.tolist(),
        "delta_values": sol.delta_values.tolist(),
        "rhos": sol.rhos.tolist(),
        "rho_slopes": sol.rho_slopes.tolist(),
        "grid": {"x": x.tolist(), "u": np.asarray(sol.value(x)).tolist(),
                 "du": np.asarray(sol.slope(x)).tolist()},
        "integrator": {"rtol": sol.base_profile.rtol,
                       "steps": sol.base_profile.n_steps},
    }


def _jsonable(obj):
    # json writes floats with the shortest round-trip repr; non-finite
    # values and numpy scalars need converting first
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    return str(obj)


def dumps_json(obj, indent: Optional[int] = 2) -> str:
    """JSON text with round-trip safe floats and sorted keys."""
    return json.dumps(_jsonable(obj), indent=indent, sort_keys=True)
