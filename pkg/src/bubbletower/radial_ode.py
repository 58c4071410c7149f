"""Radial initial-value problem for the slightly subcritical Lane-Emden equation.

The equation ``-(r^{n-1} w')' = r^{n-1} |w|^{p-1} w`` with ``w(0) = c``,
``w'(0) = 0`` is integrated by an adaptive Dormand-Prince 5(4) pair.  The
solver carries three running quadratures as extra state, records a dense
(quartic) interpolant on every accepted step and locates zeros of ``w`` and
``w'`` on that interpolant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np
from scipy.optimize import brentq

from . import _dopri
from .errors import (AmbiguousEvent, DomainError, NonConvergence, OutOfRange,
                     QuadratureFailure, StopNotReached)

__all__ = [
    "ProblemParams", "KZeros", "KCriticals", "RMax", "StopReason",
    "RadialProfile", "EventList", "integrate_ivp", "detect_events",
    "evaluate", "pohozaev_H", "pohozaev_residual",
    "pohozaev_relative_residual", "weighted_power_integral",
    "radial_quadrature", "flux_identity_residual", "ode_defect",
    "critical_profile",
]

R_START = 1e-6
R_CEILING = 1e40
STEP_FLOOR = 1e-14
EVENT_RTOL = 1e-14

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)
_GL_NODES_LO, _GL_WEIGHTS_LO = np.polynomial.legendre.leggauss(7)


@dataclass(frozen=True)
class ProblemParams:
    """Dimension ``n``, subcriticality ``eps`` and the exponent ``p_eps``.

    ``validation=True`` additionally admits ``eps = 0``, the critical
    exponent, whose solution is known in closed form and serves as an
    oracle for the integrator.
    """

    n: int
    eps: float
    validation: bool = False
    p_eps: float = field(init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"dimension must be an integer >= 3, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        eps = float(self.eps)
        upper = 4.0 / (self.n - 2)
        lower_ok = eps >= 0.0 if self.validation else eps > 0.0
        if not (lower_ok and eps < upper):
            bound = "[0" if self.validation else "(0"
            raise DomainError(
                f"eps must lie in {bound}, {upper:g}) for n={self.n}, got {eps}")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "p_eps", (self.n + 2) / (self.n - 2) - eps)

    @property
    def p(self) -> float:
        return self.p_eps

    @property
    def scaling_exponent(self) -> float:
        """``2/(p-1) = 2(n-2)/(4-eps(n-2))``, the amplitude weight of a dilation."""
        return 2.0 * (self.n - 2) / (4.0 - self.eps * (self.n - 2))

    @property
    def critical_sobolev(self) -> float:
        return 2.0 * self.n / (self.n - 2)


@dataclass(frozen=True)
class KZeros:
    """Stop once the ``k``-th positive zero of ``w`` has been passed."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("KZeros needs k >= 1")


@dataclass(frozen=True)
class KCriticals:
    """Stop once the ``k``-th critical point (``s_1 = 0`` counts) has been passed."""

    k: int

    def __post_init__(self):
        if self.k < 2:
            raise DomainError("KCriticals needs k >= 2 (s_1 = 0 is always known)")


@dataclass(frozen=True)
class RMax:
    """Stop exactly at radius ``r``."""

    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError("RMax needs r > 0")


StopRule = Union[KZeros, KCriticals, RMax]


class StopReason(enum.Enum):
    ZEROS = "reached k-th zero"
    CRITICALS = "reached k-th critical"
    R_MAX = "reached r_max"


@dataclass(frozen=True)
class EventList:
    """Zeros ``(r_i, w'(r_i))`` and critical points ``(s_i, w(s_i))``, increasing."""

    zeros: tuple[tuple[float, float], ...]
    criticals: tuple[tuple[float, float], ...]

    @property
    def zero_radii(self) -> np.ndarray:
        return np.array([z[0] for z in self.zeros])

    @property
    def zero_slopes(self) -> np.ndarray:
        return np.array([z[1] for z in self.zeros])

    @property
    def critical_radii(self) -> np.ndarray:
        return np.array([c[0] for c in self.criticals])

    @property
    def critical_values(self) -> np.ndarray:
        return np.array([c[1] for c in self.criticals])

    def is_interlaced(self) -> bool:
        """``0 = s_1 < r_1 < s_2 < r_2 < ...`` over the recorded events."""
        merged = []
        for i, (s, _) in enumerate(self.criticals):
            merged.append((s, "s"))
        for r, _ in self.zeros:
            merged.append((r, "r"))
        merged.sort()
        kinds = [k for _, k in merged]
        expected = ["s" if i % 2 == 0 else "r" for i in range(len(kinds))]
        radii = [x for x, _ in merged]
        strictly = all(b > a for a, b in zip(radii, radii[1:]))
        return kinds == expected and strictly


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled trajectory of the radial IVP with its dense interpolant.

    ``r[0] = 0`` holds the initial condition; the segment ``[0, r[1]]`` is
    covered by the Taylor expansion used to launch the integrator and every
    later segment by the quartic continuous extension of the accepted step.
    """

    params: ProblemParams
    start_value: float
    r: np.ndarray
    states: np.ndarray
    dense: np.ndarray
    r_end: float
    stop_reason: StopReason
    rtol: float
    atol: float

    @property
    def w(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def dw(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def aux_integrals(self) -> np.ndarray:
        """Columns ``int |w|^{p+1} t^{n-1}`` and ``int |w|^p t^{n-1}`` per sample."""
        return self.states[:, 2:4]

    @property
    def samples(self) -> np.ndarray:
        """``(r, w, w')`` rows."""
        return np.column_stack([self.r, self.w, self.dw])

    @property
    def n_steps(self) -> int:
        return len(self.dense)

    @cached_property
    def events(self) -> EventList:
        return detect_events(self)

    def state(self, r) -> np.ndarray:
        """All five state components at radius (or radii) ``r``."""
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        rr = np.atleast_1d(r)
        if np.any(rr < 0) or np.any(rr > self.r_end * (1 + 1e-15)):
            raise OutOfRange(
                f"radius outside [0, {self.r_end:.17g}]: {rr.min()}..{rr.max()}")
        out = np.empty((rr.size, 5))
        r0 = self.r[1]
        inner = rr < r0
        if np.any(inner):
            out[inner] = self._taylor_state(rr[inner])
        outer = ~inner
        if np.any(outer):
            ro = np.minimum(rr[outer], self.r_end)
            idx = np.searchsorted(self.r, ro, side="right") - 1
            step = np.clip(idx - 1, 0, self.n_steps - 1)
            h = self.r[step + 2] - self.r[step + 1]
            theta = ((ro - self.r[step + 1]) / h)[:, None]
            q = self.dense[step]
            poly = (((q[:, :, 3] * theta + q[:, :, 2]) * theta + q[:, :, 1])
                    * theta + q[:, :, 0]) * theta
            vals = self.states[step + 1] + poly
            exact = ro == self.r[idx]
            vals[exact] = self.states[idx[exact]]
            out[outer] = vals
        return out[0] if scalar else out.reshape(r.shape + (5,))

    def derivative(self, r) -> np.ndarray:
        """``d/dr`` of the dense interpolant (not of the ODE right-hand side)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        idx = np.clip(np.searchsorted(self.r, r, side="right") - 1, 1,
                      len(self.r) - 2)
        step = idx - 1
        h = self.r[step + 2] - self.r[step + 1]
        theta = (r - self.r[step + 1]) / h
        q = self.dense[step]
        t = theta[:, None]
        return (q[:, :, 0] + t * (2 * q[:, :, 1] + t * (3 * q[:, :, 2]
                                                        + t * 4 * q[:, :, 3]))) / h[:, None]

    def _taylor_state(self, r):
        n, p = self.params.n, self.params.p
        c = self.start_value
        a = abs(c) ** (p - 1)
        w = c - c * a * r**2 / (2 * n)
        v = -c * a * r / n
        rn = r**n / n
        return np.column_stack([w, v, abs(c) ** (p + 1) * rn,
                                abs(c) ** p * rn, c * abs(c) ** (p - 1) * rn])


def _taylor_start(c, n, p, r0):
    a = abs(c) ** (p - 1)
    w = c - c * a * r0**2 / (2 * n)
    v = -c * a * r0 / n
    rn = r0**n / n
    return (w, v, abs(c) ** (p + 1) * rn, abs(c) ** p * rn,
            c * abs(c) ** (p - 1) * rn)


def _crossed(a, b):
    return (a < 0 < b) or (a > 0 > b) or (b == 0 and a != 0)


def integrate_ivp(params: ProblemParams, start_value: float, stop: StopRule, *,
                  rtol: float = 1e-12, atol: float = 0.0,
                  r_start: float = R_START, r_ceiling: float = R_CEILING,
                  max_steps: int = 5_000_000) -> RadialProfile:
    """Integrate the radial IVP from ``w(0) = start_value`` until ``stop`` fires.

    The launch radius ``r_start`` is measured in the natural length unit
    ``|c|^{-(p-1)/2}`` of the start value so that the truncation of the
    two-term Taylor expansion stays negligible for any ``c``.
    """
    c = float(start_value)
    if c == 0.0 or not math.isfinite(c):
        raise DomainError("start_value must be finite and nonzero")
    n, p = params.n, params.p
    length = abs(c) ** (-(p - 1) / 2)
    r = r_start * length
    y = _taylor_start(c, n, p, r)
    record = _dopri.StepRecord(0.0, (c, 0.0, 0.0, 0.0, 0.0))
    record.r.append(r)
    record.y.append(y)
    f = _dopri.rhs(r, y[0], y[1], n, p)
    h = r
    r_target = stop.r if isinstance(stop, RMax) else math.inf
    if r_target <= r:
        raise DomainError(f"RMax radius {r_target} is below the launch radius {r}")
    zeros = 0
    crits = 1
    reason = None
    steps = 0
    while reason is None:
        if r > r_ceiling:
            raise StopNotReached(
                f"radius ceiling {r_ceiling:g} passed with {zeros} zeros and "
                f"{crits} critical points")
        if steps >= max_steps:
            raise NonConvergence(f"step budget {max_steps} exhausted at r={r:g}")
        last = False
        if r + h >= r_target:
            h = r_target - r
            last = True
        if h < STEP_FLOOR * r:
            raise NonConvergence(f"step size {h:g} underflowed at r={r:.17g}")
        y_new, f_new, err, ks = _dopri.dopri_step(r, y, f, h, n, p)
        r_new = r_target if last else r + h
        norm = _dopri.step_error_norm(y, y_new, err, r, r_new, rtol, atol)
        if not math.isfinite(norm):
            h *= _dopri.MIN_FACTOR
            continue
        if norm > 1.0:
            h *= max(_dopri.MIN_FACTOR, _dopri.SAFETY * norm ** -0.2)
            continue
        steps += 1
        record.append(r_new, y_new, r_new - r, ks)
        if _crossed(y[0], y_new[0]):
            zeros += 1
        if _crossed(y[1], y_new[1]):
            crits += 1
        if isinstance(stop, KZeros) and zeros >= stop.k:
            reason = StopReason.ZEROS
        elif isinstance(stop, KCriticals) and crits >= stop.k:
            reason = StopReason.CRITICALS
        elif last:
            reason = StopReason.R_MAX
        factor = (_dopri.MAX_FACTOR if norm == 0.0 else
                  min(_dopri.MAX_FACTOR, _dopri.SAFETY * norm ** -0.2))
        r, y, f = r_new, y_new, f_new
        h *= factor
    rs, states, dense = record.arrays()
    return RadialProfile(params=params, start_value=c, r=rs, states=states,
                         dense=dense, r_end=float(rs[-1]), stop_reason=reason,
                         rtol=rtol, atol=atol)


def critical_profile(n: int, r_max: float, start_value: float = 1.0,
                     **kwargs) -> RadialProfile:
    """Integrate the critical (``eps = 0``) problem on ``[0, r_max]``."""
    params = ProblemParams(n, 0.0, validation=True)
    return integrate_ivp(params, start_value, RMax(r_max), **kwargs)


def _refine(profile, step, comp):
    """Root of component ``comp`` of the interpolant on accepted step ``step``."""
    r0 = profile.r[step + 1]
    h = profile.r[step + 2] - r0
    y0 = profile.states[step + 1, comp]
    q = profile.dense[step, comp]
    y1 = profile.states[step + 2, comp]
    if y1 == 0.0:
        return float(profile.r[step + 2])

    def g(theta):
        return y0 + theta * (q[0] + theta * (q[1] + theta * (q[2] + theta * q[3])))

    ga, gb = g(0.0), g(1.0)
    if ga == 0.0:
        return float(r0)
    if ga * gb > 0:
        # interpolant and endpoint disagree in sign by rounding; trust the sample
        return float(profile.r[step + 2])
    xtol = max(EVENT_RTOL * r0 / h, 1e-300)
    theta = brentq(g, 0.0, 1.0, xtol=xtol, rtol=4 * np.finfo(float).eps,
                   maxiter=200)
    return float(r0 + theta * h)


def detect_events(profile: RadialProfile) -> EventList:
    """Locate every sign change of ``w`` and ``w'`` on the dense interpolant.

    Raises :class:`AmbiguousEvent` when two events are closer than the event
    tolerance or the zero/critical sequence fails to interlace.
    """
    st = profile.states[1:]
    events = {}
    for comp in (0, 1):
        a, b = st[:-1, comp], st[1:, comp]
        hits = np.nonzero(((a < 0) & (b > 0)) | ((a > 0) & (b < 0))
                          | ((b == 0) & (a != 0)))[0]
        events[comp] = [_refine(profile, int(i), comp) for i in hits]
    zeros = []
    for rz in events[0]:
        zeros.append((rz, float(profile.state(rz)[1])))
    crits = [(0.0, float(profile.start_value))]
    for rc in events[1]:
        crits.append((rc, float(profile.state(rc)[0])))
    out = EventList(tuple(zeros), tuple(crits))
    radii = sorted([z[0] for z in zeros] + [c[0] for c in crits])
    for a, b in zip(radii, radii[1:]):
        if b - a <= 1e-12 * max(abs(b), 1e-300):
            raise AmbiguousEvent(f"events at {a:.17g} and {b:.17g} collapse")
    if not out.is_interlaced():
        raise AmbiguousEvent("zeros and critical points do not interlace; "
                             "re-integrate with a tighter tolerance")
    return out


def evaluate(profile: RadialProfile, r):
    """Return ``(w(r), w'(r))`` from the dense interpolant."""
    s = profile.state(r)
    return s[..., 0], s[..., 1]


def pohozaev_H(profile: RadialProfile, r):
    """Pointwise Pohozaev functional ``H(r)``."""
    n, p = profile.params.n, profile.params.p
    s = profile.state(r)
    r = np.asarray(r, dtype=float)
    w, v = s[..., 0], s[..., 1]
    return (r**n * v**2 / (2 * n) + (n - 2) / (2 * n) * r ** (n - 1) * v * w
            + r**n * np.abs(w) ** (p + 1) / (n * (p + 1)))


def _pohozaev_parts(profile, r_lo, r_hi):
    n, p = profile.params.n, profile.params.p
    if not 0 <= r_lo <= r_hi <= profile.r_end:
        raise OutOfRange(f"interval [{r_lo}, {r_hi}] not inside [0, {profile.r_end}]")
    h_lo, h_hi = pohozaev_H(profile, r_lo), pohozaev_H(profile, r_hi)
    coef = 1.0 / (p + 1) - (n - 2) / (2.0 * n)
    i_lo, i_hi = profile.state(r_lo)[2], profile.state(r_hi)[2]
    return float(h_lo), float(h_hi), coef * (i_hi - i_lo)


def pohozaev_residual(profile: RadialProfile, r_lo: float, r_hi: float) -> float:
    """``|H(r_hi) - H(r_lo) - int_{r_lo}^{r_hi} RHS|`` (absolute)."""
    if r_lo == r_hi:
        return 0.0
    h_lo, h_hi, source = _pohozaev_parts(profile, r_lo, r_hi)
    return abs(h_hi - h_lo - source)


def pohozaev_relative_residual(profile: RadialProfile, r_lo: float,
                               r_hi: float) -> float:
    """Pohozaev residual divided by the largest term of the identity."""
    if r_lo == r_hi:
        return 0.0
    h_lo, h_hi, source = _pohozaev_parts(profile, r_lo, r_hi)
    scale = max(abs(h_lo), abs(h_hi), abs(source), 1e-300)
    return abs(h_hi - h_lo - source) / scale


def _breakpoints(profile, r_lo, r_hi):
    ev = profile.events
    pts = [profile.r[profile.r > r_lo][profile.r[profile.r > r_lo] < r_hi]]
    extra = [x for x in list(ev.zero_radii) + list(ev.critical_radii)
             if r_lo < x < r_hi]
    pts.append(np.asarray(extra, dtype=float))
    return np.unique(np.concatenate([[r_lo], *pts, [r_hi]]))


def radial_quadrature(profile: RadialProfile,
                      integrand: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
                      r_lo: float, r_hi: float, *, rtol: float = 1e-10) -> float:
    """``int_{r_lo}^{r_hi} integrand(r, w, w') dr`` on the dense interpolant.

    Gauss-Legendre on every step segment, split at zeros and critical
    points; a 7-point rule on the same segments estimates the error.
    """
    if not 0 <= r_lo <= r_hi <= profile.r_end:
        raise OutOfRange(f"interval [{r_lo}, {r_hi}] not inside [0, {profile.r_end}]")
    if r_lo == r_hi:
        return 0.0
    edges = _breakpoints(profile, r_lo, r_hi)
    a, b = edges[:-1], edges[1:]
    mid, half = (a + b) / 2, (b - a) / 2

    def rule(nodes, weights):
        x = mid[:, None] + half[:, None] * nodes[None, :]
        s = profile.state(x.ravel()).reshape(x.shape + (5,))
        f = integrand(x, s[..., 0], s[..., 1])
        return np.sum(half[:, None] * weights[None, :] * f, axis=1)

    hi = rule(_GL_NODES, _GL_WEIGHTS)
    lo = rule(_GL_NODES_LO, _GL_WEIGHTS_LO)
    total = float(np.sum(hi))
    gap = float(np.sum(np.abs(hi - lo)))
    scale = float(np.sum(np.abs(hi)))
    if not math.isfinite(total) or gap > rtol * max(scale, 1e-300):
        raise QuadratureFailure(
            f"quadrature gap {gap:.3g} exceeds {rtol:g} x {scale:.3g}")
    return total


def weighted_power_integral(profile: RadialProfile, exponent: float,
                            r_lo: float, r_hi: float, *,
                            method: str = "auto") -> float:
    """``int_{r_lo}^{r_hi} |w|^exponent r^{n-1} dr``.

    For ``exponent`` equal to ``p`` or ``p + 1`` the running integrals held in
    the state are differenced (``method='aux'``); otherwise, or with
    ``method='quad'``, the dense interpolant is integrated directly.
    """
    if not exponent > 0:
        raise DomainError("exponent must be positive")
    if not 0 <= r_lo <= r_hi <= profile.r_end:
        raise OutOfRange(f"interval [{r_lo}, {r_hi}] not inside [0, {profile.r_end}]")
    if r_lo == r_hi:
        return 0.0
    p = profile.params.p
    col = None
    if abs(exponent - (p + 1)) <= 1e-14 * (p + 1):
        col = 2
    elif abs(exponent - p) <= 1e-14 * p:
        col = 3
    if method == "aux" and col is None:
        raise DomainError("running integrals exist only for exponents p and p+1")
    if method in ("auto", "aux") and col is not None:
        return float(profile.state(r_hi)[col] - profile.state(r_lo)[col])
    n = profile.params.n
    return radial_quadrature(
        profile, lambda r, w, v: np.abs(w) ** exponent * r ** (n - 1), r_lo, r_hi)


def flux_identity_residual(profile: RadialProfile) -> np.ndarray:
    """Per-sample ``|w' r^{n-1} + J(r)| / I_p(r)``.

    ``J`` is the signed running integral of ``|w|^{p-1} w t^{n-1}``; the
    unsigned ``I_p`` sets the scale so the ratio stays meaningful where
    ``w'`` vanishes.
    """
    n = profile.params.n
    r, s = profile.r[1:], profile.states[1:]
    return np.abs(s[:, 1] * r ** (n - 1) + s[:, 4]) / s[:, 3]


def ode_defect(profile: RadialProfile, thetas=(0.25, 0.5, 0.75)) -> np.ndarray:
    """Scaled defect of the interpolant inside every accepted step.

    At interior points the residuals ``d/dr w - w'`` and
    ``d/dr w' + (n-1) w'/r + |w|^{p-1} w`` are multiplied by the step size
    and divided by the error-control scale of the step, so a value of order
    one means a defect at the size of the local tolerance.
    """
    n, p = profile.params.n, profile.params.p
    r0 = profile.r[1:-1]
    h = np.diff(profile.r[1:])
    out = np.zeros(len(h))
    w_all = profile.states[1:, 0]
    v_all = profile.states[1:, 1]
    rr = profile.r[1:]
    mag_w = np.maximum.reduce([np.abs(w_all[:-1]), np.abs(w_all[1:]),
                               rr[:-1] * np.abs(v_all[:-1]),
                               rr[1:] * np.abs(v_all[1:])])
    mag_v = np.maximum.reduce([np.abs(v_all[:-1]), np.abs(v_all[1:]),
                               mag_w / rr[1:]])
    for t in thetas:
        x = r0 + t * h
        s = profile.state(x)
        d = profile.derivative(x)
        w, v = s[:, 0], s[:, 1]
        dw_def = d[:, 0] - v
        dv_def = d[:, 1] + (n - 1) * v / x + np.abs(w) ** (p - 1) * w
        val = np.maximum(np.abs(dw_def) * h / (profile.rtol * mag_w),
                         np.abs(dv_def) * h / (profile.rtol * mag_v))
        out = np.maximum(out, val)
    return out
