"""Limit constants of the concentrating nodal solutions.

Two independent routes produce the same numbers:

* ``dirichlet_constants`` / ``neumann_constants`` evaluate the closed
  Gamma-function formulas;
* ``constants_via_recurrence`` starts from the single-peak Dirichlet
  solution and alternately applies the relations that link a Dirichlet
  solution with ``m - 1`` nodal regions to a Neumann solution with ``m``
  regions and back.

Both work with logarithms and exponentiate once, and share nothing but
``log_gamma``, so their agreement is a genuine check.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple, Optional

import numpy as np
from scipy import integrate, special

from .errors import DomainError

__all__ = [
    "KSeries", "DirichletConstants", "NeumannConstants", "WholeSpaceLimits",
    "ConstantsTable", "kappa", "gamma_n", "log_gamma", "gamma_function",
    "beta_function", "sphere_area", "dirichlet_constants",
    "neumann_constants", "constants_via_recurrence", "bubble_coefficients",
    "whole_space_constants", "constants_table", "base_case_limit",
    "profile_beta_integral", "profile_beta_closed_form", "zero_radius_formula",
]


class KSeries(Mapping):
    """Read-only map ``k -> value`` over a contiguous index range.

    Lookups outside the range raise :class:`IndexError`, which is how the
    index domains of the limit families are enforced.
    """

    __slots__ = ("_first", "_values", "label")

    def __init__(self, first: int, values, label: str = ""):
        self._first = int(first)
        self._values = tuple(float(v) for v in values)
        self.label = label

    @classmethod
    def from_logs(cls, first: int, logs, label: str = "") -> "KSeries":
        return cls(first, [math.exp(x) for x in logs], label)

    @property
    def indices(self) -> range:
        return range(self._first, self._first + len(self._values))

    def __getitem__(self, k: int) -> float:
        if k not in self.indices:
            raise IndexError(
                f"{self.label or 'constant'} defined for k in "
                f"{self.indices.start}..{self.indices.stop - 1}, got {k}")
        return self._values[k - self._first]

    def __contains__(self, k) -> bool:
        return k in self.indices

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self._values)

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {v:.17g}" for k, v in self.items())
        return f"KSeries({self.label}: {{{body}}})"


class DirichletConstants(NamedTuple):
    D: KSeries
    d: KSeries
    Z: KSeries
    z: KSeries


class NeumannConstants(NamedTuple):
    Dt: KSeries
    dt: KSeries
    Zt: KSeries
    zt: KSeries


class WholeSpaceLimits(NamedTuple):
    """Scaled limits of ``r_m``, ``|w'(r_m)|``, ``s_m`` and ``|w(s_m)|``.

    The last two are ``None`` for ``m = 1`` where ``s_1 = 0`` and
    ``w(s_1) = 1`` hold exactly.
    """

    r_lim: float
    wprime_lim: float
    s_lim: Optional[float]
    wval_lim: Optional[float]


def _check_n(n: int) -> int:
    if int(n) != n or n < 3:
        raise DomainError(f"dimension must be an integer >= 3, got {n}")
    return int(n)


def _check_m(m: int, lowest: int) -> int:
    if int(m) != m or m < lowest:
        raise IndexError(f"m must be an integer >= {lowest}, got {m}")
    return int(m)


def log_gamma(x: float) -> float:
    """``log Gamma(x)`` for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def gamma_function(x: float) -> float:
    if not x > 0:
        raise DomainError(f"gamma needs x > 0, got {x}")
    return math.gamma(x)


def beta_function(x: float, y: float) -> float:
    """Euler's ``B(x, y) = Gamma(x) Gamma(y) / Gamma(x + y)``."""
    if not (x > 0 and y > 0):
        raise DomainError(f"beta needs x, y > 0, got ({x}, {y})")
    return float(special.beta(x, y))


def kappa(n: int) -> float:
    n = _check_n(n)
    return math.exp(math.log((n - 2) / 4) + 2 * log_gamma(n / 2) - log_gamma(n))


def gamma_n(n: int) -> float:
    """Height ``(n(n-2))^{(n-2)/4}`` of the unit bubble at its center."""
    n = _check_n(n)
    return (n * (n - 2)) ** ((n - 2) / 4)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in ``R^n``."""
    n = _check_n(n)
    return 2 * math.pi ** (n / 2) / math.exp(log_gamma(n / 2))


def base_case_limit(n: int) -> float:
    """Limit of ``eps * u(0)^2`` for the positive Dirichlet solution."""
    n = _check_n(n)
    return math.exp((n - 2) / 2 * math.log(n * (n - 2)) + math.log(4)
                    + log_gamma(n) - math.log(n - 2) - 2 * log_gamma(n / 2))


def dirichlet_constants(n: int, m: int) -> DirichletConstants:
    n = _check_n(n)
    m = _check_m(m, 1)
    a = n - 2
    lg_m = log_gamma(m)
    log_gam = a / 4 * math.log(n * a)
    log_slope = a / 4 * math.log(n) + (n + 2) / 4 * math.log(a)

    def ratio(k):  # log( Gamma(m-k+1) / (m^{1/2} Gamma(m)) )
        return log_gamma(m - k + 1) - 0.5 * math.log(m) - lg_m

    D = [log_gam + ratio(k) for k in range(1, m + 1)]
    d = [math.log(m - k) / n - 2 / a * ratio(k) for k in range(1, m)]
    Z = [log_slope + (n - 1) / a * math.log(m - k + 1) + n / a * ratio(k)
         for k in range(1, m + 1)]
    z = [_log_zero_radius(n, m, k) for k in range(2, m + 1)]
    return DirichletConstants(KSeries.from_logs(1, D, "D"),
                              KSeries.from_logs(1, d, "d"),
                              KSeries.from_logs(1, Z, "Z"),
                              KSeries.from_logs(2, z, "z"))


def _log_zero_radius(n, m, k):
    a = n - 2
    ratio = log_gamma(m - k + 1) - 0.5 * math.log(m) - log_gamma(m)
    return -math.log(m - k + 1) / a - 2 / a * ratio


def zero_radius_formula(n: int, m: int, k: int) -> float:
    """The ``z(k, m)`` expression evaluated for any ``1 <= k <= m``.

    The table stores ``k >= 2`` only; at ``k = 1`` the expression reduces
    to the boundary zero ``rho_1 = 1``.
    """
    n = _check_n(n)
    m = _check_m(m, 1)
    if int(k) != k or not 1 <= k <= m:
        raise IndexError(f"z formula defined for k in 1..{m}, got {k}")
    return math.exp(_log_zero_radius(n, m, int(k)))


def neumann_constants(n: int, m: int) -> NeumannConstants:
    n = _check_n(n)
    m = _check_m(m, 2)
    a = n - 2
    lg_m = log_gamma(m)
    lm1 = math.log(m - 1)
    log_gam = a / 4 * math.log(n * a)
    log_slope = a / 4 * math.log(n) + (n + 2) / 4 * math.log(a)

    def ratio(k):  # log( Gamma(m-k+1) / Gamma(m) )
        return log_gamma(m - k + 1) - lg_m

    D = [log_gam + (0.5 - 1 / n) * lm1 + ratio(k) for k in range(1, m + 1)]
    d = [-lm1 / n + math.log(m - k) / n - 2 / a * ratio(k)
         for k in range(2, m)]
    Z = [log_slope + 0.5 * lm1 - math.log(m - k) / a + n / a * ratio(k)
         for k in range(1, m)]
    z = [-lm1 / n + math.log(m - k) / a - 2 / a * ratio(k)
         for k in range(1, m)]
    return NeumannConstants(KSeries.from_logs(1, D, "Dt"),
                            KSeries.from_logs(2, d, "dt"),
                            KSeries.from_logs(1, Z, "Zt"),
                            KSeries.from_logs(1, z, "zt"))


def _neumann_step(n, dirichlet_prev):
    """Neumann logs at ``m`` from Dirichlet logs at ``m - 1``."""
    D, d, Z, z = dirichlet_prev
    m = len(D) + 1
    a = n - 2
    lt = (-(n + 2) / (n * a) * math.log(a) - math.log(n) / n
          + 4 / (n * a) * Z[1])
    Dt = {1: a / 4 * math.log(n * a) + a * a / 4 * lt}
    Dt.update({k: D[k - 1] + (2 - n) / 2 * lt for k in range(2, m + 1)})
    Zt = {1: (n + 2) / 4 * math.log(a) + a / 4 * math.log(n)
          + n * (n - 4) / 4 * lt}
    Zt.update({k: Z[k] - n / 2 * lt for k in range(2, m)})
    dt = {k: lt + d[k - 1] for k in range(2, m)}
    zt = {1: lt}
    zt.update({k: lt + z[k] for k in range(2, m)})
    return Dt, dt, Zt, zt


def _dirichlet_step(n, neumann_cur):
    """Dirichlet logs at ``m`` from Neumann logs at the same ``m``."""
    Dt, dt, Zt, zt = neumann_cur
    m = len(Dt)
    a = n - 2
    half = n / 2
    base = half * math.log(a) + half * math.log(n)
    inner = np.logaddexp(2 * n / a * Dt[1], base)
    ld = ((1 / (2 - n) - 1) * (math.log(a) + math.log(n))
          + 2 / a * Dt[1] + inner / a)
    D = {1: Dt[1] + (1 - half) * ld}
    D.update({k: (2 - n) / 2 * ld + Dt[k] for k in range(2, m + 1)})
    d = {1: ld}
    d.update({k: ld + dt[k] for k in range(2, m)})
    Z = {1: half * math.log(a) + (half - 1) * math.log(n)
         + (half - 1) * ld - Dt[1]}
    Z.update({k: -half * ld + Zt[k - 1] for k in range(2, m + 1)})
    z = {1: 0.0}
    z.update({k: ld + zt[k - 1] for k in range(2, m + 1)})
    return D, d, Z, z


def _series(logs: dict, first: int, label: str) -> KSeries:
    keys = sorted(k for k in logs if k >= first)
    return KSeries.from_logs(first, [logs[k] for k in keys], label)


@dataclass(frozen=True)
class ConstantsTable:
    """Every limit constant attached to ``(n, m)``.

    ``neumann`` and ``beta`` are ``None`` for ``m = 1``, where no Neumann
    solution with a single nodal region exists.
    """

    n: int
    m: int
    kappa: float
    gamma_n: float
    dirichlet: DirichletConstants
    neumann: Optional[NeumannConstants]
    alpha: KSeries
    beta: Optional[KSeries]
    whole_space: WholeSpaceLimits

    def family(self, name: str) -> KSeries:
        """Look up one of ``D, d, Z, z, Dt, dt, Zt, zt`` by name."""
        if name in DirichletConstants._fields:
            return getattr(self.dirichlet, name)
        if name in NeumannConstants._fields:
            if self.neumann is None:
                raise IndexError("Neumann constants need m >= 2")
            return getattr(self.neumann, name)
        raise KeyError(name)

    def as_dict(self) -> dict:
        out = {"n": self.n, "m": self.m, "kappa": self.kappa,
               "gamma_n": self.gamma_n}
        fams = list(DirichletConstants._fields)
        if self.neumann is not None:
            fams += list(NeumannConstants._fields)
        for name in fams:
            out[name] = {str(k): v for k, v in self.family(name).items()}
        out["alpha"] = {str(k): v for k, v in self.alpha.items()}
        if self.beta is not None:
            out["beta"] = {str(k): v for k, v in self.beta.items()}
        out["whole_space"] = self.whole_space._asdict()
        return out


def constants_via_recurrence(n: int, m_max: int) -> dict[int, ConstantsTable]:
    """Tables for ``m = 1..m_max`` built by the Dirichlet/Neumann induction."""
    n = _check_n(n)
    m_max = _check_m(m_max, 1)
    a = n - 2
    dir_logs = ({1: a / 4 * math.log(n * a)}, {},
                {1: a / 4 * math.log(n) + (n + 2) / 4 * math.log(a)}, {1: 0.0})
    tables = {}
    neu_logs = None
    for m in range(1, m_max + 1):
        if m > 1:
            neu_logs = _neumann_step(n, dir_logs)
            dir_logs = _dirichlet_step(n, neu_logs)
        D, d, Z, z = dir_logs
        dirichlet = DirichletConstants(_series(D, 1, "D"), _series(d, 1, "d"),
                                       _series(Z, 1, "Z"), _series(z, 2, "z"))
        neumann = None
        if neu_logs is not None:
            Dt, dt, Zt, zt = neu_logs
            neumann = NeumannConstants(_series(Dt, 1, "Dt"), _series(dt, 2, "dt"),
                                       _series(Zt, 1, "Zt"), _series(zt, 1, "zt"))
        alpha, beta = bubble_coefficients(n, m)
        tables[m] = ConstantsTable(n, m, kappa(n), gamma_n(n), dirichlet,
                                   neumann, alpha, beta,
                                   whole_space_constants(n, m))
    return tables


def bubble_coefficients(n: int, m: int) -> tuple[KSeries, Optional[KSeries]]:
    """Tower heights ``alpha_k`` (``k = 0..m``) and ``beta_k`` (``k = 1..m``).

    ``beta`` is ``None`` when ``m = 1``.
    """
    n = _check_n(n)
    m = _check_m(m, 1)
    lk = math.log(kappa(n))
    lg_m = log_gamma(m)
    alpha = [log_gamma(m - k + 1) - 0.5 * math.log(m) - lg_m + (0.5 - k) * lk
             for k in range(0, m + 1)]
    alpha_s = KSeries.from_logs(0, alpha, "alpha")
    if m < 2:
        return alpha_s, None
    shift = ((n - 2) / (2 * n) * math.log(m - 1) + 0.5 * math.log(m)
             + (n - 1) / n * lk)
    beta_s = KSeries.from_logs(1, [alpha[k] + shift for k in range(1, m + 1)],
                               "beta")
    return alpha_s, beta_s


def whole_space_constants(n: int, m: int) -> WholeSpaceLimits:
    n = _check_n(n)
    m = _check_m(m, 1)
    a = n - 2
    lg = log_gamma(m)
    r_lim = math.exp(0.5 * math.log(n * a) - math.log(m) / a - 2 / a * lg)
    wp_lim = math.exp(0.5 * math.log(a / n) + (n - 1) / a * math.log(m)
                      + n / a * lg)
    if m == 1:
        return WholeSpaceLimits(r_lim, wp_lim, None, None)
    s_lim = math.exp(0.5 * math.log(n * a) + math.log(m - 1) / n - 2 / a * lg)
    return WholeSpaceLimits(r_lim, wp_lim, s_lim, math.exp(lg))


def constants_table(n: int, m: int) -> ConstantsTable:
    """Closed-form table for one ``(n, m)``."""
    n = _check_n(n)
    m = _check_m(m, 1)
    alpha, beta = bubble_coefficients(n, m)
    return ConstantsTable(n, m, kappa(n), gamma_n(n), dirichlet_constants(n, m),
                          neumann_constants(n, m) if m >= 2 else None,
                          alpha, beta, whole_space_constants(n, m))


def profile_beta_closed_form(n: int, y: float) -> float:
    """``1/2 (n(n-2))^{n/2} B(n/2, y - n/2)``."""
    n = _check_n(n)
    return 0.5 * (n * (n - 2)) ** (n / 2) * beta_function(n / 2, y - n / 2)


def profile_beta_integral(n: int, y: float) -> float:
    """``int_0^inf (1 + t^2/(n(n-2)))^{-y} t^{n-1} dt`` by adaptive quadrature."""
    n = _check_n(n)
    if not y > n / 2:
        raise DomainError(f"integral diverges unless y > n/2, got {y}")
    c = n * (n - 2)
    f: Callable[[float], float] = lambda t: (1 + t * t / c) ** (-y) * t ** (n - 1)
    scale = math.sqrt(c)
    head, _ = integrate.quad(f, 0.0, scale, epsabs=0.0, epsrel=1e-13, limit=200)
    tail, _ = integrate.quad(f, scale, math.inf, epsabs=0.0, epsrel=1e-13,
                             limit=200)
    return head + tail
