"""epsilon -> 0 sweeps of scaled solution features.

Every feature of a concentrating solution behaves like ``C (kappa_n eps)^{-e}``.
A :class:`QuantitySpec` names the feature and carries the exponent ``e``
and the limit ``C``; :func:`sweep` tabulates ``raw * (kappa_n eps)^e`` on a
decreasing schedule; :func:`extrapolate` accelerates the tabulated sequence
with iterated Aitken; :func:`verify_theorem` does all of this for every
feature attached to ``(n, m, bc)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import constants as cst
from . import radial_ode as ode
from .errors import (AccelerationUnstable, BubbleTowerError, DegenerateFit,
                     DomainError, SweepAborted)
from .solutions import BoundaryCondition, NodalSolution, solve

__all__ = [
    "BALL_KINDS", "WHOLE_SPACE_KINDS", "QuantitySpec", "SweepRow",
    "SweepResult", "Extrapolation", "QuantityCheck", "VerificationReport",
    "default_schedule", "theorem_quantities", "sweep", "sweep_many",
    "fit_rate", "aitken_table", "extrapolate", "extrapolate_sequence",
    "verify_theorem", "pointwise_profile", "boundary_cross_check", "sweep_csv",
    "DEFAULT_TOLERANCES", "tolerance_for",
]

BALL_KINDS = ("crit_value", "crit_radius", "zero_slope", "zero_radius")
WHOLE_SPACE_KINDS = ("ws_zero", "ws_zero_slope", "ws_crit", "ws_crit_value")
POINTWISE = "pointwise_value"

# relative pass tolerance after extrapolation, by tower height
DEFAULT_TOLERANCES = {"low": 0.02, "high": 0.05}

_FAMILY = {
    (BoundaryCondition.DIRICHLET, "crit_value"): "D",
    (BoundaryCondition.DIRICHLET, "crit_radius"): "d",
    (BoundaryCondition.DIRICHLET, "zero_slope"): "Z",
    (BoundaryCondition.DIRICHLET, "zero_radius"): "z",
    (BoundaryCondition.NEUMANN, "crit_value"): "Dt",
    (BoundaryCondition.NEUMANN, "crit_radius"): "dt",
    (BoundaryCondition.NEUMANN, "zero_slope"): "Zt",
    (BoundaryCondition.NEUMANN, "zero_radius"): "zt",
}


def _ball_exponent(bc, kind, n, k) -> Fraction:
    F = Fraction
    if bc is BoundaryCondition.DIRICHLET:
        return {
            "crit_value": F(2 * k - 1, 2),
            "crit_radius": F(-2 * (k * n - 1), n * (n - 2)),
            "zero_slope": F(2 * k * n - 3 * n + 2, 2 * (n - 2)),
            "zero_radius": F(-2 * (k - 1), n - 2),
        }[kind]
    return {
        "crit_value": F(2 * k * n - 3 * n + 2, 2 * n),
        "crit_radius": F(-2 * (k - 1), n - 2),
        "zero_slope": F(2 * k * n - 3 * n + 4, 2 * (n - 2)),
        "zero_radius": F(-(2 * k * n - 2 * n + 2), n * (n - 2)),
    }[kind]


def _ws_exponent(kind, n, m) -> Fraction:
    F = Fraction
    return {
        "ws_zero": F(2 * m - 1, n - 2),
        "ws_zero_slope": F(1 - m * n, n - 2),
        "ws_crit": F(2 * m * n - 3 * n + 2, n * (n - 2)),
        "ws_crit_value": F(1 - m),
    }[kind]


@dataclass(frozen=True)
class QuantitySpec:
    """A feature of the ``m``-region solution in dimension ``n``.

    ``index`` is the feature number ``k`` for ball features, ``m`` for the
    whole-space ones and the radius ``x`` for ``pointwise_value``.
    """

    kind: str
    index: float
    bc: BoundaryCondition
    n: int
    m: int

    def __post_init__(self):
        bc = BoundaryCondition.parse(self.bc)
        object.__setattr__(self, "bc", bc)
        if self.kind in BALL_KINDS:
            if bc is BoundaryCondition.WHOLE_SPACE:
                raise DomainError(f"{self.kind} is a ball feature")
            object.__setattr__(self, "index", int(self.index))
            # raises IndexError outside the index domain
            self.theoretical_constant
        elif self.kind in WHOLE_SPACE_KINDS:
            if bc is not BoundaryCondition.WHOLE_SPACE:
                raise DomainError(f"{self.kind} is a whole-space feature")
            if int(self.index) != self.m:
                raise DomainError("whole-space features are indexed by m")
            object.__setattr__(self, "index", int(self.index))
            self.theoretical_constant
        elif self.kind == POINTWISE:
            if bc is BoundaryCondition.WHOLE_SPACE:
                raise DomainError("pointwise profiles live on the ball")
            if not 0 < self.index <= 1:
                raise DomainError("pointwise radius must lie in (0, 1]")
            if bc is BoundaryCondition.NEUMANN and self.m < 2:
                raise DomainError("Neumann solutions need m >= 2")
        else:
            raise DomainError(f"unknown quantity kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind in BALL_KINDS:
            return f"{_FAMILY[(self.bc, self.kind)]}({self.index},{self.m})"
        if self.kind == POINTWISE:
            return f"u({self.index:g})"
        return f"{self.kind}({self.m})"

    @property
    def theoretical_exponent(self) -> Fraction:
        """Power of ``kappa_n eps`` that makes ``raw`` converge."""
        n = self.n
        if self.kind in BALL_KINDS:
            return _ball_exponent(self.bc, self.kind, n, self.index)
        if self.kind in WHOLE_SPACE_KINDS:
            return _ws_exponent(self.kind, n, self.m)
        if self.bc is BoundaryCondition.DIRICHLET:
            return Fraction(-1, 2)
        return Fraction(-(n - 2), 2 * n)

    @property
    def theoretical_constant(self) -> float:
        n, m = self.n, self.m
        if self.kind in BALL_KINDS:
            table = cst.constants_table(n, m)
            return table.family(_FAMILY[(self.bc, self.kind)])[self.index]
        if self.kind in WHOLE_SPACE_KINDS:
            lims = cst.whole_space_constants(n, m)
            pos = WHOLE_SPACE_KINDS.index(self.kind)
            value = lims[pos]
            if value is None:
                raise IndexError(f"{self.kind} needs m >= 2")
            return value
        g = cst.gamma_n(n)
        x = float(self.index)
        if self.bc is BoundaryCondition.DIRICHLET:
            return g * math.sqrt(m) * (x ** (2 - n) - 1)
        return g * (m - 1) ** ((n - 2) / (2 * n))

    def raw_value(self, obj) -> float:
        """Unscaled feature of a :class:`NodalSolution` or whole-space profile."""
        if self.kind in WHOLE_SPACE_KINDS:
            ev = obj.events
            m = self.m
            if self.kind == "ws_zero":
                return float(ev.zero_radii[m - 1])
            if self.kind == "ws_zero_slope":
                return abs(float(ev.zero_slopes[m - 1]))
            if self.kind == "ws_crit":
                return float(ev.critical_radii[m - 1])
            return abs(float(ev.critical_values[m - 1]))
        sol: NodalSolution = obj
        if self.kind == POINTWISE:
            return abs(float(sol.value(self.index)))
        k = self.index
        if self.kind == "crit_value":
            return abs(float(sol.delta_values[k - 1]))
        if self.kind == "crit_radius":
            return float(sol.deltas[k - 1])
        if self.kind == "zero_slope":
            return abs(float(sol.rho_slopes[k - 1]))
        return float(sol.rhos[k - 1])


@dataclass(frozen=True)
class SweepRow:
    eps: float
    raw: float
    scaled: float


@dataclass(frozen=True)
class Extrapolation:
    """Accelerated limit with the gap between its last two iterates.

    ``flagged`` marks a fallback to the last tabulated value because the
    acceleration broke down; ``column`` is the Aitken depth used.
    """

    value: float
    error: float
    column: int
    flagged: bool = False
    note: str = ""

    def __float__(self) -> float:
        return self.value


@dataclass
class SweepResult:
    spec: QuantitySpec
    rows: list
    fit: Optional[tuple] = None
    extrapolation: Optional[Extrapolation] = None

    @property
    def eps(self) -> np.ndarray:
        return np.array([r.eps for r in self.rows])

    @property
    def raw(self) -> np.ndarray:
        return np.array([r.raw for r in self.rows])

    @property
    def scaled(self) -> np.ndarray:
        return np.array([r.scaled for r in self.rows])

    @property
    def extrapolated_limit(self) -> Optional[float]:
        return None if self.extrapolation is None else self.extrapolation.value

    @property
    def monotone(self) -> bool:
        d = np.diff(self.scaled)
        return bool(np.all(d >= 0) or np.all(d <= 0))


def default_schedule(n: int, *, eps_start: Optional[float] = None,
                     factor: float = 0.5, count: int = 10) -> list[float]:
    """Geometric schedule ``eps_start * factor^j`` for ``j < count``."""
    if eps_start is None:
        eps_start = min(0.05, 0.8 * 4.0 / (n - 2))
    if not 0 < factor < 1:
        raise DomainError("schedule factor must lie in (0, 1)")
    if count < 1:
        raise DomainError("schedule needs at least one point")
    return [eps_start * factor**j for j in range(count)]


def _check_schedule(n, schedule) -> list[float]:
    sched = [float(e) for e in schedule]
    if not sched:
        raise DomainError("empty eps schedule")
    if any(b >= a for a, b in zip(sched, sched[1:])):
        raise DomainError("eps schedule must be strictly decreasing")
    upper = 4.0 / (n - 2)
    if not all(0 < e < upper for e in sched):
        raise DomainError(f"eps values must lie in (0, {upper:g})")
    return sched


def _subject(bc, n, m, eps):
    if bc is BoundaryCondition.WHOLE_SPACE:
        stop = ode.KZeros(m)
        return ode.integrate_ivp(ode.ProblemParams(n, eps), 1.0, stop)
    return solve(bc, n, eps, m)


def sweep_many(specs: Sequence[QuantitySpec],
               eps_schedule: Optional[Sequence[float]] = None
               ) -> list[SweepResult]:
    """Sweep several features of one ``(n, m, bc)`` family at once.

    Each schedule point is solved once and every feature read off it.
    """
    if not specs:
        return []
    first = specs[0]
    n, m, bc = first.n, first.m, first.bc
    if any((s.n, s.m, s.bc) != (n, m, bc) for s in specs):
        raise DomainError("sweep_many needs a common (n, m, bc)")
    sched = _check_schedule(n, default_schedule(n) if eps_schedule is None
                            else eps_schedule)
    if bc is BoundaryCondition.WHOLE_SPACE and any(
            s.kind in ("ws_crit", "ws_crit_value") for s in specs) and m < 2:
        raise DomainError("whole-space critical features need m >= 2")
    rows = [[] for _ in specs]
    kap = cst.kappa(n)
    for eps in sched:
        try:
            subject = _subject(bc, n, m, eps)
        except BubbleTowerError as exc:
            raise SweepAborted(f"construction failed at eps={eps:g}: {exc}") from exc
        for i, s in enumerate(specs):
            raw = s.raw_value(subject)
            scaled = raw * (kap * eps) ** float(s.theoretical_exponent)
            rows[i].append(SweepRow(eps, raw, scaled))
    out = []
    for s, r in zip(specs, rows):
        res = SweepResult(s, r)
        if len(r) >= 3 and all(x.raw > 0 for x in r):
            res.fit = fit_rate(res)
        if len(r) >= 3:
            res.extrapolation = extrapolate(res)
        out.append(res)
    return out


def sweep(spec: QuantitySpec,
          eps_schedule: Optional[Sequence[float]] = None) -> SweepResult:
    return sweep_many([spec], eps_schedule)[0]


def fit_rate(result: SweepResult) -> tuple[float, float, float]:
    """Least-squares power law ``raw ~ C eps^a``: returns ``(a, C, rms)``.

    ``rms`` is the root-mean-square residual in ``log raw``.
    """
    if len(result.rows) < 3:
        raise DegenerateFit("need at least 3 rows to fit a rate")
    raw = result.raw
    if np.any(~(raw > 0)) or not np.all(np.isfinite(raw)):
        raise DegenerateFit("power-law fit needs positive finite values")
    x, y = np.log(result.eps), np.log(raw)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(math.exp(intercept)), float(np.sqrt(np.mean(resid**2)))


def aitken_table(seq: Sequence[float]) -> list[np.ndarray]:
    """Columns of the iterated Aitken transform, starting with ``seq``.

    Iteration stops when a column is too short or a second difference
    vanishes against a nonzero first difference.  Raises
    :class:`AccelerationUnstable` if not even one transform exists.
    """
    cols = [np.asarray(seq, dtype=float)]
    while len(cols[-1]) >= 3:
        x = cols[-1]
        d1 = np.diff(x)
        d2 = np.diff(x, 2)
        scale = np.maximum(np.abs(x[2:]), 1e-300)
        tiny = np.abs(d2) <= 1e-14 * scale
        settled = tiny & (np.abs(d1[1:]) <= 1e-14 * scale)
        if np.any(tiny & ~settled):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt = np.where(settled, x[2:], x[2:] - d1[1:] ** 2 / d2)
        if not np.all(np.isfinite(nxt)):
            break
        cols.append(nxt)
    if len(cols) == 1 and len(cols[0]) >= 3:
        raise AccelerationUnstable("Aitken transform undefined on this sequence")
    return cols


def extrapolate_sequence(seq: Sequence[float]) -> Extrapolation:
    """Limit of ``seq`` from the most self-consistent Aitken column.

    Among the columns with at least two entries, the one whose last two
    entries agree best is taken; their gap is the error estimate.
    """
    seq = np.asarray(seq, dtype=float)
    if len(seq) < 3:
        raise DomainError("extrapolation needs at least 3 values")
    try:
        cols = aitken_table(seq)
    except AccelerationUnstable as exc:
        return Extrapolation(float(seq[-1]), abs(float(seq[-1] - seq[-2])), 0,
                             flagged=True, note=str(exc))
    gaps = [abs(float(c[-1] - c[-2])) for c in cols if len(c) >= 2]
    j = int(np.argmin(gaps))
    return Extrapolation(float(cols[j][-1]), gaps[j], j)


def extrapolate(result: SweepResult) -> Extrapolation:
    """Extrapolated limit of the ``scaled`` column of a sweep."""
    return extrapolate_sequence(result.scaled)


def theorem_quantities(n: int, m: int, bc) -> list[QuantitySpec]:
    """Every feature with a limit constant at ``(n, m, bc)``."""
    bc = BoundaryCondition.parse(bc)
    if bc is BoundaryCondition.WHOLE_SPACE:
        kinds = WHOLE_SPACE_KINDS if m >= 2 else WHOLE_SPACE_KINDS[:2]
        return [QuantitySpec(k, m, bc, n, m) for k in kinds]
    table = cst.constants_table(n, m)
    if bc is BoundaryCondition.NEUMANN and table.neumann is None:
        raise DomainError("Neumann solutions need m >= 2")
    out = []
    for kind in BALL_KINDS:
        fam = table.family(_FAMILY[(bc, kind)])
        out.extend(QuantitySpec(kind, k, bc, n, m) for k in fam)
    return out


@dataclass(frozen=True)
class QuantityCheck:
    label: str
    constant: float
    extrapolated: Optional[float]
    error_estimate: Optional[float]
    relative_error: Optional[float]
    fitted_exponent: Optional[float]
    expected_exponent: float
    passed: bool
    flagged: bool = False
    note: str = ""


@dataclass
class VerificationReport:
    n: int
    m: int
    bc: BoundaryCondition
    schedule: list
    tolerance: float
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "n": self.n, "m": self.m, "bc": self.bc.value,
            "schedule": list(self.schedule), "tolerance": self.tolerance,
            "passed": self.passed,
            "checks": [c.__dict__.copy() for c in self.checks],
        }


def tolerance_for(m, tol):
    if tol is not None:
        return float(tol)
    return DEFAULT_TOLERANCES["low"] if m <= 2 else DEFAULT_TOLERANCES["high"]


def _check(result: SweepResult, tol: float) -> QuantityCheck:
    s = result.spec
    c = s.theoretical_constant
    ex = result.extrapolation
    fitted = None if result.fit is None else result.fit[0]
    expected = float(-s.theoretical_exponent)
    if ex is None:
        return QuantityCheck(s.label, c, None, None, None, fitted, expected,
                             False, note="too few rows")
    if c == 0.0:
        rel = abs(ex.value)
    else:
        rel = abs(ex.value - c) / abs(c)
    return QuantityCheck(s.label, c, ex.value, ex.error, rel, fitted, expected,
                         rel <= tol, ex.flagged, ex.note)


def verify_theorem(n: int, m: int, bc,
                   eps_schedule: Optional[Sequence[float]] = None, *,
                   tol: Optional[float] = None) -> VerificationReport:
    """Compare every extrapolated feature at ``(n, m, bc)`` with its constant.

    A failed construction marks all features failed instead of raising.
    """
    bc = BoundaryCondition.parse(bc)
    sched = default_schedule(n) if eps_schedule is None else list(eps_schedule)
    tolerance = tolerance_for(m, tol)
    report = VerificationReport(n, m, bc, sched, tolerance)
    specs = theorem_quantities(n, m, bc)
    try:
        results = sweep_many(specs, sched)
    except SweepAborted as exc:
        for s in specs:
            report.checks.append(QuantityCheck(
                s.label, s.theoretical_constant, None, None, None, None,
                float(-s.theoretical_exponent), False, note=str(exc)))
        return report
    report.checks.extend(_check(r, tolerance) for r in results)
    return report


def pointwise_profile(n: int, m: int, bc, x: float,
                      eps_schedule: Optional[Sequence[float]] = None
                      ) -> SweepResult:
    return sweep(QuantitySpec(POINTWISE, x, bc, n, m), eps_schedule)


def boundary_cross_check(sol: NodalSolution) -> tuple[float, float]:
    """Two Dirichlet quantities tied to the outermost bump, and their limits.

    Returns ratios that tend to 1:

    * ``(kappa_n eps)^{-1} |u(delta_1)|^{-eps(n-2)/2} (u'(1)^2 - c_eps
      |u(delta_1)|^{2n/(n-2) - eps} delta_1^n)`` over
      ``n^{(n-2)/2} (n-2)^{(n+2)/2}``;
    * ``|u(delta_1)|^{1 - eps(n-2)/2} |u'(1)|`` over ``(n(n-2))^{n/2} / n``.
    """
    if sol.bc is not BoundaryCondition.DIRICHLET or sol.m < 2:
        raise DomainError("needs a Dirichlet solution with m >= 2")
    n, eps = sol.n, sol.eps
    u = abs(float(sol.delta_values[0]))
    du = abs(float(sol.rho_slopes[0]))
    d1 = float(sol.deltas[0])
    c_eps = (n - 2) / (n - eps * (n - 2) / 2)
    inner = du * du - c_eps * u ** (2 * n / (n - 2) - eps) * d1**n
    first = (cst.kappa(n) * eps) ** -1 * u ** (-eps * (n - 2) / 2) * inner
    second = u ** (1 - eps * (n - 2) / 2) * du
    return (first / (n ** ((n - 2) / 2) * (n - 2) ** ((n + 2) / 2)),
            second / ((n * (n - 2)) ** (n / 2) / n))


def _fmt(x) -> str:
    return format(float(x), ".17g")


def sweep_csv(result: SweepResult, *, version: str = "",
              tolerance: Optional[float] = None) -> str:
    """CSV with ``#`` metadata, then ``eps,raw,scaled,extrapolant`` rows.

    ``extrapolant`` is the running extrapolated limit using rows up to and
    including the current one (blank for the first two rows).
    """
    s = result.spec
    buf = io.StringIO()
    meta = (f"# quantity={s.label} kind={s.kind} n={s.n} m={s.m} bc={s.bc.value}"
            f" exponent={s.theoretical_exponent} constant={_fmt(s.theoretical_constant)}"
            f" eps={','.join(_fmt(e) for e in result.eps)}")
    if tolerance is not None:
        meta += f" tolerance={_fmt(tolerance)}"
    if version:
        meta += f" version={version}"
    buf.write(meta + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["eps", "raw", "scaled", "extrapolant"])
    for i, row in enumerate(result.rows):
        extr = ""
        if i >= 2:
            part = SweepResult(s, result.rows[:i + 1])
            extr = _fmt(extrapolate(part).value)
        writer.writerow([_fmt(row.eps), _fmt(row.raw), _fmt(row.scaled), extr])
    return buf.getvalue()
