"""Check every limit constant for small towers in dimensions 3 and 4.

Each feature is swept down to eps ~ 1e-4, accelerated, and compared
with its closed-form constant.  Prints one table per configuration.
"""

from bubbletower.asymptotics import verify_theorem

configs = [(n, m, "dirichlet") for n in (3, 4) for m in (1, 2, 3)]
configs += [(n, m, "neumann") for n in (3, 4) for m in (2, 3)]

for n, m, bc in configs:
    report = verify_theorem(n, m, bc)
    verdict = "all pass" if report.passed else "FAILURES"
    print(f"{bc} n={n} m={m}: {verdict} at tolerance {report.tolerance:.0%}")
    for c in report.checks:
        print(f"    {c.label:<9} constant {c.constant:12.6g}  extrapolated "
              f"{c.extrapolated:12.6g}  error {c.relative_error:8.2e}  "
              f"rate {c.fitted_exponent:+.3f} vs {c.expected_exponent:+.3f}")
