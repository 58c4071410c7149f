"""Watch the positive Dirichlet solution concentrate as eps shrinks.

For one nodal region the solution is a single bump whose height blows up
like eps^{-1/2}.  We track eps * u(0)^2 and the rescaled boundary slope,
accelerate both sequences, and compare with their closed-form limits.
Then we zoom into the bump and see it take the shape of the critical
profile U.
"""

import math

from bubbletower import bubbles, constants
from bubbletower.asymptotics import extrapolate_sequence
from bubbletower.solutions import dirichlet_solution

n = 3
kappa = constants.kappa(n)
schedule = [0.2 * 2.0**-j for j in range(7)]

print(f"n={n}: kappa = {kappa:.6f} (pi/32 = {math.pi / 32:.6f})")
print(f"{'eps':>10} {'u(0)':>12} {'eps*u(0)^2':>12} {'slope scaled':>13}")
center, slope = [], []
for eps in schedule:
    sol = dirichlet_solution(n, eps, 1)
    u0 = float(sol.value(0.0))
    center.append(eps * u0**2)
    slope.append((kappa * eps) ** -0.5 * abs(float(sol.rho_slopes[0])))
    print(f"{eps:10.5f} {u0:12.5f} {center[-1]:12.6f} {slope[-1]:13.6f}")

c = extrapolate_sequence(center)
s = extrapolate_sequence(slope)
print(f"\naccelerated eps*u(0)^2 = {c.value:.6f} +- {c.error:.1e}"
      f"   closed form {constants.base_case_limit(n):.6f}")
print(f"accelerated slope      = {s.value:.6f} +- {s.error:.1e}"
      f"   closed form {constants.dirichlet_constants(n, 1).Z[1]:.6f}")

# zoom: z(x) = u(x / L) / u(0) with L = u(0)^{(p-1)/2}
print("\nsize of the blown-up profile minus U on 1/2 <= |x| <= 2:")
for eps in (0.2, 0.05, 0.0125):
    rep = bubbles.blowup_profile_check(n, 1, eps)
    print(f"  eps={eps:<7g} sup|z - U| = {rep.sup_deviation:.4f}")
