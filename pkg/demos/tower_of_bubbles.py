"""A three-region Dirichlet solution against its bubble tower.

Each nodal region carries one bubble, taller and narrower toward the
center, with alternating signs.  We print the solution and the tower at
the critical points, then the scaled remainder for a few eps values.
Pass a file name to also dump the remainder CSV.
"""

import sys

from bubbletower import bubbles
from bubbletower.solutions import dirichlet_solution

n, m = 3, 3
for eps in (0.1, 0.02, 0.005):
    sol = dirichlet_solution(n, eps, m)
    sol = sol if sol.delta_values[0] > 0 else sol.negated()
    tower = bubbles.bubble_tower("dirichlet", n, m, eps)
    print(f"eps={eps}: bubble heights {[f'{h:.3g}' for h in tower.heights]}")
    for k, (d, u) in enumerate(zip(sol.deltas, sol.delta_values), start=1):
        t = float(tower(d))
        print(f"    delta_{k}={d:.3e}  u={u:+.5e}  tower={t:+.5e}  ratio={t / u:.4f}")

print("\nscaled remainder f = eps^{-1/2} (tower - u), two regions:")
for eps in (0.2, 0.1, 0.05, 0.025, 0.0125):
    rem = bubbles.dirichlet_remainder(n, eps, 2)
    print(f"    eps={eps:<7g} sup|f| = {rem.sup:7.3f}"
          f"   max on [1/4,1] of |f - gamma_n alpha_0| = {rem.k_deviation:.4f}")

if len(sys.argv) > 1:
    with open(sys.argv[1], "w", encoding="utf-8") as fh:
        fh.write(bubbles.remainder_csv(rem))
    print(f"wrote {sys.argv[1]}")
