"""The slope at the outer zero of a two-region Neumann solution.

In n=3 it diverges like eps^{-1/2}, in n=4 it settles at 4*sqrt(2), and
from n=5 on it goes to zero.  One sweep per dimension shows all three
behaviours side by side.
"""

import math

from bubbletower.asymptotics import QuantitySpec, sweep

for n in (3, 4, 5):
    res = sweep(QuantitySpec("zero_slope", 1, "neumann", n, 2))
    print(f"n={n}: |u'(rho_1)| along eps = {res.eps[0]:g} .. {res.eps[-1]:.2g}")
    for e, raw, sc in zip(res.eps[::3], res.raw[::3], res.scaled[::3]):
        print(f"    eps={e:9.3g}  raw={raw:10.5f}  scaled={sc:9.5f}")
    print(f"    fitted rate eps^{res.fit[0]:+.3f}  "
          f"(predicted {float(-res.spec.theoretical_exponent):+.3f})")
    print(f"    scaled limit {res.extrapolated_limit:.5f}  "
          f"target {res.spec.theoretical_constant:.5f}\n")

print(f"4*sqrt(2) = {4 * math.sqrt(2):.5f}")
