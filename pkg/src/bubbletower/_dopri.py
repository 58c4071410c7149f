"""Dormand-Prince 5(4) stepper specialised to the radial Lane-Emden system.

State layout (five components)::

    0  w          solution value
    1  v = w'     radial derivative
    2  I_{p+1}    int_0^r |w|^{p+1} t^{n-1} dt
    3  I_p        int_0^r |w|^p t^{n-1} dt
    4  J          int_0^r |w|^{p-1} w t^{n-1} dt   (signed flux)

Only ``(w, v)`` enter the right-hand side, so the stages carry two
components and the three quadratures are assembled from the stage
derivatives at the end of each step.  Everything runs on Python floats:
for a five-dimensional state numpy call overhead dominates the arithmetic.
"""

import math

import numpy as np

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176,
                           -5103 / 18656)
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920,
                          -17253 / 339200, 22 / 525, -1 / 40)

# Continuous extension of order four (Shampine 1986); row i multiplies
# stage i, column j multiplies theta**(j+1).  Rows sum to the b weights so
# the interpolant collocates the step end exactly.
DENSE_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


def rhs(r, w, v, n, p):
    """Derivatives of the five state components at radius ``r > 0``."""
    a = abs(w) ** (p - 1.0)
    g = a * w
    rn = r ** (n - 1)
    aw = a * abs(w)
    return (v, -(n - 1) * v / r - g, aw * abs(w) * rn, aw * rn, g * rn)


class StepRecord:
    """Accepted steps in growable Python lists, frozen to arrays at the end."""

    def __init__(self, r0, y0):
        self.r = [r0]
        self.y = [tuple(y0)]
        self.k = []
        self.h = []

    def append(self, r_new, y_new, h, ks):
        self.r.append(r_new)
        self.y.append(y_new)
        self.h.append(h)
        self.k.append(ks)

    def arrays(self):
        """Return ``(r, y, q)`` with ``y(r_i + theta h_i) = y_i + q_i @ theta^(1..4)``."""
        r = np.asarray(self.r, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if not self.k:
            return r, y, np.zeros((0, 5, 4))
        k = np.asarray(self.k, dtype=float)  # (N, 7, 5)
        h = np.asarray(self.h, dtype=float)
        q = np.einsum("nsc,sj->ncj", k, DENSE_P) * h[:, None, None]
        return r, y, q


def step_error_norm(y0, y1, err, r0, r1, rtol, atol):
    """Scale-covariant RMS error norm.

    ``w`` and ``r w'`` share units under the scaling symmetry of the
    equation, so each is measured against the larger of the two; the
    signed flux is measured against the unsigned ``I_p``.
    """
    w0, v0, i10, i20, _ = y0
    w1, v1, i11, i21, _ = y1
    mag_w = max(abs(w0), abs(w1), r0 * abs(v0), r1 * abs(v1))
    mag_v = max(abs(v0), abs(v1), mag_w / r1)
    s = (
        (err[0] / (atol + rtol * mag_w)) ** 2
        + (err[1] / (atol + rtol * mag_v)) ** 2
        + (err[2] / (atol + rtol * max(abs(i10), abs(i11)))) ** 2
        + (err[3] / (atol + rtol * max(abs(i20), abs(i21)))) ** 2
        + (err[4] / (atol + rtol * max(abs(i20), abs(i21)))) ** 2
    )
    return math.sqrt(s / 5.0)


def dopri_step(r, y, f1, h, n, p):
    """One Dormand-Prince step from ``(r, y)`` with first-stage slope ``f1``.

    Returns ``(y_new, f7, err, ks)``; ``f7`` is the FSAL slope at the end.
    """
    w, v = y[0], y[1]
    k1 = f1
    k2 = rhs(r + C2 * h, w + h * A21 * k1[0], v + h * A21 * k1[1], n, p)
    k3 = rhs(r + C3 * h,
             w + h * (A31 * k1[0] + A32 * k2[0]),
             v + h * (A31 * k1[1] + A32 * k2[1]), n, p)
    k4 = rhs(r + C4 * h,
             w + h * (A41 * k1[0] + A42 * k2[0] + A43 * k3[0]),
             v + h * (A41 * k1[1] + A42 * k2[1] + A43 * k3[1]), n, p)
    k5 = rhs(r + C5 * h,
             w + h * (A51 * k1[0] + A52 * k2[0] + A53 * k3[0] + A54 * k4[0]),
             v + h * (A51 * k1[1] + A52 * k2[1] + A53 * k3[1] + A54 * k4[1]),
             n, p)
    k6 = rhs(r + h,
             w + h * (A61 * k1[0] + A62 * k2[0] + A63 * k3[0] + A64 * k4[0]
                      + A65 * k5[0]),
             v + h * (A61 * k1[1] + A62 * k2[1] + A63 * k3[1] + A64 * k4[1]
                      + A65 * k5[1]), n, p)
    y_new = tuple(
        y[c] + h * (B1 * k1[c] + B3 * k3[c] + B4 * k4[c] + B5 * k5[c]
                    + B6 * k6[c])
        for c in range(5)
    )
    k7 = rhs(r + h, y_new[0], y_new[1], n, p)
    err = tuple(
        h * (E1 * k1[c] + E3 * k3[c] + E4 * k4[c] + E5 * k5[c] + E6 * k6[c]
             + E7 * k7[c])
        for c in range(5)
    )
    return y_new, k7, err, (k1, k2, k3, k4, k5, k6, k7)
