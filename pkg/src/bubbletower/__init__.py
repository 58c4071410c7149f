"""Concentrating radial solutions of ``-Delta u = |u|^{4/(n-2) - eps} u``.

Submodules: ``radial_ode`` (shooting integrator), ``constants`` (limit
constants), ``solutions`` (ball solutions), ``asymptotics`` (eps sweeps),
``bubbles`` (bubble towers) and ``cli``.
"""

__version__ = "0.1.0"
