"""faircurves: fair planar curves, aesthetic spirals, NURBS templates, quality metrics.

The package is organised as a small kernel of pure geometry modules:

- :mod:`faircurves.numerics` -- quadrature, hypergeometric 2F1, root bracketing
- :mod:`faircurves.analytic` -- superspirals, log-aesthetic curves, Hermite sampling
- :mod:`faircurves.nurbs` -- rational B-spline type, evaluation, knot operations
- :mod:`faircurves.templates` -- NURBzS / B-spline construction from Hermite data
- :mod:`faircurves.fairing` -- v-curve fairing on support and tangent polylines
- :mod:`faircurves.quality` -- fairness criteria and deviation certification
- :mod:`faircurves.modelio` / :mod:`faircurves.dxfio` -- persistence
- :mod:`faircurves.cli` / :mod:`faircurves.service` -- tooling surfaces
"""

__version__ = "0.1.0"
