"""Grid algorithms for planar branched covers.

Numerical machinery for studying continuous, light, open maps of the plane on
uniform grids: normal domains around a point, path and ray lifting through a
fiber, local degree and branch-point detection, and local power-map charts.
"""

__version__ = "0.1.0"
