"""kfunlab: numerical K-functionals, moduli of smoothness, and mollifier limits.

Library + CLI for desk-scale verification of sharpened Poincare, Gaussian
Sobolev and John-Nirenberg inequalities and their limiting formulas
(Bourgain-Brezis-Mironescu / Maz'ya-Shaposhnikova type, including fractional
semigroup powers).
"""

__version__ = "0.1.0"

from .grid import GAUSSIAN, LEBESGUE, AnalyticHandle, Box, GridError, GridFunction
from .norms import SUP, Lorentz, Lp, NormDivergenceError, NormSpec, Zygmund

__all__ = [
    "AnalyticHandle", "Box", "GridError", "GridFunction", "GAUSSIAN", "LEBESGUE",
    "NormSpec", "NormDivergenceError", "Lp", "Lorentz", "Zygmund", "SUP",
    "__version__",
]
