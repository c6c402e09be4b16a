"""Built-in test functions with analytic derivatives and closed-form norms.

Functions are addressed by string id ("gauss_bump", "tent", "indicator:0:1",
"step:0.75", ...).  Each entry knows its default box/measure and, where a
closed form exists, the exact L^p norms of f, f' and f'' used as oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gamma

from .grid import GAUSSIAN, LEBESGUE, AnalyticHandle, Box, GridFunction, GridError, handle_1d


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    handle: AnalyticHandle
    default_box: Box
    measure: "object" = LEBESGUE
    # closed-form norms: keys (derivative_order, p) -> ||f^(order)||_p
    norms: dict = field(default_factory=dict)
    gauss_mean: float | None = None
    # weak smoothness order s: ||D^k_h f||_p ~ |h|^(min(k,s)) (plus a 1/p-power
    # of the kink/jump window when s < k); 0 = jump, 1 = Lipschitz kink
    sobolev_order: float = math.inf

    def difference_power_exponent(self, k: int, p: float) -> float:
        """Exact small-scale exponent of ||D^k_h f||_p^p in |h|."""
        s = self.sobolev_order
        if s >= k:
            return k * p
        return p * s + 1.0

    def grid(self, box: Box | None = None, cells: int | None = None, measure=None) -> GridFunction:
        box = box or self.default_box
        if cells is not None:
            from dataclasses import replace

            box = replace(box, cells=(cells,) * box.dim)
        return GridFunction.from_handle(self.handle, box, measure or self.measure)


def _even_moment(a: float, k: int) -> float:
    """integral over R of x^(2k) exp(-a x^2)."""
    return math.sqrt(math.pi / a) * math.prod(2 * i - 1 for i in range(1, k + 1)) / (2 * a) ** k


def _poly_even_integral(k: float) -> float:
    """integral over [-1,1] of (1-x^2)^k = sqrt(pi) Gamma(k+1)/Gamma(k+3/2)."""
    return math.sqrt(math.pi) * gamma(k + 1) / gamma(k + 1.5)


_REGISTRY: dict[str, Callable[[], CorpusEntry]] = {}


def _register(id_: str):
    def deco(builder):
        _REGISTRY[id_] = builder
        return builder

    return deco


@_register("gauss_bump")
def _gauss_bump() -> CorpusEntry:
    f = lambda x: np.exp(-x * x)
    d1 = lambda x: -2 * x * np.exp(-x * x)
    d2 = lambda x: (4 * x * x - 2) * np.exp(-x * x)
    norms = {
        (0, 1): math.sqrt(math.pi),
        (0, 2): (math.pi / 2) ** 0.25,
        (1, 1): 2.0,
        (1, 2): (math.pi / 2) ** 0.25,  # ||f'||_2^2 = sqrt(pi/2)
        (2, 2): math.sqrt(3 * math.sqrt(math.pi / 2)),
    }
    return CorpusEntry(
        "gauss_bump", handle_1d("gauss_bump", f, d1, d2, support_radius=6.5),
        Box.real_line(), LEBESGUE, norms,
    )


@_register("bump")
def _bump() -> CorpusEntry:
    """Compactly supported C^2 bump (1-x^2)^3 on [-1,1]."""

    def f(x):
        y = 1 - x * x
        return np.where(np.abs(x) < 1, y * y * y, 0.0)

    def d1(x):
        y = 1 - x * x
        return np.where(np.abs(x) < 1, -6 * x * y * y, 0.0)

    def d2(x):
        y = 1 - x * x
        return np.where(np.abs(x) < 1, y * (30 * x * x - 6), 0.0)

    norms = {
        (0, 1): _poly_even_integral(3),
        (0, 2): math.sqrt(_poly_even_integral(6)),
        (0, 4): _poly_even_integral(12) ** 0.25,
        (1, 2): math.sqrt(36 * (_poly_even_integral(4) - _poly_even_integral(5))),
    }
    return CorpusEntry("bump", handle_1d("bump", f, d1, d2, support_radius=1.0), Box.real_line(), LEBESGUE, norms)


@_register("tent")
def _tent() -> CorpusEntry:
    f = lambda x: np.maximum(0.0, 1 - np.abs(x))
    d1 = lambda x: np.where(np.abs(x) < 1, -np.sign(x), 0.0)
    norms = {
        (0, 1): 1.0,
        (0, 2): math.sqrt(2 / 3),
        (1, 1): 2.0,
        (1, 2): math.sqrt(2.0),
    }
    return CorpusEntry("tent", handle_1d("tent", f, d1, None, support_radius=1.0), Box.real_line(), LEBESGUE, norms,
                       sobolev_order=1)


@_register("sin")
def _sin() -> CorpusEntry:
    w = 2 * math.pi
    f = lambda x: np.sin(w * x)
    d1 = lambda x: w * np.cos(w * x)
    d2 = lambda x: -w * w * np.sin(w * x)
    norms = {
        (0, 1): 2 / math.pi,
        (0, 2): math.sqrt(0.5),
        (1, 2): w * math.sqrt(0.5),
        (2, 2): w * w * math.sqrt(0.5),
    }
    return CorpusEntry("sin", handle_1d("sin", f, d1, d2), Box.interval(0.0, 1.0), LEBESGUE, norms)


def _monomial(k: int) -> CorpusEntry:
    f = lambda x: x ** k
    d1 = (lambda x: k * x ** (k - 1)) if k >= 1 else (lambda x: np.zeros_like(x))
    d2 = (lambda x: k * (k - 1) * x ** (k - 2)) if k >= 2 else (lambda x: np.zeros_like(x))
    norms = {(0, p): (1 / (k * p + 1)) ** (1 / p) for p in (1.0, 2.0)}  # on [0,1]
    name = "x" if k == 1 else f"x{k}"
    mean = {1: 0.0, 2: 1.0, 3: 0.0, 4: 3.0}.get(k)
    return CorpusEntry(name, handle_1d(name, f, d1, d2), Box.interval(0.0, 1.0), LEBESGUE, norms, gauss_mean=mean)


_register("x")(lambda: _monomial(1))
_register("x2")(lambda: _monomial(2))
_register("x3")(lambda: _monomial(3))


@_register("abs_center")
def _abs_center() -> CorpusEntry:
    f = lambda x: np.abs(x - 0.5)
    d1 = lambda x: np.sign(x - 0.5)
    return CorpusEntry("abs_center", handle_1d("abs_center", f, d1), Box.interval(0.0, 1.0), LEBESGUE,
                       {(0, 1): 0.25, (0, 2): math.sqrt(1 / 12), (1, 1): 1.0, (1, 2): 1.0},
                       sobolev_order=1)


@_register("polybump")
def _polybump() -> CorpusEntry:
    """C^1 bump (4x(1-x))^2 on [0,1], vanishing with its slope at the ends."""
    f = lambda x: np.where((x > 0) & (x < 1), (4 * x * (1 - x)) ** 2, 0.0)
    d1 = lambda x: np.where((x > 0) & (x < 1), 32 * x * (1 - x) * (1 - 2 * x), 0.0)
    return CorpusEntry("polybump", handle_1d("polybump", f, d1), Box.interval(0.0, 1.0), LEBESGUE, {},
                       sobolev_order=2)


@_register("expx")
def _expx() -> CorpusEntry:
    f = lambda x: np.exp(x)
    return CorpusEntry("expx", handle_1d("expx", f, f, f), Box.interval(0.0, 1.0), LEBESGUE,
                       {(0, 1): math.e - 1, (0, 2): math.sqrt((math.e ** 2 - 1) / 2),
                        (1, 2): math.sqrt((math.e ** 2 - 1) / 2)})


@_register("exphalf")
def _exphalf() -> CorpusEntry:
    """e^(x/2): mild growth, integrable against the Gaussian measure."""
    f = lambda x: np.exp(x / 2)
    d1 = lambda x: 0.5 * np.exp(x / 2)
    d2 = lambda x: 0.25 * np.exp(x / 2)
    return CorpusEntry("exphalf", handle_1d("exphalf", f, d1, d2), Box.gauss_line(), GAUSSIAN,
                       gauss_mean=math.exp(0.125))


@_register("hermite2")
def _hermite2() -> CorpusEntry:
    f = lambda x: x * x - 1
    d1 = lambda x: 2 * x
    d2 = lambda x: 2 * np.ones_like(x)
    return CorpusEntry("hermite2", handle_1d("hermite2", f, d1, d2), Box.gauss_line(), GAUSSIAN, gauss_mean=0.0)


@_register("gauss_bump2")
def _gauss_bump2() -> CorpusEntry:
    fn = lambda pts: np.exp(-np.sum(np.asarray(pts, float) ** 2, axis=-1))
    h = AnalyticHandle("gauss_bump2", fn, 2, support_radius=6.5)
    return CorpusEntry("gauss_bump2", h, Box.real_plane(), LEBESGUE,
                       {(0, 2): (math.pi / 2) ** 0.5})


@_register("bump2")
def _bump2() -> CorpusEntry:
    def fn(pts):
        pts = np.asarray(pts, float)
        r2 = np.sum(pts * pts, axis=-1)
        y = np.maximum(0.0, 1 - r2)
        return y * y * y

    h = AnalyticHandle("bump2", fn, 2, support_radius=1.0)
    return CorpusEntry("bump2", h, Box.real_plane(), LEBESGUE, {})


def _parse_param_id(id_: str) -> CorpusEntry | None:
    parts = id_.split(":")
    if parts[0] == "indicator" and len(parts) == 3:
        a, b = float(parts[1]), float(parts[2])
        if not b > a:
            raise GridError("indicator requires a < b")
        f = lambda x: ((x >= a) & (x < b)).astype(float)
        width = b - a
        norms = {(0, p): width ** (1 / p) for p in (1.0, 2.0, 4.0)}
        pad = max(1.0, width)
        box = Box.interval(a - pad, b + pad, 2048, truncates_unbounded=True)
        return CorpusEntry(id_, handle_1d(id_, f, support_radius=max(abs(a), abs(b))), box, LEBESGUE, norms,
                           sobolev_order=0)
    if parts[0] == "step":
        jump = float(parts[1]) if len(parts) > 1 else 1.0
        if not 0 < jump < 2:
            raise GridError("step jump must lie in (0, 2)")
        f = lambda x: ((x >= 0) & (x < jump)).astype(float)
        return CorpusEntry(id_, handle_1d(id_, f, support_radius=2.0), Box.interval(0.0, 2.0), LEBESGUE,
                           {(0, 1): jump, (0, 2): math.sqrt(jump)}, sobolev_order=0)
    return None


def get_entry(id_: str) -> CorpusEntry:
    if id_ in _REGISTRY:
        return _REGISTRY[id_]()
    entry = _parse_param_id(id_)
    if entry is None:
        raise GridError(f"unknown corpus function {id_!r}")
    return entry


def get(id_: str, box: Box | None = None, cells: int | None = None, measure=None) -> GridFunction:
    return get_entry(id_).grid(box, cells, measure)


def ids() -> list[str]:
    return sorted(_REGISTRY)


PONCE_CORPUS = ["x", "x2", "x3", "sin", "abs_center", "polybump", "expx",
                "indicator:0:0.5", "indicator:0.25:0.75", "tent"]

GAUSS_CORPUS = ["x", "x2", "x3", "hermite2", "exphalf"]

STEP_CORPUS = ["step", "step:0.75", "step:0.7"]
