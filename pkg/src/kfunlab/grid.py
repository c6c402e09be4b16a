"""Uniform-grid functions on boxes with Lebesgue or Gaussian cell measure.

A GridFunction samples a real function at the cell centers of a uniform grid
over a box in dimension 1 or 2.  Integrals are composite midpoint sums: the
weight of a cell is its exact measure (Lebesgue volume, or the product of
per-axis normal-CDF increments for the Gaussian measure), so constants
integrate exactly and the rule is order 2 on C^2 integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr


class GridError(ValueError):
    """Invalid grid operation: misaligned boxes, missing handles, bad samples."""


def _as_tuple(x, dim: int) -> tuple[float, ...]:
    if np.isscalar(x):
        return (float(x),) * dim
    t = tuple(float(v) for v in x)
    if len(t) != dim:
        raise GridError(f"expected {dim} components, got {len(t)}")
    return t


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with a fixed number of sample cells per axis.

    ``truncates_unbounded`` marks a box standing in for all of R^N; tail
    corrections (e.g. disjoint-support closures) are only applied there.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    cells: tuple[int, ...]
    truncates_unbounded: bool = False

    def __post_init__(self):
        if not 1 <= len(self.lo) <= 2:
            raise GridError("only dimensions 1 and 2 are supported")
        if len(self.hi) != len(self.lo) or len(self.cells) != len(self.lo):
            raise GridError("lo, hi, cells must have matching lengths")
        for a, b, n in zip(self.lo, self.hi, self.cells):
            if not b > a:
                raise GridError("box requires lo < hi componentwise")
            if n < 2:
                raise GridError("at least 2 cells per axis")

    # -- constructors ------------------------------------------------------
    @staticmethod
    def interval(lo: float, hi: float, cells: int = 2048, *, truncates_unbounded: bool = False) -> "Box":
        return Box((float(lo),), (float(hi),), (int(cells),), truncates_unbounded)

    @staticmethod
    def real_line(radius: float = 8.0, cells: int = 2048) -> "Box":
        """Stand-in for R: corpus tails are below 1e-20 at the default radius."""
        return Box.interval(-radius, radius, cells, truncates_unbounded=True)

    @staticmethod
    def gauss_line(radius: float = 10.0, cells: int = 8192) -> "Box":
        """Stand-in for (R, gamma_1); gamma mass outside is ~1.5e-23."""
        return Box.interval(-radius, radius, cells, truncates_unbounded=True)

    @staticmethod
    def square(lo: float, hi: float, cells: int = 256, *, truncates_unbounded: bool = False) -> "Box":
        return Box((float(lo),) * 2, (float(hi),) * 2, (int(cells),) * 2, truncates_unbounded)

    @staticmethod
    def real_plane(radius: float = 8.0, cells: int = 256) -> "Box":
        return Box.square(-radius, radius, cells, truncates_unbounded=True)

    # -- geometry ----------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    @property
    def is_cube(self) -> bool:
        w = self.widths
        return all(abs(x - w[0]) <= 1e-12 * abs(w[0]) for x in w)

    @property
    def edge_length(self) -> float:
        if not self.is_cube:
            raise GridError("edge_length is defined for cubes only")
        return self.widths[0]

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def npoints(self) -> int:
        return int(np.prod(self.cells))

    def cell_widths(self) -> tuple[float, ...]:
        return tuple(w / n for w, n in zip(self.widths, self.cells))

    def axis_centers(self, axis: int) -> np.ndarray:
        h = self.widths[axis] / self.cells[axis]
        return self.lo[axis] + h * (np.arange(self.cells[axis]) + 0.5)

    def axis_edges(self, axis: int) -> np.ndarray:
        return np.linspace(self.lo[axis], self.hi[axis], self.cells[axis] + 1)

    def center_grid(self) -> np.ndarray:
        """Cell centers as an array of shape (npoints, dim), C order."""
        axes = [self.axis_centers(i) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, float)
        ok = np.ones(pts.shape[:-1], bool)
        for i in range(self.dim):
            ok &= (pts[..., i] >= self.lo[i]) & (pts[..., i] <= self.hi[i])
        return ok

    def aligned_slices(self, sub: "Box") -> tuple[slice, ...]:
        """Slices selecting the cells of ``sub`` inside this grid.

        ``sub`` must lie inside the box with edges on this grid's cell
        boundaries and use the same cell width.
        """
        if sub.dim != self.dim:
            raise GridError("dimension mismatch")
        out = []
        for i in range(self.dim):
            h = self.widths[i] / self.cells[i]
            i0 = (sub.lo[i] - self.lo[i]) / h
            i1 = (sub.hi[i] - self.lo[i]) / h
            if i0 < -1e-9 or i1 > self.cells[i] + 1e-9:
                raise GridError("sub-box not contained in box")
            j0, j1 = round(i0), round(i1)
            if abs(i0 - j0) > 1e-6 or abs(i1 - j1) > 1e-6:
                raise GridError("sub-box edges not aligned with the grid")
            if sub.cells[i] != j1 - j0:
                raise GridError("sub-box cell count does not match the grid spacing")
            out.append(slice(j0, j1))
        return tuple(out)

    def subbox(self, slices: tuple[slice, ...], *, truncates_unbounded: bool = False) -> "Box":
        lo, hi, cells = [], [], []
        for i, s in enumerate(slices):
            h = self.widths[i] / self.cells[i]
            lo.append(self.lo[i] + s.start * h)
            hi.append(self.lo[i] + s.stop * h)
            cells.append(s.stop - s.start)
        return Box(tuple(lo), tuple(hi), tuple(cells), truncates_unbounded)


@dataclass(frozen=True)
class Measure:
    """Either Lebesgue measure or the standard Gaussian measure gamma_N."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("lebesgue", "gaussian"):
            raise GridError(f"unknown measure kind {self.kind!r}")

    @property
    def is_gaussian(self) -> bool:
        return self.kind == "gaussian"

    def axis_masses(self, box: Box, axis: int) -> np.ndarray:
        edges = box.axis_edges(axis)
        if self.kind == "lebesgue":
            return np.full(box.cells[axis], (edges[-1] - edges[0]) / box.cells[axis])
        # Exact per-cell Gaussian mass as Phi increments.  Cells in the upper
        # tail use the mirrored lower-tail difference: subtracting two values
        # near 1 would lose all relative accuracy of the tiny masses.
        lower = np.diff(ndtr(edges))
        upper = -np.diff(ndtr(-edges))
        centers_positive = (edges[:-1] + edges[1:]) > 0
        return np.where(centers_positive, upper, lower)

    def cell_masses(self, box: Box) -> np.ndarray:
        masses = self.axis_masses(box, 0)
        for i in range(1, box.dim):
            masses = np.multiply.outer(masses, self.axis_masses(box, i))
        return masses.reshape(-1)

    def density(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, float)
        if self.kind == "lebesgue":
            return np.ones(pts.shape[:-1])
        dim = pts.shape[-1]
        r2 = np.sum(pts * pts, axis=-1)
        return (2 * math.pi) ** (-dim / 2) * np.exp(-r2 / 2)


LEBESGUE = Measure("lebesgue")
GAUSSIAN = Measure("gaussian")


@dataclass(frozen=True)
class AnalyticHandle:
    """Closure identifier allowing exact resampling at arbitrary points.

    ``fn`` maps an array of shape (..., dim) to values of shape (...).
    ``support_radius`` is the sup-norm radius beyond which the function is
    treated as zero (may be inf); derivative handles are 1D only.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    dim: int = 1
    support_radius: float = math.inf
    d1: Callable[[np.ndarray], np.ndarray] | None = None
    d2: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(pts, float)), float)

    def derivative(self, order: int) -> "AnalyticHandle":
        fn = {1: self.d1, 2: self.d2}.get(order)
        if fn is None:
            raise GridError(f"no analytic derivative of order {order} for {self.name!r}")
        return AnalyticHandle(f"{self.name}'{order}", fn, self.dim, self.support_radius)

    def shifted(self, h) -> "AnalyticHandle":
        h = np.atleast_1d(np.asarray(h, float))
        rad = self.support_radius
        if math.isfinite(rad):
            rad = rad + float(np.max(np.abs(h)))
        return AnalyticHandle(
            f"{self.name}@shift", lambda pts: self.fn(np.asarray(pts, float) + h),
            self.dim, rad, None, None,
        )

    def scaled(self, lam: float) -> "AnalyticHandle":
        rad = self.support_radius
        if math.isfinite(rad):
            rad = rad / abs(lam)
        return AnalyticHandle(
            f"{self.name}@scale{lam:g}", lambda pts: self.fn(np.asarray(pts, float) * lam),
            self.dim, rad,
            None if self.d1 is None else (lambda pts: lam * self.d1(np.asarray(pts, float) * lam)),
            None if self.d2 is None else (lambda pts: lam * lam * self.d2(np.asarray(pts, float) * lam)),
        )


def handle_1d(name: str, fn, d1=None, d2=None, support_radius: float = math.inf) -> AnalyticHandle:
    """Wrap scalar 1D callables f(x) into the (..., dim) point convention."""

    def wrap(g):
        return None if g is None else (lambda pts: g(np.asarray(pts, float)[..., 0]))

    return AnalyticHandle(name, wrap(fn), 1, support_radius, wrap(d1), wrap(d2))


class GridFunction:
    """Immutable sampled function: box + measure + cell-center values.

    Carries the analytic handle it was sampled from when available, which
    enables exact resampling (refine, shifts, differences at off-grid points).
    """

    __slots__ = ("box", "measure", "values", "handle", "_masses")

    def __init__(self, box: Box, measure: Measure, values, handle: AnalyticHandle | None = None):
        values = np.array(values, float).reshape(-1)
        if values.size != box.npoints:
            raise GridError(f"expected {box.npoints} values, got {values.size}")
        values.setflags(write=False)
        self.box = box
        self.measure = measure
        self.values = values
        self.handle = handle
        self._masses = None

    # -- construction ------------------------------------------------------
    @classmethod
    def from_handle(cls, handle: AnalyticHandle, box: Box, measure: Measure = LEBESGUE) -> "GridFunction":
        return cls(box, measure, handle(box.center_grid()), handle)

    def with_values(self, values, handle: AnalyticHandle | None = None) -> "GridFunction":
        return GridFunction(self.box, self.measure, values, handle)

    # -- basics --------------------------------------------------------------
    @property
    def cell_masses(self) -> np.ndarray:
        if self._masses is None:
            object.__setattr__(self, "_masses", self.measure.cell_masses(self.box))
        return self._masses

    def grid_values(self) -> np.ndarray:
        return self.values.reshape(self.box.cells)

    def eval_at(self, pts: np.ndarray) -> np.ndarray:
        """Evaluate at arbitrary points: analytic when possible, else linear
        interpolation (edge cells extend to the box boundary; zero outside)."""
        pts = np.asarray(pts, float)
        if self.handle is not None:
            return self.handle(pts)
        inside = self.box.contains_points(pts)
        if self.box.dim == 1:
            x = pts[..., 0]
            xs = self.box.axis_centers(0)
            out = np.interp(x, xs, self.values)
            return np.where(inside, out, 0.0)
        from scipy.interpolate import RegularGridInterpolator

        axes = tuple(self.box.axis_centers(i) for i in range(2))
        clipped = np.stack([np.clip(pts[..., i], axes[i][0], axes[i][-1]) for i in range(2)], axis=-1)
        interp = RegularGridInterpolator(axes, self.grid_values(), bounds_error=False, fill_value=None)
        return np.where(inside, interp(clipped), 0.0)

    # -- operations ----------------------------------------------------------
    def quadrature(self, integrand: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
        """Midpoint sum of ``integrand(f)`` (identity by default) against the measure."""
        if not np.all(np.isfinite(self.values)):
            raise GridError("non-finite sample")
        vals = self.values if integrand is None else np.asarray(integrand(self.values), float)
        return float(np.dot(self.cell_masses, vals))

    def restrict(self, sub: Box) -> "GridFunction":
        slices = self.box.aligned_slices(sub)
        new_box = self.box.subbox(slices)
        vals = self.grid_values()[slices].reshape(-1)
        return GridFunction(new_box, self.measure, vals, self.handle)

    def refine(self, factor: int) -> "GridFunction":
        if self.handle is None:
            raise GridError("cannot refine sampled-only data")
        if factor < 1:
            raise GridError("refinement factor must be >= 1")
        new_box = replace(self.box, cells=tuple(n * factor for n in self.box.cells))
        return GridFunction.from_handle(self.handle, new_box, self.measure)

    def norm_sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def mean(self) -> float:
        """Measure average: f_Q for Lebesgue on a box, m(f) for Gaussian."""
        m = self.cell_masses
        return float(np.dot(m, self.values) / np.sum(m))

    def to_csv(self, path) -> None:
        """Dump the grid as CSV rows (x..., value)."""
        pts = self.box.center_grid()
        data = np.column_stack([pts, self.values])
        header = ",".join([f"x{i+1}" for i in range(self.box.dim)] + ["value"])
        np.savetxt(path, data, delimiter=",", header=header, comments="")
