"""Rearrangements, concrete norm instances, sharp maximal function, and E_k.

All rearrangement-based norms integrate the exact step profile obtained by
sorting cell values with their cell masses, so no secondary quadrature error
enters beyond the sampling itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln

from .grid import Box, GridError, GridFunction

_SUPPORTED_DEGREE = 4


class NormDivergenceError(ValueError):
    """The requested norm diverges on the (unbounded-proxy) domain."""


@dataclass(frozen=True)
class NormSpec:
    """Tagged norm selector: Lp(p), Lorentz(p, q), Zygmund(p) or sup."""

    tag: str
    p: float = math.nan
    q: float = math.nan

    def __post_init__(self):
        if self.tag not in ("lp", "lorentz", "zygmund", "sup"):
            raise ValueError(f"unknown norm tag {self.tag!r}")
        if self.tag in ("lp", "zygmund") and not self.p > 0:
            raise ValueError("p must be positive")
        if self.tag == "lorentz" and not (self.p > 0 and self.q >= 1):
            raise ValueError("Lorentz requires p > 0 and q >= 1")

    def label(self) -> str:
        if self.tag == "lp":
            return f"L{self.p:g}"
        if self.tag == "lorentz":
            return f"L({self.p:g},{self.q:g})"
        if self.tag == "zygmund":
            return f"L{self.p:g}(logL)^{self.p:g}"
        return "Linf"


def Lp(p: float) -> NormSpec:
    return NormSpec("lp", float(p))


def Lorentz(p: float, q: float) -> NormSpec:
    return NormSpec("lorentz", float(p), float(q))


def Zygmund(p: float) -> NormSpec:
    return NormSpec("zygmund", float(p))


SUP = NormSpec("sup")


@dataclass(frozen=True)
class RearrangementProfile:
    """Non-increasing step profile f*(t): values on (t_i-1, t_i].

    ``breakpoints`` are the cumulative measures t_0 = 0 < t_1 <= ... <= t_n;
    ``values`` the corresponding non-increasing |f| levels.  A positive
    smallest value on an unbounded-proxy domain marks non-decaying mass.
    """

    breakpoints: np.ndarray  # length n+1, starts at 0
    values: np.ndarray  # length n, non-increasing
    measure_kind: str
    truncates_unbounded: bool = False

    @property
    def total_mass(self) -> float:
        return float(self.breakpoints[-1])

    def value_at(self, t) -> np.ndarray:
        """Right-continuous evaluation f*(t); zero beyond the total mass."""
        t = np.asarray(t, float)
        idx = np.searchsorted(self.breakpoints[1:], t, side="left")
        padded = np.append(self.values, 0.0)
        return padded[np.minimum(idx, len(self.values))]

    def partial_power_integral(self, T, p: float) -> np.ndarray:
        """Exact int_0^T f*(u)^p du over the step profile."""
        T = np.asarray(T, float)
        vp = self.values ** p
        widths = np.diff(self.breakpoints)
        cum = np.concatenate([[0.0], np.cumsum(vp * widths)])
        idx = np.clip(np.searchsorted(self.breakpoints, T, side="right") - 1, 0, len(self.values))
        base = cum[idx]
        frac = np.where(idx < len(self.values),
                        np.append(vp, 0.0)[idx] * (T - self.breakpoints[idx]), 0.0)
        return base + np.maximum(frac, 0.0)

    def to_csv(self, path) -> None:
        data = np.column_stack([self.breakpoints[1:], self.values])
        np.savetxt(path, data, delimiter=",", header="t,fstar", comments="")


def rearrange(f: GridFunction) -> RearrangementProfile:
    """Sort |f| cell values by decreasing magnitude, accumulating cell measure."""
    if not np.all(np.isfinite(f.values)):
        raise GridError("non-finite sample")
    vals = np.abs(f.values)
    order = np.argsort(-vals, kind="stable")
    sorted_vals = vals[order]
    masses = f.cell_masses[order]
    return RearrangementProfile(
        np.concatenate([[0.0], np.cumsum(masses)]), sorted_vals,
        f.measure.kind, f.box.truncates_unbounded,
    )


def distribution(f: GridFunction, lam: float) -> float:
    """Measure of {|f| > lam}."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return float(np.sum(f.cell_masses[np.abs(f.values) > lam]))


def _log_weight_integral(a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    """Exact int_a^b (1 - log t)^p dt for 0 <= a < b <= 1.

    Substituting u = 1 - log t gives e * (Gamma(p+1, u_b) - Gamma(p+1, u_a))
    with the upper incomplete gamma function.
    """
    a = np.maximum(np.asarray(a, float), 1e-300)
    b = np.asarray(b, float)
    ua, ub = 1 - np.log(a), 1 - np.log(b)
    scale = math.e * math.exp(gammaln(p + 1))
    return scale * (gammaincc(p + 1, ub) - gammaincc(p + 1, ua))


def norm_of_profile(profile: RearrangementProfile, spec: NormSpec) -> float:
    t = profile.breakpoints
    v = profile.values
    if spec.tag == "sup":
        return float(v[0]) if v.size else 0.0
    if spec.tag == "lp":
        p = spec.p
        total = float(np.sum(v ** p * np.diff(t)))
        return total ** (1 / p)
    if spec.tag == "lorentz":
        p, q = spec.p, spec.q
        if profile.truncates_unbounded and profile.measure_kind == "lebesgue" and v.size and v[-1] > 1e-12 * (v[0] + 1e-300):
            raise NormDivergenceError("norm diverges: non-decaying function on an unbounded-proxy domain")
        # per step: int_{t0}^{t1} t^{q/p - 1} dt = (p/q) (t1^{q/p} - t0^{q/p})
        e = q / p
        total = float(np.sum(v ** q * (t[1:] ** e - t[:-1] ** e)) / e)
        return total ** (1 / q)
    if spec.tag == "zygmund":
        p = spec.p
        if profile.measure_kind != "gaussian" and profile.total_mass > 1 + 1e-9:
            raise NormDivergenceError("Zygmund norm needs unit total mass; use a probability measure")
        hi = np.minimum(t[1:], 1.0)
        lo = np.minimum(t[:-1], 1.0)
        keep = hi > lo
        total = float(np.sum((v[keep] ** p) * _log_weight_integral(lo[keep], hi[keep], p)))
        return total ** (1 / p)
    raise ValueError(spec.tag)


def norm(f: GridFunction, spec: NormSpec) -> float:
    """Norm of f computed through its rearrangement profile."""
    return norm_of_profile(rearrange(f), spec)


# ---------------------------------------------------------------------------
# Sharp maximal function and BMO
# ---------------------------------------------------------------------------

def dyadic_cubes(box: Box, min_cells: int = 4) -> list[tuple[slice, ...]]:
    """Dyadic sub-cubes of the box, as index slices, down to min_cells width."""
    out = [tuple(slice(0, n) for n in box.cells)]
    frontier = out[:]
    while frontier:
        nxt = []
        for cube in frontier:
            sizes = [s.stop - s.start for s in cube]
            if min(sizes) < 2 * min_cells:
                continue
            splits = []
            for s in cube:
                mid = (s.start + s.stop) // 2
                splits.append((slice(s.start, mid), slice(mid, s.stop)))
            if box.dim == 1:
                children = [(a,) for a in splits[0]]
            else:
                children = [(a, b) for a in splits[0] for b in splits[1]]
            nxt.extend(children)
        out.extend(nxt)
        frontier = nxt
    return out


def _osc_assign(values: np.ndarray, masses: np.ndarray, cubes, out: np.ndarray) -> None:
    for cube in cubes:
        v = values[cube]
        m = masses[cube]
        tot = m.sum()
        mean = float((v * m).sum() / tot)
        osc = float((np.abs(v - mean) * m).sum() / tot)
        np.maximum(out[cube], osc, out=out[cube])


def all_aligned_intervals(n: int) -> list[tuple[slice, ...]]:
    return [(slice(i, j),) for i in range(n) for j in range(i + 2, n + 1)]


def sharp_maximal(f: GridFunction, cubes: Sequence[Box] | None = None, oracle: bool = False) -> GridFunction:
    """Fefferman-Stein style maximal oscillation sup_{Q' ni x} avg_Q' |f - f_Q'|.

    The default family is all dyadic sub-cubes of f.box down to 4-cell width;
    ``oracle=True`` uses every grid-aligned interval instead (1D, O(n^3)).
    ``cubes`` may list explicit grid-aligned sub-boxes.
    """
    values = f.grid_values()
    masses = f.cell_masses.reshape(f.box.cells)
    out = np.zeros_like(values)
    if cubes is not None:
        slices = [f.box.aligned_slices(c) for c in cubes]
        covered = np.zeros(values.shape, bool)
        for s in slices:
            covered[s] = True
        if not covered.all():
            raise GridError("cube family does not cover the box")
        _osc_assign(values, masses, slices, out)
    elif oracle:
        if f.box.dim != 1:
            raise GridError("brute-force cube family is 1D only")
        _osc_assign(values, masses, all_aligned_intervals(f.box.cells[0]), out)
    else:
        _osc_assign(values, masses, dyadic_cubes(f.box), out)
    return f.with_values(out.reshape(-1))


def bmo_norm(f: GridFunction, cubes: Sequence[Box] | None = None, oracle: bool = False) -> float:
    return sharp_maximal(f, cubes, oracle).norm_sup()


# ---------------------------------------------------------------------------
# Best polynomial approximation E_k
# ---------------------------------------------------------------------------

def _poly_basis(f: GridFunction, k: int) -> np.ndarray:
    """Column basis of polynomials of total degree <= k-1 on normalized coords."""
    box = f.box
    cols = []
    if box.dim == 1:
        u = (2 * box.axis_centers(0) - (box.lo[0] + box.hi[0])) / box.widths[0]
        from numpy.polynomial import legendre

        cols = [legendre.legvander(u, k - 1)[:, j] for j in range(k)]
    else:
        us = []
        for i in range(2):
            us.append((2 * box.axis_centers(i) - (box.lo[i] + box.hi[i])) / box.widths[i])
        from numpy.polynomial import legendre

        vx = legendre.legvander(us[0], k - 1)
        vy = legendre.legvander(us[1], k - 1)
        for i in range(k):
            for j in range(k - i):
                cols.append(np.multiply.outer(vx[:, i], vy[:, j]).reshape(-1))
    return np.column_stack(cols)


@dataclass(frozen=True)
class BestApprox:
    value: float
    converged: bool
    iterations: int


def best_approx_info(f: GridFunction, Q: Box | None, k: int, p: float) -> BestApprox:
    if k < 1 or k > _SUPPORTED_DEGREE:
        raise ValueError(f"unsupported degree: k must be in 1..{_SUPPORTED_DEGREE}")
    if p < 1:
        raise ValueError("p must be >= 1")
    g = f if Q is None or Q == f.box else f.restrict(Q)
    A = _poly_basis(g, k)
    m = g.cell_masses
    v = g.values

    def err(res):
        return float(np.dot(m, np.abs(res) ** p) ** (1 / p))

    sqm = np.sqrt(m)
    coef, *_ = np.linalg.lstsq(A * sqm[:, None], v * sqm, rcond=None)
    res = v - A @ coef
    if p == 2:
        return BestApprox(err(res), True, 0)

    # IRLS with damping 0.5 and a floor on residual weights.
    best = err(res)
    prev = best
    floor = 1e-12
    for it in range(1, 301):
        w = m * np.maximum(np.abs(res), floor) ** (p - 2)
        sw = np.sqrt(w)
        new_coef, *_ = np.linalg.lstsq(A * sw[:, None], v * sw, rcond=None)
        coef = 0.5 * coef + 0.5 * new_coef
        res = v - A @ coef
        e = err(res)
        best = min(best, e)
        if abs(e - prev) <= 1e-8 * max(e, 1e-300):
            return BestApprox(best, True, it)
        prev = e
    # Stalled: fall back to the mean-removal upper bound if it is better.
    mean = float(np.dot(m, v) / np.sum(m))
    fallback = float(np.dot(m, np.abs(v - mean) ** p) ** (1 / p))
    return BestApprox(min(best, fallback), False, 300)


def best_approx(f: GridFunction, Q: Box | None, k: int, p: float) -> float:
    """E_k(f, Q)_p: distance from f to polynomials of degree < k in L^p(Q)."""
    return best_approx_info(f, Q, k, p).value
