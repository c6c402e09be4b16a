"""Finite differences, moduli of smoothness, K-functionals, nonlocal seminorms.

Difference norms are always taken over the restricted domain
Q(k, h) = {x in Q : x + k h in Q}.  Radial integrals over |h| use shared
log-spaced nets with the power-law quadrature from loggrid; on unbounded-proxy
boxes with compactly supported functions, radii beyond the disjoint-support
threshold use the exact mixture value instead of grid evaluation, which is
what makes the mass-at-infinity (Maz'ya-Shaposhnikova type) integrals honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import comb

from .grid import Box, GridError, GridFunction, LEBESGUE
from .loggrid import cumulative_powerlaw, geometric_net, powerlaw_integral
from .norms import (NormSpec, RearrangementProfile, Lp, norm, norm_of_profile,
                    rearrange)
from .weights import DerivedWeight

NET_PER_DECADE = 64
NET_DECADES = 3.0


def stencil_coefficients(k: int) -> np.ndarray:
    """(-1)^(j+k) * C(k, j), j = 0..k; sums to zero for k >= 1."""
    if k < 1:
        raise ValueError("difference order k must be >= 1")
    j = np.arange(k + 1)
    return ((-1.0) ** (j + k)) * comb(k, j)


def directions(dim: int, count_2d: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Unit directions and surface weights: sum_i w_i F(omega_i) ~ int_{S^(N-1)} F."""
    if dim == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    theta = 2 * math.pi * np.arange(count_2d) / count_2d
    vecs = np.column_stack([np.cos(theta), np.sin(theta)])
    return vecs, np.full(count_2d, 2 * math.pi / count_2d)


def difference(f: GridFunction, k: int, h) -> GridFunction:
    """Delta^k_h f, on the restricted grid Q(k, h) for genuine boxes.

    On unbounded-proxy boxes there is no domain restriction (the difference
    lives on all of R^N); shifted evaluations use the analytic handle, or zero
    fill beyond the box for sampled data.
    """
    h = np.atleast_1d(np.asarray(h, float))
    box = f.box
    if h.size != box.dim:
        raise GridError("step dimension mismatch")
    if box.truncates_unbounded:
        sub = box
    else:
        slices = []
        for i in range(box.dim):
            centers = box.axis_centers(i)
            shifted = centers + k * h[i]
            tol = 1e-9 * box.widths[i]
            ok = (shifted >= box.lo[i] - tol) & (shifted <= box.hi[i] + tol)
            idx = np.nonzero(ok)[0]
            if idx.size == 0:
                raise GridError("empty difference domain Q(k,h)")
            slices.append(slice(int(idx[0]), int(idx[-1]) + 1))
        sub = box.subbox(tuple(slices))
    pts = sub.center_grid()
    vals = np.zeros(pts.shape[0])
    for j, c in enumerate(stencil_coefficients(k)):
        vals += c * f.eval_at(pts + j * h)
    return GridFunction(sub, f.measure, vals)


def difference_norm(f: GridFunction, k: int, h, spec: NormSpec) -> float:
    """||Delta^k_h f||_{X(Q(k,h))}; direct sums for Lp/sup, profile otherwise."""
    d = difference(f, k, h)
    if spec.tag == "lp":
        return float(np.dot(d.cell_masses, np.abs(d.values) ** spec.p) ** (1 / spec.p))
    if spec.tag == "sup":
        return d.norm_sup()
    return norm(d, spec)


def disjoint_difference_profile(f: GridFunction, k: int) -> RearrangementProfile:
    """Rearrangement of Delta^k_h f for |h| beyond the support diameter.

    For compactly supported f the shifted copies are pairwise disjoint, so the
    distribution function is d(lam) = sum_j d_f(lam / C(k,j)); the profile is
    the mass-weighted union of the scaled levels C(k,j)|f|.
    """
    coeffs = np.abs(stencil_coefficients(k))
    levels = np.concatenate([c * np.abs(f.values) for c in coeffs])
    masses = np.tile(f.cell_masses, k + 1)
    order = np.argsort(-levels, kind="stable")
    return RearrangementProfile(
        np.concatenate([[0.0], np.cumsum(masses[order])]), levels[order],
        f.measure.kind, f.box.truncates_unbounded,
    )


def _support_radius(f: GridFunction) -> float:
    if f.handle is None or not math.isfinite(f.handle.support_radius):
        return math.inf
    return float(f.handle.support_radius)


def safe_shift_radius(f: GridFunction, k: int) -> float:
    """Largest |h| for which the full difference mass stays inside the box."""
    R = _support_radius(f)
    if not math.isfinite(R):
        return math.inf if not f.box.truncates_unbounded else 0.0
    margins = [min(abs(f.box.lo[i]) - R, abs(f.box.hi[i]) - R) for i in range(f.box.dim)]
    return max(0.0, min(margins) / k)


@dataclass(frozen=True)
class DisjointExtension:
    """Analytic continuation of radial difference-norm powers beyond 2R."""

    threshold: float  # radii above this use the disjoint value
    value_power: float  # ||Delta^k_h f||_spec^p in the disjoint regime

    @staticmethod
    def build(f: GridFunction, k: int, spec: NormSpec, p: float) -> "DisjointExtension":
        R = _support_radius(f)
        if not math.isfinite(R):
            raise GridError("non-compact support: disjoint extension unavailable")
        lam = norm_of_profile(disjoint_difference_profile(f, k), spec)
        return DisjointExtension(2.0 * R * 1.02, lam ** p)


def radial_difference_powers(
    f: GridFunction, k: int, radii: np.ndarray, spec: NormSpec, p: float,
    extension: DisjointExtension | None = None,
) -> np.ndarray:
    """S(rho) = rho^(N-1) * sum_dirs w ||Delta^k_{rho omega} f||_spec^p on the net."""
    dim = f.box.dim
    vecs, wdir = directions(dim)
    safe = safe_shift_radius(f, k)
    out = np.zeros(len(radii))
    for i, rho in enumerate(radii):
        if extension is not None and rho > extension.threshold:
            out[i] = float(np.sum(wdir)) * extension.value_power * rho ** (dim - 1)
            continue
        acc = 0.0
        for v, w in zip(vecs, wdir):
            try:
                acc += w * difference_norm(f, k, rho * v, spec) ** p
            except GridError:
                continue  # empty Q(k,h): no contribution
        out[i] = acc * rho ** (dim - 1)
    return out


def _radial_net(r_lo: float, r_hi: float, anchors=(), per_decade: int = NET_PER_DECADE) -> np.ndarray:
    return geometric_net(r_lo, r_hi, per_decade, anchors)


def modulus(f: GridFunction, k: int, t: float, spec: NormSpec) -> float:
    """omega_k(f, t)_X: sup of ||Delta^k_h f|| over the deterministic h-net."""
    if t <= 0:
        raise ValueError("t must be positive")
    net = _radial_net(t * 10 ** -NET_DECADES, t)
    vecs, _ = directions(f.box.dim)
    best = 0.0
    for rho in net:
        for v in vecs:
            try:
                best = max(best, difference_norm(f, k, rho * v, spec))
            except GridError:
                continue
    return best


def averaged_modulus_net(
    f: GridFunction, k: int, ts: Sequence[float], spec: NormSpec, p: float,
    extend: bool = False,
) -> np.ndarray:
    """g(t) = (t^(-N/k) int_{|h| <= t^(1/k)} ||Delta^k_h f||^p dh)^(1/p) on a t-grid.

    One radial evaluation is shared by all radii through the cumulative
    power-law integral.  ``extend=True`` continues beyond the numerically safe
    radius with the exact disjoint-support value (compact support required).
    """
    ts = np.asarray(ts, float)
    radii_req = ts ** (1.0 / k)
    r_max = float(np.max(radii_req))
    extension = DisjointExtension.build(f, k, spec, p) if extend else None
    if extension is None:
        safe = safe_shift_radius(f, k)
        if r_max > safe and f.box.truncates_unbounded:
            raise GridError("requested radius exceeds the box; pass extend=True for compact corpus entries")
    elif safe_shift_radius(f, k) < extension.threshold:
        raise GridError("box too small to bridge into the disjoint regime")
    net = _radial_net(float(radii_req.min()) * 10 ** -NET_DECADES, r_max, anchors=radii_req)
    S = radial_difference_powers(f, k, net, spec, p, extension)
    # cum[i] is the integral up to net[i] (head closure included in entry 0);
    # requested radii are net anchors, so the lookup is exact.
    cum = cumulative_powerlaw(net, S, head="fit")
    idx = np.searchsorted(net, radii_req)
    A = cum[idx]
    return (A / ts ** (f.box.dim / k)) ** (1.0 / p)


def averaged_modulus(f: GridFunction, k: int, t: float, spec: NormSpec, p: float,
                     extend: bool = False) -> float:
    return float(averaged_modulus_net(f, k, [t], spec, p, extend)[0])


# ---------------------------------------------------------------------------
# K-functionals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KPair:
    """Pairs with a computable K-functional.

    lp_linf: K(t) = (int_0^(t^p) f*(u)^p du)^(1/p)            (exact formula)
    x_wk:    K(t) ~ averaged modulus g(t)                     (computable equivalent)
    bb:      K(t) = min(1, t) ||f||                           (trivial pair)
    """

    tag: str
    p: float = math.nan
    spec: NormSpec | None = None
    k: int = 1

    @staticmethod
    def lp_linf(p: float) -> "KPair":
        return KPair("lp_linf", p=float(p))

    @staticmethod
    def x_wk(spec: NormSpec, k: int, p: float | None = None) -> "KPair":
        avg_p = p if p is not None else (spec.p if spec.tag in ("lp", "lorentz", "zygmund") else 1.0)
        return KPair("x_wk", p=float(avg_p), spec=spec, k=int(k))

    @staticmethod
    def bb(spec: NormSpec) -> "KPair":
        return KPair("bb", spec=spec)


def k_functional_net(pair: KPair, ts: Sequence[float], f: GridFunction) -> np.ndarray:
    ts = np.asarray(ts, float)
    if np.any(ts <= 0):
        raise ValueError("t must be positive")
    if pair.tag == "lp_linf":
        prof = rearrange(f)
        return prof.partial_power_integral(ts ** pair.p, pair.p) ** (1.0 / pair.p)
    if pair.tag == "x_wk":
        return averaged_modulus_net(f, pair.k, ts, pair.spec, pair.p)
    if pair.tag == "bb":
        return np.minimum(1.0, ts) * norm(f, pair.spec)
    raise ValueError(f"unsupported pair {pair.tag!r}")


def k_functional(pair: KPair, t: float, f: GridFunction) -> float:
    return float(k_functional_net(pair, [t], f)[0])


# ---------------------------------------------------------------------------
# Nonlocal seminorms
# ---------------------------------------------------------------------------

def gagliardo_seminorm(f: GridFunction, s: float, p: float) -> float:
    """int int |f(x)-f(y)|^p / |x-y|^(sp+N) dx dy, as the p-th power (not root).

    Uses y = x + h, a log radial net, fitted power-law closures at both ends,
    and the exact disjoint-support tail on unbounded-proxy boxes.
    """
    if not 0 < s < 1:
        raise ValueError("Gagliardo seminorm requires s in (0,1); it diverges otherwise")
    dim = f.box.dim
    if f.box.truncates_unbounded:
        R = _support_radius(f)
        if not math.isfinite(R):
            raise GridError("unbounded-proxy domain needs a decaying corpus entry")
        safe = safe_shift_radius(f, 1)
        ext = DisjointExtension.build(f, 1, Lp(p), p)
        if safe < ext.threshold * 1.02:
            raise GridError("box too small to reach the disjoint regime; use a wider box")
        r_hi = safe
        extension = ext
        tail = "fit"
    else:
        r_hi = float(np.linalg.norm(f.box.widths))
        extension = None
        tail = None
    # Five decades below the cap: the fitted head exponent carries an O(r0^2)
    # bias which must stay far below p(1-s) for s near 1.
    net = _radial_net(r_hi * 1e-5, r_hi)
    S = radial_difference_powers(f, 1, net, Lp(p), p, extension)
    integrand = S * net ** (-s * p - dim)
    return float(powerlaw_integral(net, integrand, head="fit", tail=tail))


def weighted_double_seminorm(f: GridFunction, k: int, weight: DerivedWeight,
                             spec: NormSpec, p: float) -> float:
    """int_{R^N} ||Delta^k_h f||_X(Q(k,h))^p * weight(|h|) dh."""
    lo, hi = weight.radial_support()
    dim = f.box.dim
    anchors = weight.anchors()
    if math.isinf(hi):
        R = _support_radius(f)
        extension = DisjointExtension.build(f, k, spec, p)
        far = [a for a in anchors if math.isfinite(a)]
        r_hi = max(8.0, 2.0 * extension.threshold, *(1.5 * a for a in far or [0.0]))
        tail = "fit"
        if safe_shift_radius(f, k) < extension.threshold:
            raise GridError("box too small to bridge into the disjoint regime")
    else:
        r_hi = hi
        extension = None
        tail = None
    net = _radial_net(r_hi * 10 ** -4, r_hi, anchors=anchors)
    S = radial_difference_powers(f, k, net, spec, p, extension)
    w = np.asarray(weight(net), float)
    return float(powerlaw_integral(net, S * w, head="fit", tail=tail))


def wide_difference_norm(f: GridFunction, k: int, h_mag: float, spec: NormSpec,
                         max_cells: int = 1 << 15) -> float:
    """Directly measure ||Delta^k_h f||_X at a large shift on a dedicated grid."""
    if f.handle is None:
        raise GridError("direct large-shift measurement needs an analytic handle")
    if f.box.dim != 1:
        raise GridError("direct large-shift measurement is 1D")
    R = _support_radius(f)
    if not math.isfinite(R):
        raise GridError("non-compact support")
    pad = 0.05 * (R + k * h_mag)
    lo, hi = -R - k * h_mag - pad, R + pad
    target_h = min(f.box.cell_widths()[0], (hi - lo) / 4096)
    cells = min(max_cells, int(math.ceil((hi - lo) / target_h)))
    box = Box.interval(lo, hi, cells, truncates_unbounded=True)
    g = GridFunction.from_handle(f.handle, box, f.measure)
    # positive shift: mass of f(. + j h) sits left of the support
    return difference_norm(g, k, np.array([h_mag]), spec)


def mixed_average_norms(f: GridFunction, k: int, ts: Sequence[float], p: float,
                        spec: NormSpec) -> np.ndarray:
    """g(t) = || (t^(-N/k) int_{|h|<=t^(1/k)} |Delta^k_h f(x)|^p dh)^(1/p) ||_X.

    The inner integral is pointwise in x over a widened grid so that shifted
    supports stay inside; one radial evaluation serves every t through the
    cumulative integral.  1D only.
    """
    if f.box.dim != 1:
        raise GridError("mixed-norm averages are implemented in 1D")
    if f.handle is None or not math.isfinite(f.handle.support_radius):
        raise GridError("mixed-norm averages need a compactly supported analytic handle")
    ts = np.asarray(ts, float)
    radii = ts ** (1.0 / k)
    r_max = float(radii.max())
    R = f.handle.support_radius
    width = R + k * r_max + 1.0
    cells = min(1 << 14, max(4096, int(2 * width / 0.02)))
    xbox = Box.interval(-width, width, cells, truncates_unbounded=True)
    x = xbox.axis_centers(0)[:, None]
    net = _radial_net(float(radii.min()) * 10 ** -NET_DECADES, r_max, anchors=radii)
    coeffs = stencil_coefficients(k)
    D = np.zeros((x.size, net.size))
    for sign in (1.0, -1.0):
        vals = np.zeros((x.size, net.size))
        for j, c in enumerate(coeffs):
            pts = (x + sign * j * net[None, :])[..., None]
            vals += c * f.eval_at(pts)
        D += np.abs(vals) ** p
    cum = cumulative_powerlaw(net, D, head="fit")
    idx = np.searchsorted(net, radii)
    out = np.zeros(len(ts))
    for j, t in enumerate(ts):
        A = cum[:, idx[j]]
        vals = (A / t ** (1.0 / k)) ** (1.0 / p)
        out[j] = norm(GridFunction(xbox, LEBESGUE, vals), spec)
    return out
