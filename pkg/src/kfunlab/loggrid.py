"""Log-spaced nets and piecewise power-law quadrature.

The radial integrands in this package (difference norms against mollifier
weights, Gagliardo kernels, semigroup sweeps) are products of powers of the
radius, possibly with slowly varying factors.  Interpolating log-log linearly
between net points makes each segment a pure power c*t^m, which integrates in
closed form; the same model extends the integral below the first node and
above the last one when an endpoint exponent is known or can be fitted.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

_TINY = 1e-300


def geometric_net(lo: float, hi: float, per_decade: int = 48, anchors: Iterable[float] = ()) -> np.ndarray:
    """Log-spaced nodes on [lo, hi] with the given density, plus anchor points."""
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    n = max(2, int(math.ceil(per_decade * math.log10(hi / lo))) + 1)
    net = np.geomspace(lo, hi, n)
    extra = [a for a in anchors if lo < a < hi]
    if extra:
        net = np.unique(np.concatenate([net, np.asarray(extra, float)]))
    return net


def _segment_integrals(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Closed-form integrals of the power-law interpolant on each segment.

    Segments with a zero endpoint fall back to linear (trapezoid) integration;
    y must be non-negative.
    """
    x0, x1 = x[..., :-1], x[..., 1:]
    y0, y1 = y[..., :-1], y[..., 1:]
    both_pos = (y0 > _TINY) & (y1 > _TINY)
    ratio_x = x1 / x0
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(both_pos, np.log(np.maximum(y1, _TINY) / np.maximum(y0, _TINY)), 0.0) / np.log(ratio_x)
        mp1 = m + 1.0
        power = (y1 * x1 - y0 * x0) / np.where(np.abs(mp1) < 1e-9, 1.0, mp1)
        log_case = np.sqrt(y0 * x0 * y1 * x1) * np.log(ratio_x)
        seg = np.where(np.abs(mp1) < 1e-9, log_case, power)
    trap = 0.5 * (y0 + y1) * (x1 - x0)
    return np.where(both_pos, seg, trap)


def _edge_exponent(x: np.ndarray, y: np.ndarray, which: str) -> np.ndarray:
    """Per-row power-law exponent of the first or last net segment."""
    if which == "head":
        xa, xb, ya, yb = x[0], x[1], y[..., 0], y[..., 1]
    else:
        xa, xb, ya, yb = x[-2], x[-1], y[..., -2], y[..., -1]
    ok = (ya > _TINY) & (yb > _TINY)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.log(np.maximum(yb, _TINY) / np.maximum(ya, _TINY)) / math.log(xb / xa)
    return np.where(ok, m, 0.0 if which == "head" else -np.inf)


def powerlaw_integral(
    x: Sequence[float],
    y: np.ndarray,
    head: float | str | None = None,
    tail: float | str | None = None,
) -> np.ndarray | float:
    """Integrate y(t) dt over the net ``x``, optionally closing the endpoints.

    ``head``: extend over (0, x[0]] assuming y ~ y[0] * (t/x[0])**m with the
    given exponent m ("fit" derives m from the first segment); requires
    m > -1, otherwise the integral is reported as inf (divergent head).
    ``tail``: extend over [x[-1], inf) with exponent m < -1 analogously.
    ``y`` may be batched (..., npts); integration runs along the last axis.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need a net of at least two points")
    y = np.maximum(y, 0.0)
    total = np.sum(_segment_integrals(x, y), axis=-1)

    if head is not None:
        m = _edge_exponent(x, y, "head") if head == "fit" else np.full(y.shape[:-1], float(head))
        y0 = y[..., 0]
        diverges = (m <= -1.0 + 1e-12) & (y0 > _TINY)
        contrib = np.where(diverges, np.inf, y0 * x[0] / np.where(m + 1.0 <= 0, 1.0, m + 1.0))
        contrib = np.where(y0 > _TINY, contrib, 0.0)
        total = total + contrib
    if tail is not None:
        m = _edge_exponent(x, y, "tail") if tail == "fit" else np.full(y.shape[:-1], float(tail))
        yn = y[..., -1]
        diverges = (m >= -1.0 - 1e-12) & (yn > _TINY)
        contrib = np.where(diverges, np.inf, yn * x[-1] / np.where(-(m + 1.0) <= 0, 1.0, -(m + 1.0)))
        contrib = np.where(yn > _TINY, contrib, 0.0)
        total = total + contrib
    if np.ndim(total) == 0:
        return float(total)
    return total


def cumulative_powerlaw(x: np.ndarray, y: np.ndarray, head: float | str | None = None) -> np.ndarray:
    """Cumulative integral F(x_i) = int_0^{x_i} y dt along the last axis.

    The head closure fixes the (0, x_0] part; without it the integral starts
    at x_0.  Used to share one radial evaluation across nested radii.
    """
    x = np.asarray(x, float)
    y = np.maximum(np.asarray(y, float), 0.0)
    segs = _segment_integrals(x, y)
    out = np.concatenate([np.zeros(y.shape[:-1] + (1,)), np.cumsum(segs, axis=-1)], axis=-1)
    if head is not None:
        m = _edge_exponent(x, y, "head") if head == "fit" else np.full(y.shape[:-1], float(head))
        y0 = y[..., 0]
        contrib = np.where((m <= -1.0 + 1e-12) & (y0 > _TINY), np.inf,
                           y0 * x[0] / np.where(m + 1.0 <= 0, 1.0, m + 1.0))
        contrib = np.where(y0 > _TINY, contrib, 0.0)
        out = out + contrib[..., None]
    return out


def fit_tail_limit(x: np.ndarray, y: np.ndarray, npts: int = 12) -> tuple[float, float, float]:
    """Fit y(t) ~ L - B t^(-beta) on the final stretch of the net.

    Returns (L, B, beta).  Falls back to (y[-1], 0, 1) when the tail is flat
    or non-monotone; used to close mass-at-infinity integrals.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = min(npts, y.size)
    xs, ys = x[-n:], y[-n:]
    d = np.diff(ys)
    if np.all(np.abs(d) <= 1e-13 * max(1.0, abs(ys[-1]))):
        return float(ys[-1]), 0.0, 1.0
    sign = 1.0 if d[-1] > 0 else -1.0
    if np.any(sign * d <= 0):
        return float(ys[-1]), 0.0, 1.0
    i0, i1, i2 = 0, n // 2, n - 1
    if i1 in (i0, i2):
        return float(ys[-1]), 0.0, 1.0

    # Solve y = L - B x^-beta through three spaced nodes by bisection on beta.
    def resid(beta):
        w0, w1, w2 = xs[i0] ** -beta, xs[i1] ** -beta, xs[i2] ** -beta
        return (ys[i1] - ys[i0]) * (w2 - w1) - (ys[i2] - ys[i1]) * (w1 - w0)

    lo_b, hi_b = 0.05, 6.0
    rlo, rhi = resid(lo_b), resid(hi_b)
    if not np.isfinite(rlo) or not np.isfinite(rhi) or rlo * rhi > 0:
        beta = 1.0
    else:
        for _ in range(80):
            mid = 0.5 * (lo_b + hi_b)
            rm = resid(mid)
            if rlo * rm <= 0:
                hi_b, rhi = mid, rm
            else:
                lo_b, rlo = mid, rm
        beta = 0.5 * (lo_b + hi_b)
    w0, w2 = xs[i0] ** -beta, xs[i2] ** -beta
    B = (ys[i2] - ys[i0]) / (w0 - w2)
    L = ys[i2] + B * w2
    if not (np.isfinite(L) and np.isfinite(B)):
        return float(ys[-1]), 0.0, 1.0
    return float(L), float(B), float(beta)
