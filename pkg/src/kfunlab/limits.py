"""Convergence engine: weighted-integral sweeps over mollifier families,
Richardson extrapolation, and the exact geometric constants of the limits.

The central reduction: a nonlocal functional equals
int (g(t)/t)^p rho_eps(t) dt  (rho-kinds, mass at 0) or
int g(t)^p psi_eps(t) dt      (psi-kinds, mass at infinity),
with g sampled once on a log t-net; per-eps integrals are closed-form on
power-law segments, and the sweep is extrapolated in eps and compared with an
independently computed target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from .loggrid import fit_tail_limit, powerlaw_integral
from .weights import WeightFamily

DEFAULT_EPS_GRID = tuple(2.0 ** -j for j in range(1, 13))


def sphere_area(N: int) -> float:
    """|S^(N-1)| for N in {1, 2, 3}: 2, 2*pi, 4*pi."""
    try:
        return {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}[N]
    except KeyError:
        raise ValueError("sphere_area supports N in {1,2,3}") from None


def surface_constant(N: int, p: float) -> float:
    """C_{N,p} = int_{S^(N-1)} |omega . e|^p dsigma(omega).

    N=1: the two-point sphere gives 2; N=2: 2*sqrt(pi)*Gamma((p+1)/2)/Gamma(p/2+1).
    """
    if p <= 0:
        raise ValueError("p must be positive")
    if N == 1:
        return 2.0
    if N == 2:
        return 2.0 * math.sqrt(math.pi) * gamma((p + 1) / 2) / gamma(p / 2 + 1)
    raise ValueError("surface_constant supports N in {1,2}")


def surface_constant_montecarlo(N: int, p: float, samples: int = 1_000_000, seed: int = 0) -> float:
    """Seeded Monte-Carlo check of C_{N,p} (cross-validation only)."""
    rng = np.random.default_rng(seed)
    if N == 1:
        return 2.0
    theta = rng.uniform(0.0, 2.0 * math.pi, samples)
    return float(2.0 * math.pi * np.mean(np.abs(np.cos(theta)) ** p))


# ---------------------------------------------------------------------------
# Richardson extrapolation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Extrapolation:
    limit: float
    rate: float | None
    residual: float
    flag: str  # "ok" | "constant" | "no-extrapolation" | "diverged"


def richardson(eps: np.ndarray, values: np.ndarray, model: str = "power") -> Extrapolation:
    """Extrapolate F(eps) = L + A*eps^r on a geometric eps-grid.

    ``model="log"`` uses x = 1/|log eps| as the rate variable instead (the
    natural error variable of the logarithmic families).  A non-monotone tail
    falls back to the last value, flagged "no-extrapolation".
    """
    eps = np.asarray(eps, float)
    values = np.asarray(values, float)
    keep = np.isfinite(values)
    if np.any(~keep):
        return Extrapolation(math.inf, None, math.inf, "diverged")
    if eps.size < 4:
        return Extrapolation(float(values[-1]), None, math.nan, "no-extrapolation")
    order = np.argsort(-eps)
    eps, values = eps[order], values[order]
    scale = float(np.max(np.abs(values))) + 1e-300
    diffs = np.diff(values)
    if np.all(np.abs(diffs) <= 1e-13 * scale):
        return Extrapolation(float(values[-1]), None, 0.0, "constant")

    if model == "log":
        x = 1.0 / np.abs(np.log(eps))
        sl = (values[-1] - values[-2]) / (x[-1] - x[-2])
        limit = float(values[-1] - sl * x[-1])
        prev = float(values[-2] - (values[-2] - values[-3]) / (x[-2] - x[-3]) * x[-2])
        return Extrapolation(limit, 1.0, abs(limit - prev), "ok")

    tail = diffs[-4:]
    if np.any(tail[:-1] * tail[1:] < 0):
        return Extrapolation(float(values[-1]), None, math.nan, "no-extrapolation")
    ratio_eps = eps[1] / eps[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = diffs[:-1] / diffs[1:]
    good = ratios[np.isfinite(ratios) & (ratios > 1.0001)]
    if good.size == 0:
        return Extrapolation(float(values[-1]), None, math.nan, "no-extrapolation")
    factor = float(np.median(good[-3:] if good.size >= 3 else good))
    rate = math.log(factor) / math.log(1.0 / ratio_eps)
    limit = float(values[-1] + (values[-1] - values[-2]) / (factor - 1.0))
    prev = float(values[-2] + (values[-2] - values[-3]) / (factor - 1.0))
    return Extrapolation(limit, rate, abs(limit - prev), "ok")


# ---------------------------------------------------------------------------
# Convergence reports
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    """An eps-sweep of a functional with its extrapolated limit and target."""

    name: str
    eps: list[float]
    values: list[float]
    limit: float
    rate: float | None
    target: float
    target_provenance: str
    flag: str = "ok"
    direct_limit: float | None = None  # independent small-t / large-t estimate
    monotone: bool | None = None

    @property
    def rel_err(self) -> float:
        if self.target == 0.0:
            return abs(self.limit)
        if not math.isfinite(self.limit):
            return math.inf
        return abs(self.limit - self.target) / abs(self.target)

    def within(self, tol: float) -> bool:
        if self.target == 0.0:
            return abs(self.limit) <= max(tol, 1e-3)
        return math.isfinite(self.limit) and self.rel_err <= tol

    @property
    def diverged(self) -> bool:
        return self.flag == "diverged" or not math.isfinite(self.limit)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "eps": list(map(float, self.eps)),
            "values": [float(v) for v in self.values],
            "limit": float(self.limit),
            "rate": None if self.rate is None else float(self.rate),
            "target": float(self.target),
            "target_provenance": self.target_provenance,
            "rel_err": float(self.rel_err) if math.isfinite(self.rel_err) else None,
            "flag": self.flag,
            "direct_limit": self.direct_limit,
            "monotone": self.monotone,
        }


def _monotone(values) -> bool:
    d = np.diff(values)
    scale = np.max(np.abs(values)) + 1e-300
    return bool(np.all(d <= 1e-9 * scale) or np.all(d >= -1e-9 * scale))


def sweep_report(name: str, eps, values, target: float, provenance: str,
                 model: str = "power", direct_limit: float | None = None) -> ConvergenceReport:
    eps = [float(e) for e in eps]
    values = [float(v) for v in values]
    if any(not math.isfinite(v) for v in values):
        return ConvergenceReport(name, eps, values, math.inf, None, target, provenance,
                                 "diverged", direct_limit, None)
    ex = richardson(np.array(eps), np.array(values), model=model)
    return ConvergenceReport(name, eps, values, ex.limit, ex.rate, target, provenance,
                             ex.flag, direct_limit, _monotone(values))


# ---------------------------------------------------------------------------
# Lemma-2.2-style sweeps over mollifier families
# ---------------------------------------------------------------------------

def _loglog_interp(ts: np.ndarray, ys: np.ndarray, anchors) -> tuple[np.ndarray, np.ndarray]:
    """Insert nodes bracketing each anchor, interpolating y log-log.

    Support endpoints are density jumps, so each anchor contributes a pair of
    nodes a*(1 -/+ 1e-9): the density evaluates to its inside value on one and
    to zero on the other, keeping every segment a pure power.
    """
    pairs = []
    for a in anchors:
        for b in (a * (1 - 1e-9), a * (1 + 1e-9)):
            if ts[0] < b < ts[-1]:
                pairs.append(b)
    extra = np.asarray(pairs, float)
    if extra.size == 0:
        return ts, ys
    with np.errstate(divide="ignore"):
        vals = np.exp(np.interp(np.log(extra), np.log(ts), np.log(np.maximum(ys, 1e-300))))
    vals[vals <= 1e-299] = 0.0
    xs = np.concatenate([ts, extra])
    yy = np.concatenate([ys, vals])
    order = np.argsort(xs)
    return xs[order], yy[order]


def _rho_functional(ts: np.ndarray, gp_over_tp: np.ndarray, fam: WeightFamily) -> float:
    """int (g(t)/t)^p rho_eps(t) dt on the net, head-closed below the net.

    The family's support endpoints are inserted as nodes so the density kink
    never falls inside a power-law segment.
    """
    from .weights import WeightError

    xs, ys = _loglog_interp(ts, gp_over_tp, (fam.lo, fam.hi))
    integrand = ys * fam.pdf(xs)
    total = float(powerlaw_integral(xs, integrand))
    x0 = float(xs[0])
    if fam.lo >= x0:
        return total
    # Head: extend (g/t)^p below the net as ys[0] * (t/x0)^sigma and integrate
    # it against the family in closed form over its own support, so weight
    # mass below (or entirely below) the net is captured exactly.
    if ys[0] > 0 and ys[1] > 0:
        sigma = math.log(ys[1] / ys[0]) / math.log(xs[1] / xs[0])
    else:
        sigma = 0.0
    if abs(sigma) < 0.02:
        # a finite nonzero limit of g/t means the true head slope is 0; the
        # O(t_0) measurement bias must not eat into the vanishing density
        # exponent of small-eps families
        sigma = 0.0
    if ys[0] <= 0:
        return total
    try:
        head = float(ys[0] * x0 ** -sigma * fam.power_integral(0.0, x0, -sigma))
    except WeightError:
        return math.inf
    return total + head


def _psi_functional(ts: np.ndarray, gp: np.ndarray, fam: WeightFamily,
                    tail_fit: tuple[float, float, float]) -> float:
    """int g(t)^p psi_eps(t) dt with the fitted g^p ~ L - B t^-beta tail."""
    xs, ys = _loglog_interp(ts, gp, (fam.lo, fam.hi))
    total = float(powerlaw_integral(xs, ys * fam.pdf(xs)))
    t_max = xs[-1]
    if math.isfinite(fam.hi) and fam.hi <= t_max:
        return total
    L, B, beta = tail_fit
    tail = L * fam.mass(t_max, math.inf) - B * float(fam.power_integral(t_max, math.inf, beta))
    return total + tail


def lemma22_limit(ts, g, family_builder, p: float, eps_grid=DEFAULT_EPS_GRID,
                  target: float | None = None, provenance: str = "direct limit of g",
                  name: str = "lemma22") -> ConvergenceReport:
    """Sweep F(eps) over a family and compare with the defining limit.

    rho-kinds: F(eps) = int (g(t)/t)^p rho_eps(t) dt -> (lim_{t->0} g(t)/t)^p.
    psi-kinds: F(eps) = int g(t)^p psi_eps(t) dt     -> (lim_{t->inf} g(t))^p.
    Values are the integrals themselves (no outer 1/p root), matching how the
    limit formulas are displayed.  ``g`` is sampled on the log net ``ts``; the
    target defaults to the head slope / fitted tail limit of the samples.
    """
    ts = np.asarray(ts, float)
    g = np.asarray(g, float)
    fam0 = family_builder(eps_grid[0])
    model = "log" if fam0.kind.startswith("log") else "power"
    if not fam0.is_psi:
        gp_over_tp = (g / ts) ** p
        direct = float((g[0] / ts[0]) ** p)
        values = [_rho_functional(ts, gp_over_tp, family_builder(e)) for e in eps_grid]
        if target is None:
            target = direct
            provenance = "head slope of g on the net"
    else:
        gp = g ** p
        tail_fit = fit_tail_limit(ts, gp)
        direct = float(tail_fit[0])
        values = [_psi_functional(ts, gp, family_builder(e), tail_fit) for e in eps_grid]
        if target is None:
            target = direct
            provenance = "fitted large-t limit of g"
    return sweep_report(name, eps_grid, values, target, provenance, model=model,
                        direct_limit=direct)


# ---------------------------------------------------------------------------
# Milman extrapolation
# ---------------------------------------------------------------------------

def milman_curve(ts: np.ndarray, K: np.ndarray, p: float, eps: float) -> float:
    """((1-eps) int_0^1 [t^-eps K(t)]^p dt/t)^(1/p) on the K-net."""
    integrand = K ** p * ts ** (-eps * p - 1.0)
    # near 0 the K ~ c t slope dominates; fit it and close the head
    if K[0] > 0 and K[1] > 0:
        sigma = math.log(K[1] / K[0]) / math.log(ts[1] / ts[0])
    else:
        sigma = 1.0
    m_head = sigma * p - eps * p - 1.0
    val = powerlaw_integral(ts, integrand, head=m_head)
    return float(((1.0 - eps) * val) ** (1.0 / p))


def milman_extrapolation(k_net, p: float, a1_norm: float,
                         eps_grid=tuple(1.0 - 2.0 ** -j for j in range(2, 11)),
                         name: str = "milman") -> ConvergenceReport:
    """Sweep the Milman functional over eps -> 1 against p^(-1/p) * ||f||_A1.

    ``k_net`` is (ts, K(ts)) for the pair; the target constant ((1-theta)
    theta p)^(1/p) normalization appears as the p^(-1/p) prefactor.
    """
    ts, K = k_net
    values = [milman_curve(np.asarray(ts, float), np.asarray(K, float), p, e) for e in eps_grid]
    target = a1_norm * p ** (-1.0 / p)
    # model in the variable (1 - eps)
    one_minus = [1.0 - e for e in eps_grid]
    rep = sweep_report(name, one_minus, values, target, "p^(-1/p) ||f||_A1 (closed form)")
    rep.eps = list(map(float, eps_grid))
    return rep


def milman_closed_form(p: float, norm_b: float = 1.0) -> float:
    """Exact value of the Milman functional for K(t) = min(1, t) * norm_b:
    (1-eps) int_0^1 t^((1-eps)p) dt/t = 1/p for every eps."""
    return norm_b * p ** (-1.0 / p)
