"""Mollifier families rho_eps / psi_eps and the weights derived from them.

Every built-in family has density c * t^(e-1) on an interval (lo, hi), so all
derived weights reduce to one closed-form primitive: the weighted tail
integral  J(a, b; m) = int_a^b t^(-m) * density(t) dt.

rho-kinds are unit-mass families concentrating at 0 as eps -> 0; psi-kinds are
their images under psi(t) = t^-2 rho(1/t), with mass escaping to infinity.
A non-normalized power family (mass != 1) is admitted under an explicit flag
for the Gaussian corollary experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import quad

RHO_KINDS = ("power", "scaled", "log")
PSI_KINDS = ("power_psi", "scaled_psi", "log_psi")


class WeightError(ValueError):
    """Invalid weight-family parameters or incompatible derivation."""


@dataclass(frozen=True)
class WeightFamily:
    """Power-form weight density c * t^(e-1) restricted to (lo, hi)."""

    kind: str
    eps: float
    coefficient: float
    exponent: float
    lo: float
    hi: float
    normalized: bool = True

    # -- constructors --------------------------------------------------------
    @staticmethod
    def make(kind: str, eps: float, alpha: float | None = None) -> "WeightFamily":
        if eps <= 0:
            raise WeightError("eps must be positive")
        if kind == "power":
            if eps >= math.inf:
                raise WeightError("bad eps")
            return WeightFamily("power", eps, eps, eps, 0.0, 1.0)
        if kind == "scaled":
            if alpha is None or alpha <= 0:
                raise WeightError("scaled family needs alpha > 0")
            return WeightFamily("scaled", eps, alpha / eps ** alpha, alpha, 0.0, eps)
        if kind == "log":
            if not 0 < eps < 1:
                raise WeightError("log family needs eps in (0, 1)")
            return WeightFamily("log", eps, 1.0 / abs(math.log(eps)), 0.0, eps, 1.0)
        if kind == "power_psi":
            return WeightFamily("power_psi", eps, eps, -eps, 1.0, math.inf)
        if kind == "scaled_psi":
            if alpha is None or alpha <= 0:
                raise WeightError("scaled_psi family needs alpha > 0")
            return WeightFamily("scaled_psi", eps, alpha * eps ** -alpha, -alpha, 1.0 / eps, math.inf)
        if kind == "log_psi":
            if not 0 < eps < 1:
                raise WeightError("log_psi family needs eps in (0, 1)")
            return WeightFamily("log_psi", eps, 1.0 / abs(math.log(eps)), 0.0, 1.0, 1.0 / eps)
        raise WeightError(f"unknown weight family kind {kind!r}")

    @staticmethod
    def power_raw(coefficient: float, exponent: float, eps: float = math.nan) -> "WeightFamily":
        """Non-normalized power density on (0,1); admitted for the Gaussian
        corollary experiments only (mass generally != 1)."""
        if exponent <= 0:
            raise WeightError("exponent must be positive for integrability at 0")
        fam = WeightFamily("power_raw", eps if eps == eps else exponent,
                           coefficient, exponent, 0.0, 1.0,
                           normalized=abs(coefficient / exponent - 1.0) < 1e-12)
        return fam

    # -- basic calculus -------------------------------------------------------
    @property
    def is_psi(self) -> bool:
        return self.kind in PSI_KINDS

    @property
    def alpha(self) -> float:
        return abs(self.exponent)

    def pdf(self, t) -> np.ndarray:
        t = np.asarray(t, float)
        inside = (t > self.lo) & (t < self.hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = self.coefficient * np.power(np.where(t > 0, t, 1.0), self.exponent - 1.0)
        return np.where(inside, vals, 0.0)

    def power_integral(self, a, b, m: float) -> np.ndarray:
        """J(a, b; m) = int_a^b t^(-m) pdf(t) dt, in closed form."""
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        q = self.exponent - m
        lo = np.clip(a, self.lo, self.hi)
        hi = np.clip(b, self.lo, self.hi)
        empty = ~(hi > lo)
        lo_safe = np.where(empty, 1.0, lo)
        hi_safe = np.where(empty, 2.0, hi)
        if abs(q) < 1e-12:
            out = self.coefficient * np.log(hi_safe / np.maximum(lo_safe, 1e-300))
        else:
            if np.any(~empty & (lo_safe <= 0.0) & (q < 0)):
                raise WeightError("divergent weighted integral at 0")
            if np.any(~empty & np.isinf(hi_safe) & (q > 0)):
                raise WeightError("divergent weighted integral at infinity")
            with np.errstate(divide="ignore", invalid="ignore"):
                hi_pow = np.where(np.isinf(hi_safe), 0.0, np.power(hi_safe, q))
                lo_pow = np.power(lo_safe, q)
            out = self.coefficient * (hi_pow - lo_pow) / q
        return np.where(empty, 0.0, out)

    def mass(self, a=0.0, b=math.inf) -> float:
        return float(self.power_integral(a, b, 0.0))

    def cdf(self, t) -> np.ndarray:
        return self.power_integral(0.0, t, 0.0)

    def dual(self) -> "WeightFamily":
        """The transform psi(t) = t^-2 rho(1/t) (and its inverse)."""
        new_lo = 0.0 if math.isinf(self.hi) else 1.0 / self.hi
        new_hi = math.inf if self.lo == 0.0 else 1.0 / self.lo
        pairs = {"power": "power_psi", "scaled": "scaled_psi", "log": "log_psi"}
        inv = {v: k for k, v in pairs.items()}
        kind = pairs.get(self.kind) or inv.get(self.kind) or self.kind
        return WeightFamily(kind, self.eps, self.coefficient, -self.exponent, new_lo, new_hi, self.normalized)

    def scaled_by(self, factor: float) -> "WeightFamily":
        return replace(self, coefficient=self.coefficient * factor, normalized=False)

    def label(self) -> str:
        if self.kind in ("scaled", "scaled_psi"):
            return f"{self.kind}:alpha={self.alpha:g}:eps={self.eps:g}"
        return f"{self.kind}:{self.eps:g}"


def parse_family(spec: str, eps: float | None = None) -> Callable[[float], WeightFamily]:
    """Parse CLI names like "power:0.25", "scaled:alpha=2:eps=0.1", "log:eps=1e-3".

    Returns a builder eps -> WeightFamily; an eps given in the name is used as
    the default when the builder is called with None.
    """
    parts = spec.split(":")
    kind = parts[0]
    if kind not in RHO_KINDS + PSI_KINDS:
        raise WeightError(f"unknown weight family {kind!r}")
    alpha = None
    default_eps = eps
    for part in parts[1:]:
        if part.startswith("alpha="):
            alpha = float(part[6:])
        elif part.startswith("eps="):
            default_eps = float(part[4:])
        else:
            default_eps = float(part)

    def build(e: float | None = None) -> WeightFamily:
        val = e if e is not None else default_eps
        if val is None:
            raise WeightError(f"family {spec!r} needs an eps value")
        return WeightFamily.make(kind, val, alpha)

    return build


def make_rho(kind: str, eps: float, alpha: float | None = None) -> WeightFamily:
    if kind not in RHO_KINDS:
        raise WeightError(f"{kind!r} is not a rho-kind")
    return WeightFamily.make(kind, eps, alpha)


def make_psi(kind: str, eps: float, alpha: float | None = None) -> WeightFamily:
    if kind not in PSI_KINDS:
        raise WeightError(f"{kind!r} is not a psi-kind")
    return WeightFamily.make(kind, eps, alpha)


# ---------------------------------------------------------------------------
# Derived weights
# ---------------------------------------------------------------------------

CONSTRUCTIONS = ("phi_poincare", "phi_bbm", "phi_ms", "upsilon", "eta_jn")


@dataclass(frozen=True)
class DerivedWeight:
    """Weight built from a family: local/global phi, Upsilon, or eta.

    phi_poincare(t) = (1/k) J(t^k, ell^k; p + N/k)        [cube version]
    phi_bbm(t)      =       J(t^k, inf;   p + N/k)
    phi_ms(t)       =       J(t^k, inf;   N/k)            [psi family]
    upsilon(t)      = (1-log t)^p R(1/(1-log t)) + J(1/(1-log t), 1; p)
    eta_jn(t)       =       J(t^(1/p), 1; p)
    """

    family: WeightFamily
    construction: str
    k: int = 1
    p: float = 1.0
    N: int = 1
    ell: float = 1.0

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, float)
        fam = self.family
        if self.construction == "phi_poincare":
            return fam.power_integral(t ** self.k, self.ell ** self.k, self.p + self.N / self.k) / self.k
        if self.construction == "phi_bbm":
            return fam.power_integral(t ** self.k, math.inf, self.p + self.N / self.k)
        if self.construction == "phi_ms":
            return fam.power_integral(t ** self.k, math.inf, self.N / self.k)
        if self.construction == "upsilon":
            L = 1.0 - np.log(np.maximum(t, 1e-300))
            return L ** self.p * fam.cdf(1.0 / L) + fam.power_integral(1.0 / L, 1.0, self.p)
        if self.construction == "eta_jn":
            return fam.power_integral(t ** (1.0 / self.p), 1.0, self.p)
        raise WeightError(self.construction)

    # -- support and anchors -------------------------------------------------
    def radial_support(self) -> tuple[float, float]:
        """Interval of |h| (or t) where the weight can be nonzero."""
        fam = self.family
        if self.construction == "phi_poincare":
            return (0.0, min(self.ell, fam.hi ** (1.0 / self.k)))
        if self.construction == "phi_bbm":
            return (0.0, fam.hi ** (1.0 / self.k) if math.isfinite(fam.hi) else math.inf)
        if self.construction == "phi_ms":
            return (0.0, math.inf)
        return (0.0, 1.0)

    def anchors(self) -> list[float]:
        """Kink locations to include in integration nets."""
        fam = self.family
        pts = []
        if self.construction in ("phi_poincare", "phi_bbm", "phi_ms"):
            for s in (fam.lo, fam.hi):
                if 0 < s < math.inf:
                    pts.append(s ** (1.0 / self.k))
        elif self.construction == "eta_jn":
            for s in (fam.lo, fam.hi):
                if 0 < s < math.inf:
                    pts.append(s ** self.p)
        return pts

    def weighted_head_integral(self, sigma: float, x0: float) -> float:
        """int_0^x0 rho^sigma phi(rho) drho in closed form (phi kinds).

        Swapping the order of integration reduces it to two family power
        integrals; raises WeightError when the integral diverges at 0, which
        is exactly the true divergence criterion for the weighted seminorm
        head with small-scale exponent sigma.
        """
        if self.construction not in ("phi_poincare", "phi_bbm", "phi_ms"):
            raise WeightError("head integral implemented for phi constructions")
        scale = 1.0 / self.k if self.construction == "phi_poincare" else 1.0
        m = (self.p + self.N / self.k) if self.construction != "phi_ms" else self.N / self.k
        term_outer = x0 ** (sigma + 1.0) * float(self(x0))
        term_inner = scale * float(self.family.power_integral(0.0, x0 ** self.k,
                                                              m - (sigma + 1.0) / self.k))
        return (term_outer + term_inner) / (sigma + 1.0)

    def eta_antiderivative(self, t) -> np.ndarray:
        """H(t) = int_0^t eta(u) du = t*eta(t) + cdf(t^(1/p)) (eta_jn only).

        eta may blow up at 0 but t*eta(t) -> 0, so H(0) = 0.
        """
        if self.construction != "eta_jn":
            raise WeightError("antiderivative implemented for eta_jn")
        t = np.asarray(t, float)
        pos = t > 0
        safe = np.where(pos, t, 0.5)
        out = safe * self(safe) + self.family.cdf(safe ** (1.0 / self.p))
        return np.where(pos, out, 0.0)


def derive(family: WeightFamily, construction: str, k: int = 1, p: float = 1.0,
           N: int = 1, ell: float = 1.0) -> DerivedWeight:
    if construction not in CONSTRUCTIONS:
        raise WeightError(f"unknown construction {construction!r}")
    if construction in ("phi_poincare", "phi_bbm", "upsilon", "eta_jn") and family.is_psi:
        raise WeightError(f"{construction} needs a rho-kind family")
    if construction == "phi_ms" and not family.is_psi:
        raise WeightError("phi_ms needs a psi-kind family")
    if construction == "phi_poincare" and family.hi > ell ** k * (1 + 1e-12):
        raise WeightError("support incompatibility: need supp rho within (0, ell^k)")
    if construction in ("upsilon", "eta_jn") and family.hi > 1 + 1e-12:
        raise WeightError("support incompatibility: need supp rho within (0, 1)")
    return DerivedWeight(family, construction, int(k), float(p), int(N), float(ell))


def eta_mass_identity(eta: DerivedWeight) -> float:
    """Numerically integrate eta over (0,1); equals the family mass.

    Deliberately an independent quadrature (not the closed-form
    antiderivative) so it genuinely checks the change-of-order identity.
    """
    if eta.construction != "eta_jn":
        raise WeightError("eta_mass_identity applies to eta_jn weights")
    pts = sorted(set(a for a in eta.anchors() if 0 < a < 1))
    val, _ = quad(lambda u: float(eta(u)), 0.0, 1.0, points=pts or None, limit=200)
    return float(val)


def phi_moment_identity(phi: DerivedWeight) -> float:
    """Numerically integrate t^(kp+N-1) * phi(t) over the radial support.

    For phi_poincare this equals mass/(k*(kp+N)); for phi_bbm, mass/(kp+N).
    Used to verify the eps-independent Sobolev bound constant analytically.
    """
    if phi.construction not in ("phi_poincare", "phi_bbm"):
        raise WeightError("moment identity applies to phi weights")
    lo, hi = phi.radial_support()
    power = phi.k * phi.p + phi.N - 1
    pts = sorted(set(a for a in phi.anchors() if lo < a < hi))
    val, _ = quad(lambda t: t ** power * float(phi(t)), lo, hi, points=pts or None, limit=200)
    return float(val)
