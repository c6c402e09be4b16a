import math

import numpy as np
import pytest
from scipy.integrate import quad

from kfunlab.weights import (DerivedWeight, WeightError, WeightFamily, derive,
                             eta_mass_identity, make_psi, make_rho, parse_family,
                             phi_moment_identity)

RHO_BUILDERS = {
    "power": lambda e: make_rho("power", e),
    "scaled": lambda e: make_rho("scaled", e, alpha=2.0),
    "log": lambda e: make_rho("log", e),
}
PSI_BUILDERS = {
    "power_psi": lambda e: make_psi("power_psi", e),
    "scaled_psi": lambda e: make_psi("scaled_psi", e, alpha=2.0),
    "log_psi": lambda e: make_psi("log_psi", e),
}


@pytest.mark.parametrize("kind", list(RHO_BUILDERS))
@pytest.mark.parametrize("eps", [0.5, 0.13, 2.0 ** -9])
def test_rho_normalization_closed_form(kind, eps):
    fam = RHO_BUILDERS[kind](eps)
    assert fam.mass() == pytest.approx(1.0, abs=1e-12)
    numeric, _ = quad(lambda t: float(fam.pdf(t)), fam.lo, min(fam.hi, 1.0), limit=200)
    assert numeric == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("kind", list(PSI_BUILDERS))
def test_psi_normalization(kind):
    fam = PSI_BUILDERS[kind](0.25)
    assert fam.mass() == pytest.approx(1.0, abs=1e-12)


def test_scaled_cdf_example():
    fam = make_rho("scaled", 0.1, alpha=2.0)
    assert float(fam.cdf(0.05)) == pytest.approx(0.25, abs=1e-14)


def test_log_rho_density():
    fam = make_rho("log", math.exp(-4.0))
    assert float(fam.pdf(0.5)) == pytest.approx(1.0 / (4.0 * 0.5), rel=1e-12)
    assert fam.mass() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("kind", list(RHO_BUILDERS))
def test_concentration_at_zero(kind):
    # monotone approach over the standard grid; the log family concentrates
    # only like 1/|log eps|, so its "-> 1" check probes a much smaller eps
    for a in (0.1, 0.5):
        masses = [float(RHO_BUILDERS[kind](2.0 ** -j).cdf(a)) for j in range(1, 11)
                  if not (kind == "log" and 2.0 ** -j >= a)]
        assert all(b >= a_ - 1e-12 for a_, b in zip(masses, masses[1:]))
        assert float(RHO_BUILDERS[kind](2.0 ** -20).cdf(a)) >= 0.8


@pytest.mark.parametrize("kind", list(PSI_BUILDERS))
def test_psi_mass_escapes_to_infinity(kind):
    a = 10.0
    masses = [float(PSI_BUILDERS[kind](2.0 ** -j).mass(a, math.inf)) for j in range(1, 11)
              if not (kind == "log_psi" and 1.0 / 2.0 ** -j <= a)]
    assert all(b >= a_ - 1e-12 for a_, b in zip(masses, masses[1:]))
    assert float(PSI_BUILDERS[kind](2.0 ** -20).mass(a, math.inf)) >= 0.8


@pytest.mark.parametrize("kind", list(RHO_BUILDERS))
def test_rho_psi_duality(kind):
    fam = RHO_BUILDERS[kind](0.2)
    dual = fam.dual()
    assert dual.is_psi
    ts = np.geomspace(dual.lo + 1e-9 if dual.lo else 1e-3, min(dual.hi, 1e3) - 1e-9, 100)
    direct = dual.pdf(ts)
    transformed = ts ** -2.0 * fam.pdf(1.0 / ts)
    assert np.allclose(direct, transformed, rtol=1e-12)
    # round trip restores the parameters
    back = dual.dual()
    assert back.kind == fam.kind and back.exponent == fam.exponent


def test_parse_family_names():
    assert parse_family("power:0.25")(None).eps == 0.25
    fam = parse_family("scaled:alpha=2:eps=0.1")(None)
    assert fam.kind == "scaled" and fam.alpha == 2.0 and fam.eps == 0.1
    assert parse_family("log:eps=1e-3")(None).eps == 1e-3
    with pytest.raises(WeightError):
        parse_family("bogus:1")
    with pytest.raises(WeightError):
        parse_family("log")(None)  # missing eps


# -- derived weights ----------------------------------------------------------

def test_phi_poincare_log_family_piecewise_closed_form():
    eps = math.exp(-3.0)
    for k, p in ((1, 2.0), (2, 1.0)):
        phi = derive(make_rho("log", eps), "phi_poincare", k=k, p=p, N=1, ell=1.0)
        kpN = k * p + 1
        for t in (0.01, 0.3, 0.9):
            if t < eps ** (1.0 / k):
                want = (eps ** (-(p + 1.0 / k)) - 1.0) / (abs(math.log(eps)) * kpN)
            else:
                want = (t ** -kpN - 1.0) / (abs(math.log(eps)) * kpN)
            assert float(phi(t)) == pytest.approx(want, rel=1e-12), (k, p, t)


def test_eta_power_closed_form():
    e, p = 0.5, 2.0
    eta = derive(make_rho("power", e), "eta_jn", p=p)
    for t in (0.1, 0.35, 0.9):
        want = e / (e - p) * (1.0 - t ** ((e - p) / p))
        assert float(eta(t)) == pytest.approx(want, rel=1e-12)


def test_upsilon_power_closed_form():
    e, p = 0.5, 2.0
    ups = derive(make_rho("power", e), "upsilon", p=p)
    for t in (0.03, 0.4, 0.9):
        L = 1.0 - math.log(t)
        want = L ** (p - e) * (1.0 + e / (p - e)) - e / (p - e)
        assert float(ups(t)) == pytest.approx(want, rel=1e-12)


def test_upsilon_monotonicity():
    ups = derive(make_rho("power", 0.3), "upsilon", p=2.0)
    ts = np.linspace(1e-4, 1.0 - 1e-9, 400)
    vals = np.asarray(ups(ts), float)
    assert np.all(np.diff(vals) <= 1e-9 * vals.max())
    scaled = vals / (1.0 - np.log(ts)) ** 2.0
    assert np.all(np.diff(scaled) >= -1e-12 * scaled.max())


def test_phi_decreasing():
    phi = derive(make_rho("power", 0.25), "phi_poincare", k=1, p=2.0, N=1, ell=1.0)
    ts = np.linspace(1e-3, 0.999, 200)
    vals = np.asarray(phi(ts), float)
    assert np.all(np.diff(vals) <= 1e-12 * vals.max())


@pytest.mark.parametrize("kind", list(RHO_BUILDERS))
@pytest.mark.parametrize("p", [1.0, 2.0])
def test_eta_mass_identity_normalized(kind, p):
    eta = derive(RHO_BUILDERS[kind](0.3), "eta_jn", p=p)
    assert eta_mass_identity(eta) == pytest.approx(1.0, abs=1e-8)


def test_eta_mass_identity_specific_examples():
    assert eta_mass_identity(derive(make_rho("power", 0.3), "eta_jn", p=2.0)) == pytest.approx(1.0, abs=1e-8)
    assert eta_mass_identity(derive(make_rho("scaled", 0.2, alpha=1.5), "eta_jn", p=1.0)) == pytest.approx(1.0, abs=1e-8)
    doubled = derive(make_rho("power", 0.3).scaled_by(2.0), "eta_jn", p=2.0)
    assert eta_mass_identity(doubled) == pytest.approx(2.0, abs=2e-8)


def test_eta_antiderivative_matches_quadrature():
    eta = derive(make_rho("power", 0.35), "eta_jn", p=2.0)
    for t in (0.2, 0.7, 1.0):
        numeric, _ = quad(lambda u: float(eta(u)), 0.0, t, limit=200)
        assert float(eta.eta_antiderivative(t)) == pytest.approx(numeric, rel=1e-9)


@pytest.mark.parametrize("kind", list(RHO_BUILDERS))
@pytest.mark.parametrize("k,p", [(1, 1.0), (1, 2.0), (2, 2.0)])
def test_sobolev_moment_identity(kind, k, p):
    """int t^(kp+N-1) phi(t) dt = 1/(k (kp+N)) for any normalized family."""
    fam = RHO_BUILDERS[kind](0.25)
    phi = derive(fam, "phi_poincare", k=k, p=p, N=1, ell=1.0)
    assert phi_moment_identity(phi) == pytest.approx(1.0 / (k * (k * p + 1)), rel=1e-8)


def test_support_violation_rejected():
    fam = make_rho("power", 0.5)  # support (0, 1)
    with pytest.raises(WeightError, match="support"):
        derive(fam, "phi_poincare", k=1, p=2.0, N=1, ell=0.5)
    with pytest.raises(WeightError, match="psi"):
        derive(fam, "phi_ms", k=1, N=1)
    with pytest.raises(WeightError, match="rho"):
        derive(make_psi("power_psi", 0.5), "eta_jn", p=2.0)


def test_non_normalized_power_family_flagged():
    raw = WeightFamily.power_raw(0.5, 1.5)  # mass = 0.5/1.5 != 1
    assert not raw.normalized
    assert raw.mass() == pytest.approx(0.5 / 1.5, rel=1e-12)
    ok = WeightFamily.power_raw(1.5, 1.5)
    assert ok.normalized


def test_weighted_head_integral_matches_quadrature():
    phi = derive(make_rho("scaled", 0.05, alpha=2.0), "phi_poincare", k=1, p=2.0, N=1, ell=1.0)
    sigma = 2.0
    x0 = 0.4
    numeric, _ = quad(lambda t: t ** sigma * float(phi(t)), 0.0, x0, limit=200)
    assert phi.weighted_head_integral(sigma, x0) == pytest.approx(numeric, rel=1e-8)


def test_weighted_head_integral_divergence():
    phi = derive(make_rho("power", 0.1), "phi_poincare", k=2, p=2.0, N=1, ell=1.0)
    with pytest.raises(WeightError):
        phi.weighted_head_integral(1.0, 0.3)  # jump-type sigma at k=2, p=2 diverges
