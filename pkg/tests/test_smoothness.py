import math

import numpy as np
import pytest

from kfunlab import corpus
from kfunlab.grid import Box, GridError, GridFunction, LEBESGUE
from kfunlab.loggrid import geometric_net
from kfunlab.norms import Lorentz, Lp, norm, norm_of_profile, rearrange
from kfunlab.smoothness import (KPair, averaged_modulus, averaged_modulus_net,
                                difference, difference_norm,
                                disjoint_difference_profile, gagliardo_seminorm,
                                k_functional, k_functional_net,
                                mixed_average_norms, modulus,
                                stencil_coefficients, weighted_double_seminorm,
                                wide_difference_norm)
from kfunlab.weights import derive, make_rho

UNIT = Box.interval(0.0, 1.0, 1024)


def test_stencil_sums_to_zero():
    for k in range(1, 6):
        assert abs(stencil_coefficients(k).sum()) <= 1e-12


def test_first_difference_of_linear():
    f = corpus.get("x", box=Box.interval(-1.0, 1.0, 512))
    d = difference(f, 1, [0.25])
    assert np.allclose(d.values, 0.25, atol=1e-14)


def test_second_difference_of_quadratic():
    f = corpus.get("x2", box=Box.interval(-1.0, 1.0, 512))
    d = difference(f, 2, [0.1])
    assert np.allclose(d.values, 2 * 0.01, atol=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_annihilation_of_polynomials(k):
    box = Box.interval(0.0, 1.0, 512)
    x = box.axis_centers(0)
    vals = sum((j + 1.0) * x ** j for j in range(k))
    f = GridFunction(box, LEBESGUE, vals * np.ones_like(x))

    def poly(p):
        y = np.asarray(p, float)[..., 0]
        return sum((j + 1.0) * y ** j for j in range(k))

    from kfunlab.grid import handle_1d

    f = GridFunction.from_handle(handle_1d("poly", lambda y: sum((j + 1.0) * y ** j for j in range(k))), box)
    d = difference(f, k, [0.07])
    assert np.max(np.abs(d.values)) <= 1e-12 * max(1.0, np.max(np.abs(f.values)))


def test_difference_empty_domain():
    f = corpus.get("x", box=UNIT)
    with pytest.raises(GridError, match="empty"):
        difference(f, 2, [0.9])


def test_domain_restriction_matches_qkh():
    f = corpus.get("x", box=UNIT)
    d = difference(f, 1, [0.25])
    assert d.box.lo[0] == pytest.approx(0.0)
    assert d.box.hi[0] == pytest.approx(0.75, abs=1e-3)


def test_modulus_indicator_l1():
    f = corpus.get("indicator:0:1", box=Box.interval(-2.0, 3.0, 5120, truncates_unbounded=True))
    for t in (0.25, 0.8, 2.0):
        got = modulus(f, 1, t, Lp(1.0))
        assert got == pytest.approx(2 * min(t, 1.0), rel=0.02)


@pytest.mark.parametrize("name,k", [("gauss_bump", 1), ("gauss_bump", 2), ("sin", 1), ("bump", 2)])
def test_modulus_upper_bound_by_derivative(name, k):
    entry = corpus.get_entry(name)
    f = entry.grid()
    dh = entry.handle.derivative(k)
    dnorm = GridFunction.from_handle(dh, f.box, f.measure).quadrature(lambda v: v * v) ** 0.5
    for t in (0.05, 0.2):
        assert modulus(f, k, t, Lp(2.0)) <= t ** k * dnorm * (1 + 1e-6)


def test_modulus_of_polynomial_is_zero():
    from kfunlab.grid import handle_1d

    box = Box.interval(0.0, 1.0, 256)
    f = GridFunction.from_handle(handle_1d("q", lambda y: 1.0 + 2.0 * y), box)
    assert modulus(f, 2, 0.3, Lp(2.0)) <= 1e-12


def test_modulus_subadditive():
    box = Box.interval(0.0, 1.0, 1024)
    f = corpus.get("sin", box=box)
    g = corpus.get("abs_center", box=box)
    s = f.with_values(f.values + g.values, handle=None)
    t = 0.2
    # shared h-net: sup of the sum is bounded by the sum of sups
    assert modulus(s, 1, t, Lp(2.0)) <= modulus(f, 1, t, Lp(2.0)) + modulus(g, 1, t, Lp(2.0)) + 1e-10


@pytest.mark.parametrize("k", [1, 2])
def test_doubling_bound_on_net(k):
    f = corpus.get("gauss_bump")
    for rho in (0.05, 0.2):
        a = difference_norm(f, k, np.array([2 * rho]), Lp(2.0))
        b = difference_norm(f, k, np.array([rho]), Lp(2.0))
        assert a <= 2.0 ** k * b * (1 + 1e-9)


@pytest.mark.parametrize("name", ["gauss_bump", "bump", "tent"])
@pytest.mark.parametrize("k,p", [(1, 1.0), (1, 2.0), (2, 2.0)])
def test_averaged_modulus_equivalent_to_modulus(name, k, p):
    """Appendix-style equivalence: the ratio stays within a fitted window."""
    f = corpus.get(name)
    ratios = []
    for t in np.geomspace(0.02, 0.5, 6):
        om = modulus(f, k, t, Lp(p))
        av = averaged_modulus(f, k, t ** k, Lp(p), p)
        if om > 0:
            ratios.append(av / om)
    assert max(ratios) / min(ratios) <= 8.0


def test_averaged_modulus_homogeneity_and_poly():
    from kfunlab.grid import handle_1d

    f = corpus.get("gauss_bump")
    tripled = handle_1d("3f", lambda y: 3.0 * np.exp(-y * y), support_radius=6.5)
    g = GridFunction.from_handle(tripled, f.box, f.measure)
    a = averaged_modulus(g, 1, 0.1, Lp(2.0), 2.0)
    b = averaged_modulus(f, 1, 0.1, Lp(2.0), 2.0)
    assert a == pytest.approx(3.0 * b, rel=1e-9)


# -- K-functionals -----------------------------------------------------------

def test_k_functional_lp_linf_indicator():
    f = corpus.get("indicator:0:1", box=Box.interval(-0.5, 1.5, 2048))
    pair = KPair.lp_linf(1.0)
    for t in (0.1, 0.7, 2.0):
        assert k_functional(pair, t, f) == pytest.approx(min(t, 1.0), abs=2e-3)


@pytest.mark.parametrize("name", ["gauss_bump", "tent", "sin"])
def test_k_functional_bb(name):
    f = corpus.get(name)
    pair = KPair.bb(Lp(2.0))
    n2 = norm(f, Lp(2.0))
    for t in (0.3, 1.0, 4.0):
        assert k_functional(pair, t, f) == pytest.approx(min(1.0, t) * n2, rel=1e-12)


@pytest.mark.parametrize("name", ["gauss_bump", "tent", "indicator:0:1"])
@pytest.mark.parametrize("pair", [KPair.lp_linf(1.0), KPair.lp_linf(2.0), KPair.bb(Lp(2.0))])
def test_k_over_t_non_increasing(name, pair):
    f = corpus.get(name)
    ts = np.geomspace(1e-3, 8.0, 40)
    K = k_functional_net(pair, ts, f)
    ratios = K / ts
    assert np.all(np.diff(ratios) <= 1e-9 * ratios.max())


def test_k_over_t_non_increasing_xwk():
    f = corpus.get("gauss_bump")
    ts = np.geomspace(1e-3, 1.0, 25)
    K = k_functional_net(KPair.x_wk(Lp(2.0), 1), ts, f)
    ratios = K / ts
    assert np.all(np.diff(ratios) <= 1e-6 * ratios.max())


# -- Gagliardo seminorm ------------------------------------------------------

def test_gagliardo_constant_is_zero():
    f = GridFunction(Box.interval(0.0, 1.0, 256), LEBESGUE, np.ones(256))
    assert gagliardo_seminorm(f, 0.5, 2.0) <= 1e-12


def test_gagliardo_out_of_range():
    f = corpus.get("gauss_bump")
    with pytest.raises(ValueError, match="diverges"):
        gagliardo_seminorm(f, 1.0, 2.0)


def test_gagliardo_dilation_homogeneity():
    lam = 2.0
    s, p = 0.4, 2.0
    f = corpus.get("gauss_bump", box=Box.interval(-24, 24, 4096, truncates_unbounded=True))
    scaled = GridFunction.from_handle(f.handle.scaled(lam), f.box, f.measure)
    a = gagliardo_seminorm(scaled, s, p)
    b = gagliardo_seminorm(f, s, p)
    assert a == pytest.approx(lam ** (s * p - 1) * b, rel=0.01)


def test_weighted_double_seminorm_constant_zero():
    f = GridFunction(Box.interval(0.0, 1.0, 256), LEBESGUE, np.zeros(256))
    phi = derive(make_rho("power", 0.25), "phi_poincare", k=1, p=2.0, N=1, ell=1.0)
    assert weighted_double_seminorm(f, 1, phi, Lp(2.0), 2.0) == 0.0


def test_weighted_double_seminorm_vs_gagliardo_slice():
    """phi from the flat unit-mass density: int ||D_h f||^2 phi = (W^{1/2,2}
    energy - plain difference energy) / 2."""
    from kfunlab.weights import WeightFamily

    f = corpus.get("gauss_bump", box=Box.interval(-24, 24, 4096, truncates_unbounded=True))
    flat = WeightFamily.power_raw(1.0, 1.0)  # density 1 on (0,1)
    phi = derive(flat, "phi_bbm", k=1, p=2.0, N=1)
    got = weighted_double_seminorm(f, 1, phi, Lp(2.0), 2.0)
    gag = gagliardo_seminorm(f, 0.5, 2.0)
    net = geometric_net(1e-4, 1.0, 48)
    from kfunlab.loggrid import powerlaw_integral
    from kfunlab.smoothness import radial_difference_powers

    plain = powerlaw_integral(net, radial_difference_powers(f, 1, net, Lp(2.0), 2.0), head="fit")
    # phi(t) = (t^-2 - 1)/2 on (0,1): weighted = (restricted gagliardo - plain)/2,
    # up to the quadrature tolerance of the two independent nets
    gag01 = powerlaw_integral(net, radial_difference_powers(f, 1, net, Lp(2.0), 2.0) * net ** -2.0, head="fit")
    assert got == pytest.approx((gag01 - plain) / 2.0, rel=2e-3)
    assert gag01 <= gag * (1 + 1e-9)


# -- interpolation-free inequality and monotone convergence -------------------

@pytest.mark.parametrize("name", ["sin", "tent", "abs_center", "indicator:0:0.5", "x2"])
@pytest.mark.parametrize("kind", ["power", "scaled", "log"])
def test_exact_pair_self_improving_inequality(name, kind):
    """||f||_{L^p(Q)} <= (int_0^1 (K(t)/t)^p rho_eps dt)^{1/p} on the unit box."""
    from kfunlab.limits import _rho_functional

    p = 2.0
    f = corpus.get(name, box=UNIT)
    lhs = norm(f, Lp(p))
    ts = geometric_net(1e-5, 1.0, 32)
    K = k_functional_net(KPair.lp_linf(p), ts, f)
    gp_over_tp = (K / ts) ** p
    vals = []
    for e in (0.5, 0.25, 2.0 ** -4, 2.0 ** -8):
        fam = make_rho(kind, e, alpha=2.0) if kind == "scaled" else make_rho(kind, e)
        rhs_p = _rho_functional(ts, gp_over_tp, fam)
        vals.append(rhs_p)
        assert lhs <= rhs_p ** (1 / p) * (1 + 1e-6), (name, kind, e)
    # monotone recovery: K/t is non-increasing, so concentrating the mass at
    # zero drives the functional monotonically up to its eps->0 limit
    assert all(b >= a * (1 - 1e-9) for a, b in zip(vals, vals[1:]))


# -- large-shift machinery ----------------------------------------------------

def test_disjoint_profile_matches_distribution_doubling():
    f = corpus.get("bump", cells=1024)
    prof = disjoint_difference_profile(f, 1)
    base = rearrange(f)
    lam = 0.4
    d_mix = float(prof.breakpoints[int(np.sum(prof.values > lam))])
    d_f = float(base.breakpoints[int(np.sum(base.values > lam))])
    assert d_mix == pytest.approx(2 * d_f, rel=1e-12)


def test_wide_difference_norm_needs_compact_support():
    f = corpus.get("sin")
    with pytest.raises(GridError, match="support"):
        wide_difference_norm(f, 1, 10.0, Lp(2.0))


def test_averaged_modulus_extension_guard():
    f = corpus.get("bump")
    with pytest.raises(GridError, match="extend"):
        averaged_modulus_net(f, 1, [64.0], Lp(2.0), 2.0, extend=False)


def test_mixed_average_matches_scalar_average_for_lp():
    """With X = L^p the mixed average equals the plain averaged modulus."""
    f = corpus.get("bump")
    ts = np.geomspace(0.05, 0.5, 5)
    mixed = mixed_average_norms(f, 1, ts, 2.0, Lp(2.0))
    plain = averaged_modulus_net(f, 1, ts, Lp(2.0), 2.0)
    assert np.allclose(mixed, plain, rtol=5e-3)
