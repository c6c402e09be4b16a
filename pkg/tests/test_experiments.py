import math

import numpy as np
import pytest

from kfunlab import corpus
from kfunlab.experiments import (EXPERIMENTS, ConfigError, MinkowskiError,
                                 RunConfig, _ponce_rhs, catalog,
                                 require_minkowski, run_experiment, suite_ids)
from kfunlab.grid import Box, GridError
from kfunlab.loggrid import geometric_net
from kfunlab.norms import Lorentz, Lp, best_approx
from kfunlab.smoothness import difference
from kfunlab.weights import derive, make_rho


def test_catalog_contract():
    ids = [eid for eid, _ in catalog()]
    assert len(ids) == len(set(ids))
    for required in ("ponce-thm12", "gauss-thm13", "jn-thm14", "bbm-thm61",
                     "ms-thm62", "mixed-thm6x", "semigroup-cor658"):
        assert required in ids
    # each id maps to exactly one theorem string
    for eid, theorem in catalog():
        assert isinstance(theorem, str) and theorem
        assert EXPERIMENTS[eid].theorem == theorem


def test_suites_resolve():
    assert set(suite_ids("all")) == set(EXPERIMENTS)
    assert "bbm-classic" in suite_ids("bbm")
    assert "large-h" in suite_ids("ms")
    with pytest.raises(ConfigError):
        suite_ids("nope")


def test_unknown_experiment_rejected():
    with pytest.raises(ConfigError):
        run_experiment("nonexistent", RunConfig())


def test_minkowski_refusal():
    require_minkowski(Lp(2.0), 2.0)
    require_minkowski(Lp(4.0), 2.0)
    require_minkowski(Lorentz(4.0, 2.0), 2.0)
    with pytest.raises(MinkowskiError):
        require_minkowski(Lp(1.0), 2.0)
    with pytest.raises(MinkowskiError):
        require_minkowski(Lorentz(2.0, 1.0), 2.0)


def _fitted_ratio(f, k, p, eps):
    net = geometric_net(16.0 / f.box.cells[0], 1.0, 48)
    S = np.zeros(len(net))
    for i, rho in enumerate(net):
        for sign in (1.0, -1.0):
            try:
                d = difference(f, k, np.array([sign * rho]))
            except GridError:
                continue
            S[i] += float(np.dot(d.cell_masses, np.abs(d.values) ** p))
    phi = derive(make_rho("power", eps), "phi_poincare", k=k, p=p, N=1, ell=1.0)
    L = best_approx(f, None, k, p) ** p
    entry = corpus.get_entry("sin")
    R = _ponce_rhs(net, S, phi, 1.0, k, p, entry.difference_power_exponent(k, p))
    return L / R


def test_fitted_constant_homogeneity():
    """C(a f) = C(f) to near machine precision: degrees cancel in the ratio."""
    box = Box.interval(0.0, 1.0, 1024)
    f0 = corpus.get("sin", box=box)
    f = f0.with_values(f0.values, handle=None)  # same sampled path for both
    g = f0.with_values(3.0 * f0.values, handle=None)
    for k, p in ((1, 2.0), (2, 1.0)):
        c1 = _fitted_ratio(f, k, p, 0.25)
        c2 = _fitted_ratio(g, k, p, 0.25)
        assert abs(c1 - c2) <= 1e-8 * abs(c1)


def test_remainder_bracket_scaled_family():
    """phi_eps(t)/phi_eps(0+) equals the explicit remainder bracket
    1 - (t/eps)^(alpha-p-N), which lies in [0,1] below the support edge."""
    fam = make_rho("scaled", 0.25, alpha=4.5)
    phi = derive(fam, "phi_poincare", k=1, p=2.0, N=1, ell=1.0)
    plateau = float(phi(1e-12))
    ts = np.linspace(1e-3, 0.2499, 400)
    bracket = np.asarray(phi(ts), float) / plateau
    expect = 1.0 - (ts / 0.25) ** (4.5 - 3.0)
    assert np.all(bracket >= -1e-12) and np.all(bracket <= 1 + 1e-12)
    assert np.allclose(bracket, expect, atol=1e-10)


def test_mixed_experiment_smoke():
    res = run_experiment("mixed-thm6x", RunConfig(resolution=1024))
    assert res.passed
    names = [c.name for c in res.checks]
    assert any("refused" in n for n in names)


def test_bbm_2d_smoke():
    res = run_experiment("bbm-thm61", RunConfig(n=2, resolution=96, family="power",
                                                eps_grid=tuple(2.0 ** -j for j in range(1, 9))))
    case = res.cases[0]
    assert case.rel_err <= 0.08  # coarse grid smoke check


def test_config_resolution_override():
    res = run_experiment("milman", RunConfig(resolution=512))
    assert res.passed


def test_experiment_results_serialize(acceptance_results):
    for res in acceptance_results.values():
        d = res.to_dict()
        assert d["id"] == res.id and isinstance(d["cases"], list)
        assert isinstance(d["passed"], bool)
