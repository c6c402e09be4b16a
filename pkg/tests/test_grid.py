import math

import numpy as np
import pytest

from kfunlab import corpus
from kfunlab.grid import GAUSSIAN, LEBESGUE, Box, GridError, GridFunction


def unit_ones(cells=64):
    return GridFunction(Box.interval(0.0, 1.0, cells), LEBESGUE, np.ones(cells))


def test_quadrature_unit_mass():
    assert unit_ones().quadrature() == pytest.approx(1.0, abs=1e-15)


def test_quadrature_gaussian_integral():
    f = corpus.get("gauss_bump", cells=4096)
    assert f.quadrature() == pytest.approx(math.sqrt(math.pi), rel=1e-12)


def test_gaussian_measure_total_mass():
    box = Box.gauss_line(8.0, 2048)
    one = GridFunction(box, GAUSSIAN, np.ones(2048))
    assert abs(one.quadrature() - 1.0) <= 1e-12


def test_quadrature_linearity_machine_precision():
    f = corpus.get("gauss_bump")
    g = corpus.get("tent", box=f.box)
    lhs = GridFunction(f.box, f.measure, 2.0 * f.values + 3.0 * g.values).quadrature()
    rhs = 2.0 * f.quadrature() + 3.0 * g.quadrature()
    assert lhs == pytest.approx(rhs, rel=1e-14)


@pytest.mark.parametrize("name", ["expx", "x2", "x3"])
def test_midpoint_order_two_on_c2_corpus(name):
    # C^2 entries with boundary-active integrands show the classical order-2
    # error ratio; decaying or periodic integrands superconverge instead.
    entry = corpus.get_entry(name)
    vals = {}
    for cells in (128, 256, 512):
        vals[cells] = entry.grid(cells=cells).quadrature(lambda v: v * v)
    fine = entry.grid(cells=65536).quadrature(lambda v: v * v)
    e1 = abs(vals[128] - fine)
    e2 = abs(vals[256] - fine)
    assert 3.5 <= e1 / e2 <= 4.5


def test_hermite_moments():
    x = corpus.get("x", box=Box.gauss_line(), measure=GAUSSIAN)
    assert abs(x.quadrature()) <= 1e-10
    assert x.quadrature(lambda v: v * v) == pytest.approx(1.0, abs=1e-6)


def test_restrict_indicator_and_linear():
    box = Box.interval(-1.0, 2.0, 1536)  # cell width 1/512: [0,1] is aligned
    ind = corpus.get("indicator:0:2", box=box)
    sub = Box.interval(0.0, 1.0, 512)
    r = ind.restrict(sub)
    assert np.all(r.values == 1.0)
    x = corpus.get("x", box=box)
    rx = x.restrict(sub)
    assert np.allclose(rx.values, sub.axis_centers(0))


def test_restrict_requires_containment_and_alignment():
    f = corpus.get("x", box=Box.interval(0.0, 1.0, 512))
    with pytest.raises(GridError):
        f.restrict(Box.interval(0.5, 1.5, 256))
    with pytest.raises(GridError):
        f.restrict(Box.interval(0.1234, 0.5, 193))


def test_refine_exact_resampling():
    f = corpus.get("gauss_bump", cells=256)
    g = f.refine(2)
    direct = corpus.get("gauss_bump", cells=512)
    assert np.array_equal(g.values, direct.values)


def test_refine_improves_quadrature():
    entry = corpus.get_entry("expx")
    i128 = entry.grid(cells=128).quadrature(lambda v: v * v)
    i256 = entry.grid(cells=256).quadrature(lambda v: v * v)
    i512 = entry.grid(cells=512).quadrature(lambda v: v * v)
    assert abs(i512 - i256) < abs(i256 - i128)


def test_refine_requires_handle():
    f = unit_ones()
    bare = f.with_values(f.values)
    with pytest.raises(GridError, match="sampled-only"):
        bare.refine(2)


def test_nonfinite_sample_rejected():
    vals = np.ones(64)
    vals[3] = np.nan
    f = GridFunction(Box.interval(0.0, 1.0, 64), LEBESGUE, vals)
    with pytest.raises(GridError, match="non-finite"):
        f.quadrature()


@pytest.mark.parametrize("name", ["gauss_bump", "bump", "tent", "sin", "x", "x2", "expx"])
def test_corpus_analytic_norms_match_quadrature(name):
    entry = corpus.get_entry(name)
    f = entry.grid(cells=8192)
    for (order, p), value in entry.norms.items():
        if order != 0:
            continue
        got = f.quadrature(lambda v, p=p: np.abs(v) ** p) ** (1.0 / p)
        assert got == pytest.approx(value, rel=1e-6)


def test_corpus_derivative_norms_match_quadrature():
    for name in ("gauss_bump", "bump", "tent", "sin"):
        entry = corpus.get_entry(name)
        for (order, p), value in entry.norms.items():
            if order == 0:
                continue
            handle = entry.handle.derivative(order)
            g = GridFunction.from_handle(handle, entry.grid(cells=8192).box, LEBESGUE)
            got = g.quadrature(lambda v, p=p: np.abs(v) ** p) ** (1.0 / p)
            assert got == pytest.approx(value, rel=1e-6), (name, order, p)


def test_2d_quadrature():
    f = corpus.get("gauss_bump2", cells=512)
    assert f.quadrature() == pytest.approx(math.pi, rel=1e-8)


def test_csv_dump(tmp_path):
    f = corpus.get("tent", cells=64)
    path = tmp_path / "grid.csv"
    f.to_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "x1,value"
    assert len(rows) == 65


def test_gauss_mean():
    x2 = corpus.get("x2", box=Box.gauss_line(), measure=GAUSSIAN)
    assert x2.mean() == pytest.approx(1.0, abs=1e-6)
