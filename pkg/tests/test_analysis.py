import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from siacdg.analysis import (
    ConvergenceTable,
    ErrorReport,
    burgers_exact,
    convergence_order,
    error_norms,
    evaluate,
    mass_energy,
)
from siacdg.basis import NodalBasis
from siacdg.mesh import Mesh1D, Mesh2D, build_layout


def u0(x):
    return np.sin(np.pi * x) + 0.01


def test_exact_at_t0_and_zero_data():
    x = np.linspace(0, 2, 9)
    np.testing.assert_array_equal(burgers_exact(u0, x, 0.0), u0(x))
    np.testing.assert_array_equal(burgers_exact(lambda s: 0 * s, x, 0.2), 0.0)


def test_exact_residual_point():
    u = burgers_exact(u0, np.array([0.3]), 0.1)
    assert abs(u[0] - u0(0.3 - 0.1 * u[0])) < 1e-13


def test_exact_residual_random_samples():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 2, 10_000)
    t = rng.uniform(0, 0.99 / np.pi, 10_000)
    # one t per call, grouped to exercise the vectorized path
    for tk in np.unique(np.round(t, 2)):
        sel = np.round(t, 2) == tk
        u = burgers_exact(u0, x[sel], float(tk))
        assert np.all(np.abs(u - u0(x[sel] - u * tk)) < 1e-13)


def test_exact_bisection_fallback_near_shock():
    # Newton without a derivative hint still converges just before breaking
    t = 0.999 / np.pi
    x = np.linspace(0.9, 1.1, 41)
    u = burgers_exact(u0, x, t)
    assert np.all(np.abs(u - u0(x - u * t)) < 1e-13)


def test_exact_raises_past_shock():
    x = np.linspace(0, 2, 201)
    with pytest.raises(RuntimeError):
        burgers_exact(u0, x, 3.0 / np.pi)


def test_error_norms_own_interpolant():
    lay = build_layout(Mesh1D(0, 2, 5), NodalBasis(4))
    u = np.cos(lay.coordinates)

    def interp(x):
        _, _, vals = evaluate(u, lay, 17)
        return vals

    rep = error_norms(u, lay, interp)
    assert rep.L2 < 1e-13 and rep.Linf < 1e-13
    assert rep.n_eval == 17


def test_error_norms_closed_form():
    lay = build_layout(Mesh1D(0, 2, 7), NodalBasis(3))
    rep = error_norms(np.zeros(lay.n_global), lay, lambda x: np.ones_like(x))
    assert rep.L2 == pytest.approx(math.sqrt(2), rel=1e-14)
    assert rep.Linf == 1.0
    assert rep.L2 <= rep.Linf * math.sqrt(2) + 1e-15


def test_error_norms_2d_closed_form_and_points():
    lay = build_layout(Mesh2D(0, 2, 3, 3), NodalBasis(2))
    rep = error_norms(np.zeros(lay.n_global), lay, lambda x, y: np.ones_like(x))
    assert rep.L2 == pytest.approx(2.0, rel=1e-14)
    assert rep.n_eval == 36


def test_error_norms_refinement_invariant_for_smooth_integrands():
    lay = build_layout(Mesh1D(0, 2, 6), NodalBasis(3))
    u = u0(lay.coordinates)
    a = error_norms(u, lay, u0, n_pts=17)
    b = error_norms(u, lay, u0, n_pts=25)
    assert abs(a.L2 - b.L2) < 0.01 * b.L2
    assert abs(a.Linf - b.Linf) < 0.01 * b.Linf


def test_convergence_order_examples():
    np.testing.assert_allclose(convergence_order([1, 0.25], [10, 20]), [2.0])
    for p in range(1, 6):
        np.testing.assert_allclose(convergence_order([1, 2.0**-p], [4, 8]), [p])
    np.testing.assert_allclose(convergence_order([1, 1 / 27], [10, 30]), [3.0])


@pytest.mark.parametrize("errors,Ns", [([1, 0.5], [20, 10]), ([1, 0.5, 0.2], [10, 20]), ([1, 0], [10, 20])])
def test_convergence_order_errors(errors, Ns):
    with pytest.raises(ValueError):
        convergence_order(errors, Ns)


@settings(max_examples=50)
@given(st.floats(0.5, 6), st.floats(1e-8, 1e3))
def test_convergence_order_recovers_synthetic_rate(p, C):
    Ns = np.array([10, 20, 40, 80])
    np.testing.assert_allclose(convergence_order(C * Ns**-p, Ns), p, rtol=1e-10)


def test_convergence_table_grouping():
    table = ConvergenceTable()
    for N, e in ((10, 1.0), (20, 0.125), (40, 1 / 64)):
        table.add("none", 2, N, ErrorReport(e, 2 * e))
    table.add("k11", 2, 10, ErrorReport(1.0, 1.0))
    table.finalize()
    np.testing.assert_allclose(table.orders("none", 2), [3, 3])
    rows = table.groups()[("none", 2)]
    assert math.isnan(rows[0].order_L2) and rows[2].order_Linf == pytest.approx(3)
    assert math.isnan(table.groups()[("k11", 2)][0].order_L2)


def test_mass_energy_constant():
    lay = build_layout(Mesh1D(0, 2, 9), NodalBasis(2))
    m, e = mass_energy(np.ones(lay.n_global), lay)
    assert m == pytest.approx(2.0, rel=1e-14)
    assert e == pytest.approx(1.0, rel=1e-14)


def test_energy_quadrature_exactness():
    # p = 5 LGL integrates degree 9, so a degree-4 polynomial squares exactly
    lay = build_layout(Mesh1D(0, 2, 3), NodalBasis(5))
    x = lay.coordinates
    u = x**4 - 2 * x + 0.5
    _, e = mass_energy(u, lay)
    # 0.5 * int_0^2 (x^4 - 2x + 1/2)^2 dx
    exact = 0.5 * (2**9 / 9 - 4 * 2**6 / 6 + 2**5 / 5 + 4 * 8 / 3 - 2 * 4 / 2 + 0.25 * 2)
    assert e == pytest.approx(exact, rel=1e-12)
