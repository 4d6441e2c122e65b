import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from siacdg.basis import NodalBasis
from siacdg.correction import CorrectionMode
from siacdg.mesh import Mesh1D, build_layout
from siacdg.siac import KernelSpec, assemble_filter_1d, conservation_correction
from siacdg.solver import SemiDiscretization
from siacdg.timeint import (
    FE,
    RK44,
    SSPRK22,
    SSPRK33,
    TABLEAUS,
    RKTableau,
    SolverCrash,
    get_tableau,
    integrate,
    relaxation_gamma,
    rk_stages,
    rk_step,
    rrk_step,
)


@pytest.fixture(scope="module")
def corrected():
    lay = build_layout(Mesh1D(0, 2, 21), NodalBasis(5))
    K = conservation_correction(assemble_filter_1d(KernelSpec(1, 1, lay.dx), lay), lay)
    semi = SemiDiscretization(lay, mode=CorrectionMode.global_(K))
    u0 = np.sin(np.pi * lay.coordinates) + 0.01
    return semi, u0, semi.stable_dt(u0, 0.1)


def skew_problem():
    # S^T M + M S = 0 with S = M^{-1} A, A antisymmetric
    w = np.array([0.5, 1.5, 1.0, 2.0])
    A = np.array([[0, 1, -2, 0.5], [-1, 0, 3, 1], [2, -3, 0, -1], [-0.5, -1, 1, 0]], dtype=float)
    S = A / w[:, None]
    return w, S


@pytest.mark.parametrize("tab", list(TABLEAUS.values()), ids=list(TABLEAUS))
def test_tableau_order_conditions(tab):
    b, A, c = tab.b, tab.A, tab.c
    assert b.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.all(b > 0)
    if tab.order >= 2:
        assert b @ c == pytest.approx(0.5, abs=1e-15)
    if tab.order >= 3:
        assert b @ c**2 == pytest.approx(1 / 3, abs=1e-15)
        assert b @ A @ c == pytest.approx(1 / 6, abs=1e-15)
    if tab.order >= 4:
        assert b @ c**3 == pytest.approx(1 / 4, abs=1e-15)
        assert b @ (c * (A @ c)) == pytest.approx(1 / 8, abs=1e-15)
        assert b @ A @ c**2 == pytest.approx(1 / 12, abs=1e-15)
        assert b @ A @ A @ c == pytest.approx(1 / 24, abs=1e-15)


def test_tableau_lookup_and_validation():
    assert get_tableau("rk44") is RK44
    with pytest.raises(ValueError):
        get_tableau("rk45")
    with pytest.raises(ValueError):
        RKTableau("implicit", [[1.0]], [1.0], [1.0], order=1)
    with pytest.raises(ValueError):
        RKTableau("bad_c", [[0, 0], [1, 0]], [0.5, 0.5], [0, 0.5], order=2)
    assert not FE.supports_relaxation and SSPRK22.supports_relaxation


@pytest.mark.parametrize("tab", list(TABLEAUS.values()), ids=list(TABLEAUS))
def test_zero_rhs(tab):
    u = np.array([1.0, -2.0, 3.0])
    zero = lambda v, t: np.zeros_like(v)  # noqa: E731
    np.testing.assert_array_equal(rk_step(tab, u, 0.0, 0.1, zero), u)
    if tab.supports_relaxation:
        res = rrk_step(tab, u, 0.0, 0.1, zero, np.ones(3))
        assert res.gamma == 1.0
        np.testing.assert_array_equal(res.u, u)


def test_forward_euler_formula():
    lam, u, dt = -1.7, np.array([0.3, 2.0]), 0.05
    np.testing.assert_allclose(rk_step(FE, u, 0.0, dt, lambda v, t: lam * v), u + dt * lam * u, rtol=0, atol=0)


@pytest.mark.parametrize("tab", [SSPRK22, SSPRK33, RK44], ids=lambda t: t.name)
def test_scalar_ode_order(tab):
    lam = -1.0
    errs = []
    for n in (20, 40, 80):
        res = integrate(np.array([1.0]), lambda v, t: lam * v, np.ones(1), 1.0, 1.0 / n, tab, relaxation=False)
        errs.append(abs(res.u[0] - np.exp(lam)))
    ratios = np.array(errs[:-1]) / errs[1:]
    assert np.all(np.abs(ratios / 2**tab.order - 1) < 0.15)


def test_nonautonomous_stage_times():
    # u' = cos(t) integrated exactly in time by quadrature order
    res = integrate(np.array([0.0]), lambda v, t: np.array([np.cos(t)]), np.ones(1), 1.0, 0.01, RK44,
                    relaxation=False)
    assert res.u[0] == pytest.approx(np.sin(1.0), abs=1e-10)


def test_gamma_zero_slopes_and_fe_degenerate():
    fs = np.zeros((3, 5))
    assert relaxation_gamma(fs, SSPRK33, np.ones(5)) == 1.0
    f = np.array([[1.0, 2.0, -1.0]])
    assert relaxation_gamma(f, FE, np.ones(3)) == 0.0


def test_fe_with_relaxation_raises():
    with pytest.raises(ValueError):
        rrk_step(FE, np.ones(2), 0.0, 0.1, lambda v, t: -v, np.ones(2))


@pytest.mark.parametrize("tab", [SSPRK22, SSPRK33, RK44], ids=lambda t: t.name)
def test_skew_energy_conservation(tab):
    w, S = skew_problem()
    u = np.array([1.0, -0.5, 0.25, 2.0])
    e0 = u @ (w * u)
    for _ in range(50):
        res = rrk_step(tab, u, 0.0, 0.2, lambda v, t: S @ v, w)
        assert abs(res.energy_after - res.energy_before) < 1e-13 * e0
        u = res.u
    assert abs(u @ (w * u) - e0) < 1e-12 * e0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["ssprk22", "ssprk33", "rk44"]))
def test_relaxation_identity(seed, name):
    tab = get_tableau(name)
    rng = np.random.default_rng(seed)
    n = 6
    w = 0.5 + rng.random(n)
    L = rng.normal(size=(n, n))
    u = rng.normal(size=n)
    rhs = lambda v, t: L @ v + 0.1 * v**2  # noqa: E731
    dt = 0.05
    ys, fs = rk_stages(tab, u, 0.0, dt, rhs)
    res = rrk_step(tab, u, 0.0, dt, rhs, w)
    produced = 2 * dt * res.gamma * sum(bj * (y @ (w * f)) for bj, y, f in zip(tab.b, ys, fs))
    change = res.energy_after - res.energy_before
    assert abs(change - produced) < 1e-12 * (res.energy_before + abs(produced))


def test_gamma_near_one_and_tends_to_one(corrected):
    semi, u0, h = corrected
    devs = []
    for dt in (h, h / 2, h / 4):
        ys, fs = rk_stages(SSPRK33, u0, 0.0, dt, semi)
        devs.append(abs(relaxation_gamma(fs, SSPRK33, semi.layout.weights) - 1))
    assert devs[0] < 0.05
    assert devs[0] > devs[1] > devs[2]


def test_corrected_burgers_energy_drift(corrected):
    semi, u0, h = corrected
    w = semi.layout.weights
    u, t = u0.copy(), 0.0
    e0 = u @ (w * u)
    worst = 0.0
    for _ in range(1000):
        res = rrk_step(SSPRK33, u, t, h, semi, w)
        worst = max(worst, abs(res.energy_after - res.energy_before) / res.energy_before)
        u, t = res.u, res.t
    assert worst < 1e-12
    assert abs(u @ (w * u) - e0) / e0 < 1e-10


def test_time_accounting_and_landing(corrected):
    semi, u0, h = corrected
    gammas = []
    t_final = 0.05
    res = integrate(u0, semi, semi.layout.weights, t_final, h, SSPRK33,
                    callback=lambda r, k: gammas.append((r.gamma, r.dt)))
    assert res.t == pytest.approx(t_final, abs=1e-13)
    assert sum(g * d for g, d in gammas) == pytest.approx(res.t, abs=1e-13)
    assert any(g != 1.0 for g, _ in gammas)
    assert res.steps == len(gammas)


def test_unrelaxed_landing_exact():
    res = integrate(np.array([1.0]), lambda v, t: -v, np.ones(1), 0.33, 0.1, RK44, relaxation=False)
    assert res.t == pytest.approx(0.33, abs=1e-15)
    assert res.steps == 4


def test_blowup_raises_crash():
    with pytest.raises(SolverCrash) as info:
        integrate(np.array([1.0]), lambda v, t: 50 * v, np.ones(1), 10.0, 0.1, RK44, relaxation=False)
    assert 0 < info.value.t_last < 10
    with pytest.raises(SolverCrash):
        integrate(np.array([1.0]), lambda v, t: v * np.nan, np.ones(1), 1.0, 0.1, RK44, relaxation=False)


def test_dissipative_rhs_energy_non_increasing():
    w, S = skew_problem()
    rhs = lambda v, t: S @ v - 0.3 * v  # noqa: E731
    u = np.array([1.0, 2.0, -1.0, 0.5])
    for _ in range(20):
        res = rrk_step(RK44, u, 0.0, 0.1, rhs, w)
        assert res.energy_after <= res.energy_before
        u = res.u
