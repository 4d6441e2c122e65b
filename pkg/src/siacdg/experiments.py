"""Study drivers built from an :class:`ExperimentConfig`.

Each driver is a plain function returning arrays or tables; the CLI only
adds file output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .analysis import ConvergenceTable, burgers_exact, error_norms
from .basis import NodalBasis
from .config import ExperimentConfig, kernel_from_name
from .correction import LOCAL_AVG, CorrectionMode, DissipationParams
from .dg import ADVECTION, BURGERS, FluxKind, FVResult, fv_reference
from .mesh import GlobalLayout, Mesh1D, Mesh2D, build_layout
from .siac import (
    FilterOperator,
    KernelSpec,
    assemble_filter,
    conservation_correction,
    kernel_fourier,
)
from .solver import RunResult, SemiDiscretization, run_solver
from .timeint import get_tableau


def sine_offset_1d(x):
    return np.sin(np.pi * x) + 0.01


def sine_offset_1d_prime(x):
    return np.pi * np.cos(np.pi * x)


def sine_offset_burgers2d(x, y):
    return np.sin(2 * np.pi * (x + y)) + 0.01


def sine_offset_advect2d(x, y):
    return (np.sin(np.pi * x) + 0.01) * (np.sin(np.pi * y) + 0.01)


def load_table(path: str, a: float, b: float):
    """Periodic piecewise-linear interpolant of a CSV table with columns ``x,u``."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.DictReader(fh)]
    if not rows or "x" not in rows[0] or "u" not in rows[0]:
        raise ValueError(f"{path}: expected a header with columns x,u")
    x = np.array([float(r["x"]) for r in rows])
    u = np.array([float(r["u"]) for r in rows])
    order = np.argsort(x)
    x, u = x[order], u[order]
    period = b - a

    def u0(s):
        return np.interp(np.asarray(s), x, u, period=period)

    return u0


def initial_condition(cfg: ExperimentConfig):
    """Callable ``u0(x)`` in 1D or ``u0(x, y)`` in 2D."""
    if cfg.initial == "table":
        return load_table(cfg.initial_path, cfg.a, cfg.b)
    return {"burgers1d": sine_offset_1d, "burgers2d": sine_offset_burgers2d,
            "advect2d": sine_offset_advect2d}[cfg.problem]


def make_layout(cfg: ExperimentConfig, n: int | None = None, p: int | None = None) -> GlobalLayout:
    p = cfg.p if p is None else p
    if cfg.dim == 1:
        mesh = Mesh1D(cfg.a, cfg.b, cfg.n_elements if n is None else n)
    else:
        nx, ny = (cfg.nx, cfg.ny) if n is None else (n, n)
        mesh = Mesh2D(cfg.a, cfg.b, nx, ny)
    return build_layout(mesh, NodalBasis(p))


def sample(layout: GlobalLayout, u0) -> np.ndarray:
    X = layout.coordinates
    return np.asarray(u0(X) if layout.dim == 1 else u0(X[:, 0], X[:, 1]), dtype=float)


def kernel_spec(cfg: ExperimentConfig, layout: GlobalLayout, moments=None, order=None,
                scaling=None) -> KernelSpec:
    if scaling is None:
        scaling = cfg.scaling
    if scaling is None:
        scaling = 1.0 if layout.dim == 1 else math.sqrt(2.0)
    angle = cfg.line_angle if layout.dim == 2 else None
    return KernelSpec(moments=cfg.moments if moments is None else moments,
                      spline_order=cfg.spline_order if order is None else order,
                      scaling=scaling * layout.dx, line_angle=angle)


def conservative_filter(spec: KernelSpec, layout: GlobalLayout) -> FilterOperator:
    return conservation_correction(assemble_filter(spec, layout), layout)


def correction_mode(cfg: ExperimentConfig, layout: GlobalLayout) -> CorrectionMode:
    if cfg.correction == "none":
        return CorrectionMode.none()
    if cfg.correction == "local":
        return CorrectionMode.local()
    K = conservative_filter(kernel_spec(cfg, layout), layout)
    if cfg.correction == "siac":
        return CorrectionMode.global_(K)
    if cfg.blend_second == "local":
        second = LOCAL_AVG
    else:
        spec2 = kernel_spec(cfg, layout, cfg.second_moments, cfg.second_spline_order,
                            cfg.second_scaling)
        second = conservative_filter(spec2, layout)
    return CorrectionMode.blend(K, second, clamp=cfg.blend_clamp)


def semi_discretization(cfg: ExperimentConfig, layout: GlobalLayout | None = None,
                        mode: CorrectionMode | None = None) -> SemiDiscretization:
    layout = make_layout(cfg) if layout is None else layout
    diss = DissipationParams(cfg.c_E, cfg.c_max, True) if cfg.dissipation else None
    return SemiDiscretization(
        layout,
        equation=ADVECTION if cfg.problem == "advect2d" else BURGERS,
        flux=FluxKind(cfg.flux),
        mode=correction_mode(cfg, layout) if mode is None else mode,
        dissipation=diss,
    )


def run(cfg: ExperimentConfig, record: bool = True) -> tuple[SemiDiscretization, RunResult]:
    """Single solve with the configured stepper; ``dt`` from the initial CFL rule."""
    semi = semi_discretization(cfg)
    u0 = sample(semi.layout, initial_condition(cfg))
    dt = semi.stable_dt(u0, cfg.cfl)
    res = run_solver(semi, u0, cfg.t_final, dt, get_tableau(cfg.stepper), cfg.relaxation,
                     output_times=cfg.output_times, record=record)
    return semi, res


def _mode_for(name: str, cfg: ExperimentConfig, layout: GlobalLayout) -> CorrectionMode:
    if name == "none":
        return CorrectionMode.none()
    if name == "local":
        return CorrectionMode.local()
    moments, order = kernel_from_name(name)
    return CorrectionMode.global_(conservative_filter(kernel_spec(cfg, layout, moments, order), layout))


def convergence_study(cfg: ExperimentConfig, progress=None) -> ConvergenceTable:
    """Errors and orders over ``convergence.Ns`` x ``convergence.degrees`` x modes.

    Burgers runs stop before shock formation and compare with the
    characteristic solution; ``advect2d`` compares with the shifted data.
    Steps are not relaxed, so the comparison time is exactly the final time.
    """
    if cfg.problem == "burgers2d":
        raise ValueError("convergence studies support burgers1d and advect2d")
    u0 = initial_condition(cfg)
    tab = get_tableau(cfg.conv_stepper)
    table = ConvergenceTable()
    for mode_name in cfg.conv_modes:
        for p in cfg.conv_degrees:
            for N in cfg.conv_Ns:
                layout = make_layout(cfg, N, p)
                mode = _mode_for(mode_name, cfg, layout)
                semi = semi_discretization(replace(cfg, dissipation=False), layout, mode)
                u = sample(layout, u0)
                res = run_solver(semi, u, cfg.conv_t_final, semi.stable_dt(u, cfg.conv_cfl), tab,
                                 relaxation=False, record=False)
                if res.crashed:
                    raise RuntimeError(f"{mode_name}, p={p}, N={N}: {res.crash_reason}")
                t = res.t
                if cfg.problem == "burgers1d":
                    du0 = sine_offset_1d_prime if cfg.initial == "sine_offset" else None

                    def exact(x, t=t):
                        return burgers_exact(u0, x, t, du0=du0)
                else:
                    L = cfg.b - cfg.a

                    def exact(x, y, t=t):
                        return u0(cfg.a + np.mod(x - t - cfg.a, L), cfg.a + np.mod(y - t - cfg.a, L))
                table.add(mode_name, p, N, error_norms(res.u, layout, exact))
                if progress is not None:
                    progress(mode_name, p, N, table.rows[-1])
    return table.finalize()


@dataclass
class TemporalStudy:
    """``errors`` are ``|E(T) - E(0)| / E(0)``; ``signed`` keeps the sign."""

    stepper: str
    dts: np.ndarray
    errors: np.ndarray
    signed: np.ndarray

    @property
    def orders(self) -> np.ndarray:
        return np.log(self.errors[:-1] / self.errors[1:]) / np.log(self.dts[:-1] / self.dts[1:])

    @property
    def fitted_order(self) -> float:
        """Least-squares slope of ``log(error)`` against ``log(dt)``."""
        return float(np.polyfit(np.log(self.dts), np.log(self.errors), 1)[0])

    @property
    def limit(self) -> float:
        """Signed error extrapolated to ``dt -> 0`` by a quadratic fit in ``dt``."""
        deg = min(2, self.dts.size - 1)
        return float(np.polyfit(self.dts, self.signed, deg)[-1])


def temporal_study(cfg: ExperimentConfig, steppers=("fe", "ssprk22", "ssprk33", "rk44"),
                   cfls=(0.4, 0.2, 0.1, 0.05), mode: CorrectionMode | None = None) -> list[TemporalStudy]:
    """Relative energy error ``|E(T) - E(0)| / E(0)`` versus ``dt`` without relaxation."""
    layout = make_layout(cfg)
    semi = semi_discretization(cfg, layout, mode)
    u0 = sample(layout, initial_condition(cfg))
    E0 = layout.inner(u0, u0)
    out = []
    for name in steppers:
        dts, errs = [], []
        for cfl in cfls:
            dt = semi.stable_dt(u0, cfl)
            res = run_solver(semi, u0, cfg.t_final, dt, get_tableau(name), relaxation=False,
                             record=False)
            errs.append(np.nan if res.crashed else (layout.inner(res.u, res.u) - E0) / E0)
            dts.append(dt)
        signed = np.array(errs)
        out.append(TemporalStudy(name, np.array(dts), np.abs(signed), signed))
    return out


@dataclass
class FilterInspection:
    K: FilterOperator
    K_corr: FilterOperator
    k: np.ndarray
    response: np.ndarray


def filter_inspect(cfg: ExperimentConfig) -> FilterInspection:
    """Filter matrices and the Fourier response on ``k in [0, 4 pi / H]``."""
    layout = make_layout(cfg)
    spec = kernel_spec(cfg, layout)
    K = assemble_filter(spec, layout)
    Kc = conservation_correction(K, layout)
    k = np.linspace(0.0, 4 * math.pi / spec.scaling, cfg.fourier_points)
    return FilterInspection(K, Kc, k, kernel_fourier(spec, k))


def fv_run(cfg: ExperimentConfig) -> FVResult:
    if cfg.dim != 1:
        raise ValueError("the finite-volume reference is 1D only")
    return fv_reference(cfg.fv_cells, initial_condition(cfg), cfg.t_final, cfg.a, cfg.b,
                        cfl=cfg.fv_cfl)
