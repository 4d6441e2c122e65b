"""Corrected semi-discretizations and a recording time loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .correction import (
    CorrectionMode,
    CorrectionReport,
    DissipationParams,
    compute_correction,
    subcell_entropy_metric,
)
from .dg import BURGERS, Equation, FluxKind, dg_residual, entropy_flux_residual, max_wave_speed
from .mesh import GlobalLayout
from .timeint import RKTableau, SolverCrash, integrate

TIMESERIES_COLUMNS = (
    "t", "mass", "energy", "correction_ratio", "entropy_metric",
    "blend_weight", "gamma", "phi_diss",
)


@dataclass
class SemiDiscretization:
    """``du/dt = r(u) + c(u)`` for a DGSEM residual and a correction mode."""

    layout: GlobalLayout
    equation: Equation = BURGERS
    flux: FluxKind = FluxKind.LLF
    mode: CorrectionMode = field(default_factory=CorrectionMode.none)
    dissipation: DissipationParams | None = None

    def residual(self, u):
        return dg_residual(u, self.layout, self.flux, self.equation)

    def correction(self, u, r=None) -> CorrectionReport:
        if r is None:
            r = self.residual(u)
        return compute_correction(self.mode, u, r, self.layout, self.flux,
                                  self.equation, self.dissipation)

    def __call__(self, u, t=0.0):
        r = self.residual(u)
        return r + self.correction(u, r).c

    def stable_dt(self, u, cfl: float) -> float:
        """``cfl * h_min / max|f'(u)|``, summed over directions in 2D."""
        speed = self.layout.dim * max(max_wave_speed(u, self.equation), 1e-12)
        return cfl * self.layout.h_min / speed

    def diagnostics(self, u) -> dict:
        layout = self.layout
        r = self.residual(u)
        rep = self.correction(u, r)
        rF = entropy_flux_residual(u, layout, self.flux, self.equation)
        Dh = subcell_entropy_metric(u, r + rep.c, layout, self.flux, self.equation, rF=rF)
        return {
            "mass": layout.integrate(u),
            "energy": 0.5 * layout.inner(u, u),
            "correction_ratio": rep.relative_magnitude,
            "entropy_metric": layout.norm(Dh),
            "blend_weight": np.nan if rep.blend_weight is None else rep.blend_weight,
            "phi_diss": rep.phi_diss,
        }


@dataclass
class RunResult:
    u: np.ndarray
    t: float
    steps: int
    timeseries: list[dict]
    snapshots: dict[float, np.ndarray]
    crashed: bool = False
    crash_time: float | None = None
    crash_reason: str = ""


def run_solver(semi: SemiDiscretization, u0, t_final: float, dt: float, tab: RKTableau,
               relaxation: bool = True, output_times=(), record: bool = True,
               blowup: float = 1e6) -> RunResult:
    """Integrate to ``t_final`` recording one time-series row per accepted step.

    Crashes are caught and reported through ``RunResult.crashed`` with the
    last stable time.
    """
    weights = semi.layout.weights
    rows: list[dict] = []
    snaps: dict[float, np.ndarray] = {}

    def emit(u, t, gamma):
        if record:
            rows.append({"t": t, **semi.diagnostics(u), "gamma": gamma})

    emit(np.asarray(u0, dtype=float), 0.0, 1.0)
    stops = sorted({float(s) for s in output_times if 0.0 < s < t_final} | {float(t_final)})
    u, t, steps = np.array(u0, dtype=float), 0.0, 0

    def callback(res, step):
        emit(res.u, res.t, res.gamma)

    try:
        for stop in stops:
            out = integrate(u, semi, weights, stop, dt, tab, relaxation,
                            callback=callback, blowup=blowup, t0=t)
            u, t, steps = out.u, out.t, steps + out.steps
            if stop in output_times or stop == t_final:
                snaps[stop] = u.copy()
    except SolverCrash as crash:
        return RunResult(u, crash.t_last, steps + crash.step, rows, snaps,
                         crashed=True, crash_time=crash.t_last, crash_reason=crash.reason)
    return RunResult(u, t, steps, rows, snaps)
