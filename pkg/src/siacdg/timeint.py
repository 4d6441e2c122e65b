"""Explicit Runge-Kutta stepping with optional relaxation.

Relaxation rescales the step update by ``gamma`` so that the two
``O(dt^2)`` terms of the energy change in the ``M``-weighted inner product
cancel; the step then advances time by ``gamma * dt``. For a right-hand side
with ``<u, f(u)> = 0`` energy is conserved to roundoff, for a dissipative one
it cannot grow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dg import NonFiniteStateError


@dataclass(frozen=True)
class RKTableau:
    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int

    def __post_init__(self):
        A, b, c = (np.asarray(x, dtype=float) for x in (self.A, self.b, self.c))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        if np.any(np.triu(A) != 0):
            raise ValueError("only explicit (strictly lower triangular) tableaus")
        if not np.allclose(A.sum(axis=1), c, atol=1e-15):
            raise ValueError("tableau must satisfy c_i = sum_j a_ij")

    @property
    def stages(self) -> int:
        return self.b.size

    @property
    def supports_relaxation(self) -> bool:
        # one stage gives a zero numerator, hence gamma = 0
        return self.stages >= 2 and bool(np.all(self.b > 0))


FE = RKTableau("fe", [[0.0]], [1.0], [0.0], order=1)
SSPRK22 = RKTableau("ssprk22", [[0, 0], [1, 0]], [0.5, 0.5], [0, 1], order=2)
SSPRK33 = RKTableau(
    "ssprk33",
    [[0, 0, 0], [1, 0, 0], [0.25, 0.25, 0]],
    [1 / 6, 1 / 6, 2 / 3],
    [0, 1, 0.5],
    order=3,
)
RK44 = RKTableau(
    "rk44",
    [[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1, 0]],
    [1 / 6, 1 / 3, 1 / 3, 1 / 6],
    [0, 0.5, 0.5, 1],
    order=4,
)

TABLEAUS = {tab.name: tab for tab in (FE, SSPRK22, SSPRK33, RK44)}


def get_tableau(name: str) -> RKTableau:
    try:
        return TABLEAUS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown tableau {name!r}; choose from {sorted(TABLEAUS)}") from None


class RelaxationError(RuntimeError):
    """Relaxation produced a non-positive step factor."""


class SolverCrash(RuntimeError):
    """The solution became non-finite or exceeded the blow-up bound."""

    def __init__(self, t_last: float, step: int, reason: str):
        super().__init__(f"solver crashed after t={t_last:.6g} (step {step}): {reason}")
        self.t_last = t_last
        self.step = step
        self.reason = reason


def rk_stages(tab: RKTableau, u, t, dt, rhs):
    """Stage values ``y_i`` and slopes ``f_i = rhs(y_i, t + c_i dt)``."""
    ys, fs = [], []
    for i in range(tab.stages):
        y = u.copy()
        for j in range(i):
            if tab.A[i, j] != 0.0:
                y += dt * tab.A[i, j] * fs[j]
        f = rhs(y, t + tab.c[i] * dt)
        if not np.all(np.isfinite(f)):
            raise NonFiniteStateError("right-hand side produced NaN or Inf")
        ys.append(y)
        fs.append(f)
    return ys, fs


def _combine(tab, fs):
    out = tab.b[0] * fs[0]
    for bj, f in zip(tab.b[1:], fs[1:]):
        out = out + bj * f
    return out


def rk_step(tab: RKTableau, u, t, dt, rhs: Callable) -> np.ndarray:
    if not dt > 0:
        raise ValueError("time step must be positive")
    _, fs = rk_stages(tab, u, t, dt, rhs)
    return u + dt * _combine(tab, fs)


def relaxation_gamma(fs, tab: RKTableau, weights) -> float:
    """``gamma = 2 sum b_i a_ij <f_i, f_j> / sum b_i b_j <f_i, f_j>``, or 1
    when ``||sum b_j f_j||`` vanishes."""
    F = np.asarray(fs)
    G = (F * weights) @ F.T
    den = tab.b @ G @ tab.b
    scale = np.max(np.abs(np.diag(G))) if G.size else 0.0
    if not den > 1e-14 * scale or scale == 0.0:
        return 1.0
    return float(2.0 * np.sum(tab.b[:, None] * tab.A * G) / den)


@dataclass
class StepResult:
    u: np.ndarray
    t: float
    gamma: float
    dt: float
    energy_before: float
    energy_after: float
    stage_values: list | None = None
    stage_slopes: list | None = None


def rrk_step(tab: RKTableau, u, t, dt, rhs: Callable, weights, relaxation=True) -> StepResult:
    """One (relaxed) RK step; energies are ``||u||_M^2``."""
    if not dt > 0:
        raise ValueError("time step must be positive")
    if relaxation and not tab.supports_relaxation:
        raise ValueError(f"relaxation is not available for {tab.name}")
    ys, fs = rk_stages(tab, u, t, dt, rhs)
    gamma = relaxation_gamma(fs, tab, weights) if relaxation else 1.0
    if not gamma > 0:
        raise RelaxationError(f"relaxation factor gamma={gamma:.3g} is not positive")
    u_new = u + gamma * dt * _combine(tab, fs)
    e0 = float(np.dot(u * weights, u))
    e1 = float(np.dot(u_new * weights, u_new))
    return StepResult(u_new, t + gamma * dt, gamma, dt, e0, e1, ys, fs)


@dataclass
class IntegrationResult:
    u: np.ndarray
    t: float
    steps: int


def integrate(u0, rhs: Callable, weights, t_final: float, dt: float, tab: RKTableau,
              relaxation: bool = True, callback: Callable | None = None,
              blowup: float = 1e6, t0: float = 0.0, max_steps: int = 10**7) -> IntegrationResult:
    """Fixed-step integration to ``t_final``.

    Near the end the step is shortened and ``gamma`` recomputed until the
    relaxed time lands on ``t_final`` (up to roundoff). ``callback(result, step)`` runs
    after each accepted step. Raises :class:`SolverCrash` on NaN/Inf,
    ``|u| > blowup`` or a failed relaxation, carrying the last stable time.
    """
    u = np.array(u0, dtype=float)
    t = t0
    step = 0
    tol = 1e-13 * max(1.0, abs(t_final))
    while t_final - t > tol and step < max_steps:
        h = min(dt, t_final - t)
        try:
            res = rrk_step(tab, u, t, h, rhs, weights, relaxation)
            # a relaxed step may overshoot; shrink it so gamma * h lands on t_final
            for _ in range(8):
                if res.t - t_final <= tol:
                    break
                h = (t_final - t) / res.gamma
                res = rrk_step(tab, u, t, h, rhs, weights, relaxation)
        except (NonFiniteStateError, FloatingPointError, RelaxationError) as exc:
            raise SolverCrash(t, step, str(exc)) from exc
        if not np.all(np.isfinite(res.u)) or np.max(np.abs(res.u)) > blowup:
            raise SolverCrash(t, step, "state is non-finite or exceeds blow-up bound")
        u, t = res.u, res.t
        step += 1
        if callback is not None:
            callback(res, step)
    return IntegrationResult(u, t, step)
