"""Collocated DGSEM semi-discretizations on periodic meshes.

The residual ``r`` is returned with ``du/dt = r``. Element operators follow
the weak form with LGL quadrature,

    M_e du/dt = D^T M f - B f_num,

applied direction by direction on tensor-product elements in 2D. The scalar
equations here use the square entropy ``U = u^2 / 2`` with entropy variable
``w = u``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .mesh import GlobalLayout


class FluxKind(str, Enum):
    CENTRAL = "central"
    LLF = "llf"


@dataclass(frozen=True)
class Equation:
    """Scalar conservation law ``u_t + sum_d f(u)_{x_d} = 0`` with square entropy.

    ``flux`` and ``entropy_flux`` are the per-direction scalar functions; in
    2D the same function acts along x and y (velocity direction ``(1, 1)``).
    """

    name: str
    flux: Callable[[np.ndarray], np.ndarray]
    speed: Callable[[np.ndarray], np.ndarray]
    entropy_flux: Callable[[np.ndarray], np.ndarray]

    def entropy(self, u):
        return 0.5 * u * u

    def entropy_potential(self, u):
        # psi = w f - F with w = u
        return u * self.flux(u) - self.entropy_flux(u)


BURGERS = Equation(
    name="burgers",
    flux=lambda u: 0.5 * u * u,
    speed=lambda u: u,
    entropy_flux=lambda u: u * u * u / 3.0,
)

ADVECTION = Equation(
    name="advection",
    flux=lambda u: u,
    speed=lambda u: np.ones_like(u),
    entropy_flux=lambda u: 0.5 * u * u,
)


class NonFiniteStateError(FloatingPointError):
    """Raised when a residual is requested for a state containing NaN/Inf."""


@dataclass
class SolutionField:
    values: np.ndarray
    layout: GlobalLayout
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.layout.n_global,):
            raise ValueError(
                f"expected {self.layout.n_global} values, got {self.values.shape}"
            )

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def _check_finite(u):
    if not np.all(np.isfinite(u)):
        raise NonFiniteStateError("state contains NaN or Inf")


def numerical_flux(uL, uR, kind: FluxKind = FluxKind.LLF, equation: Equation = BURGERS):
    """Two-point interface flux; LLF uses ``alpha = max(|f'(uL)|, |f'(uR)|)``."""
    central = 0.5 * (equation.flux(uL) + equation.flux(uR))
    if FluxKind(kind) is FluxKind.CENTRAL:
        return central
    alpha = np.maximum(np.abs(equation.speed(uL)), np.abs(equation.speed(uR)))
    return central + 0.5 * alpha * (uL - uR)


def numerical_entropy_flux(uL, uR, kind: FluxKind = FluxKind.LLF, equation: Equation = BURGERS):
    """``F_num = {{w}} f_num - {{psi}}`` with arithmetic averages of the traces."""
    w_avg = 0.5 * (uL + uR)
    psi_avg = 0.5 * (equation.entropy_potential(uL) + equation.entropy_potential(uR))
    return w_avg * numerical_flux(uL, uR, kind, equation) - psi_avg


def _weak_divergence(f, fnum_left, fnum_right, D, w, jac_inv, axis):
    """``jac_inv * M^{-1} (D^T M f - B f_num)`` contracted along ``axis``.

    ``f`` holds nodal fluxes with the local node index on ``axis``;
    ``fnum_left/right`` are the face fluxes with that axis removed.
    """
    f = np.moveaxis(f, axis, -1)
    vol = np.einsum("ki,...k->...i", D, f * w)
    vol[..., 0] += fnum_left
    vol[..., -1] -= fnum_right
    return np.moveaxis(jac_inv * vol / w, -1, axis)


def _face_traces(u, elem_axis, node_axis):
    """Left/right traces at the face to the right of every element (periodic)."""
    left = np.take(u, -1, axis=node_axis)
    right = np.roll(np.take(u, 0, axis=node_axis), -1, axis=elem_axis)
    return left, right


def _conservation_residual(u, layout, flux, face_flux):
    """Weak-form tendency ``-div f`` for nodal flux ``flux(u)`` and face flux.

    Periodic faces are indexed by the element on their left.
    """
    basis = layout.basis
    D, w = basis.D, basis.weights
    U = layout.structured(u)
    fU = flux(U)
    if layout.dim == 1:
        uL, uR = _face_traces(U, 0, 1)
        fn = face_flux(uL, uR)
        r = _weak_divergence(fU, np.roll(fn, 1), fn, D, w, 2.0 / layout.mesh.dx, 1)
        return r.ravel()

    mesh = layout.mesh
    # x direction: element axis 0, node axis 2
    uL, uR = _face_traces(U, 0, 2)
    fn = face_flux(uL, uR)
    rx = _weak_divergence(fU, np.roll(fn, 1, axis=0), fn, D, w, 2.0 / mesh.dx, 2)
    # y direction: element axis 1, node axis 3
    uL, uR = _face_traces(U, 1, 3)
    fn = face_flux(uL, uR)
    ry = _weak_divergence(fU, np.roll(fn, 1, axis=1), fn, D, w, 2.0 / mesh.dy, 3)
    return (rx + ry).ravel()


def dg_residual(u, layout: GlobalLayout, kind: FluxKind = FluxKind.LLF,
                equation: Equation = BURGERS) -> np.ndarray:
    """Semi-discrete tendency ``r_G`` for the conservation law (1D or 2D)."""
    u = np.asarray(u, dtype=float)
    _check_finite(u)
    return _conservation_residual(
        u, layout, equation.flux, lambda a, b: numerical_flux(a, b, kind, equation)
    )


def dg_residual_1d(u, layout, kind=FluxKind.LLF, equation=BURGERS):
    if layout.dim != 1:
        raise ValueError("expected a 1D layout")
    return dg_residual(u, layout, kind, equation)


def dg_residual_2d(u, layout, kind=FluxKind.LLF, equation=BURGERS):
    if layout.dim != 2:
        raise ValueError("expected a 2D layout")
    return dg_residual(u, layout, kind, equation)


def entropy_flux_residual(u, layout: GlobalLayout, kind: FluxKind = FluxKind.LLF,
                          equation: Equation = BURGERS) -> np.ndarray:
    """DGSEM approximation of ``div F(u)`` using ``F_num`` at the faces.

    Sign is that of the divergence itself, i.e. minus the conservation-form
    residual built from ``F``.
    """
    u = np.asarray(u, dtype=float)
    _check_finite(u)
    return -_conservation_residual(
        u, layout, equation.entropy_flux,
        lambda a, b: numerical_entropy_flux(a, b, kind, equation),
    )


def max_wave_speed(u, equation: Equation = BURGERS) -> float:
    return float(np.max(np.abs(equation.speed(np.asarray(u)))))


@dataclass
class FVResult:
    x: np.ndarray
    u: np.ndarray
    t: float
    times: np.ndarray
    mass: np.ndarray
    energy: np.ndarray


def fv_reference(n_cells: int, u0, t_final: float, a: float = 0.0, b: float = 2.0,
                 cfl: float = 0.4, equation: Equation = BURGERS) -> FVResult:
    """First-order finite volumes with the LLF flux and forward Euler.

    ``u0`` is sampled at cell centers. The step is recomputed every step from
    the current maximum wave speed so the CFL bound always holds.
    """
    if n_cells < 10:
        raise ValueError("need at least 10 cells")
    dx = (b - a) / n_cells
    x = a + dx * (np.arange(n_cells) + 0.5)
    u = np.asarray(u0(x), dtype=float) * np.ones(n_cells)
    t = 0.0
    times, mass, energy = [t], [dx * u.sum()], [0.5 * dx * (u @ u)]
    while t < t_final:
        speed = max(max_wave_speed(u, equation), 1e-12)
        dt = min(cfl * dx / speed, t_final - t)
        fn = numerical_flux(u, np.roll(u, -1), FluxKind.LLF, equation)
        u = u - dt / dx * (fn - np.roll(fn, 1))
        t += dt
        times.append(t)
        mass.append(dx * u.sum())
        energy.append(0.5 * dx * (u @ u))
    return FVResult(x, u, t, np.array(times), np.array(mass), np.array(energy))
