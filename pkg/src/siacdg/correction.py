"""Entropy corrections for the square entropy ``U = u^2 / 2``.

Every correction ``c`` is added to the DGSEM tendency, ``du/dt = r + c``,
keeps ``1^T M c = 0`` and sets the energy rate ``w^T M (r + c)`` to a
target. The direction of ``c`` comes from a conservative filter through
``(I - K) w``: element averaging for the local correction, an arbitrary
(SIAC) filter for the global one.

Artificial dissipation enters only through the target rate, sized by an
entropy-viscosity estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dg import BURGERS, Equation, FluxKind, entropy_flux_residual
from .mesh import GlobalLayout
from .siac import FilterOperator

LOCAL_AVG = "local-average"

ENERGY_FLOOR = 1e-14
DH_ZERO = 1e-13


class CorrectionKind(str, Enum):
    NONE = "none"
    LOCAL = "local"
    GLOBAL = "global"
    BLEND = "blend"


@dataclass(frozen=True, eq=False)
class CorrectionMode:
    """Which correction to apply.

    ``first`` is the filter of a global or blended correction. ``second`` is
    the other blend candidate, either a filter or ``LOCAL_AVG`` for the
    element-local correction. ``clamp=False`` gives the unconstrained blend.
    """

    kind: CorrectionKind = CorrectionKind.NONE
    first: FilterOperator | None = None
    second: FilterOperator | str | None = None
    clamp: bool = True

    def __post_init__(self):
        kind = CorrectionKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in (CorrectionKind.GLOBAL, CorrectionKind.BLEND):
            _require_conservative(self.first)
        if kind is CorrectionKind.BLEND and self.second != LOCAL_AVG:
            _require_conservative(self.second)

    @classmethod
    def none(cls):
        return cls(CorrectionKind.NONE)

    @classmethod
    def local(cls):
        return cls(CorrectionKind.LOCAL)

    @classmethod
    def global_(cls, K: FilterOperator):
        return cls(CorrectionKind.GLOBAL, first=K)

    @classmethod
    def blend(cls, K1: FilterOperator, K2: FilterOperator | str = LOCAL_AVG, clamp=True):
        return cls(CorrectionKind.BLEND, first=K1, second=K2, clamp=clamp)


def _require_conservative(K):
    if not isinstance(K, FilterOperator):
        raise TypeError("global and blended corrections need a FilterOperator")
    if not K.is_conservative():
        raise ValueError("correction filters must be conservative; apply conservation_correction")


@dataclass(frozen=True)
class DissipationParams:
    c_E: float = 0.0
    c_max: float = 0.0
    enabled: bool = False

    def __post_init__(self):
        if self.c_E < 0 or self.c_max < 0:
            raise ValueError("dissipation parameters must be nonnegative")


@dataclass
class CorrectionReport:
    c: np.ndarray
    phi: float | np.ndarray = 0.0
    blend_weight: float | None = None
    relative_magnitude: float = 0.0
    phi_diss: float = 0.0
    nu: np.ndarray | None = field(default=None, repr=False)


def denominator_guard(u, layout: GlobalLayout) -> float:
    return 1e-14 * (1.0 + layout.inner(u, u))


def guarded_ratio(phi, den, eps):
    """``phi / den`` regularized as ``phi den / (den^2 + eps^2)``.

    Finite (zero) at ``den = 0``; relative bias ``(eps / den)^2`` elsewhere,
    so the energy identity is kept to roundoff away from degenerate states.
    """
    return phi * den / (den * den + eps * eps)


def subcell_entropy_metric(u, rhs, layout: GlobalLayout, kind=FluxKind.LLF,
                           equation: Equation = BURGERS, rF=None) -> np.ndarray:
    """Nodal ``D_h = w * du/dt + div F`` with ``w = u``.

    ``rF`` approximates ``div F`` itself, so it is added here.
    """
    if rF is None:
        rF = entropy_flux_residual(u, layout, kind, equation)
    return u * rhs + rF


def local_correction(u, r, layout: GlobalLayout, kind=FluxKind.LLF,
                     equation: Equation = BURGERS, eps=None, phi_diss=None,
                     rF=None) -> CorrectionReport:
    """Element-wise correction ``c_e = alpha_e (w - mean_e(w))``.

    ``phi_loc`` cancels the element's entropy production against its face
    entropy fluxes, ``phi_loc = -int_{dOmega_e} n.F_num - w^T M_e r_e``; the
    face integral equals ``1^T M_e rF_e`` for the weak-form entropy flux
    residual. ``phi_diss`` (per element) is subtracted when given.
    """
    if eps is None:
        eps = denominator_guard(u, layout)
    if rF is None:
        rF = entropy_flux_residual(u, layout, kind, equation)
    W = layout.elementwise(u)
    M = layout.elementwise(layout.weights)
    phi = -np.sum(M * rF.reshape(W.shape), axis=1) - np.sum(M * W * r.reshape(W.shape), axis=1)
    if phi_diss is not None:
        phi = phi - phi_diss
    dev = W - (np.sum(M * W, axis=1) / np.sum(M, axis=1))[:, None]
    den = np.sum(M * dev * dev, axis=1)
    alpha = guarded_ratio(phi, den, eps)
    c = (alpha[:, None] * dev).ravel()
    return CorrectionReport(c=c, phi=phi, relative_magnitude=_ratio(c, r, layout))


def global_correction(u, r, K: FilterOperator, layout: GlobalLayout, target_rate=0.0,
                      eps=None) -> CorrectionReport:
    """``c = alpha (I - K) w`` with ``alpha = phi / (w^T M (I - K) w)`` and
    ``phi = target_rate - w^T M r``.

    The guarded ratio keeps the sign of the denominator, which need not be
    positive for a non-symmetric filter.
    """
    if eps is None:
        eps = denominator_guard(u, layout)
    d = u - K @ u
    den = layout.inner(u, d)
    phi = target_rate - layout.inner(u, r)
    alpha = guarded_ratio(phi, den, eps)
    c = alpha * d
    return CorrectionReport(c=c, phi=phi, relative_magnitude=_ratio(c, r, layout))


def ls_blend(c1, c2, u, r, layout: GlobalLayout, kind=FluxKind.LLF,
             equation: Equation = BURGERS, rF=None, clamp=True):
    """Convex weight ``theta`` minimizing ``||D_h||_M`` for ``c2 + theta (c1 - c2)``.

    ``D_h = a + theta b`` is affine in ``theta``, so the constrained minimizer
    is the unconstrained one clipped to ``[0, 1]``. Returns ``(theta, c)``.
    """
    if rF is None:
        rF = entropy_flux_residual(u, layout, kind, equation)
    a = u * (r + c2) + rF
    b = u * (c1 - c2)
    bMb = layout.inner(b, b)
    if bMb <= 1e-30 * (1.0 + layout.inner(a, a)):
        theta = 0.5
    else:
        theta = -layout.inner(b, a) / bMb
        if clamp:
            theta = min(1.0, max(0.0, theta))
    return theta, c2 + theta * (c1 - c2)


def artificial_viscosity(u, rhs, layout: GlobalLayout, params: DissipationParams,
                         kind=FluxKind.LLF, equation: Equation = BURGERS, rF=None) -> np.ndarray:
    """Element-wise ``nu_AV = min(nu_E, nu_max)``.

    ``nu_E`` scales the local entropy residual by ``h_e^2`` and the global
    entropy spread ``||U - U_mean||_inf``; ``nu_max`` is a first-order
    viscosity ``c_max dx max|f'(u)|``. Elements with ``max|D_h| <= 1e-13``
    get ``nu_E = 0``.
    """
    Dh = subcell_entropy_metric(u, rhs, layout, kind, equation, rF=rF)
    U = equation.entropy(u)
    U_mean = 0.5 * layout.inner(u, u) / layout.measure
    spread = np.max(np.abs(U - U_mean)) + ENERGY_FLOOR
    h_e = layout.h_min
    Dmax = np.max(np.abs(layout.elementwise(Dh)), axis=1)
    # residuals at roundoff level count as zero, otherwise the floor amplifies them
    Dmax = np.where(Dmax <= DH_ZERO, 0.0, Dmax)
    nu_E = params.c_E * h_e**2 * Dmax / spread
    speed = np.max(np.abs(layout.elementwise(equation.speed(u))), axis=1)
    nu_max = params.c_max * layout.dx * speed
    return np.minimum(nu_E, nu_max)


def phi_dissipation(u, nu, layout: GlobalLayout):
    """Per-element ``int_e nu |grad u|^2`` under LGL quadrature and its sum.

    In 1D this is ``(2 / dx) (D u_e)^T M nu_e (D u_e)``.
    """
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0):
        raise ValueError("viscosity must be nonnegative")
    basis = layout.basis
    D, w = basis.D, basis.weights
    U = layout.structured(u)
    if layout.dim == 1:
        Du = U @ D.T
        per = (2.0 / layout.mesh.dx) * np.sum(w * Du * Du, axis=1) * nu
    else:
        mesh = layout.mesh
        Dx = np.einsum("ik,abkj->abij", D, U)
        Dy = np.einsum("jk,abik->abij", D, U)
        W2 = np.outer(w, w)
        gx = (mesh.dy / mesh.dx) * np.sum(W2 * Dx * Dx, axis=(2, 3))
        gy = (mesh.dx / mesh.dy) * np.sum(W2 * Dy * Dy, axis=(2, 3))
        per = (gx + gy).ravel() * nu
    return per, float(np.sum(per))


def _ratio(c, r, layout):
    rn = layout.norm(r)
    return layout.norm(c) / rn if rn > 0 else 0.0


def _undissipated(mode, u, r, layout, kind, equation, rF, eps):
    if mode.kind is CorrectionKind.LOCAL:
        return local_correction(u, r, layout, kind, equation, eps, rF=rF).c
    if mode.kind is CorrectionKind.GLOBAL:
        return global_correction(u, r, mode.first, layout, 0.0, eps).c
    return _blend(mode, u, r, layout, kind, equation, rF, eps, None, 0.0)[1]


def _blend(mode, u, r, layout, kind, equation, rF, eps, phi_diss_e, phi_diss):
    c1 = global_correction(u, r, mode.first, layout, -phi_diss, eps).c
    if mode.second == LOCAL_AVG:
        c2 = local_correction(u, r, layout, kind, equation, eps, phi_diss_e, rF=rF).c
    else:
        c2 = global_correction(u, r, mode.second, layout, -phi_diss, eps).c
    return ls_blend(c1, c2, u, r, layout, kind, equation, rF=rF, clamp=mode.clamp)


def compute_correction(mode: CorrectionMode, u, r, layout: GlobalLayout, kind=FluxKind.LLF,
                       equation: Equation = BURGERS,
                       dissipation: DissipationParams | None = None) -> CorrectionReport:
    """Correction for the current state and DGSEM tendency ``r``.

    With dissipation enabled the viscosity is estimated from the tendency of
    the energy-conserving correction, then the correction is recomputed with
    target rate ``-phi_diss`` (or ``phi_loc - phi_diss_e`` per element).
    """
    if mode.kind is CorrectionKind.NONE:
        return CorrectionReport(c=np.zeros_like(r))

    eps = denominator_guard(u, layout)
    needs_rF = mode.kind is not CorrectionKind.GLOBAL or (dissipation and dissipation.enabled)
    rF = entropy_flux_residual(u, layout, kind, equation) if needs_rF else None

    nu, phi_e, phi_diss = None, None, 0.0
    if dissipation is not None and dissipation.enabled:
        c0 = _undissipated(mode, u, r, layout, kind, equation, rF, eps)
        nu = artificial_viscosity(u, r + c0, layout, dissipation, kind, equation, rF=rF)
        phi_e, phi_diss = phi_dissipation(u, nu, layout)

    theta = None
    if mode.kind is CorrectionKind.LOCAL:
        rep = local_correction(u, r, layout, kind, equation, eps, phi_e, rF=rF)
        c, phi = rep.c, rep.phi
    elif mode.kind is CorrectionKind.GLOBAL:
        rep = global_correction(u, r, mode.first, layout, -phi_diss, eps)
        c, phi = rep.c, rep.phi
    else:
        theta, c = _blend(mode, u, r, layout, kind, equation, rF, eps, phi_e, phi_diss)
        phi = -phi_diss - layout.inner(u, r)
    return CorrectionReport(c=c, phi=phi, blend_weight=theta,
                            relative_magnitude=_ratio(c, r, layout),
                            phi_diss=phi_diss, nu=nu)
