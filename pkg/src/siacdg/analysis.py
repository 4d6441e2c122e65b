"""Exact solutions, error norms, convergence orders and diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import gl_rule, lagrange_matrix
from .mesh import GlobalLayout


def burgers_exact(u0, x, t: float, tol: float = 1e-13, maxiter: int = 50, du0=None):
    """Characteristic solution ``u = u0(x - u t)`` of inviscid Burgers.

    Newton from ``u0(x)``; points that stall are finished by bisection on
    an expanding bracket. ``du0`` is the derivative of ``u0`` (central
    differences otherwise). Raises ``RuntimeError`` when the residual cannot
    be driven below ``tol`` or a root lies on a folded characteristic branch
    (``1 + t u0'(x - u t) <= 0``); both signal evaluation past shock formation.
    """
    x = np.asarray(x, dtype=float)
    if t == 0.0:
        return np.asarray(u0(x), dtype=float) * np.ones_like(x)
    if du0 is None:
        def du0(s, h=1e-6):
            return (u0(s + h) - u0(s - h)) / (2 * h)

    def g(u):
        return u - u0(x - u * t)

    u = np.array(u0(x), dtype=float) * np.ones_like(x)
    done = np.zeros(x.shape, dtype=bool)
    for _ in range(maxiter):
        res = g(u)
        done = np.abs(res) < tol
        if np.all(done):
            return u
        dg = 1.0 + t * du0(x - u * t)
        step = np.where(np.abs(dg) > 1e-12, res / np.where(dg == 0, 1.0, dg), 0.0)
        u = np.where(done, u, u - step)
    res = g(u)
    bad = ~(np.abs(res) < tol)
    if np.any(bad):
        u[bad] = _bisect(u0, x[bad], t, u[bad], tol)
    if not np.all(np.abs(g(u)) < tol):
        raise RuntimeError("characteristic equation did not converge (past shock formation?)")
    if np.any(1.0 + t * du0(x - u * t) <= 0):
        raise RuntimeError("characteristics have crossed (past shock formation)")
    return u


def _bisect(u0, x, t, guess, tol, iters=200):
    def g(v):
        return v - u0(x - v * t)

    lo, hi = guess - 1.0, guess + 1.0
    for _ in range(60):
        unbracketed = g(lo) * g(hi) > 0
        if not np.any(unbracketed):
            break
        lo = np.where(unbracketed, lo - (hi - lo), lo)
        hi = np.where(unbracketed, hi + (hi - lo), hi)
    glo = g(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        left = np.sign(gm) == np.sign(glo)
        lo, glo = np.where(left, mid, lo), np.where(left, gm, glo)
        hi = np.where(left, hi, mid)
        if np.all(np.abs(gm) < tol):
            return mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ErrorReport:
    L2: float
    Linf: float
    n_eval: int = 17


def evaluation_points(layout: GlobalLayout, n_pts: int):
    """Physical GL points per element and the interpolation from nodal
    values. Returns ``(points, weights, interp)``; ``points`` is ``(N, q)``
    in 1D and ``(N, q*q, 2)`` in 2D."""
    rule = gl_rule(n_pts)
    L = lagrange_matrix(layout.basis.nodes, rule.nodes)
    mesh = layout.mesh
    if layout.dim == 1:
        x = mesh.centers[:, None] + 0.5 * mesh.dx * rule.nodes[None, :]
        return x, 0.5 * mesh.dx * rule.weights, L
    X, Y = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    xc, yc = mesh.xmesh.centers, mesh.ymesh.centers
    cx = np.repeat(xc, mesh.ny)
    cy = np.tile(yc, mesh.nx)
    pts = np.stack([cx[:, None] + 0.5 * mesh.dx * X.ravel()[None, :],
                    cy[:, None] + 0.5 * mesh.dy * Y.ravel()[None, :]], axis=-1)
    w = 0.25 * mesh.dx * mesh.dy * np.outer(rule.weights, rule.weights).ravel()
    return pts, w, np.kron(L, L)


def evaluate(u, layout: GlobalLayout, n_pts: int):
    """Interpolated values of ``u`` at the GL evaluation points."""
    pts, w, interp = evaluation_points(layout, n_pts)
    vals = layout.elementwise(u) @ interp.T
    return pts, w, vals


def error_norms(u, layout: GlobalLayout, exact, n_pts: int | None = None) -> ErrorReport:
    """L2 and max errors against ``exact`` at GL points (17 in 1D, 6x6 in 2D).

    ``exact`` takes ``x`` in 1D and ``(x, y)`` in 2D.
    """
    if n_pts is None:
        n_pts = 17 if layout.dim == 1 else 6
    pts, w, vals = evaluate(u, layout, n_pts)
    ref = exact(pts) if layout.dim == 1 else exact(pts[..., 0], pts[..., 1])
    err = vals - ref
    L2 = float(np.sqrt(np.sum(w[None, :] * err * err)))
    return ErrorReport(L2=L2, Linf=float(np.max(np.abs(err))),
                       n_eval=n_pts if layout.dim == 1 else n_pts * n_pts)


def convergence_order(errors, Ns) -> np.ndarray:
    """``log(e_k / e_{k+1}) / log(N_{k+1} / N_k)``."""
    e = np.asarray(errors, dtype=float)
    N = np.asarray(Ns, dtype=float)
    if e.shape != N.shape:
        raise ValueError("errors and Ns must have the same length")
    if np.any(np.diff(N) <= 0):
        raise ValueError("Ns must be strictly increasing")
    if np.any(e <= 0):
        raise ValueError("errors must be positive")
    return np.log(e[:-1] / e[1:]) / np.log(N[1:] / N[:-1])


@dataclass
class ConvergenceRow:
    mode: str
    p: int
    N: int
    L2: float
    Linf: float
    order_L2: float = float("nan")
    order_Linf: float = float("nan")


@dataclass
class ConvergenceTable:
    """Rows grouped by ``(mode, p)``; orders filled by :meth:`finalize`."""

    rows: list[ConvergenceRow] = field(default_factory=list)

    def add(self, mode: str, p: int, N: int, report: ErrorReport):
        self.rows.append(ConvergenceRow(mode, p, N, report.L2, report.Linf))

    def groups(self):
        keys = []
        for row in self.rows:
            if (row.mode, row.p) not in keys:
                keys.append((row.mode, row.p))
        return {k: sorted((r for r in self.rows if (r.mode, r.p) == k), key=lambda r: r.N)
                for k in keys}

    def finalize(self):
        for group in self.groups().values():
            if len(group) < 2:
                continue
            Ns = [r.N for r in group]
            o2 = convergence_order([r.L2 for r in group], Ns)
            oi = convergence_order([r.Linf for r in group], Ns)
            for r, a, b in zip(group[1:], o2, oi):
                r.order_L2, r.order_Linf = float(a), float(b)
        return self

    def orders(self, mode: str, p: int) -> np.ndarray:
        group = self.groups()[(mode, p)]
        return convergence_order([r.L2 for r in group], [r.N for r in group])


def mass_energy(u, layout: GlobalLayout):
    """``(1^T M u, u^T M u / 2)``."""
    return layout.integrate(u), 0.5 * layout.inner(u, u)
