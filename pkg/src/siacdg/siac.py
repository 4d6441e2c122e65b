"""SIAC convolution kernels and their discrete filter matrices.

A kernel ``K^{(r+1, l)}`` is a combination of ``r + 1`` shifted central
B-splines of order ``l`` whose coefficients enforce the moment conditions
``int K(x) x^k dx = delta_{0k}`` for ``k = 0..r``. Scaled by ``H`` it acts on
DG data by convolution; sampling the result at the nodes gives a sparse,
periodic-banded matrix ``K`` with ``u* = K u``.

Assembly exploits translation invariance of uniform periodic meshes: one
stencil template is integrated per local node and replicated to every
element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import mpmath
import numpy as np
import scipy.sparse as sp

from .basis import gl_rule, lagrange_matrix
from .mesh import GlobalLayout


def bspline(order: int, t):
    """Central B-spline ``B^l`` evaluated by the convolution recurrence

        B^l(t) = [(l/2 + t) B^{l-1}(t + 1/2) + (l/2 - t) B^{l-1}(t - 1/2)] / (l - 1)

    starting from the indicator of ``[-1/2, 1/2)``.
    """
    if order < 1:
        raise ValueError("spline order must be >= 1")
    t = np.asarray(t, dtype=float)
    if order == 1:
        return ((t >= -0.5) & (t < 0.5)).astype(float)
    k = order - 1
    half = 0.5 * order
    return ((half + t) * bspline(k, t + 0.5) + (half - t) * bspline(k, t - 0.5)) / k


def bspline_knots(order: int) -> np.ndarray:
    return np.arange(order + 1) - 0.5 * order


def _piecewise_gl(breaks, n_points):
    """GL nodes/weights on every interval between consecutive ``breaks``."""
    rule = gl_rule(n_points)
    a, b = breaks[:-1, None], breaks[1:, None]
    x = 0.5 * (b - a) * rule.nodes[None, :] + 0.5 * (a + b)
    w = 0.5 * (b - a) * rule.weights[None, :]
    return x.ravel(), w.ravel()


class SingularMomentSystem(np.linalg.LinAlgError):
    pass


def moment_matrix(r: int, order: int) -> np.ndarray:
    """``M[k, g] = int B^l(x + r/2 - g) x^k dx`` by exact piecewise GL."""
    n_points = math.ceil((order + r) / 2) + 1
    M = np.empty((r + 1, r + 1))
    for g in range(r + 1):
        breaks = bspline_knots(order) + g - 0.5 * r
        x, w = _piecewise_gl(breaks, n_points)
        B = bspline(order, x + 0.5 * r - g)
        for k in range(r + 1):
            M[k, g] = np.sum(w * B * x**k)
    return M


def kernel_coefficients(r: int, order: int) -> np.ndarray:
    """Solve the moment system for the ``r + 1`` spline coefficients."""
    if r < 0:
        raise ValueError("r must be >= 0")
    M = moment_matrix(r, order)
    rhs = np.zeros(r + 1)
    rhs[0] = 1.0
    if np.linalg.cond(M) > 1e14:
        raise SingularMomentSystem(f"moment system singular for r={r}, l={order}")
    return np.linalg.solve(M, rhs)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel parameters: ``moments = r + 1`` splines of order ``spline_order``
    scaled by ``scaling`` (an absolute length). ``line_angle`` is only used by
    the 2D line filter."""

    moments: int = 1
    spline_order: int = 1
    scaling: float = 1.0
    line_angle: float | None = None

    def __post_init__(self):
        if self.moments < 1 or self.spline_order < 1:
            raise ValueError("moments and spline_order must be >= 1")
        if not self.scaling > 0:
            raise ValueError("kernel scaling must be positive")

    @property
    def r(self) -> int:
        return self.moments - 1

    @cached_property
    def coefficients(self) -> np.ndarray:
        return kernel_coefficients(self.r, self.spline_order)

    @property
    def support_width(self) -> float:
        return (self.r + self.spline_order) * self.scaling

    @property
    def knots(self) -> np.ndarray:
        """Breakpoints of the scaled kernel, where it is piecewise polynomial."""
        n = self.r + self.spline_order
        return self.scaling * (np.arange(n + 1) - 0.5 * n)

    def __call__(self, x):
        """Scaled kernel ``K_H(x) = K(x / H) / H``."""
        s = np.asarray(x, dtype=float) / self.scaling
        out = np.zeros_like(s)
        for g, c in enumerate(self.coefficients):
            out += c * bspline(self.spline_order, s + 0.5 * self.r - g)
        return out / self.scaling


@dataclass(frozen=True, eq=False)
class FilterOperator:
    """Discrete filter ``K`` (sparse or dense) with an optional rank-one
    conservation fix, ``K_corr = K - 1 v^T``.

    The rank-one part is kept separate so the banded sparse storage survives
    the correction.
    """

    matrix: sp.csr_matrix | np.ndarray
    spec: KernelSpec | None = None
    rank_one: np.ndarray | None = None
    weights: np.ndarray | None = field(default=None, repr=False)

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, u):
        out = self.matrix @ u
        if self.rank_one is None:
            return out
        shift = self.rank_one @ u
        if np.ndim(u) == 2:
            return out - shift[None, :]
        return out - shift

    def apply(self, u):
        return self @ u

    def toarray(self) -> np.ndarray:
        K = self.matrix.toarray() if sp.issparse(self.matrix) else np.array(self.matrix)
        if self.rank_one is not None:
            K = K - np.outer(np.ones(K.shape[0]), self.rank_one)
        return K

    def is_conservative(self, weights=None, tol: float = 1e-12) -> bool:
        w = self.weights if weights is None else weights
        if w is None:
            return False
        defect = self.column_weights(w) - w
        return bool(np.max(np.abs(defect)) <= tol * max(1.0, np.max(np.abs(w))))

    def column_weights(self, weights) -> np.ndarray:
        """``1^T M K`` as a vector."""
        out = self.matrix.T @ weights
        if self.rank_one is not None:
            out = out - np.sum(weights) * self.rank_one
        return np.asarray(out).ravel()

    def triples(self):
        """``(i, j, value)`` nonzeros of the explicit matrix."""
        if self.rank_one is None and sp.issparse(self.matrix):
            coo = self.matrix.tocoo()
            order = np.lexsort((coo.col, coo.row))
            return coo.row[order], coo.col[order], coo.data[order]
        K = self.toarray()
        i, j = np.nonzero(K)
        return i, j, K[i, j]


def conservation_correction(K: FilterOperator | np.ndarray, layout_or_weights) -> FilterOperator:
    """Make ``K`` mass conserving: ``K_corr = K - (1 1^T / 1^T M 1) M (K - I)``.

    Consistency ``K 1 = 1`` carries over to ``K_corr``. Applying the
    correction to an already conservative operator is a no-op to roundoff.
    """
    if not isinstance(K, FilterOperator):
        K = FilterOperator(np.asarray(K, dtype=float))
    w = layout_or_weights.weights if isinstance(layout_or_weights, GlobalLayout) \
        else np.asarray(layout_or_weights, dtype=float)
    v = (K.column_weights(w) - w) / np.sum(w)
    if K.rank_one is not None:
        v = v + K.rank_one
    return FilterOperator(K.matrix, spec=K.spec, rank_one=v, weights=w)


def local_average_filter(layout: GlobalLayout) -> FilterOperator:
    """Block-diagonal element average ``K_loc = 1 1^T M_e / 1^T M_e 1``."""
    n = layout.n_local
    w = layout.elementwise(layout.weights)
    blocks = [np.outer(np.ones(n), we / we.sum()) for we in w]
    return FilterOperator(sp.block_diag(blocks, format="csr"), weights=layout.weights)


def _n_gl_points(order: int, poly_degree: int) -> int:
    return math.ceil((order + poly_degree) / 2) + 1


def _assemble_from_template(layout, template):
    """Replicate per-local-node stencils ``template[k] = (offsets, cols, vals)``
    over all elements with periodic wrap. ``offsets`` are element offsets in
    structured coordinates, ``cols`` local node indices.
    """
    n_loc = layout.n_local
    rows, cols, vals = [], [], []
    if layout.dim == 1:
        N = layout.n_elements
        e = np.arange(N)
        for k, (off, loc, val) in enumerate(template):
            tgt = (e[:, None] + off[None, :]) % N
            rows.append(np.repeat(e * n_loc + k, off.size))
            cols.append((tgt * n_loc + loc[None, :]).ravel())
            vals.append(np.tile(val, N))
    else:
        nx, ny = layout.mesh.nx, layout.mesh.ny
        ex, ey = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        ex, ey = ex.ravel(), ey.ravel()
        e = ex * ny + ey
        for k, (off, loc, val) in enumerate(template):
            tx = (ex[:, None] + off[None, :, 0]) % nx
            ty = (ey[:, None] + off[None, :, 1]) % ny
            rows.append(np.repeat(e * n_loc + k, off.shape[0]))
            cols.append(((tx * ny + ty) * n_loc + loc[None, :]).ravel())
            vals.append(np.tile(val, e.size))
    rows, cols, vals = map(np.concatenate, (rows, cols, vals))
    n = layout.n_global
    K = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    K.eliminate_zeros()
    return K


def _merge_breaks(lo, hi, *sets):
    pts = np.concatenate([lo, hi, *[s[(s > lo[0]) & (s < hi[0])] for s in sets]])
    pts = np.unique(pts)
    keep = np.concatenate([[True], np.diff(pts) > 1e-14 * max(1.0, abs(pts[-1]))])
    return pts[keep]


def assemble_filter_1d(spec: KernelSpec, layout: GlobalLayout) -> FilterOperator:
    """Row for node ``x`` holds ``int K_H(x - y) l_j(y) dy`` for each basis
    function ``l_j`` of every element under the wrapped kernel support."""
    if layout.dim != 1:
        raise ValueError("expected a 1D layout")
    mesh = layout.mesh
    if spec.support_width > mesh.length * (1 + 1e-12):
        raise ValueError("kernel support is wider than the periodic domain")
    nodes = layout.basis.nodes
    dx = mesh.dx
    n_pts = _n_gl_points(spec.spline_order, layout.p)
    half = 0.5 * spec.support_width
    template = []
    for k, xi in enumerate(nodes):
        # reference element 0 sits on [0, dx]
        x = 0.5 * dx * (xi + 1.0)
        faces = dx * np.arange(math.floor((x - half) / dx), math.ceil((x + half) / dx) + 1)
        breaks = _merge_breaks(np.array([x - half]), np.array([x + half]), x - spec.knots, faces)
        y, w = _piecewise_gl(breaks, n_pts)
        elem = np.floor(y / dx).astype(int)
        ref = 2.0 * (y - (elem + 0.5) * dx) / dx
        vals = (w * spec(x - y))[:, None] * lagrange_matrix(nodes, ref)
        offs, inv = np.unique(elem, return_inverse=True)
        acc = np.zeros((offs.size, nodes.size))
        np.add.at(acc, inv, vals)
        template.append((np.repeat(offs, nodes.size), np.tile(np.arange(nodes.size), offs.size),
                         acc.ravel()))
    K = _assemble_from_template(layout, template)
    return FilterOperator(K, spec=spec, weights=layout.weights)


def assemble_lsiac_2d(spec: KernelSpec, layout: GlobalLayout) -> FilterOperator:
    """Line filter along ``Gamma(t) = x + t (cos theta, sin theta)``.

    Each row integrates the kernel against the tensor-product basis along the
    line, split at kernel knots and at every element-boundary crossing.
    """
    if layout.dim != 2:
        raise ValueError("expected a 2D layout")
    if spec.line_angle is None:
        raise ValueError("line filter requires line_angle")
    mesh = layout.mesh
    dx, dy = mesh.dx, mesh.dy
    half = 0.5 * spec.support_width
    c, s = math.cos(spec.line_angle), math.sin(spec.line_angle)
    if half * abs(c) * 2 > mesh.length * (1 + 1e-12) or half * abs(s) * 2 > mesh.length * (1 + 1e-12):
        raise ValueError("kernel support is wider than the periodic domain")
    if abs(c) < 1e-15:
        c = 0.0
    if abs(s) < 1e-15:
        s = 0.0
    nodes = layout.basis.nodes
    n = nodes.size
    # along the line the integrand has degree (l - 1) + 2p
    n_pts = _n_gl_points(spec.spline_order, 2 * layout.p)
    template = []
    for i, xi in enumerate(nodes):
        for j, eta in enumerate(nodes):
            x0 = 0.5 * dx * (xi + 1.0)
            y0 = 0.5 * dy * (eta + 1.0)
            crossings = []
            for pos, step, comp in ((x0, dx, c), (y0, dy, s)):
                if comp == 0.0:
                    continue
                lo, hi = sorted((pos - half * comp, pos + half * comp))
                lines = step * np.arange(math.floor(lo / step), math.ceil(hi / step) + 1)
                crossings.append((lines - pos) / comp)
            breaks = _merge_breaks(np.array([-half]), np.array([half]), spec.knots, *crossings)
            t, w = _piecewise_gl(breaks, n_pts)
            px, py = x0 + t * c, y0 + t * s
            ex = np.floor(px / dx).astype(int)
            ey = np.floor(py / dy).astype(int)
            Lx = lagrange_matrix(nodes, 2.0 * (px - (ex + 0.5) * dx) / dx)
            Ly = lagrange_matrix(nodes, 2.0 * (py - (ey + 0.5) * dy) / dy)
            vals = (w * spec(t))[:, None, None] * Lx[:, :, None] * Ly[:, None, :]
            key = np.stack([ex, ey], axis=1)
            offs, inv = np.unique(key, axis=0, return_inverse=True)
            acc = np.zeros((offs.shape[0], n * n))
            np.add.at(acc, inv.ravel(), vals.reshape(len(t), n * n))
            template.append((np.repeat(offs, n * n, axis=0), np.tile(np.arange(n * n), offs.shape[0]),
                             acc.ravel()))
    K = _assemble_from_template(layout, template)
    return FilterOperator(K, spec=spec, weights=layout.weights)


def assemble_filter(spec: KernelSpec, layout: GlobalLayout) -> FilterOperator:
    if layout.dim == 1:
        return assemble_filter_1d(spec, layout)
    return assemble_lsiac_2d(spec, layout)


def kernel_fourier(spec: KernelSpec, k):
    """Fourier response of the scaled kernel,

        K^(k) = sinc(kH/2)^l * sum_g c_g cos((g - r/2) k H).

    For even ``r`` this is ``c_mid + 2 sum c cos(j k H)`` over the centered
    spline shifts. Accepts ``mpmath`` numbers for extended precision.
    """
    c, H, r, order = spec.coefficients, spec.scaling, spec.r, spec.spline_order
    if isinstance(k, (mpmath.mpf, mpmath.mpc)):
        z = k * H / 2
        sinc = mpmath.mpf(1) if z == 0 else mpmath.sin(z) / z
        total = mpmath.fsum(mpmath.mpf(float(cg)) * mpmath.cos((g - mpmath.mpf(r) / 2) * k * H)
                            for g, cg in enumerate(c))
        return sinc**order * total
    k = np.asarray(k, dtype=float)
    z = 0.5 * k * H
    sinc = np.sinc(z / np.pi)
    shifts = np.arange(r + 1) - 0.5 * r
    total = np.tensordot(np.cos(np.multiply.outer(k * H, shifts)), c, axes=([-1], [0]))
    return sinc**order * total
