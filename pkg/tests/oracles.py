"""Independent reference computations shared by the unit and acceptance tests."""

import mpmath
import numpy as np

from siacdg.basis import NodalBasis
from siacdg.mesh import Mesh1D, build_layout

# printed p=1 stencils; rows are the two local nodes, columns span
# neighbouring elements from the left
STENCIL_K11 = np.array([[1, 3, 3, 1, 0, 0],
                        [0, 0, 1, 3, 3, 1]]) / 8
STENCIL_K32 = np.array([[-1, -2, 12, 27, 27, 12, -2, -1, 0, 0],
                        [0, 0, -1, -2, 12, 27, 27, 12, -2, -1]]) / 72


def element_stencil(K_dense, layout, e, reach):
    """Rows of element ``e`` restricted to elements ``e-reach .. e+reach`` (periodic)."""
    n, N = layout.n_local, layout.n_elements
    cols = np.concatenate([((e + s) % N) * n + np.arange(n) for s in range(-reach, reach + 1)])
    rows = e * n + np.arange(n)
    return K_dense[np.ix_(rows, cols)]


def p1_layout(n_elements=12):
    return build_layout(Mesh1D(0, 2, n_elements), NodalBasis(1))


def fornberg_weights(m, offsets):
    """FD weights for the ``m``-th derivative at 0 on the given integer offsets (exact rationals)."""
    x = [mpmath.mpf(o) for o in offsets]
    n = len(x)
    c = [[mpmath.mpf(0)] * (m + 1) for _ in range(n)]
    c[0][0] = mpmath.mpf(1)
    c1 = mpmath.mpf(1)
    c4 = x[0]
    for i in range(1, n):
        mn = min(i, m)
        c2 = mpmath.mpf(1)
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2
            for k in range(mn, 0, -1):
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3
            c[j][0] = c4 * c[j][0] / c3
        c1 = c2
    return [c[i][m] for i in range(n)]


def central_derivative(f, m, h, accuracy=4):
    """Central finite difference of order ``accuracy`` for the ``m``-th derivative at 0."""
    s = (m + 1) // 2 + accuracy // 2 - 1 + (1 if m % 2 == 0 else 0)
    s = max(s, 1)
    offsets = list(range(-s, s + 1))
    w = fornberg_weights(m, offsets)
    h = mpmath.mpf(h)
    return mpmath.fsum(wi * f(o * h) for wi, o in zip(w, offsets)) / h**m
