"""Reference-element machinery on [-1, 1].

Quadrature rules (Legendre-Gauss-Lobatto and Gauss-Legendre), barycentric
Lagrange interpolation and the nodal differentiation matrix used by the
DGSEM operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial import legendre


class RuleKind(str, Enum):
    LGL = "LGL"
    GL = "GL"


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: RuleKind

    @property
    def n(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)


def lgl_rule(p: int, tol: float = 1e-15, maxiter: int = 100) -> QuadratureRule:
    """Return the ``p + 1`` point Legendre-Gauss-Lobatto rule.

    The interior nodes are the roots of ``P_p'``; they are found jointly with
    the endpoints by Newton iteration on ``x P_p(x) - P_{p-1}(x) = 0``
    started from the Chebyshev-Gauss-Lobatto points.
    """
    if not 1 <= p <= 20:
        raise ValueError(f"LGL degree must lie in [1, 20], got {p}")

    n = p + 1
    x = -np.cos(np.pi * np.arange(n) / p)
    P = np.zeros((n, n))
    for _ in range(maxiter):
        x_old = x.copy()
        P[:, 0] = 1.0
        P[:, 1] = x
        for k in range(2, n):
            P[:, k] = ((2 * k - 1) * x * P[:, k - 1] - (k - 1) * P[:, k - 2]) / k
        x = x_old - (x * P[:, p] - P[:, p - 1]) / (n * P[:, p])
        if np.max(np.abs(x - x_old)) <= tol:
            break
    else:
        raise RuntimeError(f"LGL Newton iteration did not converge for p={p}")

    x[0], x[-1] = -1.0, 1.0
    # enforce exact symmetry of the converged nodes
    x = 0.5 * (x - x[::-1])
    P[:, 0] = 1.0
    P[:, 1] = x
    for k in range(2, n):
        P[:, k] = ((2 * k - 1) * x * P[:, k - 1] - (k - 1) * P[:, k - 2]) / k
    w = 2.0 / (p * n * P[:, p] ** 2)
    return QuadratureRule(nodes=x, weights=w, kind=RuleKind.LGL)


def gl_rule(n: int) -> QuadratureRule:
    """Return the ``n`` point Gauss-Legendre rule, exact to degree ``2n - 1``."""
    if not 1 <= n <= 40:
        raise ValueError(f"GL point count must lie in [1, 40], got {n}")
    x, w = legendre.leggauss(n)
    return QuadratureRule(nodes=x, weights=w, kind=RuleKind.GL)


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.any(diff == 0.0):
        raise ValueError("interpolation nodes must be distinct")
    return 1.0 / np.prod(diff, axis=1)


def lagrange_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate every Lagrange polynomial of ``nodes`` at the points ``x``.

    Returns an array of shape ``(len(x), len(nodes))`` with entry ``(q, j)``
    equal to ``l_j(x_q)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lam = barycentric_weights(nodes)
    diff = x[:, None] - nodes[None, :]
    # points within roundoff of a node take that node's cardinal row
    hit = np.abs(diff) <= 2 * np.finfo(float).eps * np.maximum(1.0, np.abs(x))[:, None]
    diff[hit] = 1.0
    tmp = lam[None, :] / diff
    L = tmp / tmp.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    L[rows] = hit[rows].astype(float)
    return L


def diff_matrix(rule: QuadratureRule | np.ndarray) -> np.ndarray:
    """Nodal differentiation matrix ``D[i, j] = l_j'(x_i)``."""
    nodes = rule.nodes if isinstance(rule, QuadratureRule) else np.asarray(rule)
    lam = barycentric_weights(nodes)
    n = nodes.size
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (lam[j] / lam[i]) / (nodes[i] - nodes[j])
        # negative sum trick keeps D @ 1 = 0 to roundoff
        D[i, i] = -np.sum(D[i])
    return D


@dataclass(frozen=True)
class NodalBasis:
    """Lagrange basis on the ``p + 1`` LGL nodes together with its operators."""

    degree: int
    rule: QuadratureRule = field(init=False)
    D: np.ndarray = field(init=False, repr=False)
    B: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")
        rule = lgl_rule(self.degree)
        object.__setattr__(self, "rule", rule)
        object.__setattr__(self, "D", diff_matrix(rule))
        B = np.zeros((rule.n, rule.n))
        B[0, 0], B[-1, -1] = -1.0, 1.0
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.degree + 1

    @property
    def nodes(self) -> np.ndarray:
        return self.rule.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.rule.weights

    @property
    def M(self) -> np.ndarray:
        return np.diag(self.rule.weights)

    @property
    def min_spacing(self) -> float:
        return float(np.min(np.diff(self.rule.nodes)))

    def interpolation_matrix(self, x: np.ndarray) -> np.ndarray:
        return lagrange_matrix(self.rule.nodes, x)
