"""Uniform periodic meshes and the global degree-of-freedom layout.

Global ordering is element-major, node-minor. In 2D the element index is
``ex * ny + ey`` and the local node index is ``i * (p + 1) + j`` with ``i``
running along x.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .basis import NodalBasis


@dataclass(frozen=True)
class Mesh1D:
    a: float
    b: float
    n_elements: int
    periodic: bool = True

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("domain must satisfy b > a")
        if self.n_elements < 1:
            raise ValueError("need at least one element")
        if not self.periodic:
            raise ValueError("only periodic meshes are supported")

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def dx(self) -> float:
        return self.length / self.n_elements

    @property
    def interfaces(self) -> np.ndarray:
        return self.a + self.dx * np.arange(self.n_elements + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.a + self.dx * (np.arange(self.n_elements) + 0.5)

    def to_reference(self, e: int, x):
        return 2.0 / self.dx * (np.asarray(x) - self.centers[e])


@dataclass(frozen=True)
class Mesh2D:
    a: float
    b: float
    nx: int
    ny: int

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("domain must satisfy b > a")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("need at least one element per direction")

    @property
    def xmesh(self) -> Mesh1D:
        return Mesh1D(self.a, self.b, self.nx)

    @property
    def ymesh(self) -> Mesh1D:
        return Mesh1D(self.a, self.b, self.ny)

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.nx

    @property
    def dy(self) -> float:
        return (self.b - self.a) / self.ny

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True, eq=False)
class GlobalLayout:
    """Global node coordinates, quadrature weights ``M_G`` and index maps."""

    mesh: Mesh1D | Mesh2D
    basis: NodalBasis

    @property
    def dim(self) -> int:
        return 1 if isinstance(self.mesh, Mesh1D) else 2

    @property
    def p(self) -> int:
        return self.basis.degree

    @property
    def n_elements(self) -> int:
        return self.mesh.n_elements

    @property
    def n_local(self) -> int:
        return self.basis.n ** self.dim

    @property
    def n_global(self) -> int:
        return self.n_elements * self.n_local

    @property
    def measure(self) -> float:
        return self.mesh.length ** self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape of the structured view of a global vector."""
        n = self.basis.n
        if self.dim == 1:
            return (self.mesh.n_elements, n)
        return (self.mesh.nx, self.mesh.ny, n, n)

    @property
    def dx(self) -> float:
        return self.mesh.dx

    @property
    def h_min(self) -> float:
        """Smallest physical node spacing ``(dx / 2) min |xi_i - xi_j|``."""
        width = self.mesh.dx if self.dim == 1 else min(self.mesh.dx, self.mesh.dy)
        return 0.5 * width * self.basis.min_spacing

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Node coordinates, ``(n_global,)`` in 1D and ``(n_global, 2)`` in 2D."""
        xi = self.basis.nodes
        if self.dim == 1:
            m = self.mesh
            x = m.centers[:, None] + 0.5 * m.dx * xi[None, :]
            # share interface abscissae exactly between neighbours
            x[:, 0] = m.interfaces[:-1]
            x[:, -1] = m.interfaces[1:]
            return x.ravel()
        xs = GlobalLayout(self.mesh.xmesh, self.basis).coordinates.reshape(self.mesh.nx, -1)
        ys = GlobalLayout(self.mesh.ymesh, self.basis).coordinates.reshape(self.mesh.ny, -1)
        X = np.broadcast_to(xs[:, None, :, None], self.shape)
        Y = np.broadcast_to(ys[None, :, None, :], self.shape)
        return np.stack([X.ravel(), Y.ravel()], axis=1)

    @cached_property
    def weights(self) -> np.ndarray:
        """Diagonal of ``M_G`` with the element Jacobian folded in."""
        w = self.basis.weights
        if self.dim == 1:
            return np.tile(0.5 * self.mesh.dx * w, self.mesh.n_elements)
        w2 = 0.25 * self.mesh.dx * self.mesh.dy * np.outer(w, w)
        return np.tile(w2.ravel(), self.mesh.n_elements)

    def index(self, e: int, k: int) -> int:
        return e * self.n_local + k

    def element_node(self, z: int) -> tuple[int, int]:
        return divmod(z, self.n_local)

    def elementwise(self, values: np.ndarray) -> np.ndarray:
        """View a global vector as ``(n_elements, n_local)``."""
        return np.asarray(values).reshape(self.n_elements, self.n_local)

    def structured(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values).reshape(self.shape)

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.dot(u * self.weights, v))

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(self.inner(u, u)))

    def integrate(self, u: np.ndarray) -> float:
        return float(self.weights @ u)

    def sample(self, func) -> np.ndarray:
        """Nodal interpolant of ``func`` (called with x, or with x and y)."""
        c = self.coordinates
        if self.dim == 1:
            return np.asarray(func(c), dtype=float) * np.ones(self.n_global)
        return np.asarray(func(c[:, 0], c[:, 1]), dtype=float) * np.ones(self.n_global)


def build_layout(mesh: Mesh1D | Mesh2D, basis: NodalBasis) -> GlobalLayout:
    return GlobalLayout(mesh, basis)
