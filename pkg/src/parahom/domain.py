"""Meshes, discrete operators, resolvents, extensions and norms on the box domain.

Domains are intervals (0, L) or axis-aligned rectangles meshed by a uniform
grid (P1 segments, or squares split into two triangles along the
(i,j)-(i+1,j+1) diagonal). Coefficients are sampled at element midpoints
(the committed one-point quadrature). Oscillating coefficients require the
mesh to resolve the oscillation: at least 16 aligned elements per period,
otherwise assembly refuses rather than return silently wrong results.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import (ExtensionMarginError, KernelSpaceError, MeshError,
                     NearSingularError, ResolutionError, SolverError)
from .lattice import DifferentialSymbol, PeriodicCoefficient, sample_scaled

_RESOLVE_TOL = 1e-10
_MIN_CELLS_PER_EPS = 16


@dataclass(frozen=True)
class DomainSpec:
    """Interval (0, L) or rectangle (0, L1) x (0, L2), with optional interior margin."""

    lengths: tuple
    delta: float | None = None

    def __post_init__(self):
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        object.__setattr__(self, "lengths", lengths)
        if self.d not in (1, 2) or any(v <= 0 for v in lengths):
            raise MeshError(f"unsupported domain lengths {lengths}")
        if self.delta is not None:
            if not 0 < self.delta < self.diameter / 2:
                raise MeshError("interior margin must lie in (0, diameter/2)")

    @property
    def d(self):
        return len(self.lengths)

    @property
    def diameter(self):
        return float(np.linalg.norm(self.lengths))


@dataclass(frozen=True)
class OscillatingCoefficient:
    g: PeriodicCoefficient
    eps: float

    @property
    def m(self):
        return self.g.m

    @property
    def norm_inv_sup(self):
        return self.g.norm_inv_sup

    @property
    def tag(self):
        return f"oscillating(eps={self.eps:g})"


@dataclass(frozen=True)
class EffectiveCoefficient:
    g0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "g0", np.atleast_2d(np.asarray(self.g0, dtype=float)))

    @property
    def m(self):
        return self.g0.shape[0]

    @property
    def norm_inv_sup(self):
        return float(np.linalg.norm(np.linalg.inv(self.g0), 2))

    @property
    def tag(self):
        return "effective"


class Mesh:
    """Uniform P1 mesh with lexicographic node ordering (last axis fastest)."""

    def __init__(self, domain, h):
        self.domain = domain
        self.h = float(h)
        self.d = domain.d
        dims = []
        for length in domain.lengths:
            ratio = length / h
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                raise MeshError(f"h={h} does not divide edge of length {length}")
            dims.append(int(round(ratio)))
        self.dims = tuple(dims)

        if self.d == 1:
            n1 = dims[0]
            self.n_nodes = n1 + 1
            self.nodes = (np.arange(n1 + 1) * self.h)[:, None]
            self.elements = np.stack([np.arange(n1), np.arange(n1) + 1], axis=1)
            self.volumes = np.full(n1, self.h)
            self.centroids = 0.5 * (self.nodes[self.elements[:, 0]]
                                    + self.nodes[self.elements[:, 1]])
            self.grads = np.broadcast_to(
                np.array([[-1.0 / self.h], [1.0 / self.h]]), (n1, 2, 1)).copy()
            self.boundary_nodes = np.array([0, n1])
            self.n_local = 2
        else:
            n1, n2 = dims
            self.n_nodes = (n1 + 1) * (n2 + 1)
            xi = np.arange(n1 + 1) * self.h
            yj = np.arange(n2 + 1) * self.h
            gx, gy = np.meshgrid(xi, yj, indexing="ij")
            self.nodes = np.stack([gx.ravel(), gy.ravel()], axis=-1)

            def nid(i, j):
                return i * (n2 + 1) + j

            # squares ordered j-major to match the point-location kernels
            jj, ii = np.meshgrid(np.arange(n2), np.arange(n1), indexing="ij")
            i = ii.ravel(order="C")
            j = jj.ravel(order="C")
            t0 = np.stack([nid(i, j), nid(i + 1, j), nid(i + 1, j + 1)], axis=1)
            t1 = np.stack([nid(i, j), nid(i + 1, j + 1), nid(i, j + 1)], axis=1)
            elements = np.empty((2 * n1 * n2, 3), dtype=np.int64)
            elements[0::2] = t0
            elements[1::2] = t1
            self.elements = elements
            verts = self.nodes[self.elements]
            self.centroids = verts.mean(axis=1)
            self.grads, self.volumes = _triangle_geometry(verts)
            onb = ((self.nodes[:, 0] < 1e-12) | (self.nodes[:, 1] < 1e-12)
                   | (self.nodes[:, 0] > domain.lengths[0] - 1e-12)
                   | (self.nodes[:, 1] > domain.lengths[1] - 1e-12))
            self.boundary_nodes = np.nonzero(onb)[0]
            self.n_local = 3

        self.n_elements = self.elements.shape[0]
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = True
        self.boundary_mask = mask
        self.interior_nodes = np.nonzero(~mask)[0]
        self._matrix_cache = {}

    def boundary_distance(self, points):
        pts = np.atleast_2d(points)
        dist = np.full(pts.shape[0], np.inf)
        for a, length in enumerate(self.domain.lengths):
            dist = np.minimum(dist, pts[:, a])
            dist = np.minimum(dist, length - pts[:, a])
        return dist

    def interior_element_mask(self, delta):
        verts = self.nodes[self.elements]
        dist = self.boundary_distance(verts.reshape(-1, self.d)).reshape(verts.shape[:2])
        return np.all(dist > delta + 1e-12, axis=1)

    def interior_node_mask(self, delta):
        return self.boundary_distance(self.nodes) > delta + 1e-12

    def _forms(self, n_comp, element_mask=None):
        key = ("forms", n_comp,
               None if element_mask is None else element_mask.tobytes())
        if key in self._matrix_cache:
            return self._matrix_cache[key]
        vol = self.volumes if element_mask is None else self.volumes * element_mask
        mloc = (np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0 if self.d == 1 else
                np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0)
        eye = np.eye(n_comp)
        mb = (vol[:, None, None] * mloc[None])[:, :, :, None, None] * eye
        mass = _scatter(mb, self.elements, n_comp, self.n_nodes * n_comp)
        gb = np.einsum("e,evd,ewd->evw", vol, self.grads, self.grads)
        kb = gb[:, :, :, None, None] * eye
        grad = _scatter(kb, self.elements, n_comp, self.n_nodes * n_comp)
        self._matrix_cache[key] = (mass, grad)
        return mass, grad

    def mass_matrix(self, n_comp=1):
        return self._forms(n_comp)[0]

    def grad_stiffness(self, n_comp=1):
        return self._forms(n_comp)[1]

    def node_weights(self):
        # lumped quadrature weights (row sums of the scalar mass matrix)
        key = ("weights",)
        if key not in self._matrix_cache:
            m = self.mass_matrix(1)
            self._matrix_cache[key] = np.asarray(m.sum(axis=1)).ravel()
        return self._matrix_cache[key]


def _triangle_geometry(verts):
    p0, p1, p2 = verts[:, 0], verts[:, 1], verts[:, 2]
    det = ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
           - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
    area = 0.5 * np.abs(det)
    grads = np.empty((verts.shape[0], 3, 2))
    grads[:, 0, 0] = (p1[:, 1] - p2[:, 1]) / det
    grads[:, 0, 1] = (p2[:, 0] - p1[:, 0]) / det
    grads[:, 1, 0] = (p2[:, 1] - p0[:, 1]) / det
    grads[:, 1, 1] = (p0[:, 0] - p2[:, 0]) / det
    grads[:, 2, 0] = (p0[:, 1] - p1[:, 1]) / det
    grads[:, 2, 1] = (p1[:, 0] - p0[:, 0]) / det
    return grads, area


def _scatter(blocks, elements, n_comp, n_dofs):
    e_count, nv = elements.shape
    dof = elements[:, :, None] * n_comp + np.arange(n_comp)[None, None, :]
    rows = np.broadcast_to(dof[:, :, None, :, None],
                           (e_count, nv, nv, n_comp, n_comp)).ravel()
    cols = np.broadcast_to(dof[:, None, :, None, :],
                           (e_count, nv, nv, n_comp, n_comp)).ravel()
    return sp.coo_matrix((blocks.ravel(), (rows, cols)),
                         shape=(n_dofs, n_dofs)).tocsr()


def build_mesh(domain, h):
    return Mesh(domain, h)


@dataclass
class Field:
    """Nodal (P, n) or elementwise (E, m) values over a mesh."""

    mesh: Mesh
    values: np.ndarray
    where: str = "node"
    bc: str | None = None

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        if vals.ndim == 1:
            vals = vals[:, None]
        expect = self.mesh.n_nodes if self.where == "node" else self.mesh.n_elements
        if vals.shape[0] != expect:
            raise ValueError(f"field has {vals.shape[0]} rows, mesh expects {expect}")
        self.values = vals

    @property
    def n_comp(self):
        return self.values.shape[1]

    def copy(self):
        return Field(self.mesh, self.values.copy(), self.where, self.bc)

    def __add__(self, other):
        self._check(other)
        return Field(self.mesh, self.values + other.values, self.where, self.bc)

    def __sub__(self, other):
        self._check(other)
        return Field(self.mesh, self.values - other.values, self.where, self.bc)

    def __mul__(self, scalar):
        return Field(self.mesh, self.values * float(scalar), self.where, self.bc)

    __rmul__ = __mul__

    def _check(self, other):
        if other.mesh is not self.mesh or other.where != self.where:
            raise ValueError("fields live on different meshes or supports")


def field_from_callable(mesh, fn, bc=None):
    vals = np.asarray(fn(mesh.nodes))
    f = Field(mesh, vals, "node", bc)
    if bc == "dirichlet":
        f.values[mesh.boundary_nodes] = 0.0
    return f


class DiscreteOperator:
    """Assembled stiffness/mass pair with boundary handling and spectral data."""

    def __init__(self, mesh, symbol, coefficient, bc, K, M, lower_bound=None,
                 kernel=None, eigen_cutoff=4000):
        self.mesh = mesh
        self.symbol = symbol
        self.coefficient = coefficient
        self.bc = bc
        self.K = K
        self.M = M
        self.n_comp = symbol.n
        self._lower_bound = lower_bound
        self.kernel = kernel
        self.eigen_cutoff = eigen_cutoff
        if bc == "dirichlet":
            free_nodes = mesh.interior_nodes
        else:
            free_nodes = np.arange(mesh.n_nodes)
        self.free = (free_nodes[:, None] * self.n_comp
                     + np.arange(self.n_comp)[None, :]).ravel()
        self._eig = None

    @property
    def ndof(self):
        return self.free.size

    @cached_property
    def K_free(self):
        return self.K[self.free][:, self.free].tocsr()

    @cached_property
    def M_free(self):
        return self.M[self.free][:, self.free].tocsr()

    def eigendecomposition(self):
        """Generalized eigenpairs (w, V) on free dofs with V^T M V = I."""
        if self._eig is None:
            if self.ndof > self.eigen_cutoff:
                raise SolverError(
                    f"dense eigendecomposition refused for {self.ndof} dofs")
            w, v = scipy.linalg.eigh(self.K_free.toarray(), self.M_free.toarray())
            self._eig = (w, v)
        return self._eig

    @property
    def lower_bound(self):
        """Dirichlet: ellipticity constant over diameter squared; Neumann:
        first nonzero discrete eigenvalue."""
        if self._lower_bound is None:
            w, _ = self.eigendecomposition()
            q = 0 if self.kernel is None else self.kernel.shape[1]
            self._lower_bound = float(w[q])
        return self._lower_bound

    def full_values(self, free_values):
        out = np.zeros(self.mesh.n_nodes * self.n_comp, dtype=free_values.dtype)
        out[self.free] = free_values
        return out.reshape(self.mesh.n_nodes, self.n_comp)

    def restrict(self, f: Field):
        return f.values.ravel()[self.free]


def element_coefficient(coef, mesh):
    if isinstance(coef, OscillatingCoefficient):
        ratio = coef.eps / mesh.h
        if ratio < _MIN_CELLS_PER_EPS - 1e-9:
            raise ResolutionError(
                f"mesh spacing h={mesh.h:g} too coarse for eps={coef.eps:g}: "
                f"need at least {_MIN_CELLS_PER_EPS} cells per period, got {ratio:.2f}")
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ResolutionError(
                f"mesh not aligned to the oscillation: eps/h={ratio:.6f} not integral")
        return sample_scaled(coef.g, coef.eps, mesh.centroids).real
    g0 = coef.g0
    return np.broadcast_to(g0, (mesh.n_elements,) + g0.shape)


def assemble_operator(coef, b, bc, mesh, eigen_cutoff=4000):
    """Assemble the stiffness/mass pair for the coefficient and boundary kind."""
    if bc not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown boundary kind {bc!r}")
    n = b.n
    g_elem = element_coefficient(coef, mesh)
    bmat = np.einsum("evd,dmn->evmn", mesh.grads, b.matrices)
    kb = np.einsum("e,evmi,emk,ewkj->evwij", mesh.volumes, bmat, g_elem, bmat,
                   optimize=True)
    K = _scatter(kb, mesh.elements, n, mesh.n_nodes * n)
    M = mesh.mass_matrix(n)

    lower = None
    kernel = None
    if bc == "dirichlet":
        c0 = b.alpha0 / coef.norm_inv_sup
        lower = c0 / mesh.domain.diameter ** 2
    else:
        if n != 1:
            raise KernelSpaceError(
                "Neumann kernels beyond componentwise constants are not supported")
        kernel = np.ones((mesh.n_nodes * n, 1))
        resid = np.abs(K @ kernel[:, 0]).max()
        scale = max(np.abs(K.data).max(), 1.0)
        if resid > 1e-10 * scale:
            raise KernelSpaceError(
                f"constants are not in the discrete kernel (residual {resid:.2e})")

    return DiscreteOperator(mesh, b, coef, bc, K, M, lower_bound=lower,
                            kernel=kernel, eigen_cutoff=eigen_cutoff)


def resolvent_apply(A, zeta, f: Field):
    """Solve (K - zeta M) u = M f on the free dofs; residual <= 1e-10 |M f|."""
    rhs_full = A.M @ f.values.ravel()
    rhs = rhs_full[A.free]
    mat = (A.K_free - zeta * A.M_free).tocsc()
    if np.iscomplexobj(np.asarray(zeta)) or isinstance(zeta, complex):
        mat = mat.astype(np.complex128)
    try:
        lu = spla.splu(mat)
        u = lu.solve(rhs.astype(mat.dtype))
    except RuntimeError as exc:
        raise NearSingularError(f"resolvent solve failed: {exc}") from exc
    if not np.all(np.isfinite(u)):
        raise NearSingularError("resolvent solve produced non-finite values")
    res = np.linalg.norm(mat @ u - rhs)
    scale = np.linalg.norm(rhs)
    if scale > 0 and res > _RESOLVE_TOL * scale:
        raise NearSingularError(
            f"shift too close to the discrete spectrum: relative residual "
            f"{res / scale:.2e}, growth {np.linalg.norm(u) / scale:.2e}")
    vals = A.full_values(u)
    if np.iscomplexobj(vals) and np.max(np.abs(vals.imag)) == 0.0:
        vals = vals.real
    return Field(A.mesh, vals, "node", A.bc)


def kernel_projection(A, v: Field):
    """Remove the mass-orthogonal projection onto the operator kernel."""
    if A.kernel is None:
        raise KernelSpaceError("operator has no computed kernel basis")
    vec = v.values.ravel().copy()
    for k in range(A.kernel.shape[1]):
        z = A.kernel[:, k]
        mz = A.M @ z
        vec -= (mz @ vec) / (mz @ z) * z
    return Field(A.mesh, vec.reshape(v.values.shape), "node", v.bc)


class ReflectedField:
    """Even reflection of a mesh field across each face, evaluable off-domain.

    Serves as the numerical surrogate of a continuous extension operator in
    corrector formulas; valid for excursions up to one edge length.
    """

    def __init__(self, f: Field, margin):
        mesh = f.mesh
        if margin > min(mesh.domain.lengths) + 1e-12:
            raise ExtensionMarginError(
                f"margin {margin:g} exceeds shortest edge {min(mesh.domain.lengths):g}")
        self.mesh = mesh
        self.margin = float(margin)
        self.where = f.where
        self.values = np.ascontiguousarray(f.values, dtype=float)
        if self.where == "node":
            if mesh.d == 1:
                self._grid = self.values
            else:
                n1, n2 = mesh.dims
                self._grid = np.ascontiguousarray(
                    self.values.reshape(n1 + 1, n2 + 1, -1))

    def _validate(self, pts):
        lengths = self.mesh.domain.lengths
        for a, length in enumerate(lengths):
            lo = pts[:, a].min()
            hi = pts[:, a].max()
            if lo < -self.margin - 1e-9 or hi > length + self.margin + 1e-9:
                raise ExtensionMarginError(
                    f"evaluation outside the declared margin {self.margin:g}")

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        self._validate(pts)
        mesh = self.mesh
        if self.where == "element":
            if mesh.d == 1:
                return kernels.gather_element_1d(
                    self.values, mesh.h, mesh.domain.lengths[0],
                    np.ascontiguousarray(pts[:, 0]))
            return kernels.gather_element_2d(
                self.values, mesh.h, mesh.domain.lengths[0], mesh.domain.lengths[1],
                mesh.dims[0], mesh.dims[1], np.ascontiguousarray(pts))
        if mesh.d == 1:
            return kernels.sample_grid_linear_1d(
                self._grid, mesh.h, mesh.domain.lengths[0],
                np.ascontiguousarray(pts[:, 0]))
        return kernels.sample_grid_linear_2d(
            self._grid, mesh.h, mesh.domain.lengths[0], mesh.domain.lengths[1],
            np.ascontiguousarray(pts))

    def cell_average(self, eps, points, zpts, zwts):
        """Fused quadrature path used by the smoothing operator."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        excursion = eps * np.max(np.abs(zpts))
        lengths = self.mesh.domain.lengths
        lo = pts.min(axis=0) - excursion
        hi = pts.max(axis=0) + excursion
        if np.any(lo < -self.margin - 1e-9) or np.any(hi > np.asarray(lengths) + self.margin + 1e-9):
            raise ExtensionMarginError(
                f"cell average needs margin {excursion:g}, declared {self.margin:g}")
        mesh = self.mesh
        if self.where == "element":
            if mesh.d == 1:
                return kernels.steklov_element_1d(
                    self.values, mesh.h, lengths[0], eps,
                    np.ascontiguousarray(pts[:, 0]),
                    np.ascontiguousarray(zpts[:, 0]), np.ascontiguousarray(zwts))
            return kernels.steklov_element_2d(
                self.values, mesh.h, lengths[0], lengths[1],
                mesh.dims[0], mesh.dims[1], eps, np.ascontiguousarray(pts),
                np.ascontiguousarray(zpts), np.ascontiguousarray(zwts))
        shifted = pts[:, None, :] - eps * zpts[None, :, :]
        vals = self(shifted.reshape(-1, mesh.d))
        vals = vals.reshape(pts.shape[0], zpts.shape[0], -1)
        return np.einsum("pqc,q->pc", vals, zwts)


def extend_field(u: Field, margin):
    return ReflectedField(u, margin)


def symbol_gradient(u: Field, b: DifferentialSymbol):
    """Elementwise symbol action on a nodal field: (E, m) values of b(d)u."""
    mesh = u.mesh
    bmat = np.einsum("evd,dmn->evmn", mesh.grads, b.matrices)
    local = u.values[mesh.elements]            # (E, nv, n)
    vals = np.einsum("evmn,evn->em", bmat, local)
    return Field(mesh, vals, "element", u.bc)


def node_averaged(f: Field):
    """Volume-weighted transfer of an elementwise field to nodes."""
    mesh = f.mesh
    acc = np.zeros((mesh.n_nodes, f.values.shape[1]))
    wacc = np.zeros(mesh.n_nodes)
    contrib = mesh.volumes[:, None, None] * f.values[:, None, :]
    np.add.at(acc, mesh.elements.ravel(),
              np.broadcast_to(contrib, (mesh.n_elements, mesh.n_local,
                                        f.values.shape[1])).reshape(-1, f.values.shape[1]))
    np.add.at(wacc, mesh.elements.ravel(),
              np.broadcast_to(mesh.volumes[:, None],
                              (mesh.n_elements, mesh.n_local)).ravel())
    return Field(mesh, acc / wacc[:, None], "node", f.bc)


def norm(u: Field, kind="L2", delta=None):
    """Discrete L2 / H1 norms; interior variants restrict the quadrature to
    elements fully inside the margin-delta subdomain."""
    mesh = u.mesh
    if u.where == "element":
        if kind == "L2":
            return float(np.sqrt(np.sum(mesh.volumes[:, None] * np.abs(u.values) ** 2)))
        if kind == "L2_interior":
            mask = mesh.interior_element_mask(_required_delta(delta))
            vol = mesh.volumes * mask
            return float(np.sqrt(np.sum(vol[:, None] * np.abs(u.values) ** 2)))
        raise ValueError(f"norm kind {kind!r} undefined for element fields")

    n = u.n_comp
    vec = u.values.ravel()
    if kind in ("L2", "H1"):
        mass, grad = mesh._forms(n)
        val = np.real(np.conj(vec) @ (mass @ vec))
        if kind == "H1":
            val += np.real(np.conj(vec) @ (grad @ vec))
        return float(np.sqrt(max(val, 0.0)))
    if kind in ("L2_interior", "H1_interior"):
        mask = mesh.interior_element_mask(_required_delta(delta))
        mass, grad = mesh._forms(n, element_mask=mask)
        val = np.real(np.conj(vec) @ (mass @ vec))
        if kind == "H1_interior":
            val += np.real(np.conj(vec) @ (grad @ vec))
        return float(np.sqrt(max(val, 0.0)))
    raise ValueError(f"unknown norm kind {kind!r}")


def _required_delta(delta):
    if delta is None:
        raise ValueError("interior norm requires a margin delta")
    return float(delta)


def export_coo(matrix, path):
    """Write a sparse matrix as 'row col value' rows (debugging aid)."""
    coo = matrix.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v!r}\n")
