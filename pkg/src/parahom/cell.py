"""Periodic cell problem: matrix corrector, averaged flux field and effective matrix.

The corrector columns L_k solve the periodic Galerkin problem

    find L_k with zero cell mean such that for all periodic test fields v
        integral < g (b(d)L_k + e_k), b(d)v > = 0,

discretized with lowest-order conforming elements (P1 segments/triangles) on
a uniform grid over the cell. The zero-mean condition is imposed without
pinning a node, keeping the system symmetric: the iterative path runs CG in
the mean-free subspace, the direct path appends one Lagrange multiplier per
component. From the corrector we form the flux field
g_tilde = g (b(d)L + 1) per element and the effective matrix as its cell
average; the arithmetic/harmonic brackets are computed with the same
element-midpoint quadrature so that the bracketing holds at solver accuracy.
"""

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError
from .lattice import PeriodicCoefficient, sample_scaled

_RESIDUAL_TOL = 1e-10


class SpecialCase(enum.Flag):
    GENERIC = 0
    EFFECTIVE_EQUALS_BAR = enum.auto()
    EFFECTIVE_EQUALS_UNDER = enum.auto()


@dataclass(frozen=True)
class PeriodicMatrixField:
    """Grid-sampled (not necessarily Hermitian) matrix field over the cell."""

    lattice: object
    samples: np.ndarray
    interpolation: str = "nearest"

    @property
    def m(self):
        return self.samples.shape[-2]

    def sample_scaled(self, eps, points):
        shim = _FieldShim(self.lattice, self.samples, self.interpolation)
        return sample_scaled(shim, eps, points)


class _FieldShim:
    # duck-typed stand-in accepted by lattice.sample_scaled
    def __init__(self, lattice, samples, interpolation):
        self.lattice = lattice
        self.samples = samples
        self.interpolation = interpolation
        self.m = samples.shape[-1]


class _PeriodicCellMesh:
    """Uniform periodic P1 mesh over the lattice cell (d in {1, 2})."""

    def __init__(self, lattice, n):
        self.lattice = lattice
        self.n = int(n)
        self.d = lattice.d
        a = lattice.basis
        if self.d == 1:
            self.n_nodes = self.n
            self.nodes_frac = (np.arange(self.n) / self.n)[:, None]
            el = np.stack([np.arange(self.n), (np.arange(self.n) + 1) % self.n], axis=1)
            self.elements = el
            v0 = self.nodes_frac[np.arange(self.n)] @ a
            v1 = ((np.arange(self.n) + 1) / self.n)[:, None] @ a
            self.centroids = 0.5 * (v0 + v1)
            h = np.linalg.norm(a[0]) / self.n
            self.volumes = np.full(self.n, h)
            self.grads = np.broadcast_to(
                np.array([[-1.0 / h], [1.0 / h]]), (self.n, 2, 1)).copy()
            self.n_local = 2
        else:
            n = self.n
            self.n_nodes = n * n
            ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
            frac = np.stack([ii.ravel() / n, jj.ravel() / n], axis=-1)
            # node id = i * n + j, with (i, j) the fractional grid indices
            self.nodes_frac = frac

            def nid(i, j):
                return (i % n) * n + (j % n)

            i = ii.ravel()
            j = jj.ravel()
            t0 = np.stack([nid(i, j), nid(i + 1, j), nid(i + 1, j + 1)], axis=1)
            t1 = np.stack([nid(i, j), nid(i + 1, j + 1), nid(i, j + 1)], axis=1)
            self.elements = np.concatenate([t0, t1], axis=0)
            # unwrapped fractional vertex coordinates for geometry
            f00 = np.stack([i, j], axis=-1) / n
            f10 = np.stack([i + 1, j], axis=-1) / n
            f11 = np.stack([i + 1, j + 1], axis=-1) / n
            f01 = np.stack([i, j + 1], axis=-1) / n
            verts0 = np.stack([f00, f10, f11], axis=1) @ a
            verts1 = np.stack([f00, f11, f01], axis=1) @ a
            verts = np.concatenate([verts0, verts1], axis=0)
            self.centroids = verts.mean(axis=1)
            self.grads, self.volumes = _triangle_geometry(verts)
            self.n_local = 3

        self.n_elements = self.elements.shape[0]
        self.total_volume = float(self.volumes.sum())


def _triangle_geometry(verts):
    # verts: (E, 3, 2); P1 gradients and areas
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


def _symbol_blocks(grads, matrices):
    # grads: (E, nv, d), matrices: (d, m, n) -> per-vertex symbol action (E, nv, m, n)
    return np.einsum("evd,dmn->evmn", grads, matrices)


def _scatter(blocks, elements, n_comp, n_dofs):
    # blocks: (E, nv, nv, n, n) element matrices
    e_count, nv = elements.shape
    n = n_comp
    dof = elements[:, :, None] * n + np.arange(n)[None, None, :]   # (E, nv, n)
    rows = np.repeat(dof[:, :, None, :, None], nv, axis=2)
    rows = np.broadcast_to(rows, (e_count, nv, nv, n, n)).ravel()
    cols = np.repeat(dof[:, None, :, None, :], nv, axis=1)
    cols = np.broadcast_to(cols, (e_count, nv, nv, n, n)).ravel()
    mat = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n_dofs, n_dofs))
    return mat.tocsr()


def _mass_local(d, nv):
    if d == 1:
        return np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    return np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def assemble_periodic_forms(mesh, g_elem, matrices, n_comp):
    """Stiffness with coefficient, unit-gradient stiffness, and mass on the cell."""
    nv = mesh.n_local
    n_dofs = mesh.n_nodes * n_comp
    bmat = _symbol_blocks(mesh.grads, matrices)            # (E, nv, m, n)
    kb = np.einsum("e,evmi,emk,ewkj->evwij", mesh.volumes, bmat, g_elem, bmat,
                   optimize=True)
    stiff = _scatter(kb, mesh.elements, n_comp, n_dofs)

    gb = np.einsum("e,evd,ewd->evw", mesh.volumes, mesh.grads, mesh.grads)
    eye = np.eye(n_comp)
    gb_full = gb[:, :, :, None, None] * eye[None, None, None]
    grad_stiff = _scatter(gb_full, mesh.elements, n_comp, n_dofs)

    mloc = _mass_local(mesh.d, nv)
    mb = mesh.volumes[:, None, None] * mloc[None]
    mb_full = mb[:, :, :, None, None] * eye[None, None, None]
    mass = _scatter(mb_full, mesh.elements, n_comp, n_dofs)
    return stiff, grad_stiff, mass, bmat


def _solve_zero_mean(stiff, rhs, n_comp, cg_rtol, use_direct, weights):
    """Solve the singular periodic system on the mean-free subspace.

    rhs columns are compatible by construction. Returns solution columns with
    exact zero weighted mean per component.
    """
    n_dofs = stiff.shape[0]
    n_nodes = n_dofs // n_comp
    w = weights / weights.sum()

    def project(vec):
        v = vec.reshape(n_nodes, n_comp)
        return (v - (w[:, None] * v).sum(axis=0)).ravel()

    cols = []
    if use_direct:
        constr = sp.lil_matrix((n_comp, n_dofs))
        for c in range(n_comp):
            constr[c, c::n_comp] = weights
        kkt = sp.bmat([[stiff, constr.T], [constr, None]], format="csc")
        lu = spla.splu(kkt)
        for k in range(rhs.shape[1]):
            ext = np.concatenate([rhs[:, k], np.zeros(n_comp)])
            sol = lu.solve(ext)[:n_dofs]
            cols.append(project(sol))
    else:
        diag = stiff.diagonal()
        diag = np.where(diag > 0, diag, 1.0)

        def matvec(x):
            return project(stiff @ project(x))

        def precond(x):
            return project(x / diag)

        op = spla.LinearOperator((n_dofs, n_dofs), matvec=matvec)
        pre = spla.LinearOperator((n_dofs, n_dofs), matvec=precond)
        for k in range(rhs.shape[1]):
            b = project(rhs[:, k])
            if np.linalg.norm(b) == 0.0:
                cols.append(np.zeros(n_dofs))
                continue
            x, info = spla.cg(op, b, rtol=cg_rtol, atol=0.0, M=pre,
                              maxiter=200 * int(np.sqrt(n_dofs)) + 2000)
            if info != 0:
                raise SolverError(f"cell CG did not converge (info={info})")
            cols.append(project(x))

    sols = np.stack(cols, axis=1)
    # residual contract, relative to the rhs scale
    res = np.empty(rhs.shape[1])
    for k in range(rhs.shape[1]):
        r = project(stiff @ sols[:, k] - rhs[:, k])
        scale = max(np.linalg.norm(rhs[:, k]), 1e-300)
        res[k] = np.linalg.norm(r) / scale if np.linalg.norm(rhs[:, k]) > 0 else np.linalg.norm(r)
    if np.any(res > _RESIDUAL_TOL):
        raise SolverError(f"cell solve residual {res.max():.3e} exceeds {_RESIDUAL_TOL}")
    return sols, res


@dataclass(frozen=True)
class CellSolution:
    """Corrector, flux field and effective matrix from one periodic cell solve."""

    lattice: object
    symbol: object
    lambda_grid: np.ndarray         # (N, n, m) or (N, N, n, m) cell samples
    lambda_interpolation: str
    g_tilde: PeriodicMatrixField
    g_eff: np.ndarray               # (m, m)
    g_bar: np.ndarray
    g_under: np.ndarray
    lambda_h1: float
    m_bound: float
    resolution: int
    residuals: np.ndarray

    @property
    def corrector_is_zero(self):
        return self.lambda_h1 <= 1e-10

    def lambda_scaled(self, eps, points):
        """L(x / eps) at cartesian points, (P, n, m)."""
        n, m = self.lambda_grid.shape[-2], self.lambda_grid.shape[-1]
        field = _FieldShim(self.lattice,
                           self.lambda_grid.reshape(*self.lambda_grid.shape[:-2], n * m),
                           self.lambda_interpolation)
        flat = sample_scaled(field, eps, points)
        return flat.reshape(-1, n, m)

    def g_tilde_scaled(self, eps, points):
        return self.g_tilde.sample_scaled(eps, points)


def solve_cell_problem(g, b, resolution, cg_rtol=1e-12, direct_max=64):
    """Solve the cell problem at the given grid resolution (>= 8 per axis)."""
    if resolution < 8:
        raise ValueError("cell resolution must be at least 8 per axis")
    if np.iscomplexobj(g.samples) and np.max(np.abs(np.asarray(g.samples).imag)) > 0:
        raise NotImplementedError("complex coefficient entries are stored but not solved for")

    lattice = g.lattice
    mesh = _PeriodicCellMesh(lattice, resolution)
    m, n = b.m, b.n
    g_elem = sample_scaled(g, 1.0, mesh.centroids).real

    stiff, grad_stiff, mass, bmat = assemble_periodic_forms(mesh, g_elem, b.matrices, n)

    # right-hand sides: one per column of the m x m identity
    rhs_all = -np.einsum("e,evmi,emk->evik", mesh.volumes, bmat, g_elem)
    rhs = np.zeros((mesh.n_nodes * n, m))
    dof = mesh.elements[:, :, None] * n + np.arange(n)[None, None, :]
    for k in range(m):
        np.add.at(rhs[:, k], dof.ravel(), rhs_all[:, :, :, k].ravel())

    weights = np.full(mesh.n_nodes, mesh.total_volume / mesh.n_nodes)
    use_direct = resolution <= direct_max
    sols, res = _solve_zero_mean(stiff, rhs, n, cg_rtol, use_direct, weights)

    lam = sols.reshape(mesh.n_nodes, n, m)

    # elementwise b(d)L + identity and flux field
    lam_local = lam[mesh.elements]                                  # (E, nv, n, m)
    bfield = np.einsum("evmi,evik->emk", bmat, lam_local)           # (E, m, m)
    bfield += np.eye(m)[None]
    g_tilde_elem = np.einsum("emk,ekl->eml", g_elem, bfield)

    vol = mesh.volumes
    tot = mesh.total_volume
    g_eff = np.einsum("e,eml->ml", vol, g_tilde_elem) / tot
    g_bar = np.einsum("e,eml->ml", vol, g_elem) / tot
    g_under = np.linalg.inv(np.einsum("e,eml->ml", vol, np.linalg.inv(g_elem)) / tot)
    g_eff = 0.5 * (g_eff + g_eff.T)

    # H1(cell) norm of the corrector (Frobenius over columns)
    lam_flat = sols
    l2_sq = float(np.einsum("ik,ik->", lam_flat, mass @ lam_flat))
    h1_semi_sq = float(np.einsum("ik,ik->", lam_flat, grad_stiff @ lam_flat))
    lambda_h1 = float(np.sqrt(max(l2_sq + h1_semi_sq, 0.0)))

    m_bound = corrector_norm_bound(g, b, lattice)

    g_tilde = PeriodicMatrixField(
        lattice=lattice,
        samples=_elementwise_to_grid(mesh, g_tilde_elem, resolution),
        interpolation="nearest",
    )
    lam_grid, lam_interp = _lambda_samples(mesh, lam, resolution, g.interpolation)

    sol = CellSolution(
        lattice=lattice, symbol=b,
        lambda_grid=lam_grid, lambda_interpolation=lam_interp,
        g_tilde=g_tilde, g_eff=g_eff, g_bar=g_bar, g_under=g_under,
        lambda_h1=lambda_h1, m_bound=m_bound,
        resolution=resolution, residuals=res,
    )
    _validate_solution(sol, lam_flat, weights, n)
    return sol


def _elementwise_to_grid(mesh, values_elem, resolution):
    m = values_elem.shape[-1]
    if mesh.d == 1:
        return values_elem.copy()
    half = mesh.n_elements // 2
    avg = 0.5 * (values_elem[:half] + values_elem[half:])
    return avg.reshape(resolution, resolution, m, m)


def _lambda_samples(mesh, lam, resolution, interpolation):
    """Cell-grid samples of the corrector, registered like the coefficient."""
    n, m = lam.shape[1], lam.shape[2]
    if interpolation == "linear":
        if mesh.d == 1:
            return lam.copy(), "linear"
        return lam.reshape(resolution, resolution, n, m), "linear"
    # nearest: value representative for each grid cell (vertex average)
    lam_local = lam[mesh.elements]                # (E, nv, n, m)
    cell_val = lam_local.mean(axis=1)
    if mesh.d == 1:
        return cell_val, "nearest"
    half = mesh.n_elements // 2
    avg = 0.5 * (cell_val[:half] + cell_val[half:])
    return avg.reshape(resolution, resolution, n, m), "nearest"


def _validate_solution(sol, lam_flat, weights, n_comp):
    scale = max(1.0, float(np.max(np.abs(lam_flat))))
    w = weights / weights.sum()
    means = (w[:, None] * lam_flat.reshape(len(w), -1)).sum(axis=0)
    if np.max(np.abs(means)) > 1e-10 * scale:
        raise SolverError("corrector mean exceeds tolerance")
    eig_eff = np.linalg.eigvalsh(sol.g_eff)
    if eig_eff.min() <= 0:
        raise SolverError("effective matrix not positive definite")
    low = np.linalg.eigvalsh(sol.g_eff - sol.g_under).min()
    high = np.linalg.eigvalsh(sol.g_bar - sol.g_eff).min()
    if low < -1e-8 or high < -1e-8:
        raise SolverError(
            f"arithmetic/harmonic bracketing violated (lower {low:.2e}, upper {high:.2e})")
    if sol.lambda_h1 > sol.m_bound + 1e-6:
        raise SolverError(
            f"corrector norm {sol.lambda_h1:.6f} exceeds a-priori bound {sol.m_bound:.6f}")


def corrector_norm_bound(g, b, lattice):
    """A-priori bound for the H1(cell) norm of the corrector."""
    return float(np.sqrt(
        lattice.cell_volume * (1.0 + (2.0 * lattice.r0) ** -2) * b.m
        / b.alpha0 * g.norm_sup * g.norm_inv_sup))


def voigt_reuss(g, resolution=None):
    """Arithmetic mean and harmonic-type mean of the coefficient.

    Quadrature runs over the coefficient's own grid registration: exact for
    nearest-registered (piecewise-constant) data, midpoint/node quadrature
    otherwise. Pass a resolution to resample on element midpoints instead.
    """
    if resolution is None:
        flat = np.asarray(g.samples).reshape(-1, g.m, g.m).real
    else:
        mesh = _PeriodicCellMesh(g.lattice, resolution)
        flat = sample_scaled(g, 1.0, mesh.centroids).real
    g_bar = flat.mean(axis=0)
    g_under = np.linalg.inv(np.linalg.inv(flat).mean(axis=0))
    return g_under, g_bar


def classify_special_case(sol, tol=1e-8):
    """Detect whether the effective matrix hits either bracketing bound.

    When it equals the arithmetic mean the corrector must vanish; when it
    equals the harmonic-type mean the flux field must be constant. Both
    structural facts are verified against the solve.
    """
    flags = SpecialCase.GENERIC
    if np.linalg.norm(sol.g_eff - sol.g_bar) <= tol:
        flags |= SpecialCase.EFFECTIVE_EQUALS_BAR
        if sol.lambda_h1 > tol:
            raise SolverError(
                "effective matrix equals arithmetic mean but corrector is nonzero")
    if np.linalg.norm(sol.g_eff - sol.g_under) <= tol:
        flags |= SpecialCase.EFFECTIVE_EQUALS_UNDER
        if g_tilde_deviation(sol) > tol:
            raise SolverError(
                "effective matrix equals harmonic mean but flux field is not constant")
    return flags


def g_tilde_deviation(sol):
    """L2(cell) distance between the flux field and the effective matrix."""
    samples = sol.g_tilde.samples
    diff = samples - sol.g_eff
    d = sol.lattice.d
    flat = diff.reshape(-1, sol.g_eff.shape[0], sol.g_eff.shape[1])
    cell_vol = sol.lattice.cell_volume / flat.shape[0]
    return float(np.sqrt(np.sum(np.abs(flat) ** 2) * cell_vol))


def lambda_bound_check(sol, g, b, lattice, tol=1e-6):
    """Return (corrector H1 norm, a-priori bound, pass flag)."""
    m_bound = corrector_norm_bound(g, b, lattice)
    return sol.lambda_h1, m_bound, bool(sol.lambda_h1 <= m_bound + tol)
