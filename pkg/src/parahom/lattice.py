"""Lattices, periodic coefficient fields, and first-order differential symbols.

The lattice is spanned by basis vectors a_1..a_d (d in {1, 2}); its cell is
the centered parallelepiped {sum tau_j a_j : -1/2 < tau_j < 1/2}. Coefficient
fields are stored as grid samples over the cell so that discontinuous
microstructures (laminates, checkerboards) are represented without smearing;
closed-form inputs are sampled once at construction.
"""

import warnings
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import kernels
from .errors import DegenerateLatticeError, EllipticityError

_BIORTHO_TOL = 1e-12
_HERMIT_TOL = 1e-10


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice basis with its dual, cell radii and cell volume.

    r0 is half the length of the shortest nonzero dual-lattice vector,
    r1 is half the cell diameter.
    """

    basis: np.ndarray       # (d, d), rows are a_j
    dual: np.ndarray        # (d, d), rows are b_j with <b_j, a_k> = delta_jk
    r0: float
    r1: float
    cell_volume: float

    @property
    def d(self):
        return self.basis.shape[0]

    def __post_init__(self):
        gram = self.dual @ self.basis.T
        if not np.allclose(gram, np.eye(self.d), atol=_BIORTHO_TOL):
            raise DegenerateLatticeError("dual basis fails biorthogonality")
        if not (self.r0 > 0 and self.r1 > 0 and self.cell_volume > 0):
            raise DegenerateLatticeError("degenerate lattice geometry")

    def fractional(self, points):
        """Fractional cell coordinates <b_j, x> of cartesian points (P, d)."""
        return points @ self.dual.T


def dual_lattice(basis, index_range=4):
    """Build the LatticeSpec for the given basis vectors.

    The shortest dual vector is found by enumerating integer combinations
    with coefficients in [-index_range, index_range]; the cell diameter is
    the longest diagonal of the centered parallelepiped.
    """
    a = np.atleast_2d(np.asarray(basis, dtype=float))
    d = a.shape[0]
    if a.shape != (d, d) or d not in (1, 2):
        raise DegenerateLatticeError(f"expected square basis of dimension 1 or 2, got {a.shape}")
    det = np.linalg.det(a)
    if abs(det) < 1e-14:
        raise DegenerateLatticeError("basis vectors are linearly dependent")
    dual = np.linalg.inv(a.T)  # rows b_j satisfy <b_j, a_k> = delta_jk

    shortest = np.inf
    for nu in product(range(-index_range, index_range + 1), repeat=d):
        if all(v == 0 for v in nu):
            continue
        shortest = min(shortest, float(np.linalg.norm(np.asarray(nu) @ dual)))
    diam = max(
        float(np.linalg.norm(np.asarray(sig) @ a))
        for sig in product((-1.0, 1.0), repeat=d)
    )
    return LatticeSpec(basis=a, dual=dual, r0=0.5 * shortest, r1=0.5 * diam,
                       cell_volume=abs(det))


def unit_lattice(d):
    return dual_lattice(np.eye(d))


@dataclass(frozen=True)
class PeriodicCoefficient:
    """Grid-sampled Hermitian m x m matrix field over the lattice cell.

    interpolation: "linear" for smooth fields (values live at grid nodes),
    "nearest" for discontinuous ones (values are per grid cell). Samples are
    symmetrized at construction; a warning is emitted if the asymmetry
    exceeds 1e-10.
    """

    lattice: LatticeSpec
    samples: np.ndarray       # (N, m, m) in 1D or (N1, N2, m, m) in 2D
    interpolation: str = "linear"
    norm_sup: float = field(default=None)
    norm_inv_sup: float = field(default=None)

    @property
    def m(self):
        return self.samples.shape[-1]

    @property
    def resolution(self):
        return self.samples.shape[: self.lattice.d]

    def __post_init__(self):
        if self.interpolation not in ("linear", "nearest"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        s = np.asarray(self.samples)
        herm = 0.5 * (s + np.conj(np.swapaxes(s, -1, -2)))
        skew = np.max(np.abs(s - herm)) if s.size else 0.0
        if skew > _HERMIT_TOL:
            warnings.warn(f"coefficient symmetrized; asymmetry {skew:.2e} exceeds {_HERMIT_TOL}")
        if np.max(np.abs(herm.imag)) == 0.0:
            herm = herm.real
        object.__setattr__(self, "samples", herm)
        flat = herm.reshape(-1, self.m, self.m)
        eigs = np.linalg.eigvalsh(flat)
        lo = float(eigs[:, 0].min())
        hi = float(eigs[:, -1].max())
        if lo <= 0:
            raise ValueError(f"coefficient not positive definite (min eigenvalue {lo:.3e})")
        object.__setattr__(self, "norm_sup", hi)
        object.__setattr__(self, "norm_inv_sup", 1.0 / lo)

    @classmethod
    def from_callable(cls, fn, lattice, n_cell, interpolation="linear"):
        """Sample fn(points (P, d)) -> (P, m, m) on the cell grid.

        Linear interpolation samples at nodes i/N of the cell, nearest at
        cell midpoints (i + 1/2)/N, in fractional coordinates shifted to the
        centered cell.
        """
        d = lattice.d
        n = int(n_cell)
        if interpolation == "linear":
            axes = [np.arange(n) / n for _ in range(d)]
        else:
            axes = [(np.arange(n) + 0.5) / n for _ in range(d)]
        grids = np.meshgrid(*axes, indexing="ij")
        frac = np.stack([g.ravel() for g in grids], axis=-1)
        pts = frac @ lattice.basis
        vals = np.asarray(fn(pts), dtype=float)
        m = vals.shape[-1]
        vals = vals.reshape(*([n] * d), m, m)
        return cls(lattice=lattice, samples=vals, interpolation=interpolation)

    @classmethod
    def constant(cls, value, lattice, n_cell=2):
        value = np.atleast_2d(np.asarray(value, dtype=float))
        m = value.shape[0]
        shape = tuple([int(n_cell)] * lattice.d) + (m, m)
        return cls(lattice=lattice, samples=np.broadcast_to(value, shape).copy(),
                   interpolation="linear")


def sample_scaled(g, eps, points):
    """Evaluate g(x / eps), lattice-periodically, at cartesian points (P, d).

    Uses the coefficient's own interpolation rule on the cell grid; exact at
    grid-aligned points.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = g.lattice.d
    frac = g.lattice.fractional(pts / eps)
    m = g.m
    flat = np.ascontiguousarray(g.samples.reshape(*g.samples.shape[:d], m * m), dtype=float)
    if d == 1:
        t = np.ascontiguousarray(frac[:, 0])
        if g.interpolation == "linear":
            out = kernels.sample_periodic_linear_1d(flat, t)
        else:
            out = kernels.sample_periodic_nearest_1d(flat, t)
    else:
        t = np.ascontiguousarray(frac)
        if g.interpolation == "linear":
            out = kernels.sample_periodic_linear_2d(flat, t)
        else:
            out = kernels.sample_periodic_nearest_2d(flat, t)
    return out.reshape(pts.shape[0], m, m)


@dataclass(frozen=True)
class DifferentialSymbol:
    """First-order m x n symbol b(xi) = sum_l b_l xi_l with ellipticity bounds.

    alpha0/alpha1 are the extreme eigenvalues of b(theta)* b(theta) over the
    unit sphere, estimated on a dense angular sample (1024 angles in 2D, the
    two endpoints in 1D).
    """

    matrices: np.ndarray    # (d, m, n)
    alpha0: float
    alpha1: float

    @property
    def d(self):
        return self.matrices.shape[0]

    @property
    def m(self):
        return self.matrices.shape[1]

    @property
    def n(self):
        return self.matrices.shape[2]

    @classmethod
    def create(cls, matrices, n_angles=1024):
        mats = np.asarray(matrices, dtype=float)
        if mats.ndim == 2:
            mats = mats[None]
        a0, a1 = symbol_bounds_matrices(mats, n_angles)
        return cls(matrices=mats, alpha0=a0, alpha1=a1)

    def of(self, theta):
        """b(theta) for direction vectors theta (P, d) -> (P, m, n)."""
        th = np.atleast_2d(np.asarray(theta, dtype=float))
        return np.einsum("pl,lmn->pmn", th, self.matrices)


def symbol_bounds_matrices(matrices, n_angles=1024, tol=1e-10):
    d, m, n = matrices.shape
    if m < n:
        raise EllipticityError(f"symbol must have m >= n, got m={m}, n={n}")
    if d == 1:
        thetas = np.array([[1.0], [-1.0]])
    else:
        ang = 2 * np.pi * np.arange(n_angles) / n_angles
        thetas = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    b = np.einsum("pl,lmn->pmn", thetas, matrices)
    bb = np.einsum("pmi,pmj->pij", b, b)
    eigs = np.linalg.eigvalsh(bb)
    a0 = float(eigs[:, 0].min())
    a1 = float(eigs[:, -1].max())
    if a0 <= tol:
        raise EllipticityError(f"rank condition violated: alpha0={a0:.3e}")
    return a0, a1


def symbol_bounds(b, n_angles=1024):
    """(alpha0, alpha1) for a DifferentialSymbol or a raw (d, m, n) stack."""
    if isinstance(b, DifferentialSymbol):
        return symbol_bounds_matrices(b.matrices, n_angles)
    return symbol_bounds_matrices(np.asarray(b, dtype=float), n_angles)


def derivative_symbol_1d():
    """Scalar symbol of d/dx (m = n = 1)."""
    return DifferentialSymbol.create(np.array([[[1.0]]]))


def gradient_symbol(d):
    """Symbol of the full gradient: b(xi) = xi (m = d, n = 1)."""
    mats = np.zeros((d, d, 1))
    for l in range(d):
        mats[l, l, 0] = 1.0
    return DifferentialSymbol.create(mats)
