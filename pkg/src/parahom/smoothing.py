"""Cell-averaging (Steklov) smoothing: v -> |cell|^-1 int v(x - eps z) dz.

The integral runs over one lattice cell and is evaluated with a fixed
tensor-product Gauss-Legendre rule in fractional cell coordinates (order 6
by default): deterministic, cheap, and sufficient for the piecewise-smooth
integrands produced by mesh interpolation. No convolution matrix is
precomputed; evaluation is pointwise on demand since eps changes per sweep
iteration.
"""

from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeSpec


@dataclass(frozen=True)
class SmoothingSpec:
    lattice: LatticeSpec
    eps: float
    order: int = 6

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.order < 1:
            raise ValueError("quadrature order must be >= 1")


def cell_quadrature(lattice, order):
    """Gauss nodes (Q, d) in cartesian offsets over the centered cell, weights sum to 1."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * x          # map [-1, 1] -> [-1/2, 1/2]
    w = 0.5 * w
    d = lattice.d
    if d == 1:
        frac = x[:, None]
        wts = w
    else:
        fx, fy = np.meshgrid(x, x, indexing="ij")
        frac = np.stack([fx.ravel(), fy.ravel()], axis=-1)
        wts = np.outer(w, w).ravel()
    return frac @ lattice.basis, wts


def steklov_apply(v, spec, eval_points):
    """Cell average of v around each evaluation point.

    v must be evaluable on the eps-enlarged neighbourhood of the points:
    either a plain callable on (P, d) arrays or an extension object (see
    domain.extend_field). Extension objects expose a fused quadrature path.
    """
    pts = np.atleast_2d(np.asarray(eval_points, dtype=float))
    zpts, zwts = cell_quadrature(spec.lattice, spec.order)
    if hasattr(v, "cell_average"):
        return v.cell_average(spec.eps, pts, zpts, zwts)
    shifted = pts[:, None, :] - spec.eps * zpts[None, :, :]
    flat = shifted.reshape(-1, pts.shape[1])
    vals = np.asarray(v(flat))
    vals = vals.reshape(pts.shape[0], zpts.shape[0], -1)
    out = np.einsum("pqc,q->pc", vals, zwts)
    return out[:, 0] if out.shape[1] == 1 and np.asarray(v(pts[:1])).ndim == 1 else out


def steklov_defect_norm(v, spec, eval_points, weights):
    """Discrete L2 norm of (S_eps - I) v over a weighted evaluation grid."""
    pts = np.atleast_2d(np.asarray(eval_points, dtype=float))
    smoothed = np.asarray(steklov_apply(v, spec, pts))
    direct = np.asarray(v(pts))
    diff = (smoothed.reshape(pts.shape[0], -1) - direct.reshape(pts.shape[0], -1))
    return float(np.sqrt(np.sum(weights[:, None] * np.abs(diff) ** 2)))
