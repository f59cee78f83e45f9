"""First-order corrector fields and flux approximations.

The smoothed variant composes: elementwise symbol gradient of the effective
solution, even-reflection extension (margin eps * r1), cell-average
smoothing at the target points, and multiplication by the scaled corrector
matrix. The plain variant skips extension and smoothing and uses the
volume-averaged nodal gradient instead; it is admissible here because in
dimensions one and two the corrector matrix is bounded.
"""

import numpy as np

from .domain import (Field, element_coefficient, extend_field, node_averaged,
                     symbol_gradient)
from .smoothing import SmoothingSpec, steklov_apply


def corrector_apply(cell_sol, eps, u0: Field, variant="smoothed", bc="dirichlet",
                    smoothing_order=6):
    """Corrector field L(x/eps) (S_eps) b(d) u0 at the mesh nodes.

    u0 is the effective solution at the target time; for the Neumann smoothed
    variant the caller passes it already kernel-projected. The returned field
    is unscaled (multiply by eps for the first-order term).
    """
    if u0.where != "node":
        raise ValueError("corrector needs a nodal effective solution")
    mesh = u0.mesh
    sym = cell_sol.symbol
    grad = symbol_gradient(u0, sym)
    if variant == "smoothed":
        margin = eps * cell_sol.lattice.r1
        ext = extend_field(grad, margin)
        spec = SmoothingSpec(cell_sol.lattice, eps, smoothing_order)
        sg = steklov_apply(ext, spec, mesh.nodes)
    elif variant == "plain":
        sg = node_averaged(grad).values
    else:
        raise ValueError(f"unknown corrector variant {variant!r}")
    lam = cell_sol.lambda_scaled(eps, mesh.nodes)
    vals = np.einsum("pnm,pm->pn", lam, sg)
    return Field(mesh, vals, "node", u0.bc)


def first_order_approx(u0: Field, corr: Field, eps):
    """Effective solution plus the scaled corrector."""
    return u0 + eps * corr


def flux(u: Field, coef, b):
    """Elementwise flux g b(d)u with midpoint coefficient sampling."""
    mesh = u.mesh
    g_elem = element_coefficient(coef, mesh)
    grad = symbol_gradient(u, b)
    vals = np.einsum("emk,ek->em", g_elem, grad.values)
    return Field(mesh, vals, "element", u.bc)


def flux_approx(cell_sol, eps, u0: Field, variant="smoothed", bc="dirichlet",
                smoothing_order=6):
    """Flux approximation from the averaged flux field of the cell problem.

    smoothed: g_tilde(x/eps) (S_eps b(d) u0~)(x) at element midpoints;
    plain: g_tilde(x/eps) b(d) u0 elementwise.
    """
    if u0.where != "node":
        raise ValueError("flux approximation needs a nodal effective solution")
    mesh = u0.mesh
    sym = cell_sol.symbol
    grad = symbol_gradient(u0, sym)
    pts = mesh.centroids
    if variant == "smoothed":
        margin = eps * cell_sol.lattice.r1
        ext = extend_field(grad, margin)
        spec = SmoothingSpec(cell_sol.lattice, eps, smoothing_order)
        sg = steklov_apply(ext, spec, pts)
    elif variant == "plain":
        sg = grad.values
    else:
        raise ValueError(f"unknown corrector variant {variant!r}")
    gt = cell_sol.g_tilde_scaled(eps, pts)
    vals = np.einsum("pmk,pk->pm", gt, sg)
    return Field(mesh, vals, "element", u0.bc)
