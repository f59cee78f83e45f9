"""Pure-numpy reference implementations of the sampling/smoothing kernels.

Semantics here are the contract; the numba backend must match bitwise up to
floating-point reassociation. Fractional cell coordinates are wrapped into
[0, 1) inside the kernels, reflection folding assumes at most one reflection
per side (margin <= edge length, enforced by callers).
"""

import numpy as np


def sample_periodic_nearest_1d(values, t):
    # values: (N, C), t: (P,) fractional coords; sample i covers [i/N, (i+1)/N)
    n = values.shape[0]
    tt = t - np.floor(t)
    idx = np.minimum((tt * n).astype(np.int64), n - 1)
    return values[idx]


def sample_periodic_linear_1d(values, t):
    # values: (N, C) at nodes i/N, periodic wrap
    n = values.shape[0]
    tt = (t - np.floor(t)) * n
    i0 = np.floor(tt).astype(np.int64) % n
    w = tt - np.floor(tt)
    i1 = (i0 + 1) % n
    return values[i0] * (1.0 - w)[:, None] + values[i1] * w[:, None]


def sample_periodic_nearest_2d(values, t):
    # values: (N1, N2, C), t: (P, 2)
    n1, n2 = values.shape[0], values.shape[1]
    t1 = t[:, 0] - np.floor(t[:, 0])
    t2 = t[:, 1] - np.floor(t[:, 1])
    i = np.minimum((t1 * n1).astype(np.int64), n1 - 1)
    j = np.minimum((t2 * n2).astype(np.int64), n2 - 1)
    return values[i, j]


def sample_periodic_linear_2d(values, t):
    n1, n2 = values.shape[0], values.shape[1]
    s1 = (t[:, 0] - np.floor(t[:, 0])) * n1
    s2 = (t[:, 1] - np.floor(t[:, 1])) * n2
    i0 = np.floor(s1).astype(np.int64) % n1
    j0 = np.floor(s2).astype(np.int64) % n2
    w1 = (s1 - np.floor(s1))[:, None]
    w2 = (s2 - np.floor(s2))[:, None]
    i1 = (i0 + 1) % n1
    j1 = (j0 + 1) % n2
    return ((values[i0, j0] * (1 - w1) + values[i1, j0] * w1) * (1 - w2)
            + (values[i0, j1] * (1 - w1) + values[i1, j1] * w1) * w2)


def reflect_fold_1d(x, length):
    y = np.abs(x)
    y = np.where(y > length, 2.0 * length - y, y)
    return np.clip(y, 0.0, length)


def locate_element_1d(x, h, n_el):
    idx = np.floor(x / h).astype(np.int64)
    return np.clip(idx, 0, n_el - 1)


def locate_element_2d(x, y, h, n1, n2):
    # squares split along the (i,j)-(i+1,j+1) diagonal; local eta<=xi is the
    # first triangle of the square
    i = np.clip(np.floor(x / h).astype(np.int64), 0, n1 - 1)
    j = np.clip(np.floor(y / h).astype(np.int64), 0, n2 - 1)
    xi = x / h - i
    eta = y / h - j
    upper = (eta > xi).astype(np.int64)
    return 2 * (j * n1 + i) + upper


def gather_element_1d(values, h, length, x):
    y = reflect_fold_1d(x, length)
    return values[locate_element_1d(y, h, values.shape[0])]


def gather_element_2d(values, h, l1, l2, n1, n2, x):
    y1 = reflect_fold_1d(x[:, 0], l1)
    y2 = reflect_fold_1d(x[:, 1], l2)
    return values[locate_element_2d(y1, y2, h, n1, n2)]


def steklov_element_1d(values, h, length, eps, x, zpts, zwts):
    # cell average of the reflected extension of an elementwise field:
    # sum_q w_q v(fold(x - eps*z_q))
    pts = x[:, None] - eps * zpts[None, :]            # (P, Q)
    samp = gather_element_1d(values, h, length, pts.ravel())
    samp = samp.reshape(x.shape[0], zpts.shape[0], values.shape[1])
    return np.einsum("pqc,q->pc", samp, zwts)


def steklov_element_2d(values, h, l1, l2, n1, n2, eps, x, zpts, zwts):
    pts = x[:, None, :] - eps * zpts[None, :, :]      # (P, Q, 2)
    flat = pts.reshape(-1, 2)
    samp = gather_element_2d(values, h, l1, l2, n1, n2, flat)
    samp = samp.reshape(x.shape[0], zpts.shape[0], values.shape[1])
    return np.einsum("pqc,q->pc", samp, zwts)


def sample_grid_linear_1d(values, h, length, x):
    # nodal field on a uniform grid, reflected extension, linear interpolation
    y = reflect_fold_1d(x, length)
    n = values.shape[0] - 1
    s = np.clip(y / h, 0.0, float(n))
    i0 = np.minimum(np.floor(s).astype(np.int64), n - 1)
    w = (s - i0)[:, None]
    return values[i0] * (1 - w) + values[i0 + 1] * w


def sample_grid_linear_2d(values, h, l1, l2, x):
    # values: (n1+1, n2+1, C); bilinear on the node grid of the folded point
    y1 = reflect_fold_1d(x[:, 0], l1)
    y2 = reflect_fold_1d(x[:, 1], l2)
    n1 = values.shape[0] - 1
    n2 = values.shape[1] - 1
    s1 = np.clip(y1 / h, 0.0, float(n1))
    s2 = np.clip(y2 / h, 0.0, float(n2))
    i0 = np.minimum(np.floor(s1).astype(np.int64), n1 - 1)
    j0 = np.minimum(np.floor(s2).astype(np.int64), n2 - 1)
    w1 = (s1 - i0)[:, None]
    w2 = (s2 - j0)[:, None]
    return ((values[i0, j0] * (1 - w1) + values[i0 + 1, j0] * w1) * (1 - w2)
            + (values[i0, j0 + 1] * (1 - w1) + values[i0 + 1, j0 + 1] * w1) * w2)
