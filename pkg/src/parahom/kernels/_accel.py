"""Numba-compiled kernels; same signatures and semantics as _reference."""

import numpy as np
from numba import njit


@njit(cache=True)
def sample_periodic_nearest_1d(values, t):
    n, c = values.shape
    out = np.empty((t.shape[0], c))
    for p in range(t.shape[0]):
        tt = t[p] - np.floor(t[p])
        idx = min(int(tt * n), n - 1)
        for k in range(c):
            out[p, k] = values[idx, k]
    return out


@njit(cache=True)
def sample_periodic_linear_1d(values, t):
    n, c = values.shape
    out = np.empty((t.shape[0], c))
    for p in range(t.shape[0]):
        s = (t[p] - np.floor(t[p])) * n
        i0 = int(np.floor(s)) % n
        w = s - np.floor(s)
        i1 = (i0 + 1) % n
        for k in range(c):
            out[p, k] = values[i0, k] * (1.0 - w) + values[i1, k] * w
    return out


@njit(cache=True)
def sample_periodic_nearest_2d(values, t):
    n1, n2, c = values.shape
    out = np.empty((t.shape[0], c))
    for p in range(t.shape[0]):
        t1 = t[p, 0] - np.floor(t[p, 0])
        t2 = t[p, 1] - np.floor(t[p, 1])
        i = min(int(t1 * n1), n1 - 1)
        j = min(int(t2 * n2), n2 - 1)
        for k in range(c):
            out[p, k] = values[i, j, k]
    return out


@njit(cache=True)
def sample_periodic_linear_2d(values, t):
    n1, n2, c = values.shape
    out = np.empty((t.shape[0], c))
    for p in range(t.shape[0]):
        s1 = (t[p, 0] - np.floor(t[p, 0])) * n1
        s2 = (t[p, 1] - np.floor(t[p, 1])) * n2
        i0 = int(np.floor(s1)) % n1
        j0 = int(np.floor(s2)) % n2
        w1 = s1 - np.floor(s1)
        w2 = s2 - np.floor(s2)
        i1 = (i0 + 1) % n1
        j1 = (j0 + 1) % n2
        for k in range(c):
            a = values[i0, j0, k] * (1 - w1) + values[i1, j0, k] * w1
            b = values[i0, j1, k] * (1 - w1) + values[i1, j1, k] * w1
            out[p, k] = a * (1 - w2) + b * w2
    return out


@njit(cache=True, inline="always")
def _fold(x, length):
    y = abs(x)
    if y > length:
        y = 2.0 * length - y
    if y < 0.0:
        y = 0.0
    elif y > length:
        y = length
    return y


@njit(cache=True)
def reflect_fold_1d(x, length):
    out = np.empty_like(x)
    for p in range(x.shape[0]):
        out[p] = _fold(x[p], length)
    return out


@njit(cache=True)
def locate_element_1d(x, h, n_el):
    out = np.empty(x.shape[0], dtype=np.int64)
    for p in range(x.shape[0]):
        idx = int(np.floor(x[p] / h))
        if idx < 0:
            idx = 0
        elif idx > n_el - 1:
            idx = n_el - 1
        out[p] = idx
    return out


@njit(cache=True, inline="always")
def _locate_2d(x, y, h, n1, n2):
    i = int(np.floor(x / h))
    if i < 0:
        i = 0
    elif i > n1 - 1:
        i = n1 - 1
    j = int(np.floor(y / h))
    if j < 0:
        j = 0
    elif j > n2 - 1:
        j = n2 - 1
    xi = x / h - i
    eta = y / h - j
    e = 2 * (j * n1 + i)
    if eta > xi:
        e += 1
    return e


@njit(cache=True)
def locate_element_2d(x, y, h, n1, n2):
    out = np.empty(x.shape[0], dtype=np.int64)
    for p in range(x.shape[0]):
        out[p] = _locate_2d(x[p], y[p], h, n1, n2)
    return out


@njit(cache=True)
def gather_element_1d(values, h, length, x):
    n_el, c = values.shape
    out = np.empty((x.shape[0], c))
    for p in range(x.shape[0]):
        y = _fold(x[p], length)
        idx = int(np.floor(y / h))
        if idx < 0:
            idx = 0
        elif idx > n_el - 1:
            idx = n_el - 1
        for k in range(c):
            out[p, k] = values[idx, k]
    return out


@njit(cache=True)
def gather_element_2d(values, h, l1, l2, n1, n2, x):
    c = values.shape[1]
    out = np.empty((x.shape[0], c))
    for p in range(x.shape[0]):
        y1 = _fold(x[p, 0], l1)
        y2 = _fold(x[p, 1], l2)
        e = _locate_2d(y1, y2, h, n1, n2)
        for k in range(c):
            out[p, k] = values[e, k]
    return out


@njit(cache=True)
def steklov_element_1d(values, h, length, eps, x, zpts, zwts):
    n_el, c = values.shape
    out = np.zeros((x.shape[0], c))
    for p in range(x.shape[0]):
        for q in range(zpts.shape[0]):
            y = _fold(x[p] - eps * zpts[q], length)
            idx = int(np.floor(y / h))
            if idx < 0:
                idx = 0
            elif idx > n_el - 1:
                idx = n_el - 1
            w = zwts[q]
            for k in range(c):
                out[p, k] += w * values[idx, k]
    return out


@njit(cache=True)
def steklov_element_2d(values, h, l1, l2, n1, n2, eps, x, zpts, zwts):
    c = values.shape[1]
    out = np.zeros((x.shape[0], c))
    for p in range(x.shape[0]):
        for q in range(zpts.shape[0]):
            y1 = _fold(x[p, 0] - eps * zpts[q, 0], l1)
            y2 = _fold(x[p, 1] - eps * zpts[q, 1], l2)
            e = _locate_2d(y1, y2, h, n1, n2)
            w = zwts[q]
            for k in range(c):
                out[p, k] += w * values[e, k]
    return out


@njit(cache=True)
def sample_grid_linear_1d(values, h, length, x):
    n = values.shape[0] - 1
    c = values.shape[1]
    out = np.empty((x.shape[0], c))
    for p in range(x.shape[0]):
        y = _fold(x[p], length)
        s = y / h
        if s < 0.0:
            s = 0.0
        elif s > n:
            s = float(n)
        i0 = min(int(np.floor(s)), n - 1)
        w = s - i0
        for k in range(c):
            out[p, k] = values[i0, k] * (1 - w) + values[i0 + 1, k] * w
    return out


@njit(cache=True)
def sample_grid_linear_2d(values, h, l1, l2, x):
    n1 = values.shape[0] - 1
    n2 = values.shape[1] - 1
    c = values.shape[2]
    out = np.empty((x.shape[0], c))
    for p in range(x.shape[0]):
        y1 = _fold(x[p, 0], l1)
        y2 = _fold(x[p, 1], l2)
        s1 = min(max(y1 / h, 0.0), float(n1))
        s2 = min(max(y2 / h, 0.0), float(n2))
        i0 = min(int(np.floor(s1)), n1 - 1)
        j0 = min(int(np.floor(s2)), n2 - 1)
        w1 = s1 - i0
        w2 = s2 - j0
        for k in range(c):
            a = values[i0, j0, k] * (1 - w1) + values[i0 + 1, j0, k] * w1
            b = values[i0, j0 + 1, k] * (1 - w1) + values[i0 + 1, j0 + 1, k] * w1
            out[p, k] = a * (1 - w2) + b * w2
    return out
