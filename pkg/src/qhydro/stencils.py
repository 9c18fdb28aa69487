"""Finite-difference stencils on uniform axes.

Interior points use 4th-order central differences; the two layers next to
each edge use one-sided stencils of the same order ("onesided" mode), or the
array is treated as zero outside its bounds ("zero" mode, which keeps the
discrete operator symmetric and is the right choice for Hamiltonians acting
on states that vanish at the box edge).
"""

import numpy as np

ACCURACY = 4  # formal order of every stencil built here


def fd_weights(nodes, x0, deriv):
    """Finite-difference weights for the `deriv`-th derivative at `x0`.

    Classic recursive algorithm (Fornberg); `nodes` are the sample
    abscissae. Returns an array w with  f^(deriv)(x0) ~= sum_i w[i] f(nodes[i]).
    """
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    if deriv >= n:
        raise ValueError("need more nodes than the derivative order")
    c = np.zeros((n, deriv + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = nodes[0] - x0
    for i in range(1, n):
        mn = min(i, deriv)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, deriv]


def _central_weights(deriv):
    half = 2 if deriv == 1 else 2
    return fd_weights(np.arange(-half, half + 1), 0.0, deriv), half


def _edge_weights(deriv):
    """One-sided / offset weights for the two rows at each edge, 4th order."""
    width = 5 if deriv == 1 else 6
    nodes = np.arange(width)
    left = [fd_weights(nodes, row, deriv) for row in (0, 1)]
    right = [fd_weights(nodes, width - 1 - row, deriv) for row in (0, 1)]
    return left, right, width


_CENTRAL = {m: _central_weights(m) for m in (1, 2)}
_EDGES = {m: _edge_weights(m) for m in (1, 2)}


def derivative(values, axis, h, deriv=1, boundary="onesided"):
    """d^deriv/dx^deriv along `axis` of a uniformly sampled array.

    boundary="onesided": offset stencils on the outermost two layers.
    boundary="zero":     central stencil everywhere, zero extension.
    """
    if deriv not in (1, 2):
        raise ValueError("only first and second derivatives are provided")
    values = np.asarray(values)
    work = np.moveaxis(values, axis, -1)
    n = work.shape[-1]
    weights, half = _CENTRAL[deriv]
    scale = 1.0 / h**deriv

    if boundary == "zero":
        # shifted in-place accumulation; out-of-range samples count as zero
        out = np.zeros_like(work)
        tmp = np.empty_like(work)
        for k, w in enumerate(weights):
            if w == 0.0:
                continue
            shift = k - half
            lo = max(0, -shift)
            hi = min(n, n - shift)
            t = tmp[..., lo:hi]
            np.multiply(work[..., lo + shift : hi + shift], w, out=t)
            out[..., lo:hi] += t
        out *= scale
        return np.moveaxis(out, -1, axis)

    if boundary != "onesided":
        raise ValueError(f"unknown boundary mode {boundary!r}")
    if n < 6:
        raise ValueError("need at least 6 points per axis for 4th-order stencils")

    out = np.empty_like(work)
    interior = out[..., half : n - half]
    interior.fill(0.0)
    m = n - 2 * half
    tmp = np.empty_like(interior)
    for k, w in enumerate(weights):
        if w == 0.0:
            continue
        np.multiply(work[..., k : k + m], w, out=tmp)
        interior += tmp

    left, right, width = _EDGES[deriv]
    for row in (0, 1):
        out[..., row] = np.tensordot(work[..., :width], left[row], axes=([-1], [0]))
        out[..., n - 1 - row] = np.tensordot(
            work[..., n - width :], right[row], axes=([-1], [0])
        )
    out *= scale
    return np.moveaxis(out, -1, axis)


def sixth_order_first_derivative(values, axis, h):
    """7-point 6th-order interior first derivative (one-sided 6th order rows at
    the edges). Used where a quadrature needs accuracy beyond the default."""
    values = np.asarray(values)
    work = np.moveaxis(values, axis, -1)
    n = work.shape[-1]
    if n < 8:
        raise ValueError("need at least 8 points per axis")
    weights = fd_weights(np.arange(-3, 4), 0.0, 1)
    out = np.empty_like(work)
    interior = np.zeros(work.shape[:-1] + (n - 6,), dtype=work.dtype)
    for k, w in enumerate(weights):
        if w != 0.0:
            interior += w * work[..., k : k + n - 6]
    out[..., 3:-3] = interior
    nodes = np.arange(7.0)
    for row in range(3):
        wl = fd_weights(nodes, row, 1)
        wr = fd_weights(nodes, 6 - row, 1)
        out[..., row] = np.tensordot(work[..., :7], wl, axes=([-1], [0]))
        out[..., n - 1 - row] = np.tensordot(work[..., n - 7 :], wr, axes=([-1], [0]))
    out /= h
    return np.moveaxis(out, -1, axis)
