"""Composite Gauss-Legendre quadrature helpers.

Panels are fixed-order Gauss-Legendre rules; integrands in this package
are analytic inside every panel (endpoint singularities are removed by
explicit square-root substitutions at the call sites), so a moderate
node count per panel reaches machine accuracy.
"""

import numpy as np

_NODES_CACHE = {}


def gl_nodes(npts):
    """Cached Gauss-Legendre nodes and weights on [-1, 1]."""
    if npts not in _NODES_CACHE:
        _NODES_CACHE[npts] = np.polynomial.legendre.leggauss(npts)
    return _NODES_CACHE[npts]


def panel_points(edges, nodes=32):
    """Quadrature points and weights for panels delimited by `edges`.

    `edges` is an increasing (or decreasing) 1-D array of real panel
    boundaries; returns flat arrays (x, w) covering all panels.
    """
    xg, wg = gl_nodes(nodes)
    edges = np.asarray(edges, dtype=float)
    mids = 0.5 * (edges[1:] + edges[:-1])
    halfs = 0.5 * (edges[1:] - edges[:-1])
    x = (mids[:, None] + halfs[:, None] * xg[None, :]).ravel()
    w = (halfs[:, None] * wg[None, :]).ravel()
    return x, w


def composite_gl(f, edges, nodes=32):
    """Integrate vectorized `f` over the union of panels given by `edges`."""
    x, w = panel_points(edges, nodes)
    return np.dot(w, f(x))


def geometric_edges(a, b, first, ratio=2.0):
    """Panel edges from a to b, widths growing geometrically from `first`."""
    if b <= a:
        raise ValueError("geometric_edges requires b > a")
    edges = [a]
    h = first
    while edges[-1] + h < b:
        edges.append(edges[-1] + h)
        h *= ratio
    edges.append(b)
    return np.asarray(edges)


def linear_edges(a, b, panels):
    return np.linspace(a, b, panels + 1)
