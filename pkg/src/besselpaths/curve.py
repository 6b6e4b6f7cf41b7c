"""The limiting spectral curve of the squared Bessel path model.

Everything here derives from the cubic relation between a spatial point z
and the auxiliary variable zeta,

    z * zeta^3 - (2 z / c) zeta^2 + (z / c^2 + 1/c - a/t^2) zeta - 1/c^2 = 0,
    c = t (1 - t),

equivalently z = (1 - k zeta) / (zeta (1 - c zeta)^2) with
k = (1 - t)(t - a(1 - t)).  The three inverse branches zeta_1, zeta_2,
zeta_3 are labeled by continuation from their large-|z| behavior

    zeta_1 ~ 1/z,
    zeta_2 ~ 1/c - sqrt(a)/(t sqrt(z)),
    zeta_3 ~ 1/c + sqrt(a)/(t sqrt(z)).

The module computes the real branch points p and q, the critical time,
the limiting particle density rho(x) = |Im zeta_1(x + i0)| / pi, the
boundary curve of the path-filled region, the antiderivatives
lambda_j of the branches together with their expansion constants
ell_j, and the equilibrium-measure diagnostics.
"""

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .quadrature import gl_nodes, geometric_edges, linear_edges

ANCHOR_FACTOR = 1.0e6          # |z| of the labeling anchor, in units of q+1
# |z| where the ell constants are read off the expansions.  Larger radii
# lower the truncation error ~ R^{-3/2} but raise the double-precision
# noise of the nearly-colliding zeta_2/zeta_3 pair, which integrates up
# like R^{3/2}; 1e4 balances both near 1e-8.
ELL_RADIUS_FACTOR = 1.0e4
BOUNDARY_DELTA_FACTOR = 1e-9   # cuts approached via z +/- i * factor * (q+1)
CRITICAL_TOL = 1e-12


class CurveError(Exception):
    """Generic spectral-curve failure."""


class CriticalTimeError(CurveError):
    """Raised whenever t = a/(a+1): the critical case is unsupported."""


class BranchTrackError(CurveError):
    """Analytic continuation could not keep the branches separated."""


class CaseLabel(Enum):
    CASE1 = "case1"   # t < t*: 0 < p < q, all paths away from the hard edge
    CASE2 = "case2"   # t > t*: p < 0 < q, smallest paths stuck at 0
    CASE3 = "case3"   # t = t*: critical, rejected by downstream operations


@dataclass(frozen=True)
class ModelParams:
    """Starting position a > 0 and rescaled time t in (0, 1)."""

    a: float
    t: float

    def __post_init__(self):
        if not (self.a > 0.0):
            raise CurveError("a must be positive, got %r" % (self.a,))
        if not (0.0 < self.t < 1.0):
            raise CurveError("t must lie in (0, 1), got %r" % (self.t,))

    @property
    def c(self):
        """t (1 - t); recomputed on access so it can never go stale."""
        return self.t * (1.0 - self.t)

    @property
    def k(self):
        """(1 - t)(t - a(1 - t)); negative in Case 1, positive in Case 2."""
        return (1.0 - self.t) * (self.t - self.a * (1.0 - self.t))


class ZetaTriple(NamedTuple):
    zeta1: complex
    zeta2: complex
    zeta3: complex


class LambdaTriple(NamedTuple):
    lambda1: complex
    lambda2: complex
    lambda3: complex
    ell1: complex
    ell2: complex
    ell3: complex


@dataclass(frozen=True)
class BranchPoints:
    """Real branch points of the curve and the case they belong to."""

    p: float
    q: float
    p_minus: float
    p_plus: float
    case: CaseLabel


def critical_time(a):
    """The time t* = a/(a+1) at which the smallest paths hit x = 0."""
    if a < 0.0:
        raise CurveError("a must be non-negative")
    return a / (a + 1.0)


def classify_case(params):
    """Case 1 / 2 / 3 according to the sign of t - t*."""
    tstar = critical_time(params.a)
    if abs(params.t - tstar) <= CRITICAL_TOL:
        return CaseLabel.CASE3
    return CaseLabel.CASE1 if params.t < tstar else CaseLabel.CASE2


def _require_noncritical(params):
    case = classify_case(params)
    if case is CaseLabel.CASE3:
        raise CriticalTimeError(
            "critical time t = a/(a+1) = %.17g unsupported" % critical_time(params.a)
        )
    return case


def boundary_poly_coeffs(a, t):
    """Coefficients (A, B, C) of the quadratic left after dividing the
    branch-point equation 4ax^3 + Bx^2 + Cx = 0 by its root x = 0."""
    A = 4.0 * a
    B = t * t - 20.0 * a * t * (1.0 - t) - 8.0 * a * a * (1.0 - t) ** 2
    C = -4.0 * (1.0 - t) * (t - a * (1.0 - t)) ** 3
    return A, B, C


_BP_CACHE = {}


def branch_points(params):
    """Real branch points p, q (p the sign-changing one, q the larger)."""
    key = (params.a, params.t)
    hit = _BP_CACHE.get(key)
    if hit is not None:
        return hit
    case = _require_noncritical(params)
    A, B, C = boundary_poly_coeffs(params.a, params.t)
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        raise CurveError(
            "negative discriminant %g for (a=%g, t=%g): numerics bug"
            % (disc, params.a, params.t)
        )
    sq = math.sqrt(disc)
    # stable quadratic roots: avoid subtracting nearly equal quantities
    if B >= 0.0:
        r1 = (-B - sq) / (2.0 * A)
    else:
        r1 = (-B + sq) / (2.0 * A)
    r2 = C / (A * r1)
    p, q = (r1, r2) if r1 < r2 else (r2, r1)
    bp = BranchPoints(
        p=p, q=q, p_minus=min(0.0, p), p_plus=max(0.0, p), case=case
    )
    if not (bp.p_plus < bp.q):
        raise CurveError("branch point ordering failed for %r" % (params,))
    if len(_BP_CACHE) > 4096:
        _BP_CACHE.clear()
    _BP_CACHE[key] = bp
    return bp


def boundary_curve(a, t_grid):
    """Rows (t, p_minus, p_plus, q, case) of the region boundary."""
    rows = []
    tstar = critical_time(a)
    for t in t_grid:
        if abs(t - tstar) < 1e-9:
            raise CriticalTimeError(
                "grid point t=%.17g is within 1e-9 of the critical time" % t
            )
        bp = branch_points(ModelParams(a=a, t=float(t)))
        rows.append((float(t), bp.p_minus, bp.p_plus, bp.q, bp.case))
    return rows


# ----------------------------------------------------------------------
# Cubic solver
# ----------------------------------------------------------------------

_OMEGA = complex(-0.5, 0.5 * math.sqrt(3.0))


def _cubic_coeffs(params, z):
    c = params.c
    return (
        z,
        -2.0 * z / c,
        z / (c * c) + 1.0 / c - params.a / (params.t * params.t),
        -1.0 / (c * c),
    )


def cubic_roots(params, z):
    """The three zeta-roots at a point z (unlabeled), Cardano + polish."""
    A3, A2, A1, A0 = _cubic_coeffs(params, complex(z))
    b2 = A2 / A3
    b1 = A1 / A3
    b0 = A0 / A3
    pdep = b1 - b2 * b2 / 3.0
    qdep = 2.0 * b2 ** 3 / 27.0 - b2 * b1 / 3.0 + b0
    disc = 0.25 * qdep * qdep + pdep ** 3 / 27.0
    s = cmath.sqrt(disc)
    t1 = -0.5 * qdep + s
    t2 = -0.5 * qdep - s
    big = t1 if abs(t1) >= abs(t2) else t2
    if big == 0.0:
        roots = [-b2 / 3.0] * 3
    else:
        cbrt = big ** (1.0 / 3.0)
        roots = []
        w = cbrt
        for _ in range(3):
            roots.append(w - pdep / (3.0 * w) - b2 / 3.0)
            w *= _OMEGA
    # one/two Newton polish steps on the original cubic
    out = []
    for r in roots:
        for _ in range(2):
            f = ((A3 * r + A2) * r + A1) * r + A0
            fp = (3.0 * A3 * r + 2.0 * A2) * r + A1
            if fp == 0.0:
                break
            r = r - f / fp
        out.append(r)
    return out


def cubic_roots_arr(params, zarr):
    """Vectorized Cardano over an array of z; returns shape (N, 3)."""
    z = np.asarray(zarr, dtype=complex)
    c = params.c
    A3 = z
    A2 = -2.0 * z / c
    A1 = z / (c * c) + 1.0 / c - params.a / (params.t * params.t)
    A0 = -1.0 / (c * c) + 0.0 * z
    b2 = A2 / A3
    b1 = A1 / A3
    b0 = A0 / A3
    pdep = b1 - b2 * b2 / 3.0
    qdep = 2.0 * b2 ** 3 / 27.0 - b2 * b1 / 3.0 + b0
    s = np.sqrt(0.25 * qdep * qdep + pdep ** 3 / 27.0 + 0j)
    t1 = -0.5 * qdep + s
    t2 = -0.5 * qdep - s
    big = np.where(np.abs(t1) >= np.abs(t2), t1, t2)
    cbrt = big ** (1.0 / 3.0)
    roots = np.empty(z.shape + (3,), dtype=complex)
    w = cbrt.copy()
    for j in range(3):
        roots[..., j] = w - pdep / (3.0 * w) - b2 / 3.0
        w = w * _OMEGA
    for _ in range(2):
        r = roots
        f = ((A3[..., None] * r + A2[..., None]) * r + A1[..., None]) * r + A0[..., None]
        fp = (3.0 * A3[..., None] * r + 2.0 * A2[..., None]) * r + A1[..., None]
        roots = r - f / fp
    return roots


def invert_zeta(params, zeta):
    """The defining map z(zeta) = (1 - k zeta)/(zeta (1 - c zeta)^2)."""
    c = params.c
    return (1.0 - params.k * zeta) / (zeta * (1.0 - c * zeta) ** 2)


# ----------------------------------------------------------------------
# Branch labeling by homotopy from a large real anchor
# ----------------------------------------------------------------------

_PERMS = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


def _asymptotic_labels(params, z):
    """Predicted (zeta1, zeta2, zeta3) from the large-|z| expansions."""
    c = params.c
    sz = cmath.sqrt(z)
    sa = math.sqrt(params.a)
    z1 = 1.0 / z + (1.0 - params.t) * (params.t + params.a * (1.0 - params.t)) / z ** 2
    z2 = 1.0 / c - sa / (params.t * sz) - 0.5 / z
    z3 = 1.0 / c + sa / (params.t * sz) - 0.5 / z
    return (z1, z2, z3)


class ZetaWalker:
    """Analytic continuation of the labeled branch triple along paths.

    The walker starts at the anchor z0 = 1e6 (q+1) where the asymptotic
    expansions identify the branches unambiguously, then tracks the root
    triple along straight segments, bisecting each step until no root
    moves by more than half the minimal root gap.
    """

    def __init__(self, params, bp=None):
        self.params = params
        self.bp = bp if bp is not None else branch_points(params)
        z0 = ANCHOR_FACTOR * (self.bp.q + 1.0)
        roots = cubic_roots(params, z0)
        pred = _asymptotic_labels(params, z0)
        labeled = []
        pool = list(roots)
        for target in pred:
            i = min(range(len(pool)), key=lambda j: abs(pool[j] - target))
            labeled.append(pool.pop(i))
        gap = min(
            abs(labeled[0] - labeled[1]),
            abs(labeled[0] - labeled[2]),
            abs(labeled[1] - labeled[2]),
        )
        if max(abs(l - p) for l, p in zip(labeled, pred)) > 0.25 * gap:
            raise BranchTrackError("anchor labeling ambiguous")
        self.z = complex(z0)
        self.zeta = labeled

    def _match(self, roots):
        prev = self.zeta
        best = None
        best_cost = math.inf
        for perm in _PERMS:
            cost = (
                abs(prev[0] - roots[perm[0]])
                + abs(prev[1] - roots[perm[1]])
                + abs(prev[2] - roots[perm[2]])
            )
            if cost < best_cost:
                best_cost = cost
                best = perm
        matched = [roots[best[0]], roots[best[1]], roots[best[2]]]
        disp = max(abs(m - p) for m, p in zip(matched, prev))
        gap = min(
            abs(prev[0] - prev[1]), abs(prev[0] - prev[2]), abs(prev[1] - prev[2])
        )
        return matched, disp, gap

    def step_to(self, znew):
        """Continue the triple to znew; substeps inserted as needed."""
        znew = complex(znew)
        scale = self.bp.q + 1.0
        stack = [znew]
        while stack:
            zt = stack[-1]
            roots = cubic_roots(self.params, zt)
            matched, disp, gap = self._match(roots)
            if disp <= 0.45 * gap:
                self.z = zt
                self.zeta = matched
                stack.pop()
            else:
                mid = 0.5 * (self.z + zt)
                if abs(mid - self.z) < 1e-13 * (abs(self.z) + scale):
                    raise BranchTrackError(
                        "homotopy step collapse near z=%r; use the "
                        "branch-point expansions instead" % (zt,)
                    )
                stack.append(mid)
        return tuple(self.zeta)

    def walk(self, waypoints):
        out = None
        for w in waypoints:
            out = self.step_to(w)
        return out


def _route(bp, z):
    """Waypoints from the anchor to z avoiding the branch-point line."""
    z0 = ANCHOR_FACTOR * (bp.q + 1.0)
    H = 0.35 * (bp.q + 1.0)
    if z.imag == 0.0:
        x = z.real
        if x > bp.q:
            return [z]
        # analytic real point between the cuts: dip through a half plane
        return [complex(z0, H), complex(x, H), z]
    s = 1.0 if z.imag > 0 else -1.0
    h = max(abs(z.imag), H)
    return [complex(z0, s * h), complex(z.real, s * h), z]


def boundary_delta(bp):
    return BOUNDARY_DELTA_FACTOR * (bp.q + 1.0)


def _resolve_point(params, z, side, lambda_cuts=False):
    """Apply the boundary-value convention; returns the point to track to.

    With `lambda_cuts` the whole half line (-inf, q] counts as cut:
    lambda_1 and lambda_2 jump on all of it even where the zeta branches
    are analytic.
    """
    bp = branch_points(params)
    z = complex(z)
    scale = bp.q + 1.0
    for b in (0.0, bp.p, bp.q):
        if abs(z - b) <= 1e-12 * scale:
            raise CurveError(
                "z=%r is within 1e-12 of a branch point; use the local "
                "expansions instead" % (z,)
            )
    if z.imag == 0.0:
        x = z.real
        if lambda_cuts:
            on_cut = x <= bp.q
        else:
            on_cut = (x <= bp.p_minus) or (bp.p_plus <= x <= bp.q)
        if on_cut:
            if side is None:
                raise CurveError(
                    "z=%g lies on a cut: supply side=+1 or -1 for the "
                    "boundary value" % x
                )
            z = complex(x, side * boundary_delta(bp))
    return bp, z


def zeta_at(params, z, side=None):
    """Labeled branch values at z; `side` picks the boundary value on cuts."""
    bp, zeff = _resolve_point(params, z, side)
    walker = ZetaWalker(params, bp)
    vals = walker.walk(_route(bp, zeff))
    return ZetaTriple(*vals)


def zeta_path_values(params, points):
    """Labeled triples along a connected path of complex points."""
    bp = branch_points(params)
    pts = [complex(p) for p in points]
    if not pts:
        return np.zeros((0, 3), dtype=complex)
    walker = ZetaWalker(params, bp)
    walker.walk(_route(bp, pts[0]))
    out = np.empty((len(pts), 3), dtype=complex)
    out[0] = walker.zeta
    for i, p in enumerate(pts[1:], start=1):
        out[i] = walker.step_to(p)
    return out


# ----------------------------------------------------------------------
# Density and support
# ----------------------------------------------------------------------

def density(params, x):
    """Limiting particle density rho(x; t); zero off [p_plus, q].

    On the support this is |Im zeta|/pi for the non-real root pair of
    the cubic at x, which avoids any need for branch continuation.
    """
    bp = branch_points(params)
    x = float(x)
    if x <= bp.p_plus or x >= bp.q:
        return 0.0
    roots = cubic_roots(params, complex(x, 0.0))
    return max(abs(r.imag) for r in roots) / math.pi


def density_arr(params, xs):
    """Vectorized density on an array of points."""
    bp = branch_points(params)
    xs = np.asarray(xs, dtype=float)
    out = np.zeros_like(xs)
    inside = (xs > bp.p_plus) & (xs < bp.q)
    if np.any(inside):
        roots = cubic_roots_arr(params, xs[inside].astype(complex))
        out[inside] = np.abs(roots.imag).max(axis=1) / math.pi
    return out


def _edge_sub_points(a_end, b_end, panels, nodes):
    """Points/weights for int_a^b f dx with a sqrt substitution at a_end.

    Parametrizes x = a_end + s^2 * sign, s in [0, sqrt(|b-a|)]; returns
    (x, w) ready for a plain weighted sum, absorbing the Jacobian 2s.
    """
    length = abs(b_end - a_end)
    sgn = 1.0 if b_end > a_end else -1.0
    smax = math.sqrt(length)
    xg, wg = gl_nodes(nodes)
    edges = np.linspace(0.0, smax, panels + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    halfs = 0.5 * (edges[1:] - edges[:-1])
    s = (mids[:, None] + halfs[:, None] * xg[None, :]).ravel()
    ws = (halfs[:, None] * wg[None, :]).ravel()
    x = a_end + sgn * s * s
    w = ws * 2.0 * s * sgn
    return x, w


def support_mass(params, panels=12, nodes=32):
    """int rho(x) dx over [p_plus, q] with edge-refined quadrature."""
    bp = branch_points(params)
    mid = 0.5 * (bp.p_plus + bp.q)
    xl, wl = _edge_sub_points(bp.p_plus, mid, panels, nodes)
    xr, wr = _edge_sub_points(bp.q, mid, panels, nodes)
    vl = density_arr(params, xl)
    vr = density_arr(params, xr)
    # the q-side parametrization runs from q down to mid: flip its sign
    return float(np.dot(wl, vl) - np.dot(wr, vr))


# ----------------------------------------------------------------------
# Lambda functions
# ----------------------------------------------------------------------

def _leg_points(z_a, z_b, sub_a=False, sub_b=False, panels=6, nodes=32,
                clip_dist=0.0):
    """Quadrature points/weights along the segment [z_a, z_b].

    Square-root substitutions remove the z^(1/2)-type behavior of the
    branches at segment ends that sit on branch points.  `clip_dist`
    truncates the substituted parametrization so that no node comes
    closer than that to the branch point (the branches are bounded
    there, so the discarded sliver contributes O(clip_dist)).
    """
    if sub_a and sub_b:
        mid = 0.5 * (z_a + z_b)
        pa = _leg_points(z_a, mid, sub_a=True, panels=panels, nodes=nodes,
                         clip_dist=clip_dist)
        pb = _leg_points(z_b, mid, sub_a=True, panels=panels, nodes=nodes,
                         clip_dist=clip_dist)
        return (
            np.concatenate([pa[0], pb[0]]),
            np.concatenate([pa[1], -pb[1]]),
        )
    if sub_b:
        x, w = _leg_points(z_b, z_a, sub_a=True, panels=panels, nodes=nodes,
                           clip_dist=clip_dist)
        return x, -w
    xg, wg = gl_nodes(nodes)
    d = z_b - z_a
    if sub_a:
        # z = z_a + d u^2, dz = 2 d u du; geometric u-panels toward the
        # branch point resolve any further singularity sitting close by
        u_floor = 0.0
        if clip_dist > 0.0:
            u_floor = min(0.5, math.sqrt(clip_dist / abs(d)))
        edges = np.concatenate([[u_floor], 2.0 ** np.arange(-8.0, 1.0)])
        edges = np.unique(np.clip(edges, u_floor, 1.0))
        mids = 0.5 * (edges[1:] + edges[:-1])
        halfs = 0.5 * (edges[1:] - edges[:-1])
        u = (mids[:, None] + halfs[:, None] * xg[None, :]).ravel()
        wu = (halfs[:, None] * wg[None, :]).ravel()
        z = z_a + d * u * u
        w = wu * 2.0 * d * u
        return z, w
    edges = np.linspace(0.0, 1.0, panels + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    halfs = 0.5 * (edges[1:] - edges[:-1])
    u = (mids[:, None] + halfs[:, None] * xg[None, :]).ravel()
    wu = (halfs[:, None] * wg[None, :]).ravel()
    z = z_a + d * u
    w = wu * d
    return z, w


def _radial_legs(z_from, z_to, scale):
    """Geometric split of a long real-axis leg into octave panels."""
    legs = []
    x = z_from
    step = 0.5 * scale
    while x + step < z_to:
        legs.append((x, x + step, False, False))
        x += step
        step *= 2.0
    legs.append((x, z_to, False, False))
    return legs


def _integrate_zeta_legs(params, legs):
    """Integral of the labeled triple along consecutive legs.

    Each leg is (z_a, z_b, sub_a, sub_b).  Returns a complex 3-vector.
    Consecutive legs must share endpoints (a connected path).  The walk
    starts at the node farthest from the branch points and proceeds
    outward in both directions, so nodes clustering toward a branch
    point are reached by geometric refinement rather than head-on.
    """
    bp = branch_points(params)
    scale = bp.q + 1.0
    all_pts = []
    all_w = []
    for leg in legs:
        z_a, z_b, sub_a, sub_b = leg
        # Clip only at the pinch points p and q, where the tracked root
        # pair collides (bounded sqrt behavior, so the sliver error is
        # O(clip)).  At the origin the branches diverge but stay
        # separated, so the walker resolves them arbitrarily close.
        end = z_a if sub_a else (z_b if sub_b else None)
        clip = 0.0
        if end is not None and abs(end) > 1e-12 * scale:
            clip = 1e-10 * scale
        pts, w = _leg_points(z_a, z_b, sub_a, sub_b, clip_dist=clip)
        all_pts.append(pts)
        all_w.append(w)
    pts = np.concatenate(all_pts)
    w = np.concatenate(all_w)
    dist = np.minimum(
        np.abs(pts), np.minimum(np.abs(pts - bp.p), np.abs(pts - bp.q))
    )
    split = int(np.argmax(dist))
    vals = np.empty((len(pts), 3), dtype=complex)
    vals[: split + 1] = zeta_path_values(params, pts[split::-1])[::-1]
    if split + 1 < len(pts):
        vals[split:] = zeta_path_values(params, pts[split:])
    return vals.T @ w


_L2M_CACHE = {}


def lambda2_minus_at_pminus(params):
    """The constant lambda_{2-}(p_minus) entering the third lambda."""
    key = (params.a, params.t)
    hit = _L2M_CACHE.get(key)
    if hit is not None:
        return hit
    bp = branch_points(params)
    H = 0.35 * (bp.q + 1.0)
    legs = [
        (complex(bp.q, 0.0), complex(bp.q, -H), True, False),
        (complex(bp.q, -H), complex(bp.p_minus, -H), False, False),
        (complex(bp.p_minus, -H), complex(bp.p_minus, 0.0), False, True),
    ]
    val = _integrate_zeta_legs(params, legs)[1]
    _L2M_CACHE[key] = val
    return val


def _lambda12_legs(bp, z):
    """Path legs from q to z for lambda_1 / lambda_2."""
    scale = bp.q + 1.0
    if z.imag == 0.0 and z.real > bp.q:
        first = min(0.25 * scale, 0.5 * (z.real - bp.q))
        legs = [(complex(bp.q), complex(bp.q + first), True, False)]
        legs += _radial_legs(bp.q + first, z.real, scale)
        return [
            (complex(a), complex(b), sa, sb) for (a, b, sa, sb) in legs
        ]
    s = 1.0 if z.imag > 0 else -1.0
    h = max(abs(z.imag), 0.35 * scale)
    return [
        (complex(bp.q, 0.0), complex(bp.q, s * h), True, False),
        (complex(bp.q, s * h), complex(z.real, s * h), False, False),
        (complex(z.real, s * h), z, False, False),
    ]


def _lambda3_legs(bp, z):
    """Path legs from p_minus to z for lambda_3 (cut on (-inf, p_minus])."""
    scale = bp.q + 1.0
    pm = bp.p_minus
    if z.imag == 0.0 and z.real > pm:
        # lift over the interior branch points, then come back down
        h = 0.3 * scale
        x0 = bp.q + 0.5 * scale
        if z.real > x0 + 0.25 * scale:
            # far target: descend just beyond q, then walk out geometrically
            legs = [
                (complex(pm, 0.0), complex(pm, h), True, False),
                (complex(pm, h), complex(x0, h), False, False),
                (complex(x0, h), complex(x0, 0.0), False, False),
            ]
            legs += [
                (complex(a), complex(b), sa, sb)
                for (a, b, sa, sb) in _radial_legs(x0, z.real, scale)
            ]
            return legs
        return [
            (complex(pm, 0.0), complex(pm, h), True, False),
            (complex(pm, h), complex(z.real, h), False, False),
            (complex(z.real, h), z, False, False),
        ]
    s = 1.0 if z.imag > 0 else -1.0
    h = max(abs(z.imag), 0.3 * scale)
    return [
        (complex(pm, 0.0), complex(pm, s * h), True, False),
        (complex(pm, s * h), complex(z.real, s * h), False, False),
        (complex(z.real, s * h), z, False, False),
    ]


def _lambda1_expansion(params, z):
    a, t = params.a, params.t
    return cmath.log(z) - (1.0 - t) * (t + a * (1.0 - t)) / z


def _lambda2_expansion(params, z):
    a, t = params.a, params.t
    c = params.c
    saz = cmath.sqrt(a * z)
    return (
        z / c
        - 2.0 * saz / t
        - 0.5 * cmath.log(z)
        + (t + 4.0 * a * (1.0 - t)) / (4.0 * saz)
        + (1.0 - t) * (t + a * (1.0 - t)) / (2.0 * z)
    )


def _lambda3_expansion(params, z):
    a, t = params.a, params.t
    c = params.c
    saz = cmath.sqrt(a * z)
    return (
        z / c
        + 2.0 * saz / t
        - 0.5 * cmath.log(z)
        - (t + 4.0 * a * (1.0 - t)) / (4.0 * saz)
        + (1.0 - t) * (t + a * (1.0 - t)) / (2.0 * z)
    )


_ELL_CACHE = {}


def ell_constants(params):
    """Expansion constants (ell1, ell2, ell3) of the lambda functions."""
    key = (params.a, params.t)
    hit = _ELL_CACHE.get(key)
    if hit is not None:
        return hit
    bp = branch_points(params)
    R = ELL_RADIUS_FACTOR * (bp.q + 1.0)
    zR = complex(R, 0.0)
    lam12 = _integrate_zeta_legs(params, _lambda12_legs(bp, zR))
    lam3 = (
        _integrate_zeta_legs(params, _lambda3_legs(bp, zR))[2]
        + lambda2_minus_at_pminus(params)
    )
    ell1 = lam12[0] - _lambda1_expansion(params, zR)
    ell2 = lam12[1] - _lambda2_expansion(params, zR)
    ell3 = lam3 - _lambda3_expansion(params, zR)
    out = (ell1, ell2, ell3)
    _ELL_CACHE[key] = out
    return out


def lambda_at(params, z, side=None):
    """The three lambda functions at z (off the cuts, or boundary values)."""
    bp, zeff = _resolve_point(params, z, side, lambda_cuts=True)
    lam12 = _integrate_zeta_legs(params, _lambda12_legs(bp, zeff))
    lam3 = (
        _integrate_zeta_legs(params, _lambda3_legs(bp, zeff))[2]
        + lambda2_minus_at_pminus(params)
    )
    l1, l2, l3 = ell_constants(params)
    return LambdaTriple(
        lambda1=lam12[0],
        lambda2=lam12[1],
        lambda3=lam3,
        ell1=l1,
        ell2=l2,
        ell3=l3,
    )


def lambda_inequality_report(params, samples, delta=1e-3):
    """Sign checks of the lambda orderings off the cuts.

    Evaluates Re(lambda2 - lambda1) at points displaced +/- i delta off
    (p_plus, q) and Re(lambda2 - lambda3) off (-inf, p_minus); both must
    be negative.  Returns a list of rows
    (region, x, side, re_difference, violated).
    """
    _require_noncritical(params)
    bp = branch_points(params)
    rows = []
    if samples <= 0:
        return rows
    width = bp.q - bp.p_plus
    xs1 = np.linspace(bp.p_plus + 0.05 * width, bp.q - 0.05 * width, samples)
    for x in xs1:
        for side in (1.0, -1.0):
            lam = lambda_at(params, complex(x, side * delta))
            d = (lam.lambda2 - lam.lambda1).real
            rows.append(("bulk_cut", float(x), side, d, d >= 0.0))
    span = max(1.0, bp.q + 1.0)
    xs2 = np.linspace(bp.p_minus - 2.0 * span, bp.p_minus - 0.02 * span, samples)
    for x in xs2:
        for side in (1.0, -1.0):
            lam = lambda_at(params, complex(x, side * delta))
            d = (lam.lambda2 - lam.lambda3).real
            rows.append(("neg_cut", float(x), side, d, d >= 0.0))
    return rows


# ----------------------------------------------------------------------
# Equilibrium measure diagnostics
# ----------------------------------------------------------------------

@dataclass
class EquilibriumReport:
    mass_mu1: float
    mass_mu2: float
    mu2_tail_estimate: float
    constraint_violation: float       # max of (dmu2/dx - dsigma/dx) on Delta_2
    case2_equality_gap: float         # max |dmu2/dx - dsigma/dx| on (p_minus, 0)
    zeta3_sign_ok: bool


def _sigma_density(params, x):
    return math.sqrt(params.a) / (math.pi * params.t * math.sqrt(abs(x)))


def equilibrium_checks(params, cutoff_factor=1.0e4, panels=14, nodes=32):
    """Mass normalizations and the constraint mu2 <= sigma.

    mu1 is the limiting path density; mu2 has density
    dsigma/dx + Im zeta_3+(x)/pi on (-inf, 0] with dsigma/dx =
    sqrt(a)/(pi t) |x|^{-1/2}.  The mass of mu2 on (-inf, -X) is added
    analytically from the x^{-3/2} tail of the integrand.
    """
    case = _require_noncritical(params)
    bp = branch_points(params)
    scale = bp.q + 1.0
    mass1 = support_mass(params)

    # sign of Im zeta_3+ on Delta_2 via one labeled evaluation
    probe = bp.p_minus - 0.7 * scale
    zt = zeta_at(params, probe, side=+1)
    sign_ok = zt.zeta3.imag < 0.0 and abs(zt.zeta2.imag + zt.zeta3.imag) < 1e-8 * (
        1.0 + abs(zt.zeta3.imag)
    )

    X = cutoff_factor * scale
    # integrate dmu2 on [-X, p_minus] in the s = sqrt(p_minus - x) variable
    smax = math.sqrt(X + bp.p_minus)
    edges = geometric_edges(0.0, smax, 0.05 * math.sqrt(scale))
    xg, wg = gl_nodes(nodes)
    mids = 0.5 * (edges[1:] + edges[:-1])
    halfs = 0.5 * (edges[1:] - edges[:-1])
    s = (mids[:, None] + halfs[:, None] * xg[None, :]).ravel()
    ws = ((halfs[:, None] * wg[None, :]).ravel()) * 2.0 * s
    xs = bp.p_minus - s * s
    roots = cubic_roots_arr(params, xs.astype(complex))
    im_abs = np.abs(roots.imag).max(axis=1)
    sigma = np.sqrt(params.a) / (math.pi * params.t * np.sqrt(np.abs(xs)))
    dmu2 = sigma - im_abs / math.pi  # Im zeta_3+ < 0 on Delta_2
    mass2_main = float(np.dot(ws, dmu2))
    tail = (params.t + 4.0 * params.a * (1.0 - params.t)) / (
        4.0 * math.pi * math.sqrt(params.a) * math.sqrt(X)
    )
    # on (p_minus, 0) in Case 2 the constraint is active: dmu2 = dsigma
    active = 0.0
    if case is CaseLabel.CASE2:
        xs0, ws0 = _edge_sub_points(0.0, bp.p_minus, panels, nodes)
        sig0 = np.sqrt(params.a) / (math.pi * params.t * np.sqrt(np.abs(xs0)))
        active = float(np.dot(-ws0, sig0))
    mass2 = mass2_main + tail + active

    violation = float(np.max(dmu2 - sigma))

    gap = 0.0
    if case is CaseLabel.CASE2:
        inner = np.linspace(0.9 * bp.p_minus, 0.1 * bp.p_minus, 17)
        worst = 0.0
        for x in inner:
            zt = zeta_at(params, float(x), side=+1)
            worst = max(worst, abs(zt.zeta3.imag) / math.pi)
        gap = worst

    return EquilibriumReport(
        mass_mu1=mass1,
        mass_mu2=mass2,
        mu2_tail_estimate=tail,
        constraint_violation=violation,
        case2_equality_gap=gap,
        zeta3_sign_ok=bool(sign_ok),
    )
