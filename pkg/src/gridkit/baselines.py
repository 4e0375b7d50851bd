"""Reference density compensation: Voronoi cell areas and Pipe's fixed point."""
import logging

import numpy as np
from scipy.sparse import csr_matrix
from scipy.spatial import QhullError, Voronoi, cKDTree

from .dcf_gp import DensityWeights
from .errors import DegenerateGeometry, InvalidArgument, ZeroDenominator
from .geometry import DUPLICATE_TOL, find_duplicates
from .kernel import KernelSpec, kaiser_bessel

__all__ = ["voronoi_weights", "fixed_point_weights", "clip_polygon_to_box", "polygon_area"]

logger = logging.getLogger(__name__)

_BOX = 0.5
# sentinel sites far outside the box; they bound every cell without
# touching the clipped region (any box point is closer to some real sample)
_FAR = 10.0


def polygon_area(poly):
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def clip_polygon_to_box(poly, half=_BOX):
    """Sutherland-Hodgman clip of a convex polygon to ``[-half, half]^2``."""
    out = [tuple(p) for p in poly]
    for axis in (0, 1):
        for sign in (1.0, -1.0):
            if not out:
                break
            src, out = out, []
            prev = src[-1]
            prev_in = sign * prev[axis] <= half
            for cur in src:
                cur_in = sign * cur[axis] <= half
                if cur_in != prev_in:
                    t = (sign * half - prev[axis]) / (cur[axis] - prev[axis])
                    out.append(tuple(prev[i] + t * (cur[i] - prev[i]) for i in range(2)))
                if cur_in:
                    out.append(cur)
                prev, prev_in = cur, cur_in
    return np.array(out, dtype=np.float64).reshape(-1, 2)


def _ordered(verts):
    c = verts.mean(axis=0)
    ang = np.arctan2(verts[:, 1] - c[1], verts[:, 0] - c[0])
    return verts[np.argsort(ang)]


def voronoi_weights(s):
    """Area of each sample's Voronoi cell, clipped to the unit frequency box.

    Coincident samples share one cell equally, so the weights always sum to
    the box area (1).
    """
    if s.dim != 2:
        raise InvalidArgument("voronoi_weights needs a 2D sample set")
    groups = find_duplicates(s, DUPLICATE_TOL)
    reps = np.array([g[0] for g in groups])
    pts = s.coords[reps]
    if len(pts) < 3 or np.linalg.matrix_rank(pts - pts.mean(axis=0), tol=1e-12) < 2:
        raise DegenerateGeometry("Voronoi weights need at least 3 non-collinear distinct samples")

    far = _FAR * np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=np.float64)
    try:
        vor = Voronoi(np.vstack([pts, far]))
    except QhullError as exc:
        raise DegenerateGeometry(f"Voronoi construction failed: {exc}") from exc

    w = np.empty(s.M)
    for gi, group in enumerate(groups):
        region = vor.regions[vor.point_region[gi]]
        if -1 in region or len(region) < 3:
            raise DegenerateGeometry(f"unbounded Voronoi cell for sample {group[0]}")
        cell = clip_polygon_to_box(_ordered(vor.vertices[region]))
        w[group] = polygon_area(cell) / len(group)
    return DensityWeights(w, method="voronoi")


def _kernel_matrix(coords, spec, matrix_size):
    """Sparse ``C2(k_m - k_j)`` in frequency units (unit integral over k)."""
    G = np.asarray(matrix_size, dtype=np.float64)
    radius = spec.width / 2.0 / G
    scaled = coords / radius
    tree = cKDTree(scaled)
    pairs = tree.query_pairs(r=1.0, p=np.inf, output_type="ndarray")
    m = coords.shape[0]
    rows = np.concatenate([np.arange(m), pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([np.arange(m), pairs[:, 1], pairs[:, 0]])
    du = (coords[rows] - coords[cols]) * G
    vals = np.prod(G) * kaiser_bessel(du[:, 0], spec) * kaiser_bessel(du[:, 1], spec)
    return csr_matrix((vals, (rows, cols)), shape=(m, m))


def fixed_point_weights(s, spec=None, n_iter=8, matrix_size=(144, 144)):
    """Pipe's iteration ``w <- w / (C2 * w)`` for exactly `n_iter` steps.

    Parameters
    ----------
    s : SampleSet
    spec : KernelSpec, optional
        Unit-integral kernel; defaults to width 4 with the Beatty shape for
        oversampling 1.5.
    n_iter : int
        Number of iterations; there is no convergence test.
    matrix_size : (int, int)
        Grid size ``(G_x, G_y)`` that converts frequency differences to grid
        units. ``C2(dk) = G_x G_y C(G_x dk_x) C(G_y dk_y)`` integrates to 1
        over frequency, which keeps the reconstruction scale correct.
    """
    if s.dim != 2:
        raise InvalidArgument("fixed_point_weights needs a 2D sample set")
    if spec is None:
        spec = KernelSpec.beatty(4.0, 1.5)
    if not spec.normalized:
        raise InvalidArgument("fixed_point_weights needs a unit-integral kernel")
    n_iter = int(n_iter)
    if n_iter < 0:
        raise InvalidArgument("n_iter must be >= 0")
    K = _kernel_matrix(s.coords, spec, matrix_size)
    w = np.full(s.M, 1.0 / s.M)
    for _ in range(n_iter):
        den = K @ w
        bad = np.flatnonzero(~(den > 0))
        if bad.size:
            raise ZeroDenominator(bad[0])
        w = w / den
    residual = float(np.max(np.abs(K @ w - 1.0)))
    logger.info("fixed point: %d iterations, max |C2*w - 1| = %.3g", n_iter, residual)
    return DensityWeights(
        w,
        method="fixed_point",
        params={"n_iter": n_iter, "width": spec.width, "beta": spec.beta,
                "matrix_size": [int(g) for g in matrix_size], "residual": residual},
    )
