"""Non-Cartesian sample sets in the unit frequency box.

Frequencies are in cycles/pixel, so every coordinate lies in [-0.5, 0.5].
"""
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import InvalidArgument

__all__ = [
    "SampleSet",
    "radial_trajectory",
    "spiral_trajectory",
    "propeller_trajectory",
    "find_duplicates",
    "DUPLICATE_TOL",
]

DUPLICATE_TOL = 1e-12
# roundoff allowance when rotated blade points land exactly on the box edge
_EDGE_SLACK = 1e-12


@dataclass(eq=False)
class SampleSet:
    """M frequency coordinates in D dimensions.

    Parameters
    ----------
    coords : array_like, shape (M, D)
        Frequencies in cycles/pixel, each component in [-0.5, 0.5].
    """

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.float64)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise InvalidArgument(f"coords must be a non-empty (M, D) array, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InvalidArgument("coords contain NaN or Inf")
        if np.any(np.abs(c) > 0.5):
            raise InvalidArgument("coords must lie in [-0.5, 0.5]")
        c.flags.writeable = False
        self.coords = c

    @property
    def M(self):
        return self.coords.shape[0]

    @property
    def dim(self):
        return self.coords.shape[1]

    def __len__(self):
        return self.M

    def __repr__(self):
        return f"SampleSet(M={self.M}, dim={self.dim})"


def _check_count(name, value, minimum=1):
    if int(value) != value or value < minimum:
        raise InvalidArgument(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _check_kmax(k_max):
    if not (0.0 < k_max <= 0.5):
        raise InvalidArgument(f"k_max must lie in (0, 0.5], got {k_max!r}")


def radial_trajectory(n_spokes, n_per_spoke, k_max=0.5):
    """Full-diameter radial spokes at angles ``pi * j / n_spokes``.

    Points on each spoke are equispaced on ``[-k_max, k_max]``; the origin is
    sampled (once per spoke) only when `n_per_spoke` is odd.
    """
    n_spokes = _check_count("n_spokes", n_spokes)
    n_per_spoke = _check_count("n_per_spoke", n_per_spoke, 2)
    _check_kmax(k_max)
    r = np.linspace(-k_max, k_max, n_per_spoke)
    theta = np.pi * np.arange(n_spokes) / n_spokes
    kx = np.cos(theta)[:, None] * r[None, :]
    ky = np.sin(theta)[:, None] * r[None, :]
    return SampleSet(np.stack([kx.ravel(), ky.ravel()], axis=1))


def spiral_trajectory(n_interleaves, n_revolutions, n_per_interleave, k_max=0.5):
    """Uniform-density Archimedean spiral interleaves.

    Interleave ``p`` at parameter ``t`` in [0, 1] has radius ``k_max * t`` and
    angle ``2 pi n_revolutions t + 2 pi p / n_interleaves``.
    """
    n_interleaves = _check_count("n_interleaves", n_interleaves)
    n_revolutions = _check_count("n_revolutions", n_revolutions)
    n_per_interleave = _check_count("n_per_interleave", n_per_interleave)
    _check_kmax(k_max)
    t = np.linspace(0.0, 1.0, n_per_interleave)
    offset = 2 * np.pi * np.arange(n_interleaves) / n_interleaves
    angle = 2 * np.pi * n_revolutions * t[None, :] + offset[:, None]
    radius = k_max * t[None, :]
    kx = radius * np.cos(angle)
    ky = radius * np.sin(angle)
    return SampleSet(np.stack([kx.ravel(), ky.ravel()], axis=1))


def propeller_trajectory(n_angles, angle_step, lines_per_angle, line_sep, points_per_line):
    """PROPELLER blades of parallel lines rotated by multiples of `angle_step`.

    Each blade holds `lines_per_angle` lines separated by `line_sep` and
    centered on the origin; each line has `points_per_line` equispaced points
    spanning [-0.5, 0.5] along the blade axis. Points falling outside the
    unit frequency box are dropped.
    """
    n_angles = _check_count("n_angles", n_angles)
    lines_per_angle = _check_count("lines_per_angle", lines_per_angle)
    points_per_line = _check_count("points_per_line", points_per_line)
    if not np.isfinite(line_sep) or line_sep < 0:
        raise InvalidArgument(f"line_sep must be >= 0, got {line_sep!r}")
    if not np.isfinite(angle_step):
        raise InvalidArgument("angle_step must be finite")

    if points_per_line == 1:
        s = np.zeros(1)
    else:
        s = np.linspace(-0.5, 0.5, points_per_line)
    offsets = (np.arange(lines_per_angle) - (lines_per_angle - 1) / 2.0) * line_sep
    blocks = []
    for a in range(n_angles):
        theta = a * angle_step
        c, sn = np.cos(theta), np.sin(theta)
        along = s[None, :]
        across = offsets[:, None]
        kx = along * c - across * sn
        ky = along * sn + across * c
        blocks.append(np.stack([kx.ravel(), ky.ravel()], axis=1))
    k = np.concatenate(blocks)
    keep = np.all(np.abs(k) <= 0.5 + _EDGE_SLACK, axis=1)
    if not np.any(keep):
        raise InvalidArgument("no propeller points fall inside the unit frequency box")
    return SampleSet(np.clip(k[keep], -0.5, 0.5))


def find_duplicates(s, tol=DUPLICATE_TOL):
    """Group sample indices whose locations coincide.

    Two samples are linked when their max-norm distance is at most `tol`;
    groups are the connected components of that relation. Returns a list of
    index arrays ordered by their smallest member.
    """
    if tol < 0:
        raise InvalidArgument("tol must be >= 0")
    coords = s.coords if isinstance(s, SampleSet) else np.asarray(s, dtype=float)
    m = coords.shape[0]
    pairs = cKDTree(coords).query_pairs(r=tol, p=np.inf, output_type="ndarray")
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])) if len(pairs) else ([], ([], [])),
        shape=(m, m),
    )
    _, labels = connected_components(graph, directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.flatnonzero(np.diff(labels[order])) + 1
    groups = np.split(order, splits)
    groups.sort(key=lambda g: g[0])
    return groups
