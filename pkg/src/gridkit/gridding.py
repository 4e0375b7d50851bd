"""Gridding reconstruction on an oversampled Cartesian grid.

Weighted samples are spread onto a ``ceil(alpha W) x ceil(alpha H)`` grid
with a separable Kaiser-Bessel kernel, transformed with a centered inverse
DFT, deapodized and cropped. The result approximates :func:`nudft_type1`.
"""
import numpy as np

from .errors import InvalidArgument
from .kernel import KernelSpec, kaiser_bessel, kb_spatial_transform, oversampled_size
from .nudft import ImageGrid, _weights

__all__ = ["grid_recon", "spread", "centered_idft2"]

_DEAPOD_FLOOR = 1e-8


def _taps(k, G, spec):
    """Grid indices and kernel values touched by each frequency along one axis."""
    u = k * G + G // 2
    n_taps = int(np.floor(spec.width)) + 1
    j = np.ceil(u - spec.width / 2)[:, None] + np.arange(n_taps)[None, :]
    vals = kaiser_bessel(u[:, None] - j, spec)
    return np.mod(j.astype(np.int64), G), vals


def spread(coords, values, grid_shape, spec):
    """Scatter complex `values` at `coords` onto a periodic grid.

    Accumulation runs in sample order (``bincount``), so the grid is
    bitwise reproducible.
    """
    gy, gx = grid_shape
    jx, cx = _taps(coords[:, 0], gx, spec)
    jy, cy = _taps(coords[:, 1], gy, spec)
    idx = (jy[:, :, None] * gx + jx[:, None, :]).reshape(len(values), -1)
    contrib = (values[:, None, None] * cy[:, :, None] * cx[:, None, :]).reshape(len(values), -1)
    flat = idx.ravel()
    re = np.bincount(flat, weights=contrib.real.ravel(), minlength=gx * gy)
    im = np.bincount(flat, weights=contrib.imag.ravel(), minlength=gx * gy)
    return (re + 1j * im).reshape(gy, gx)


def centered_idft2(grid):
    """``out[x] = sum_q grid[q] exp(+i 2 pi q . x / G)`` with q and x centered at index G//2."""
    g = np.asarray(grid)
    scale = g.shape[0] * g.shape[1]
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(g))) * scale


def grid_recon(f, w, width, height, alpha=1.5, spec=None):
    """Gridding reconstruction of `f` with density weights `w`.

    Parameters
    ----------
    f : FourierSamples
    w : DensityWeights or array_like
    width, height : int
        Output image size.
    alpha : float
        Oversampling ratio, >= 1.
    spec : KernelSpec, optional
        Defaults to a width-5 kernel with the Beatty shape for `alpha`.

    Returns
    -------
    ImageGrid
        Complex image on the same pixel grid as :func:`nudft_type1`.
    """
    wv = _weights(w)
    if wv.shape[0] != f.set.M:
        raise InvalidArgument(f"{wv.shape[0]} weights for {f.set.M} samples")
    if not (np.isfinite(alpha) and alpha >= 1):
        raise InvalidArgument(f"oversampling ratio must be >= 1, got {alpha!r}")
    if f.set.dim != 2:
        raise InvalidArgument("grid_recon needs a 2D sample set")
    if spec is None:
        spec = KernelSpec.beatty(5.0, alpha)
    gx, gy = oversampled_size(width, alpha), oversampled_size(height, alpha)

    grid = spread(f.set.coords, wv * f.values, (gy, gx), spec)
    img = centered_idft2(grid)

    x0, y0 = gx // 2 - width // 2, gy // 2 - height // 2
    img = img[y0:y0 + height, x0:x0 + width]
    xs = np.arange(width) - width // 2
    ys = np.arange(height) - height // 2
    den = np.outer(
        kb_spatial_transform(ys, spec, alpha, height),
        kb_spatial_transform(xs, spec, alpha, width),
    )
    den = np.where(np.abs(den) < _DEAPOD_FLOOR, np.copysign(_DEAPOD_FLOOR, den), den)
    return ImageGrid(width, height, img / den)
