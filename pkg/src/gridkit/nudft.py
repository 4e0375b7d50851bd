"""Direct non-uniform DFTs and point-spread-function evaluation.

All sums are computed exactly (no kernels, no FFTs). The 2D transforms use
the separability of ``exp(i 2 pi k . x)`` over pixel rows and columns, which
turns the O(MN) sum into a pair of dense matrix products.
"""
from dataclasses import dataclass

import numpy as np

from . import _parallel
from .errors import InvalidArgument
from .geometry import SampleSet

__all__ = [
    "ImageGrid",
    "FourierSamples",
    "pixel_coords",
    "nudft_type1",
    "nudft_type2",
    "psf_eval",
    "psf_grid",
]

_CHUNK = 2048


def pixel_coords(n):
    """Centered pixel coordinates ``i - n // 2`` for ``i = 0 .. n-1``."""
    return np.arange(n, dtype=np.float64) - (n // 2)


@dataclass(eq=False)
class ImageGrid:
    """Row-major raster; ``data[j, i]`` is pixel (i, j).

    Pixel (i, j) sits at the continuous location ``(i - width//2, j - height//2)``,
    so coordinate 0 falls on index ``width // 2``.
    """

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        self.width = int(self.width)
        self.height = int(self.height)
        if self.width < 1 or self.height < 1:
            raise InvalidArgument("image dimensions must be >= 1")
        d = np.asarray(self.data)
        if d.size != self.width * self.height:
            raise InvalidArgument(
                f"data has {d.size} entries, expected {self.width}x{self.height}"
            )
        d = d.reshape(self.height, self.width)
        if not np.all(np.isfinite(d)):
            raise InvalidArgument("image data must be finite")
        if not np.iscomplexobj(d):
            d = d.astype(np.float64, copy=False)
        self.data = d

    @property
    def is_complex(self):
        return np.iscomplexobj(self.data)

    @property
    def x(self):
        return pixel_coords(self.width)

    @property
    def y(self):
        return pixel_coords(self.height)

    def magnitude(self):
        return ImageGrid(self.width, self.height, np.abs(self.data))


@dataclass(eq=False)
class FourierSamples:
    """Fourier values ``G(k_m)`` attached to a sample set."""

    set: SampleSet
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128).ravel()
        if v.shape[0] != self.set.M:
            raise InvalidArgument(f"{v.shape[0]} values for {self.set.M} samples")
        if not np.all(np.isfinite(v)):
            raise InvalidArgument("Fourier values must be finite")
        self.values = v


def _weights(w):
    return np.asarray(getattr(w, "w", w), dtype=np.float64).ravel()


def _phase(k, x, sign):
    return np.exp((sign * 2j * np.pi) * np.outer(k, x))


def nudft_type1(f, w, width, height):
    """Weighted adjoint sum ``g(x_n) = sum_m w_m G(k_m) exp(+i 2 pi k_m . x_n)``.

    Parameters
    ----------
    f : FourierSamples
        2D sample set and its Fourier values.
    w : DensityWeights or array_like
        Density compensation weights, one per sample.
    width, height : int
        Output raster size; pixel centers follow :class:`ImageGrid`.

    Returns
    -------
    ImageGrid
        Complex image.
    """
    wv = _weights(w)
    if wv.shape[0] != f.set.M:
        raise InvalidArgument(f"{wv.shape[0]} weights for {f.set.M} samples")
    if f.set.dim != 2:
        raise InvalidArgument("nudft_type1 needs a 2D sample set")
    k = f.set.coords
    a = wv * f.values
    xs, ys = pixel_coords(width), pixel_coords(height)

    def block(sl):
        ex = _phase(k[sl, 0], xs, +1)
        ey = _phase(k[sl, 1], ys, +1)
        return (ey.T * a[sl]) @ ex

    parts = _parallel.map_blocks(block, _parallel.row_blocks(f.set.M, _CHUNK))
    out = parts[0]
    for p in parts[1:]:
        out = out + p
    return ImageGrid(width, height, out)


def nudft_type2(img, s):
    """Forward sum ``G(k_m) = sum_n g(x_n) exp(-i 2 pi k_m . x_n)`` over pixel centers."""
    if s.dim != 2:
        raise InvalidArgument("nudft_type2 needs a 2D sample set")
    g = np.asarray(img.data)
    k = s.coords

    def block(sl):
        ex = _phase(k[sl, 0], img.x, -1)
        ey = _phase(k[sl, 1], img.y, -1)
        return np.einsum("my,ym->m", ey, g @ ex.T)

    parts = _parallel.map_blocks(block, _parallel.row_blocks(s.M, _CHUNK))
    return np.concatenate(parts)


def psf_eval(s, w, points):
    """Point spread function ``s_w(x) = sum_m w_m exp(-i 2 pi k_m . x)``.

    `points` is an (P, D) array of continuous locations (pixels). The sign of
    the exponent does not affect ``|s_w|`` or ``s_w(0) = sum(w)``.
    """
    wv = _weights(w)
    if wv.shape[0] != s.M:
        raise InvalidArgument(f"{wv.shape[0]} weights for {s.M} samples")
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != s.dim:
        raise InvalidArgument(f"points must have {s.dim} columns")

    def block(sl):
        return np.exp(-2j * np.pi * (pts[sl] @ s.coords.T)) @ wv

    parts = _parallel.map_blocks(block, _parallel.row_blocks(pts.shape[0], 512))
    return np.concatenate(parts)


def psf_grid(s, w, width, height):
    """``s_w`` on the doubled field of view, a (2 width) x (2 height) pixel grid.

    Uses the separable adjoint sum; since ``w`` is real, ``s_w`` is the complex
    conjugate of the type-I sum of unit values.
    """
    ones = FourierSamples(s, np.ones(s.M))
    img = nudft_type1(ones, w, 2 * width, 2 * height)
    return ImageGrid(img.width, img.height, np.conj(img.data))
