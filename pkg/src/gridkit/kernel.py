"""Kaiser-Bessel interpolation kernel and its analytic Fourier transform."""
from dataclasses import dataclass

import numpy as np
from scipy.special import i0

from .errors import InvalidArgument

__all__ = ["KernelSpec", "beatty_beta", "kaiser_bessel", "kb_spatial_transform", "oversampled_size"]


def beatty_beta(width, alpha):
    """Shape parameter ``pi sqrt((W/alpha)^2 (alpha - 1/2)^2 - 0.8)`` for oversampling `alpha`."""
    arg = (width / alpha) ** 2 * (alpha - 0.5) ** 2 - 0.8
    if arg <= 0:
        raise InvalidArgument(f"kernel width {width} too small for oversampling {alpha}")
    return np.pi * np.sqrt(arg)


def oversampled_size(n, alpha):
    # round before ceil so that e.g. 1.1 * 10 does not become 12
    return int(np.ceil(round(alpha * n, 9)))


@dataclass(frozen=True)
class KernelSpec:
    """Kaiser-Bessel kernel of full width `width` grid cells."""

    width: float
    beta: float
    normalized: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.width) and self.width > 0):
            raise InvalidArgument("kernel width must be > 0")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise InvalidArgument("kernel beta must be > 0")

    @classmethod
    def beatty(cls, width=5.0, alpha=1.5, normalized=True):
        return cls(float(width), float(beatty_beta(width, alpha)), normalized)

    @property
    def integral(self):
        """Integral of the unnormalized kernel, ``sinh(beta) / beta``."""
        return np.sinh(self.beta) / self.beta


def kaiser_bessel(u, spec):
    """``I0(beta sqrt(1 - (2u/W)^2)) / W`` on ``|u| <= W/2``, zero outside.

    Divided by its integral when ``spec.normalized`` is set.
    """
    u = np.asarray(u, dtype=np.float64)
    r = 1.0 - (2.0 * u / spec.width) ** 2
    inside = np.abs(u) <= spec.width / 2
    out = np.where(inside, i0(spec.beta * np.sqrt(np.maximum(r, 0.0))) / spec.width, 0.0)
    if spec.normalized:
        out = out / spec.integral
    return out


def kb_spatial_transform(x, spec, alpha, grid_size):
    """Fourier transform of the kernel at image coordinate `x` (pixels).

    The kernel lives on an oversampled grid of ``G = ceil(alpha * grid_size)``
    cells, so pixel `x` corresponds to frequency ``x / G`` in kernel units and

        C^(x) = sinh(z) / z,   z = sqrt(beta^2 - (pi W x / G)^2),

    which becomes ``sin(|z|) / |z|`` once ``pi W |x| / G`` exceeds ``beta``.
    """
    G = oversampled_size(grid_size, alpha)
    x = np.asarray(x, dtype=np.float64)
    z2 = spec.beta**2 - (np.pi * spec.width * x / G) ** 2
    z = np.sqrt(np.abs(z2))
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(z2 > 0, np.sinh(z) / z, np.sin(z) / z)
    val = np.where(z == 0, 1.0, val)
    if spec.normalized:
        val = val / spec.integral
    return val
