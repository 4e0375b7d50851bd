"""Image quality metrics: mean square error and structural similarity."""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidArgument

__all__ = ["mse", "ssim", "gaussian_window", "nrmse"]


def _real(img):
    d = np.asarray(getattr(img, "data", img))
    return np.abs(d) if np.iscomplexobj(d) else d.astype(np.float64)


def _pair(a, b):
    a, b = _real(a), _real(b)
    if a.shape != b.shape:
        raise InvalidArgument(f"image sizes differ: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b):
    """Mean of ``(a - b)^2``; complex inputs are compared as magnitudes."""
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def nrmse(est, ref):
    """RMS of ``est - ref`` over RMS of ``ref`` (complex values kept)."""
    est = np.asarray(getattr(est, "data", est))
    ref = np.asarray(getattr(ref, "data", ref))
    return float(np.sqrt(np.mean(np.abs(est - ref) ** 2) / np.mean(np.abs(ref) ** 2)))


def gaussian_window(size=11, sigma=1.5):
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r**2) / (2 * sigma**2))
    g /= g.sum()
    return g


def _filter(img, g):
    # separable weighted sums over every full window (valid region only)
    n = g.size
    rows = sliding_window_view(img, n, axis=1) @ g
    return sliding_window_view(rows, n, axis=0) @ g


def ssim(a, b, window=11, sigma=1.5, K1=0.01, K2=0.03, L=None):
    """Mean structural similarity of `b` against the reference `a`.

    Local statistics use an 11 x 11 Gaussian window (sigma 1.5) renormalized
    to unit sum, evaluated only where the window fits inside the image. The
    dynamic range `L` defaults to ``max |a|``.
    """
    a, b = _pair(a, b)
    if a.shape[0] < window or a.shape[1] < window:
        raise InvalidArgument(f"images must be at least {window}x{window}")
    if L is None:
        L = float(np.max(np.abs(a)))
    if L == 0:
        L = 1.0
    C1, C2 = (K1 * L) ** 2, (K2 * L) ** 2
    g = gaussian_window(window, sigma)
    mu_a, mu_b = _filter(a, g), _filter(b, g)
    saa = _filter(a * a, g) - mu_a * mu_a
    sbb = _filter(b * b, g) - mu_b * mu_b
    sab = _filter(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + C1) * (2 * sab + C2)
    den = (mu_a * mu_a + mu_b * mu_b + C1) * (saa + sbb + C2)
    return float(np.mean(num / den))
