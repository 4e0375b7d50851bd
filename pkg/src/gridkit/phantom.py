"""Analytic numerical phantom: shifted and scaled tri, circ and rect shapes.

The spectrum follows ``F(k) = integral f(x) exp(-i 2 pi k x) dx``:

    tri(x / a)   ->  a sinc^2(a k)
    rect(x / a)  ->  a sinc(a k)
    circ(r / a)  ->  a J1(2 pi a rho) / rho        (pi a^2 at rho = 0)

and a shift by ``c`` multiplies by ``exp(-i 2 pi k . c)``.
"""
import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.special import j1

from .errors import InvalidArgument
from .geometry import SampleSet
from .nudft import ImageGrid, pixel_coords

__all__ = [
    "Component",
    "PhantomSpec",
    "default_phantom",
    "phantom_image",
    "phantom_fourier",
    "shape_area",
]

SHAPES = ("tri", "circ", "rect")


@dataclass(frozen=True)
class Component:
    shape: str
    center: tuple
    scale: tuple
    amplitude: float = 1.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise InvalidArgument(f"unknown shape {self.shape!r}; expected one of {SHAPES}")
        center = tuple(float(c) for c in np.broadcast_to(self.center, (2,)))
        scale = tuple(float(c) for c in np.broadcast_to(self.scale, (2,)))
        if not all(np.isfinite(center)):
            raise InvalidArgument("component center must be finite")
        if not all(np.isfinite(scale)) or min(scale) <= 0:
            raise InvalidArgument("component scales must be finite and > 0")
        if not np.isfinite(self.amplitude):
            raise InvalidArgument("component amplitude must be finite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "amplitude", float(self.amplitude))

    def half_extent(self):
        """Half-width of the support along each axis, in pixels."""
        a = np.array(self.scale)
        return a / 2 if self.shape == "rect" else a


@dataclass(frozen=True)
class PhantomSpec:
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple(c if isinstance(c, Component) else Component(**c) for c in self.components)
        object.__setattr__(self, "components", comps)

    def check_fits(self, width, height):
        box = np.array([width / 2.0, height / 2.0])
        for i, c in enumerate(self.components):
            lo = np.array(c.center) - c.half_extent()
            hi = np.array(c.center) + c.half_extent()
            if np.any(lo < -box) or np.any(hi > box):
                raise InvalidArgument(
                    f"component {i} ({c.shape}) support exceeds the {width}x{height} field of view"
                )

    def to_dict(self):
        return {
            "components": [
                {
                    "shape": c.shape,
                    "center": list(c.center),
                    "scale": list(c.scale),
                    "amplitude": c.amplitude,
                }
                for c in self.components
            ]
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Component(**c) for c in d["components"]))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def default_phantom():
    """One tri, one circ and two stretched rects, all off-origin.

    Sized for a 96 x 96 field of view. This is a stand-in with the same
    component classes, not a reproduction of any published geometry.
    """
    text = resources.files("gridkit.data").joinpath("phantom_default.json").read_text()
    return PhantomSpec.from_json(text)


def _tri(u):
    return np.maximum(0.0, 1.0 - np.abs(u))


def _rect(u):
    return (np.abs(u) <= 0.5).astype(np.float64)


def phantom_image(p, width, height):
    """Rasterize the phantom by sampling each pixel center."""
    if width < 1 or height < 1:
        raise InvalidArgument("width and height must be >= 1")
    p.check_fits(width, height)
    xs, ys = pixel_coords(width), pixel_coords(height)
    img = np.zeros((height, width))
    for c in p.components:
        u = (xs - c.center[0]) / c.scale[0]
        v = (ys - c.center[1]) / c.scale[1]
        if c.shape == "tri":
            img += c.amplitude * np.outer(_tri(v), _tri(u))
        elif c.shape == "rect":
            img += c.amplitude * np.outer(_rect(v), _rect(u))
        else:
            img += c.amplitude * ((v[:, None] ** 2 + u[None, :] ** 2) <= 1.0)
    return ImageGrid(width, height, img)


def _jinc(rho):
    # J1(2 pi rho) / rho, continuous at 0 with value pi
    rho = np.asarray(rho, dtype=np.float64)
    out = np.full(rho.shape, np.pi)
    nz = rho != 0
    out[nz] = j1(2 * np.pi * rho[nz]) / rho[nz]
    return out


def shape_area(c):
    """Integral of a unit-amplitude component over the plane."""
    a, b = c.scale
    return {"tri": a * b, "rect": a * b, "circ": np.pi * a * b}[c.shape]


def phantom_fourier(p, s):
    """Exact spectrum of the phantom at the frequencies of `s`."""
    if s.dim != 2:
        raise InvalidArgument("phantom_fourier needs a 2D sample set")
    kx, ky = s.coords[:, 0], s.coords[:, 1]
    out = np.zeros(s.M, dtype=np.complex128)
    for c in p.components:
        a, b = c.scale
        if c.shape == "tri":
            mag = a * np.sinc(a * kx) ** 2 * b * np.sinc(b * ky) ** 2
        elif c.shape == "rect":
            mag = a * np.sinc(a * kx) * b * np.sinc(b * ky)
        else:
            # circ(|(x/a, y/b)|) <-> a b J1(2 pi rho') / rho', rho' = |(a kx, b ky)|
            mag = a * b * _jinc(np.hypot(a * kx, b * ky))
        phase = np.exp(-2j * np.pi * (kx * c.center[0] + ky * c.center[1]))
        out += c.amplitude * mag * phase
    return out
