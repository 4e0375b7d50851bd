"""File formats: CSV tables, raw f64 images with JSON sidecars, 16-bit PGM."""
import csv
import json
from pathlib import Path

import numpy as np

from .dcf_gp import DensityWeights
from .geometry import SampleSet
from .nudft import FourierSamples, ImageGrid

__all__ = [
    "fmt",
    "write_trajectory",
    "read_trajectory",
    "write_samples",
    "read_samples",
    "write_weights",
    "read_weights",
    "write_trace",
    "write_image",
    "read_image",
    "write_pgm",
    "error_db",
    "write_report",
    "REPORT_COLUMNS",
]

REPORT_COLUMNS = ("image", "method", "mse", "ssim", "runtime_seconds")
_AXES = ("kx", "ky", "kz")


def fmt(x):
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def _data_rows(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty file")
    return rows[0], rows[1:]


def write_trajectory(path, s):
    header = ",".join(_AXES[: s.dim])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in s.coords:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_trajectory(path):
    header, rows = _data_rows(path)
    if tuple(h.strip() for h in header) != _AXES[: len(header)]:
        raise ValueError(f"{path}: expected header kx,ky, got {','.join(header)}")
    return SampleSet(np.array(rows, dtype=np.float64).reshape(len(rows), len(header)))


def write_samples(path, f):
    with open(path, "w") as fh:
        fh.write("kx,ky,re,im\n")
        for (kx, ky), v in zip(f.set.coords, f.values):
            fh.write(f"{fmt(kx)},{fmt(ky)},{fmt(v.real)},{fmt(v.imag)}\n")


def read_samples(path):
    header, rows = _data_rows(path)
    if [h.strip() for h in header] != ["kx", "ky", "re", "im"]:
        raise ValueError(f"{path}: expected header kx,ky,re,im")
    a = np.array(rows, dtype=np.float64).reshape(len(rows), 4)
    return FourierSamples(SampleSet(a[:, :2]), a[:, 2] + 1j * a[:, 3])


def write_weights(path, w):
    with open(path, "w") as fh:
        fh.write(f"# method={w.method}\n")
        fh.write("w\n")
        for v in w.w:
            fh.write(fmt(v) + "\n")


def read_weights(path):
    method = "gp"
    with open(path) as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            for token in line[1:].split(","):
                key, _, val = token.strip().partition("=")
                if key == "method" and val:
                    method = val
        elif line.strip():
            body.append(line.strip())
    if not body or body[0] != "w":
        raise ValueError(f"{path}: expected header 'w'")
    return DensityWeights(np.array(body[1:], dtype=np.float64), method=method)


def write_trace(path, trace):
    with open(path, "w") as fh:
        fh.write("iter,f0,step,restarted\n")
        for rec in trace:
            fh.write(f"{rec.iter},{fmt(rec.f0)},{fmt(rec.step)},{int(rec.restarted)}\n")


def _sidecar(path):
    return Path(str(path) + ".json")


def write_image(path, img):
    """Little-endian f64, row-major; complex values interleaved (re, im)."""
    data = np.asarray(img.data)
    cplx = bool(np.iscomplexobj(data))
    raw = data.astype("<c16" if cplx else "<f8")
    Path(path).write_bytes(raw.tobytes(order="C"))
    meta = {
        "width": img.width,
        "height": img.height,
        "dtype": "f64",
        "complex": cplx,
        "layout": "row-major",
        "interleaved": cplx,
    }
    _sidecar(path).write_text(json.dumps(meta, indent=2) + "\n")


def read_image(path):
    meta = json.loads(_sidecar(path).read_text())
    if meta.get("dtype") != "f64" or meta.get("layout") != "row-major":
        raise ValueError(f"{path}: unsupported image layout {meta}")
    raw = Path(path).read_bytes()
    data = np.frombuffer(raw, dtype="<c16" if meta["complex"] else "<f8")
    return ImageGrid(meta["width"], meta["height"], data.reshape(meta["height"], meta["width"]).copy())


def write_pgm(path, arr):
    """16-bit binary PGM with linear min-max scaling; the range goes to a sidecar."""
    a = np.asarray(arr, dtype=np.float64)
    lo, hi = float(a.min()), float(a.max())
    span = hi - lo if hi > lo else 1.0
    q = np.round((a - lo) / span * 65535).astype(">u2")
    h, w = a.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(q.tobytes())
    _sidecar(path).write_text(json.dumps({"min": lo, "max": hi, "scaling": "linear"}) + "\n")


def error_db(recon, truth, floor=-120.0):
    """Per-pixel ``20 log10 |recon - truth|`` with a floor, magnitudes compared."""
    r = np.abs(np.asarray(getattr(recon, "data", recon)))
    t = np.abs(np.asarray(getattr(truth, "data", truth)))
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(np.abs(r - t))
    return np.maximum(db, floor)


def write_report(path, rows):
    """Metrics CSV: ``image,method,mse,ssim,runtime_seconds``; missing runtime left empty."""
    with open(path, "w") as fh:
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for r in rows:
            rt = r.get("runtime_seconds")
            rt = "" if rt is None else f"{rt:.3f}"
            fh.write(f"{r['image']},{r['method']},{fmt(r['mse'])},{fmt(r['ssim'])},{rt}\n")
