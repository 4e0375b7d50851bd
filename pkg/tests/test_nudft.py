import mpmath
import numpy as np
import pytest

from gridkit.errors import InvalidArgument
from gridkit.geometry import SampleSet
from gridkit.nudft import (
    FourierSamples,
    ImageGrid,
    nudft_type1,
    nudft_type2,
    pixel_coords,
    psf_eval,
    psf_grid,
)


def idft_literal(V):
    """Literal 1D inverse DFT ``v[n] = 1/N sum_m V[m] exp(+i 2 pi m n / N)``."""
    N = len(V)
    return np.array([sum(V[m] * np.exp(2j * np.pi * m * n / N) for m in range(N)) / N
                     for n in range(N)])


def cartesian(width, height):
    kx = np.arange(width) / width - 0.5
    ky = np.arange(height) / height - 0.5
    KX, KY = np.meshgrid(kx, ky)
    return SampleSet(np.stack([KX.ravel(), KY.ravel()], axis=1))


def test_pixel_coords():
    np.testing.assert_array_equal(pixel_coords(4), [-2, -1, 0, 1])
    np.testing.assert_array_equal(pixel_coords(5), [-2, -1, 0, 1, 2])


def test_dc_sample_gives_constant():
    f = FourierSamples(SampleSet([[0.0, 0.0]]), [1.0])
    img = nudft_type1(f, [1.0], 7, 6)
    np.testing.assert_array_equal(img.data, np.ones((6, 7), dtype=complex))
    assert not np.any(nudft_type1(f, [0.0], 7, 6).data)


def test_cartesian_matches_inverse_dft(rng):
    w_, h_ = 8, 6
    s = cartesian(w_, h_)
    G = rng.standard_normal(s.M) + 1j * rng.standard_normal(s.M)
    img = nudft_type1(FourierSamples(s, G), np.full(s.M, 1.0 / s.M), w_, h_).data

    # centered frequencies and pixels shift the plain DFT by checkerboard phases
    V = G.reshape(h_, w_)
    mx, my = np.arange(w_), np.arange(h_)
    V = V * np.outer((-1.0) ** my, (-1.0) ** mx)
    ref = np.array([idft_literal(row) for row in V])
    ref = np.array([idft_literal(col) for col in ref.T]).T
    ref = ref * np.outer((-1.0) ** my * np.exp(1j * np.pi * h_ / 2),
                         (-1.0) ** mx * np.exp(1j * np.pi * w_ / 2))
    assert np.max(np.abs(img - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_type2_examples(rng):
    img = np.zeros((6, 8))
    img[3, 4] = 1.0
    s = SampleSet(rng.uniform(-0.5, 0.5, (20, 2)))
    np.testing.assert_allclose(nudft_type2(ImageGrid(8, 6, img), s), np.ones(20), atol=1e-15)
    g = rng.standard_normal((6, 8))
    dc = nudft_type2(ImageGrid(8, 6, g), SampleSet([[0.0, 0.0]]))[0]
    assert np.isclose(dc, g.sum(), rtol=1e-14)


def test_adjoint_identity(rng):
    for _ in range(5):
        s = SampleSet(rng.uniform(-0.5, 0.5, (37, 2)))
        g = rng.standard_normal((9, 11)) + 1j * rng.standard_normal((9, 11))
        v = rng.standard_normal(37) + 1j * rng.standard_normal(37)
        lhs = np.vdot(v, nudft_type2(ImageGrid(11, 9, g), s))
        rhs = np.vdot(nudft_type1(FourierSamples(s, v), np.ones(37), 11, 9).data, g)
        assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


def test_type2_matches_direct_sum(rng):
    s = SampleSet(rng.uniform(-0.5, 0.5, (5, 2)))
    g = rng.standard_normal((4, 5))
    xs, ys = pixel_coords(5), pixel_coords(4)
    ref = [sum(g[j, i] * np.exp(-2j * np.pi * (k[0] * xs[i] + k[1] * ys[j]))
               for j in range(4) for i in range(5)) for k in s.coords]
    np.testing.assert_allclose(nudft_type2(ImageGrid(5, 4, g), s), ref, rtol=1e-12)


def test_linearity_and_scaling(rng):
    s = SampleSet(rng.uniform(-0.5, 0.5, (50, 2)))
    a = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    b = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    w = rng.uniform(0, 1, 50)
    ia = nudft_type1(FourierSamples(s, a), w, 12, 10).data
    ib = nudft_type1(FourierSamples(s, b), w, 12, 10).data
    iab = nudft_type1(FourierSamples(s, a + 2 * b), w, 12, 10).data
    np.testing.assert_allclose(iab, ia + 2 * ib, rtol=1e-12, atol=1e-12)
    scaled = nudft_type1(FourierSamples(s, a), 0.5 * w, 12, 10).data
    np.testing.assert_array_equal(scaled, 0.5 * ia)


def test_length_mismatch():
    s = SampleSet([[0.0, 0.0], [0.1, 0.1]])
    with pytest.raises(InvalidArgument):
        nudft_type1(FourierSamples(s, [1, 2]), [1.0], 4, 4)
    with pytest.raises(InvalidArgument):
        FourierSamples(s, [1.0])
    with pytest.raises(InvalidArgument):
        psf_eval(s, [1.0], [[0, 0]])


def test_psf_examples(rng):
    s = SampleSet(rng.uniform(-0.5, 0.5, (15, 2)))
    w = rng.uniform(0, 1, 15)
    assert psf_eval(s, w, [[0.0, 0.0]])[0] == pytest.approx(w.sum(), rel=1e-15)
    c = 0.2
    pair = SampleSet([[c, 0.0], [-c, 0.0]])
    xs = np.linspace(-10, 10, 21)
    vals = psf_eval(pair, [0.5, 0.5], np.stack([xs, np.zeros_like(xs)], axis=1))
    np.testing.assert_allclose(vals.real, np.cos(2 * np.pi * c * xs), atol=1e-14)
    assert np.max(np.abs(vals.imag)) < 1e-14


def test_psf_extended_precision(rng):
    s = SampleSet(rng.uniform(-0.5, 0.5, (10, 2)))
    w = rng.uniform(0, 1, 10)
    pts = rng.uniform(-40, 40, (6, 2))
    got = np.abs(psf_eval(s, w, pts)) ** 2
    mpmath.mp.dps = 40
    for p, g in zip(pts, got):
        acc = mpmath.mpc(0)
        for k, wk in zip(s.coords, w):
            arg = -2 * mpmath.pi * (mpmath.mpf(k[0]) * mpmath.mpf(p[0]) + mpmath.mpf(k[1]) * mpmath.mpf(p[1]))
            acc += mpmath.mpf(wk) * mpmath.expjpi(arg / mpmath.pi)
        ref = float(abs(acc) ** 2)
        assert abs(g - ref) <= 1e-12 * ref


def test_psf_grid_matches_pointwise(rng):
    s = SampleSet(rng.uniform(-0.5, 0.5, (25, 2)))
    w = rng.uniform(0, 1, 25)
    grid = psf_grid(s, w, 6, 5)
    assert (grid.width, grid.height) == (12, 10)
    X, Y = np.meshgrid(pixel_coords(12), pixel_coords(10))
    ref = psf_eval(s, w, np.stack([X.ravel(), Y.ravel()], axis=1)).reshape(10, 12)
    np.testing.assert_allclose(grid.data, ref, rtol=1e-12, atol=1e-12)
    assert grid.x.min() == -6 and grid.x.max() == 5
