import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from gridkit.baselines import clip_polygon_to_box, fixed_point_weights, polygon_area, voronoi_weights
from gridkit.errors import DegenerateGeometry, InvalidArgument, ZeroDenominator
from gridkit.geometry import SampleSet, find_duplicates, radial_trajectory, spiral_trajectory
from gridkit.kernel import KernelSpec, beatty_beta, kaiser_bessel


# ------------------------------------------------------------------- kernel

def test_kernel_edge_and_center():
    spec = KernelSpec(4.0, 7.0, normalized=False)
    assert kaiser_bessel(2.0, spec) == pytest.approx(1 / 4.0)
    assert kaiser_bessel(-2.0, spec) == pytest.approx(1 / 4.0)
    assert kaiser_bessel(0.0, spec) == pytest.approx(float(mpmath.besseli(0, 7.0)) / 4.0, rel=1e-14)
    assert kaiser_bessel(2.0 + 1e-12, spec) == 0.0


def test_kernel_unit_integral():
    for w, alpha in [(4, 1.5), (5, 1.5), (6, 2.0)]:
        spec = KernelSpec.beatty(w, alpha)
        total = integrate.quad(lambda u: kaiser_bessel(u, spec), -w / 2, w / 2, epsabs=0, epsrel=1e-13)[0]
        assert total == pytest.approx(1.0, rel=1e-10)


def test_kernel_i0_against_series():
    # scipy's I0 against the power series sum (x/2)^(2k) / (k!)^2
    spec = KernelSpec(5.0, 9.0, normalized=False)
    for u in np.linspace(-2.5, 2.5, 11):
        arg = 9.0 * np.sqrt(max(0.0, 1 - (2 * u / 5.0) ** 2))
        series = mpmath.nsum(lambda k: (mpmath.mpf(arg) / 2) ** (2 * k) / mpmath.factorial(k) ** 2, [0, mpmath.inf])
        assert abs(kaiser_bessel(u, spec) - float(series) / 5.0) <= 1e-10


@given(st.floats(-10, 10))
def test_kernel_even_with_compact_support(u):
    spec = KernelSpec.beatty(4.0, 1.5)
    assert kaiser_bessel(u, spec) == kaiser_bessel(-u, spec)
    if abs(u) > 2.0:
        assert kaiser_bessel(u, spec) == 0.0


def test_beatty_beta():
    assert beatty_beta(5, 1.5) == pytest.approx(np.pi * np.sqrt((5 / 1.5) ** 2 - 0.8))
    with pytest.raises(InvalidArgument):
        beatty_beta(1, 1.0)


# ------------------------------------------------------------------ voronoi

def test_polygon_helpers():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    assert polygon_area(sq) == 1.0
    clipped = clip_polygon_to_box(sq)
    assert polygon_area(clipped) == pytest.approx(0.25)
    assert polygon_area(clip_polygon_to_box(sq + 5)) == 0.0


def test_voronoi_grid_examples():
    g = np.array([-0.25, 0.0, 0.25])
    X, Y = np.meshgrid(g, g)
    w = voronoi_weights(SampleSet(np.stack([X.ravel(), Y.ravel()], axis=1))).w
    assert w[4] == pytest.approx(0.0625, abs=1e-15)
    # edge cells reach the box: 0.25 x 0.375, corners 0.375^2
    assert w[1] == pytest.approx(0.25 * 0.375, abs=1e-15)
    assert w[0] == pytest.approx(0.375**2, abs=1e-15)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)

    s = SampleSet([[-0.25, -0.25], [0.25, -0.25], [0.25, 0.25], [-0.25, 0.25]])
    np.testing.assert_allclose(voronoi_weights(s).w, 0.25, atol=1e-15)


def test_voronoi_shares_duplicate_cell():
    s = radial_trajectory(8, 9, 0.5)
    w = voronoi_weights(s)
    center = [g for g in find_duplicates(s) if len(g) > 1][0]
    assert len(center) == 8
    assert np.ptp(w.w[center]) == 0.0
    assert w.w.sum() == pytest.approx(1.0, rel=1e-9)
    assert w.method == "voronoi"


def test_voronoi_collinear_rejected():
    with pytest.raises(DegenerateGeometry):
        voronoi_weights(SampleSet([[0.0, 0.0], [0.1, 0.1], [0.2, 0.2]]))


def test_voronoi_permutation_invariant(rng):
    s = spiral_trajectory(3, 2, 40)
    perm = rng.permutation(s.M)
    a = voronoi_weights(s).w
    b = voronoi_weights(SampleSet(s.coords[perm])).w
    np.testing.assert_allclose(b, a[perm], rtol=1e-12, atol=1e-15)


@given(st.integers(3, 80), st.integers(0, 2**31))
def test_voronoi_tiles_box(m, seed):
    pts = np.random.default_rng(seed).uniform(-0.5, 0.5, (m, 2))
    w = voronoi_weights(SampleSet(pts)).w
    assert np.all(w >= 0)
    assert abs(w.sum() - 1.0) <= 1e-9


# -------------------------------------------------------------- fixed point

def c2_origin(spec, size):
    c0 = float(mpmath.besseli(0, spec.beta)) / spec.width / (np.sinh(spec.beta) / spec.beta)
    return size[0] * size[1] * c0**2


def test_fixed_point_single_sample():
    spec = KernelSpec.beatty(4.0, 1.5)
    s = SampleSet([[0.1, -0.3]])
    one = fixed_point_weights(s, spec, 1, (144, 144)).w
    assert one[0] == pytest.approx(1 / c2_origin(spec, (144, 144)), rel=1e-13)
    eight = fixed_point_weights(s, spec, 8, (144, 144)).w
    assert eight[0] == pytest.approx(one[0], rel=1e-15)


def test_fixed_point_coincident_pair():
    spec = KernelSpec.beatty(4.0, 1.5)
    single = fixed_point_weights(SampleSet([[0.2, 0.2]]), spec, 8).w[0]
    pair = fixed_point_weights(SampleSet([[0.2, 0.2], [0.2, 0.2]]), spec, 8).w
    np.testing.assert_allclose(pair, single / 2, rtol=1e-14)


def test_fixed_point_residual_reported():
    s = radial_trajectory(30, 21)
    w = fixed_point_weights(s, n_iter=8)
    assert np.all(w.w > 0) and w.method == "fixed_point"
    assert w.params["n_iter"] == 8 and w.params["residual"] >= 0
    assert fixed_point_weights(s, n_iter=0).w[0] == pytest.approx(1 / s.M)


def test_fixed_point_permutation(rng):
    s = spiral_trajectory(4, 3, 60)
    perm = rng.permutation(s.M)
    a = fixed_point_weights(s).w
    b = fixed_point_weights(SampleSet(s.coords[perm])).w
    np.testing.assert_allclose(b, a[perm], rtol=1e-12)


def test_fixed_point_errors():
    with pytest.raises(InvalidArgument):
        fixed_point_weights(radial_trajectory(3, 3), KernelSpec(4.0, 5.0, normalized=False))
    # a kernel whose values overflow leaves no usable denominator
    with np.errstate(all="ignore"), pytest.raises(ZeroDenominator) as info:
        fixed_point_weights(SampleSet([[0.0, 0.0], [0.3, 0.3]]), KernelSpec(4.0, 800.0), 1)
    assert info.value.index == 0
