import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from candleseg.colorspace import (
    SIGMA,
    SIGMA3,
    LabImage,
    WhitePoint,
    g_forward,
    g_inverse,
    lab_to_rgb,
    rgb_to_gray,
    rgb_to_lab,
)
from candleseg.errors import DomainError
from candleseg.raster import RasterImage

from oracles import srgb_to_lab_by_hand


def one(r, g, b):
    return RasterImage(np.array([[[r, g, b]]], dtype=np.uint8))


def lab_of(r, g, b):
    lab = rgb_to_lab(one(r, g, b))
    return float(lab.L[0, 0]), float(lab.a[0, 0]), float(lab.b[0, 0])


def test_g_examples():
    assert g_forward(1.0) == pytest.approx(1.0, abs=1e-15)
    assert g_forward(0.0) == pytest.approx(4 / 29, abs=1e-15)
    cube = SIGMA3 ** (1 / 3)
    assert abs(cube - SIGMA) < 1e-15
    assert abs(g_forward(SIGMA3) - SIGMA) < 1e-15
    assert abs(g_forward(np.nextafter(SIGMA3, 1.0)) - SIGMA) < 1e-15


def test_g_inverse_examples():
    assert g_inverse(1.0) == pytest.approx(1.0, abs=1e-15)
    assert abs(g_inverse(SIGMA) - SIGMA3) < 1e-15
    assert abs(g_inverse(g_forward(0.5)) - 0.5) < 1e-12


def test_g_rejects_negative():
    with pytest.raises(DomainError):
        g_forward(-1e-9)


def test_g_strictly_increasing_on_0_2():
    t = np.linspace(0.0, 2.0, 200001)
    assert np.all(np.diff(g_forward(t)) > 0)


@given(st.floats(0.0, 4.0, allow_nan=False))
def test_g_roundtrip(t):
    assert abs(g_inverse(g_forward(t)) - t) < 1e-12


@given(st.floats(4 / 29, 2.0, allow_nan=False))
def test_g_inverse_roundtrip(u):
    assert abs(g_forward(g_inverse(u)) - u) < 1e-12


def test_white_and_black():
    L, a, b = lab_of(255, 255, 255)
    assert abs(L - 100) < 1e-3 and abs(a) < 1e-3 and abs(b) < 1e-3
    assert max(abs(v) for v in lab_of(0, 0, 0)) < 1e-6


@pytest.mark.parametrize("rgb", [(255, 0, 0), (0, 255, 0), (0, 0, 255), (128, 64, 200), (12, 250, 90)])
def test_against_hand_oracle(rgb):
    # the oracle uses the published 7-digit matrix and white, so allow 0.01
    got = lab_of(*rgb)
    want = srgb_to_lab_by_hand(*rgb)
    assert got == pytest.approx(want, abs=0.01)


def test_red_frozen():
    assert lab_of(255, 0, 0) == pytest.approx((53.2408, 80.0925, 67.2032), abs=0.01)


def test_reconstruct_white_black():
    white = LabImage(np.array([[100.0]]), np.array([[0.0]]), np.array([[0.0]]))
    black = LabImage(np.zeros((1, 1)), np.zeros((1, 1)), np.zeros((1, 1)))
    assert lab_to_rgb(white).pixels.tolist() == [[[255, 255, 255]]]
    assert lab_to_rgb(black).pixels.tolist() == [[[0, 0, 0]]]


def test_out_of_gamut_is_clamped():
    lab = LabImage(np.array([[50.0]]), np.array([[127.0]]), np.array([[-127.0]]))
    px = lab_to_rgb(lab).pixels
    assert px.dtype == np.uint8


def test_all_8bit_ranges_and_roundtrip():
    # every 4th level per channel plus the 255 endpoint: 65^3 colors
    lv = np.r_[np.arange(0, 256, 4), 255].astype(np.uint8)
    grid = np.stack(np.meshgrid(lv, lv, lv, indexing="ij"), axis=-1).reshape(-1, 1, 3)
    img = RasterImage(grid)
    lab = rgb_to_lab(img)
    assert lab.L.min() >= -1e-6 and lab.L.max() <= 100 + 1e-6
    assert np.abs(lab.a).max() <= 128 and np.abs(lab.b).max() <= 128
    back = lab_to_rgb(lab).pixels.astype(int)
    assert np.abs(back - grid.astype(int)).max() <= 1


def test_custom_white_point_changes_output():
    a = rgb_to_lab(one(200, 100, 50))
    b = rgb_to_lab(one(200, 100, 50), WhitePoint(0.9642, 1.0, 0.8251))
    assert a.a[0, 0] != b.a[0, 0]


def test_white_point_positive():
    with pytest.raises(ValueError):
        WhitePoint(0.9, 0.0, 1.0)


def test_lab_plane_shapes_checked():
    with pytest.raises(ValueError):
        LabImage(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 3)))


@pytest.mark.parametrize(
    "rgb, gray", [((255, 255, 255), 255), ((100, 100, 100), 100), ((255, 0, 0), 76), ((0, 0, 0), 0)]
)
def test_gray_examples(rgb, gray):
    assert rgb_to_gray(one(*rgb)).pixels[0, 0] == gray


@given(st.integers(0, 255))
def test_gray_of_neutral_is_identity(v):
    assert rgb_to_gray(one(v, v, v)).pixels[0, 0] == v


@given(arrays(np.uint8, (4, 5, 3)))
def test_gray_matches_weighted_sum(px):
    got = rgb_to_gray(RasterImage(px)).pixels.astype(int)
    f = px.astype(float)
    ref = np.floor(0.2989 * f[..., 0] + 0.587 * f[..., 1] + 0.1141 * f[..., 2] + 0.5)
    assert np.abs(got - np.clip(ref, 0, 255)).max() == 0


def test_display_encoding():
    disp = rgb_to_lab(one(255, 255, 255)).to_display().pixels[0, 0].tolist()
    assert disp == [255, 128, 128]
