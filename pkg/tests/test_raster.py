import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pbsenhance.raster import (
    ImageIOError,
    VideoSequence,
    check_rgb,
    dump_scalar_field,
    load_image,
    luminance,
    read_scalar_field,
    save_image,
)

levels8 = arrays(np.uint8, st.tuples(st.integers(1, 6), st.integers(1, 6), st.just(3)))


def test_ppm_load_normalises(tmp_path):
    path = tmp_path / "two.ppm"
    path.write_bytes(b"P6\n2 1\n255\n" + bytes([255, 0, 0, 0, 255, 0]))
    img = load_image(path)
    np.testing.assert_array_equal(img, [[[1, 0, 0], [0, 1, 0]]])


def test_ppm_with_comment_and_16bit(tmp_path):
    path = tmp_path / "c.ppm"
    body = np.array([65535, 0, 32768], dtype=">u2").tobytes()
    path.write_bytes(b"P6\n# made by hand\n1 1\n65535\n" + body)
    np.testing.assert_allclose(load_image(path)[0, 0], [1.0, 0.0, 32768 / 65535])


def test_truncated_files_are_unreadable(tmp_path):
    ppm = tmp_path / "t.ppm"
    ppm.write_bytes(b"P6\n4 4\n255\n" + bytes(10))
    with pytest.raises(ImageIOError, match="unreadable file"):
        load_image(ppm)
    png = tmp_path / "t.png"
    save_image(np.full((8, 8, 3), 0.5), png)
    png.write_bytes(png.read_bytes()[:40])
    with pytest.raises(ImageIOError, match="unreadable file"):
        load_image(png)


def test_unsupported_and_missing(tmp_path):
    bad = tmp_path / "x.bmp"
    bad.write_bytes(b"BM" + bytes(60))
    with pytest.raises(ImageIOError, match="unsupported format"):
        load_image(bad)
    with pytest.raises(ImageIOError, match="unreadable file"):
        load_image(tmp_path / "missing.png")


def test_zero_dimension_ppm(tmp_path):
    path = tmp_path / "z.ppm"
    path.write_bytes(b"P6\n0 3\n255\n")
    with pytest.raises(ImageIOError):
        load_image(path)


@pytest.mark.parametrize("suffix", [".png", ".ppm"])
def test_save_bytes(tmp_path, suffix):
    img = np.array([[[1.0, 1.0, 1.0], [0.5, 0.5, 0.5]]])
    path = tmp_path / f"s{suffix}"
    save_image(img, path)
    back = np.round(load_image(path) * 255).astype(int)
    # 0.5 * 255 = 127.5 rounds half up
    np.testing.assert_array_equal(back, [[[255, 255, 255], [128, 128, 128]]])
    if suffix == ".ppm":
        assert path.read_bytes().endswith(bytes([255, 255, 255, 128, 128, 128]))


def test_save_rejects_out_of_range(tmp_path):
    with pytest.raises(ValueError, match="out-of-range"):
        save_image(np.array([[[1.2, 0.0, 0.0]]]), tmp_path / "o.png")


def test_sixteen_bit_png(tmp_path):
    import cv2

    raw = np.array([[[0, 1000, 65535]]], dtype=np.uint16)  # BGR on disk
    path = tmp_path / "w.png"
    path.write_bytes(cv2.imencode(".png", raw)[1].tobytes())
    np.testing.assert_allclose(load_image(path)[0, 0], [1.0, 1000 / 65535, 0.0])


@given(levels8)
def test_round_trip_8bit(tmp_path_factory, levels):
    img = levels / 255.0
    for suffix in (".png", ".ppm"):
        path = tmp_path_factory.mktemp("rt") / f"a{suffix}"
        save_image(img, path)
        assert np.max(np.abs(load_image(path) - img)) <= 1 / 255


def test_luminance_values():
    px = np.array([[[1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]])
    np.testing.assert_allclose(luminance(px, "yuv_y"), [[1.0, 0.0, 0.299]], atol=1e-12)
    lab = luminance(px, "lab_l")
    assert lab[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert lab[0, 1] == 0.0
    # CIE L* of sRGB red is 53.24
    assert lab[0, 2] == pytest.approx(0.5324, abs=1e-3)
    with pytest.raises(ValueError):
        luminance(px, "hsv")


@given(arrays(np.float64, (3, 4, 3), elements=st.floats(0, 1)), st.floats(0.01, 1.0))
def test_luminance_scaling_and_range(img, c):
    y = luminance(img, "yuv_y")
    assert y.min() >= 0.0 and y.max() <= 1.0
    np.testing.assert_allclose(luminance(img * c, "yuv_y"), c * y, atol=1e-12)
    lab = luminance(img, "lab_l")
    assert lab.min() >= 0.0 and lab.max() <= 1.0


def test_dump_scalar_field(tmp_path):
    import cv2

    png, raw = dump_scalar_field(np.full((2, 2), 0.5), tmp_path / "illum")
    assert png.name == "illum.png" and raw.name == "illum.raw"
    gray = cv2.imread(str(png), cv2.IMREAD_UNCHANGED)
    np.testing.assert_array_equal(gray, np.full((2, 2), 128))
    data = raw.read_bytes()
    assert data.startswith(b"2 2\n")
    np.testing.assert_array_equal(np.frombuffer(data[4:], "<f4"), [0.5] * 4)
    png1, _ = dump_scalar_field(np.ones((1, 1)), tmp_path / "one")
    assert cv2.imread(str(png1), cv2.IMREAD_UNCHANGED)[0, 0] == 255


@given(arrays(np.float32, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.floats(0, 1, width=32)))
def test_raw_round_trip_bit_identical(tmp_path_factory, field):
    _, raw = dump_scalar_field(field.astype(np.float64), tmp_path_factory.mktemp("d") / "f")
    back = read_scalar_field(raw)
    assert back.dtype == np.float32
    np.testing.assert_array_equal(back, field)


def test_check_rgb_and_video():
    with pytest.raises(ValueError):
        check_rgb(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        check_rgb(np.full((2, 2, 3), np.nan))
    with pytest.raises(ValueError):
        VideoSequence(frames=[])
    with pytest.raises(ValueError):
        VideoSequence(frames=[np.zeros((2, 2, 3)), np.zeros((3, 2, 3))])
    v = VideoSequence(frames=[np.zeros((2, 3, 3))] * 4)
    assert len(v) == 4 and v.shape == (2, 3)
