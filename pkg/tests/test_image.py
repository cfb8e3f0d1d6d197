import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from toposeg import (
    GrayImage,
    ImageFormatError,
    load_grayscale,
    pad_and_resize,
    read_float_blob,
    save_pgm,
    threshold_mask,
    write_float_blob,
)

from conftest import generic_image
from oracles import reference_pad_resize


def write_pgm_p5(path, arr8, maxval=255):
    h, w = arr8.shape
    depth = arr8.astype(">u2").tobytes() if maxval > 255 else arr8.astype(np.uint8).tobytes()
    path.write_bytes(f"P5\n{w} {h}\n{maxval}\n".encode() + depth)


class TestLoad:
    def test_pgm_all_white_scales_to_one(self, tmp_path):
        p = tmp_path / "white.pgm"
        write_pgm_p5(p, np.full((4, 5), 255))
        img = load_grayscale(p)
        assert img.pixels.shape == (4, 5)
        assert (img.pixels == 1.0).all()

    def test_rgb_keeps_green_channel(self, tmp_path):
        h, w = 3, 4
        rgb = np.zeros((h, w, 3), np.uint8)
        rgb[..., 0] = 10
        rgb[..., 1] = 128
        rgb[..., 2] = 200
        ppm = tmp_path / "c.ppm"
        ppm.write_bytes(f"P6\n{w} {h}\n255\n".encode() + rgb.tobytes())
        img = load_grayscale(ppm)
        assert np.allclose(img.pixels, 128 / 255)

        from PIL import Image

        png = tmp_path / "c.png"
        Image.fromarray(rgb, "RGB").save(png)
        img = load_grayscale(png)
        assert np.allclose(img.pixels, 128 / 255)

    def test_ascii_variants_and_comments(self, tmp_path):
        p = tmp_path / "a.pgm"
        p.write_text("P2\n# comment\n2 2\n4\n0 1\n# more\n2 4\n")
        img = load_grayscale(p)
        assert np.allclose(img.pixels, [[0, 0.25], [0.5, 1.0]])

        p3 = tmp_path / "a.ppm"
        p3.write_text("P3\n1 1\n255\n10 128 200\n")
        assert load_grayscale(p3).pixels[0, 0] == 128 / 255

    def test_16bit_pgm_scaled_by_maxval(self, tmp_path):
        p = tmp_path / "deep.pgm"
        write_pgm_p5(p, np.array([[0, 65535], [32768, 1]]), maxval=65535)
        img = load_grayscale(p)
        assert img.pixels[0, 1] == 1.0
        assert img.pixels[1, 0] == 32768 / 65535

    def test_truncated_file_is_unreadable(self, tmp_path):
        p = tmp_path / "trunc.pgm"
        p.write_bytes(b"P5\n4 4\n255\n\x00\x00")
        with pytest.raises(ImageFormatError, match="unreadable file"):
            load_grayscale(p)

    def test_unsupported_format(self, tmp_path):
        p = tmp_path / "x.bin"
        p.write_bytes(b"GARBAGE")
        with pytest.raises(ImageFormatError, match="unsupported format"):
            load_grayscale(p)

    def test_zero_sized_image(self, tmp_path):
        p = tmp_path / "z.pgm"
        p.write_bytes(b"P5\n0 4\n255\n")
        with pytest.raises(ImageFormatError, match="zero-sized"):
            load_grayscale(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_grayscale(tmp_path / "nope.pgm")

    def test_grayscale_png(self, tmp_path):
        from PIL import Image

        arr = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
        p = tmp_path / "g.png"
        Image.fromarray(arr, "L").save(p)
        assert np.allclose(load_grayscale(p).pixels, arr / 255)


class TestRoundTrip:
    def test_pgm_roundtrip_bit_exact(self, tmp_path, rng):
        arr8 = rng.integers(0, 256, size=(7, 9)).astype(np.uint8)
        src = tmp_path / "src.pgm"
        write_pgm_p5(src, arr8)
        img = load_grayscale(src)
        dst = tmp_path / "dst.pgm"
        save_pgm(img, dst)
        assert src.read_bytes() == dst.read_bytes()

    def test_float_blob_roundtrip(self, tmp_path, rng):
        arr = rng.random((5, 6)).astype(np.float32).astype(np.float64)
        p = tmp_path / "img.f32"
        write_float_blob(arr, p)
        back = read_float_blob(p)
        assert np.array_equal(back, arr)

    def test_float_blob_missing_sidecar(self, tmp_path):
        p = tmp_path / "img.f32"
        p.write_bytes(b"\x00" * 16)
        with pytest.raises(ImageFormatError, match="sidecar"):
            read_float_blob(p)


class TestPadAndResize:
    def test_identity_when_square_and_same_side(self, rng):
        px = rng.random((4, 4))
        out = pad_and_resize(GrayImage(px), 4)
        assert np.allclose(out.pixels, px)

    def test_constant_wide_image_pads_rows(self):
        img = GrayImage(np.full((2, 4), 0.5))
        out = pad_and_resize(img, 4)
        assert out.pixels.shape == (4, 4)
        assert (out.pixels[0] == 0).all() and (out.pixels[3] == 0).all()
        assert (out.pixels[1:3] == 0.5).all()

    def test_matches_reference_resampler(self, rng):
        for shape, side in [((3, 5), 8), ((5, 3), 8), ((6, 6), 4), ((2, 7), 5)]:
            px = rng.random(shape)
            got = pad_and_resize(GrayImage(px), side).pixels
            want = reference_pad_resize(px, side)
            assert np.abs(got - want).max() < 1e-6

    def test_side_one(self, rng):
        out = pad_and_resize(GrayImage(rng.random((3, 3))), 1)
        assert out.pixels.shape == (1, 1)

    def test_rejects_bad_side(self, rng):
        with pytest.raises(ValueError):
            pad_and_resize(GrayImage(rng.random((3, 3))), 0)

    @given(
        px=arrays(np.float64, (5, 7), elements=st.floats(0, 1)),
        side=st.integers(1, 12),
    )
    @settings(max_examples=50, deadline=None)
    def test_bounds_preserved(self, px, side):
        out = pad_and_resize(GrayImage(px), side)
        assert out.pixels.min() >= 0.0
        assert out.pixels.max() <= 1.0


class TestThreshold:
    def test_zero_threshold_all_true(self, rng):
        img = GrayImage(rng.random((4, 4)))
        assert threshold_mask(img, 0.0).bits.all()

    def test_above_constant_all_false(self):
        img = GrayImage(np.full((3, 3), 0.5))
        assert not threshold_mask(img, 0.6).bits.any()

    @given(
        px=arrays(np.float64, (4, 6), elements=st.floats(0, 1)),
        t1=st.floats(0, 1),
        t2=st.floats(0, 1),
    )
    @settings(max_examples=80, deadline=None)
    def test_monotone_in_threshold(self, px, t1, t2):
        lo, hi = min(t1, t2), max(t1, t2)
        img = GrayImage(px)
        m_hi = threshold_mask(img, hi).bits
        m_lo = threshold_mask(img, lo).bits
        assert (m_hi <= m_lo).all()


class TestGrayImage:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            GrayImage(np.array([[0.0, 1.5]]))
        with pytest.raises(ValueError):
            GrayImage(np.array([[np.nan, 0.5]]))

    def test_immutable(self, rng):
        img = GrayImage(rng.random((3, 3)))
        with pytest.raises(ValueError):
            img.pixels[0, 0] = 0.0
