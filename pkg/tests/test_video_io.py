from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidshield.errors import (
    MalformedHeader,
    TruncatedFrame,
    TruncatedPixels,
    UnsupportedColorspace,
    UnsupportedMaxval,
    VideoFormatError,
)
from vidshield.video_io import (
    Frame,
    VideoClip,
    fit_image,
    parse_ppm,
    parse_y4m,
    rgb_to_yuv,
    write_ppm,
    write_y4m,
    yuv_to_rgb,
)


def _half_away(x: Fraction) -> int:
    q = math.floor(abs(x) + Fraction(1, 2))
    return q if x >= 0 else -q


def _clamp(x: int) -> int:
    return max(0, min(255, x))


def _dec(text: str) -> Fraction:
    return Fraction(text)


def scalar_yuv_to_rgb(y, u, v):
    """Independent scalar BT.601 full-range conversion in exact rationals."""
    cb, cr = u - 128, v - 128
    return (
        _clamp(_half_away(y + _dec("1.402") * cr)),
        _clamp(_half_away(y - _dec("0.344136") * cb - _dec("0.714136") * cr)),
        _clamp(_half_away(y + _dec("1.772") * cb)),
    )


def scalar_rgb_to_yuv(r, g, b):
    return (
        _clamp(_half_away(_dec("0.299") * r + _dec("0.587") * g + _dec("0.114") * b)),
        _clamp(_half_away(_dec("-0.168736") * r - _dec("0.331264") * g + _dec("0.5") * b + 128)),
        _clamp(_half_away(_dec("0.5") * r - _dec("0.418688") * g - _dec("0.081312") * b + 128)),
    )


def random_clip(rng, n=3, w=5, h=4, fps=Fraction(25)):
    return VideoClip(rng.integers(0, 256, size=(n, h, w, 3), dtype=np.uint8), fps)


class TestFrame:
    def test_buffer_length_checked(self):
        with pytest.raises(ValueError):
            Frame.from_bytes(2, 2, b"\x00" * 11)

    def test_immutable(self):
        f = Frame.filled(2, 2, (1, 2, 3))
        with pytest.raises(AttributeError):
            f.pixels = None
        with pytest.raises(ValueError):
            f.pixels[0, 0, 0] = 9

    def test_clip_requires_equal_sizes(self):
        with pytest.raises(ValueError):
            VideoClip.from_frames([Frame.filled(2, 2, (0, 0, 0)), Frame.filled(3, 2, (0, 0, 0))], 25)

    def test_duration_is_exact(self):
        clip = VideoClip(np.zeros((1001, 1, 1, 3), np.uint8), Fraction(30000, 1001))
        assert clip.duration == Fraction(1001 * 1001, 30000)


class TestColorConversion:
    def test_zero_yuv_by_hand(self):
        # R = 1.402 * -128 < 0 -> 0; G = 0.344136*128 + 0.714136*128 = 135.46 -> 135; B < 0 -> 0
        assert tuple(yuv_to_rgb(np.array([0, 0, 0], np.uint8))) == (0, 135, 0)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(7)
        px = rng.integers(0, 256, size=(500, 3), dtype=np.uint8)
        for p, y in zip(px, rgb_to_yuv(px)):
            assert tuple(y) == scalar_rgb_to_yuv(*map(int, p))
        for p, r in zip(px, yuv_to_rgb(px)):
            assert tuple(r) == scalar_yuv_to_rgb(*map(int, p))


class TestY4M:
    def test_parse_c444_zero_frame(self):
        data = b"YUV4MPEG2 W4 H4 F25:1 Ip A1:1 C444\nFRAME\n" + bytes(48)
        clip = parse_y4m(data)
        assert (clip.frame_count, clip.width, clip.height, clip.fps) == (1, 4, 4, Fraction(25))
        assert np.all(clip.data == np.array([0, 135, 0], np.uint8))

    def test_empty_stream(self):
        with pytest.raises(MalformedHeader):
            parse_y4m(b"")

    @pytest.mark.parametrize(
        "header",
        [
            b"YUV4MPEG W4 H4 F25:1 C444\n",
            b"YUV4MPEG2 H4 F25:1 C444\n",
            b"YUV4MPEG2 W4 F25:1 C444\n",
            b"YUV4MPEG2 W4 H4 C444\n",
            b"YUV4MPEG2 W4 H4 F25:0 C444\n",
            b"YUV4MPEG2 W0 H4 F25:1 C444\n",
        ],
    )
    def test_malformed_header(self, header):
        with pytest.raises(MalformedHeader):
            parse_y4m(header + b"FRAME\n" + bytes(48))

    def test_header_without_newline(self):
        with pytest.raises(MalformedHeader):
            parse_y4m(b"YUV4MPEG2 W4 H4 F25:1 C444")

    def test_exact_tie_rounds_away_from_zero(self):
        # 0.299*210 + 0.587*30 + 0.114*150 = 97.5 exactly
        assert rgb_to_yuv(np.array([210, 30, 150], np.uint8))[0] == 98

    @pytest.mark.parametrize("tag", [b"C420", b"C422", b"Cmono", b"C420paldv"])
    def test_unsupported_colorspace(self, tag):
        with pytest.raises(UnsupportedColorspace):
            parse_y4m(b"YUV4MPEG2 W4 H4 F25:1 " + tag + b"\nFRAME\n" + bytes(48))

    def test_c420jpeg_nearest_upsampling(self):
        w, h = 3, 3  # odd sizes: chroma planes are 2x2
        y = bytes(range(100, 109))
        u = bytes([90, 110, 130, 150])
        v = bytes([120, 125, 135, 140])
        clip = parse_y4m(f"YUV4MPEG2 W{w} H{h} F25:1 C420jpeg\n".encode() + b"FRAME\n" + y + u + v)
        for row in range(h):
            for col in range(w):
                ci = (row // 2) * 2 + col // 2
                expect = scalar_yuv_to_rgb(y[row * w + col], u[ci], v[ci])
                assert tuple(clip.data[0, row, col]) == expect

    def test_missing_colorspace_defaults_to_420jpeg(self):
        clip = parse_y4m(b"YUV4MPEG2 W2 H2 F25:1\nFRAME\n" + bytes([128] * 6))
        assert clip.width == 2 and clip.frame_count == 1

    def test_frame_parameters_are_skipped(self):
        clip = parse_y4m(b"YUV4MPEG2 W1 H1 F25:1 C444\nFRAME Ixyz\n" + bytes([128, 128, 128]))
        assert tuple(clip.data[0, 0, 0]) == (128, 128, 128)

    def test_header_only_stream_has_no_frames(self):
        with pytest.raises(TruncatedFrame):
            parse_y4m(b"YUV4MPEG2 W1 H1 F25:1 C444\n")

    def test_garbage_between_frames(self):
        with pytest.raises(MalformedHeader):
            parse_y4m(b"YUV4MPEG2 W1 H1 F25:1 C444\nFRAME\n" + bytes(3) + b"JUNK\n" + bytes(3))

    def test_write_length(self):
        clip = VideoClip(np.zeros((1, 2, 2, 3), np.uint8), 25)
        header = b"YUV4MPEG2 W2 H2 F25:1 Ip A1:1 C444\n"
        out = write_y4m(clip)
        assert out.startswith(header)
        assert len(out) == len(header) + 6 + 12

    def test_ntsc_rate_round_trip(self):
        clip = VideoClip(np.zeros((2, 2, 2, 3), np.uint8), Fraction(30000, 1001))
        out = write_y4m(clip)
        assert b" F30000:1001 " in out
        assert parse_y4m(out).fps == Fraction(30000, 1001)

    def test_fixed_point_pixels_survive(self):
        # enumerate a coarse RGB grid; the scalar oracle decides which points are fixed
        grid = np.array(
            [(r, g, b) for r in range(0, 256, 15) for g in range(0, 256, 15) for b in range(0, 256, 15)],
            dtype=np.uint8,
        )
        fixed = np.array(
            [scalar_yuv_to_rgb(*scalar_rgb_to_yuv(*map(int, p))) == tuple(map(int, p)) for p in grid]
        )
        assert 0 < fixed.sum() < len(grid)
        clip = VideoClip(grid.reshape(1, 1, -1, 3), 25)
        back = parse_y4m(write_y4m(clip)).data.reshape(-1, 3)
        same = np.all(back == grid, axis=1)
        assert np.array_equal(same, fixed)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_write_parse_write_is_stable_on_snapped_clips(self, seed):
        from vidshield.video_io import snap_to_fixed_point

        rng = np.random.default_rng(seed)
        clip = VideoClip(snap_to_fixed_point(random_clip(rng).data.copy()), 25)
        out = write_y4m(clip)
        assert parse_y4m(out) == clip
        assert write_y4m(parse_y4m(out)) == out

    @settings(max_examples=200, deadline=None)
    @given(st.data())
    def test_truncation_never_crashes(self, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 1000)))
        out = write_y4m(random_clip(rng, n=2, w=3, h=2))
        header_len = out.index(b"\n") + 1
        frame_len = 6 + 3 * 2 * 3
        cut = data.draw(st.integers(0, len(out) - 1))
        if cut < header_len:
            with pytest.raises(MalformedHeader):
                parse_y4m(out[:cut])
        elif cut == header_len or (cut - header_len) % frame_len:
            with pytest.raises(TruncatedFrame):
                parse_y4m(out[:cut])
        else:
            assert parse_y4m(out[:cut]).frame_count == (cut - header_len) // frame_len

    @settings(max_examples=200, deadline=None)
    @given(st.binary(max_size=64))
    def test_fuzzed_bytes_only_raise_format_errors(self, junk):
        try:
            parse_y4m(b"YUV4MPEG2 W2 H1 F25:1 C444\n" + junk)
        except VideoFormatError:
            pass


class TestPPM:
    def test_parse_red_pixel(self):
        img = parse_ppm(b"P6\n1 1\n255\n" + bytes([255, 0, 0]))
        assert (img.width, img.height) == (1, 1)
        assert tuple(img.pixels[0, 0]) == (255, 0, 0)

    def test_maxval(self):
        with pytest.raises(UnsupportedMaxval):
            parse_ppm(b"P6\n1 1\n65535\n" + bytes(6))

    def test_malformed(self):
        with pytest.raises(MalformedHeader):
            parse_ppm(b"P3\n1 1\n255\n0 0 0\n")
        with pytest.raises(MalformedHeader):
            parse_ppm(b"")

    def test_truncated(self):
        with pytest.raises(TruncatedPixels):
            parse_ppm(b"P6\n2 1\n255\n" + bytes(5))

    def test_canonical_round_trip(self):
        raw = b"P6  3\t2\n255\n" + bytes(range(18))
        canonical = b"P6\n3 2\n255\n" + bytes(range(18))
        assert write_ppm(parse_ppm(raw)) == canonical
        assert write_ppm(parse_ppm(canonical)) == canonical

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 9), st.integers(1, 9), st.data())
    def test_round_trip(self, w, h, data):
        pixels = data.draw(st.binary(min_size=w * h * 3, max_size=w * h * 3))
        img = Frame.from_bytes(w, h, pixels)
        assert parse_ppm(write_ppm(img)) == img


class TestFitImage:
    def test_one_pixel_fills(self):
        out = fit_image(Frame.filled(1, 1, (255, 0, 0)), 4, 4)
        assert out.pixels.shape == (4, 4, 3)
        assert np.all(out.pixels == [255, 0, 0])

    def test_checkerboard_block_doubles(self):
        a, b = [0, 0, 0], [255, 255, 255]
        img = Frame(np.array([[a, b], [b, a]], np.uint8))
        out = fit_image(img, 4, 4).pixels
        expect = np.array([[a, a, b, b], [a, a, b, b], [b, b, a, a], [b, b, a, a]], np.uint8)
        assert np.array_equal(out, expect)

    def test_index_table_5x3_to_4x4(self):
        # cols: floor(d*5/4) = 0,1,2,3 ; rows: floor(d*3/4) = 0,0,1,2
        src = np.zeros((3, 5, 3), np.uint8)
        for r in range(3):
            for c in range(5):
                src[r, c] = (r, c, 0)
        out = fit_image(Frame(src), 4, 4).pixels
        assert [int(out[0, c, 1]) for c in range(4)] == [0, 1, 2, 3]
        assert [int(out[r, 0, 0]) for r in range(4)] == [0, 0, 1, 2]
