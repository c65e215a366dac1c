"""Uncompressed video (YUV4MPEG2) and still image (PPM P6) I/O.

Frames are held as read-only ``uint8`` arrays of shape ``(height, width, 3)``
in interleaved RGB order. Colour conversion uses the BT.601 full-range
(JPEG) matrix with half-away-from-zero rounding, so every byte produced here
is reproducible across platforms.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    MalformedHeader,
    TruncatedFrame,
    TruncatedPixels,
    UnsupportedColorspace,
    UnsupportedMaxval,
)

__all__ = [
    "Frame",
    "Image",
    "VideoClip",
    "parse_y4m",
    "write_y4m",
    "parse_ppm",
    "write_ppm",
    "fit_image",
    "rgb_to_yuv",
    "yuv_to_rgb",
    "snap_to_fixed_point",
    "as_fraction",
]

Y4M_MAGIC = b"YUV4MPEG2"
FRAME_MAGIC = b"FRAME"

# BT.601 full-range coefficients scaled by 10**6 so conversion is exact integer
# arithmetic; ties then round the same way on every platform.
_SCALE = 1_000_000
_RGB_TO_YUV = np.array(
    [
        [299_000, 587_000, 114_000],
        [-168_736, -331_264, 500_000],
        [500_000, -418_688, -81_312],
    ],
    dtype=np.int64,
)
_YUV_TO_RGB = np.array(
    [
        [1_000_000, 0, 1_402_000],
        [1_000_000, -344_136, -714_136],
        [1_000_000, 1_772_000, 0],
    ],
    dtype=np.int64,
)
_CHROMA_OFFSET = np.array([0, 128, 128], dtype=np.int64)


def as_fraction(value: Fraction | int | float | str) -> Fraction:
    """Exact rational from user input; floats are read by their decimal text."""
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def _round_clamp(scaled: np.ndarray) -> np.ndarray:
    """Divide by the scale, rounding half away from zero, and clamp to a byte."""
    rounded = np.sign(scaled) * ((np.abs(scaled) + _SCALE // 2) // _SCALE)
    return np.clip(rounded, 0, 255).astype(np.uint8)


def rgb_to_yuv(rgb: np.ndarray) -> np.ndarray:
    """Convert ``(..., 3)`` uint8 RGB to ``(..., 3)`` uint8 YUV (BT.601 full range)."""
    return _round_clamp(np.asarray(rgb, dtype=np.int64) @ _RGB_TO_YUV.T + _CHROMA_OFFSET * _SCALE)


def yuv_to_rgb(yuv: np.ndarray) -> np.ndarray:
    """Convert ``(..., 3)`` uint8 YUV to ``(..., 3)`` uint8 RGB (BT.601 full range)."""
    return _round_clamp((np.asarray(yuv, dtype=np.int64) - _CHROMA_OFFSET) @ _YUV_TO_RGB.T)


def snap_to_fixed_point(rgb: np.ndarray, max_iter: int = 8) -> np.ndarray:
    """Move each colour to a nearby one that survives RGB -> YUV -> RGB unchanged.

    Iterating the round trip converges for every 8-bit colour within a few
    steps, moving interior colours by at most one code value per channel.
    """
    current = np.asarray(rgb, dtype=np.uint8)
    for _ in range(max_iter):
        nxt = yuv_to_rgb(rgb_to_yuv(current))
        if np.array_equal(nxt, current):
            return current
        current = nxt
    raise RuntimeError("YUV round trip did not converge")


class Frame:
    """One RGB picture. Immutable; the pixel array is marked read-only."""

    __slots__ = ("_pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected (height, width, 3) pixels, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {arr.dtype}")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.flags.writeable = False
        object.__setattr__(self, "_pixels", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Frame is immutable")

    @classmethod
    def from_bytes(cls, width: int, height: int, data: bytes) -> "Frame":
        if width < 1 or height < 1:
            raise ValueError("frame dimensions must be positive")
        if len(data) != width * height * 3:
            raise ValueError(
                f"pixel buffer has {len(data)} bytes, expected {width * height * 3}"
            )
        arr = np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3)
        return cls(arr)

    @classmethod
    def filled(cls, width: int, height: int, rgb: Sequence[int]) -> "Frame":
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[:] = np.asarray(rgb, dtype=np.uint8)
        return cls(arr)

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    def tobytes(self) -> bytes:
        return self._pixels.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return np.array_equal(self._pixels, other._pixels)

    def __hash__(self) -> int:
        return hash((self.width, self.height, self.tobytes()))

    def __repr__(self) -> str:
        return f"Frame({self.width}x{self.height})"


# The adversary's picture is just a frame that has not been placed in a clip.
Image = Frame


class VideoClip:
    """A constant-frame-rate sequence of equally sized frames.

    Pixel data is stored as one read-only ``(n, height, width, 3)`` array.
    ``fps`` is an exact :class:`fractions.Fraction`.
    """

    __slots__ = ("_data", "_fps")

    def __init__(self, data: np.ndarray, fps: Fraction | int | str):
        arr = np.asarray(data)
        if arr.ndim != 4 or arr.shape[3] != 3:
            raise ValueError(f"expected (n, height, width, 3) array, got {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("a clip needs at least one frame")
        if arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ValueError("frame dimensions must be positive")
        if arr.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {arr.dtype}")
        fps = Fraction(fps)
        if fps <= 0:
            raise ValueError("fps must be positive")
        if arr.flags.writeable:
            arr = arr.copy()
            arr.flags.writeable = False
        object.__setattr__(self, "_data", arr)
        object.__setattr__(self, "_fps", fps)

    def __setattr__(self, name, value):
        raise AttributeError("VideoClip is immutable")

    @classmethod
    def from_frames(cls, frames: Iterable[Frame], fps: Fraction | int | str) -> "VideoClip":
        frames = list(frames)
        if not frames:
            raise ValueError("a clip needs at least one frame")
        shape = frames[0].pixels.shape
        for f in frames:
            if f.pixels.shape != shape:
                raise ValueError("all frames in a clip must share one size")
        return cls(np.stack([f.pixels for f in frames]), fps)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def fps(self) -> Fraction:
        return self._fps

    @property
    def width(self) -> int:
        return self._data.shape[2]

    @property
    def height(self) -> int:
        return self._data.shape[1]

    @property
    def frame_count(self) -> int:
        return self._data.shape[0]

    @property
    def duration(self) -> Fraction:
        """Exact duration in seconds."""
        return self.frame_count / self._fps

    def frame(self, index: int) -> Frame:
        return Frame(self._data[index])

    @property
    def frames(self) -> tuple[Frame, ...]:
        return tuple(Frame(f) for f in self._data)

    def __len__(self) -> int:
        return self.frame_count

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VideoClip):
            return NotImplemented
        return self._fps == other._fps and np.array_equal(self._data, other._data)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (
            f"VideoClip({self.frame_count} frames, {self.width}x{self.height}, "
            f"fps={self._fps.numerator}/{self._fps.denominator})"
        )


# ---------------------------------------------------------------------------
# YUV4MPEG2


def _parse_header_params(line: bytes) -> dict[str, str]:
    tokens = line.split(b" ")
    if not tokens or tokens[0] != Y4M_MAGIC:
        raise MalformedHeader("stream does not start with YUV4MPEG2")
    params: dict[str, str] = {}
    for tok in tokens[1:]:
        if not tok:
            continue
        try:
            text = tok.decode("ascii")
        except UnicodeDecodeError as exc:
            raise MalformedHeader("non-ASCII header token") from exc
        params[text[0]] = text[1:]
    return params


def _positive_int(value: str | None, name: str) -> int:
    if value is None:
        raise MalformedHeader(f"missing {name} parameter")
    if not re.fullmatch(r"[0-9]+", value) or int(value) < 1:
        raise MalformedHeader(f"invalid {name} parameter: {value!r}")
    return int(value)


def _parse_rate(value: str | None) -> Fraction:
    if value is None:
        raise MalformedHeader("missing F parameter")
    m = re.fullmatch(r"([0-9]+):([0-9]+)", value)
    if not m or int(m.group(1)) < 1 or int(m.group(2)) < 1:
        raise MalformedHeader(f"invalid F parameter: {value!r}")
    return Fraction(int(m.group(1)), int(m.group(2)))


def parse_y4m(data: bytes) -> VideoClip:
    """Decode a YUV4MPEG2 stream (``C444`` or ``C420jpeg``) into an RGB clip."""
    data = bytes(data)
    if not data.startswith(Y4M_MAGIC):
        raise MalformedHeader("stream does not start with YUV4MPEG2")
    eol = data.find(b"\n")
    if eol < 0:
        raise MalformedHeader("header line is not LF-terminated")
    params = _parse_header_params(data[:eol])
    width = _positive_int(params.get("W"), "W")
    height = _positive_int(params.get("H"), "H")
    fps = _parse_rate(params.get("F"))
    colorspace = params.get("C", "420jpeg")
    if colorspace == "444":
        chroma_w, chroma_h = width, height
    elif colorspace == "420jpeg":
        chroma_w, chroma_h = (width + 1) // 2, (height + 1) // 2
    else:
        raise UnsupportedColorspace(f"unsupported colorspace C{colorspace}")

    luma_size = width * height
    chroma_size = chroma_w * chroma_h
    payload = luma_size + 2 * chroma_size

    planes = []
    pos = eol + 1
    while pos < len(data):
        frame_eol = data.find(b"\n", pos)
        if frame_eol < 0:
            tail = data[pos:]
            if FRAME_MAGIC.startswith(tail) or tail.startswith(FRAME_MAGIC):
                raise TruncatedFrame(f"frame {len(planes)} header is truncated")
            raise MalformedHeader(f"frame {len(planes)} does not start with FRAME")
        marker = data[pos:frame_eol]
        if marker != FRAME_MAGIC and not marker.startswith(FRAME_MAGIC + b" "):
            raise MalformedHeader(f"frame {len(planes)} does not start with FRAME")
        start = frame_eol + 1
        end = start + payload
        if end > len(data):
            raise TruncatedFrame(
                f"frame {len(planes)} has {len(data) - start} payload bytes, expected {payload}"
            )
        planes.append(np.frombuffer(data, dtype=np.uint8, count=payload, offset=start))
        pos = end
    if not planes:
        raise TruncatedFrame("stream contains no frames")

    raw = np.stack(planes)
    n = raw.shape[0]
    y = raw[:, :luma_size].reshape(n, height, width)
    u = raw[:, luma_size : luma_size + chroma_size].reshape(n, chroma_h, chroma_w)
    v = raw[:, luma_size + chroma_size :].reshape(n, chroma_h, chroma_w)
    if colorspace == "420jpeg":
        u = u.repeat(2, axis=1).repeat(2, axis=2)[:, :height, :width]
        v = v.repeat(2, axis=1).repeat(2, axis=2)[:, :height, :width]
    yuv = np.stack([y, u, v], axis=-1)
    return VideoClip(yuv_to_rgb(yuv), fps)


def y4m_header(clip: VideoClip) -> bytes:
    fps = clip.fps
    return (
        f"YUV4MPEG2 W{clip.width} H{clip.height} F{fps.numerator}:{fps.denominator}"
        " Ip A1:1 C444\n"
    ).encode("ascii")


def write_y4m(clip: VideoClip) -> bytes:
    """Encode ``clip`` as a planar 4:4:4 YUV4MPEG2 stream."""
    yuv = rgb_to_yuv(clip.data)
    # (n, h, w, 3) -> (n, 3, h, w): one contiguous Y, U, V plane per frame
    planar = np.ascontiguousarray(yuv.transpose(0, 3, 1, 2)).reshape(clip.frame_count, -1)
    marker = np.frombuffer(FRAME_MAGIC + b"\n", dtype=np.uint8)
    body = np.concatenate(
        [np.broadcast_to(marker, (clip.frame_count, marker.size)), planar], axis=1
    )
    return y4m_header(clip) + body.tobytes()


# ---------------------------------------------------------------------------
# PPM (P6)

_PPM_HEADER = re.compile(rb"P6\s+([0-9]+)\s+([0-9]+)\s+([0-9]+)\s")


def parse_ppm(data: bytes) -> Frame:
    """Decode a binary PPM with maxval 255."""
    data = bytes(data)
    m = _PPM_HEADER.match(data)
    if not m:
        raise MalformedHeader("not a P6 PPM header")
    width, height, maxval = (int(g) for g in m.groups())
    if width < 1 or height < 1:
        raise MalformedHeader("PPM dimensions must be positive")
    if maxval != 255:
        raise UnsupportedMaxval(f"maxval {maxval} is not supported (only 255)")
    need = width * height * 3
    pixels = data[m.end() : m.end() + need]
    if len(pixels) < need:
        raise TruncatedPixels(f"PPM has {len(pixels)} pixel bytes, expected {need}")
    return Frame.from_bytes(width, height, pixels)


def write_ppm(image: Frame) -> bytes:
    return f"P6\n{image.width} {image.height}\n255\n".encode("ascii") + image.tobytes()


def fit_image(image: Frame, width: int, height: int) -> Frame:
    """Nearest-neighbour resize to ``(width, height)``; aspect ratio is not kept."""
    if width < 1 or height < 1:
        raise ValueError("target dimensions must be positive")
    rows = np.arange(height) * image.height // height
    cols = np.arange(width) * image.width // width
    return Frame(image.pixels[rows[:, None], cols[None, :]])
