"""Grayscale image container, PNM/PNG input, preprocessing and thresholding.

Images are carried as immutable H×W float64 grids with intensities in
[0, 1]. RGB inputs keep only the green channel, the standard choice for
retinal photographs where vessel contrast lives in that channel.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ImageFormatError(ValueError):
    """Raised for unreadable, truncated or unsupported image files."""


@dataclass(frozen=True, eq=False)
class GrayImage:
    """H×W grid of intensities in [0, 1], immutable once constructed."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("image must be a non-empty 2-d array")
        if not np.isfinite(px).all():
            raise ValueError("image contains non-finite values")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean foreground mask with the same grid layout as GrayImage."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.dtype != np.bool_:
            raise ValueError("mask bits must be boolean")
        if b.ndim != 2 or b.size == 0:
            raise ValueError("mask must be a non-empty 2-d array")
        b = b.copy()
        b.flags.writeable = False
        object.__setattr__(self, "bits", b)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


# ---------------------------------------------------------------------------
# PNM (PGM/PPM) parsing

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _pnm_tokens(data: bytes, pos: int, count: int) -> tuple[list[int], int]:
    """Read `count` ASCII integer tokens, skipping whitespace and # comments."""
    toks: list[int] = []
    while len(toks) < count:
        while pos < len(data):
            c = data[pos : pos + 1]
            if c in _WHITESPACE:
                pos += 1
            elif c == b"#":
                while pos < len(data) and data[pos : pos + 1] not in b"\r\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and data[pos : pos + 1] not in _WHITESPACE + b"#":
            pos += 1
        if start == pos:
            raise ImageFormatError("unreadable file: truncated header")
        try:
            toks.append(int(data[start:pos]))
        except ValueError:
            raise ImageFormatError("unreadable file: malformed header token") from None
    return toks, pos


def _parse_ascii_samples(data: bytes, pos: int, count: int) -> np.ndarray:
    body = bytearray()
    i = pos
    while i < len(data):
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] not in b"\r\n":
                i += 1
        else:
            body.append(data[i])
            i += 1
    toks = bytes(body).split()
    if len(toks) < count:
        raise ImageFormatError("unreadable file: truncated raster")
    try:
        return np.array([int(t) for t in toks[:count]], dtype=np.int64)
    except ValueError:
        raise ImageFormatError("unreadable file: malformed raster") from None


def _load_pnm(data: bytes) -> GrayImage:
    magic = data[:2]
    (width, height, maxval), pos = _pnm_tokens(data, 2, 3)
    if width <= 0 or height <= 0:
        raise ImageFormatError("zero-sized image")
    if not 0 < maxval < 65536:
        raise ImageFormatError("unreadable file: bad maxval")
    channels = 3 if magic in (b"P3", b"P6") else 1
    count = width * height * channels

    if magic in (b"P5", b"P6"):
        if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
            raise ImageFormatError("unreadable file: missing raster separator")
        pos += 1
        bytes_per = 1 if maxval < 256 else 2
        raster = data[pos : pos + count * bytes_per]
        if len(raster) < count * bytes_per:
            raise ImageFormatError("unreadable file: truncated raster")
        dtype = np.uint8 if bytes_per == 1 else ">u2"
        samples = np.frombuffer(raster, dtype=dtype, count=count).astype(np.int64)
    else:
        samples = _parse_ascii_samples(data, pos, count)

    if samples.max(initial=0) > maxval or samples.min(initial=0) < 0:
        raise ImageFormatError("unreadable file: sample exceeds maxval")
    if channels == 3:
        samples = samples[1::3]  # green channel
    grid = samples.reshape(height, width).astype(np.float64) / float(maxval)
    return GrayImage(grid)


def _load_png(path: Path) -> GrayImage:
    from PIL import Image as PILImage
    from PIL import UnidentifiedImageError

    try:
        with PILImage.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGB")
                mode = "RGB"
            arr = np.asarray(im)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageFormatError(f"unreadable file: {exc}") from exc

    if arr.size == 0:
        raise ImageFormatError("zero-sized image")
    if mode == "L":
        grid = arr.astype(np.float64) / 255.0
    elif mode == "1":
        grid = arr.astype(np.float64)
    elif mode == "LA":
        grid = arr[..., 0].astype(np.float64) / 255.0
    elif mode in ("I;16", "I"):
        grid = arr.astype(np.float64) / 65535.0
    elif mode in ("RGB", "RGBA"):
        grid = arr[..., 1].astype(np.float64) / 255.0  # green channel
    else:
        raise ImageFormatError(f"unsupported format: PNG mode {mode}")
    return GrayImage(grid)


def load_grayscale(path: str | os.PathLike) -> GrayImage:
    """Load a PGM/PPM/PNG file as a GrayImage.

    RGB sources keep only the green channel; single-channel sources are
    scaled by the format's declared maximum value.
    """
    p = Path(path)
    data = p.read_bytes()
    if data[:2] in (b"P2", b"P3", b"P5", b"P6"):
        return _load_pnm(data)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _load_png(p)
    raise ImageFormatError("unsupported format")


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_pgm(img: GrayImage, path: str | os.PathLike) -> None:
    """Write an 8-bit binary PGM (P5). Round-trips 8-bit data exactly."""
    p = Path(path)
    raster = np.rint(img.pixels * 255.0).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode()
    _atomic_write_bytes(p, header + raster.tobytes())


# ---------------------------------------------------------------------------
# Raw float32 exchange blobs (row-major little-endian, JSON sidecar)


def write_float_blob(arr: np.ndarray, path: str | os.PathLike) -> None:
    """Write a raw little-endian float32 blob plus a `<path>.json` sidecar."""
    p = Path(path)
    a = np.ascontiguousarray(arr, dtype="<f4")
    _atomic_write_bytes(p, a.tobytes())
    sidecar = {"height": int(a.shape[0]), "width": int(a.shape[1])}
    _atomic_write_bytes(Path(str(p) + ".json"), json.dumps(sidecar).encode())


def read_float_blob(path: str | os.PathLike) -> np.ndarray:
    """Read a float32 blob written by :func:`write_float_blob`."""
    p = Path(path)
    sidecar = Path(str(p) + ".json")
    if not sidecar.exists():
        raise ImageFormatError(f"unreadable file: missing sidecar {sidecar.name}")
    meta = json.loads(sidecar.read_text())
    h, w = int(meta["height"]), int(meta["width"])
    raw = p.read_bytes()
    if len(raw) != 4 * h * w:
        raise ImageFormatError("unreadable file: blob size mismatch")
    return np.frombuffer(raw, dtype="<f4").reshape(h, w).astype(np.float64)


# ---------------------------------------------------------------------------
# Preprocessing


def _bilinear(a: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resample of a 2-d array."""
    in_h, in_w = a.shape
    ys = np.linspace(0.0, in_h - 1.0, out_h)
    xs = np.linspace(0.0, in_w - 1.0, out_w)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    top = a[np.ix_(y0, x0)] * (1 - fx) + a[np.ix_(y0, x1)] * fx
    bot = a[np.ix_(y1, x0)] * (1 - fx) + a[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bot * fy


def pad_and_resize(img: GrayImage, side: int) -> GrayImage:
    """Zero-pad to square (extra row/column to bottom/right), then resample.

    Resampling is corner-aligned bilinear to side×side.
    """
    if side < 1:
        raise ValueError("side must be >= 1")
    px = img.pixels
    h, w = px.shape
    target = max(h, w)
    top = (target - h) // 2
    left = (target - w) // 2
    padded = np.pad(px, ((top, target - h - top), (left, target - w - left)))
    out = _bilinear(padded, side, side)
    return GrayImage(np.clip(out, 0.0, 1.0))


def threshold_mask(img: GrayImage, t: float) -> BinaryMask:
    """Superlevel mask: foreground where intensity >= t."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    return BinaryMask(img.pixels >= t)
