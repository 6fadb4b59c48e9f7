"""Image decoding/encoding, color conversion, cropping and resizing.

Images are RGB uint8 arrays of shape (H, W, 3); gray planes are float64
arrays of shape (H, W) with values in [0, 255].
"""

import io
import re
from dataclasses import dataclass

import numpy as np
from PIL import Image as PilImage
from PIL import UnidentifiedImageError

from .errors import ArgumentError, BoundsError, DecodeError, UnsupportedFormatError


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel rectangle, top-left corner (x, y), extent (w, h)."""

    x: int
    y: int
    w: int
    h: int

    def validate(self, width, height):
        if self.w < 1 or self.h < 1:
            raise BoundsError(f"bbox has empty extent: {self}")
        if self.x < 0 or self.y < 0 or self.x + self.w > width or self.y + self.h > height:
            raise BoundsError(f"bbox {self} not contained in {width}x{height} image")


def _check_image(img):
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ArgumentError(f"expected (H, W, 3) uint8 image, got {img.shape} {img.dtype}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ArgumentError("empty image")
    return img


def decode_image(data):
    """Decode PNG, JPEG or binary PPM (P6) bytes to an RGB image."""
    if not isinstance(data, (bytes, bytearray)):
        raise ArgumentError("decode_image expects bytes")
    if len(data) < 3:
        raise DecodeError(f"file too short ({len(data)} bytes) to hold an image header")
    if data[:2] == b"P6":
        return _decode_ppm(bytes(data))
    if data[:8] == b"\x89PNG\r\n\x1a\n" or data[:2] == b"\xff\xd8":
        try:
            with PilImage.open(io.BytesIO(data)) as im:
                return np.asarray(im.convert("RGB"), dtype=np.uint8)
        except UnidentifiedImageError as e:
            raise DecodeError(f"unreadable image data: {e}") from e
        except OSError as e:
            raise DecodeError(f"truncated or corrupt image: {e}") from e
    raise UnsupportedFormatError(
        f"unsupported image format (magic {data[:4]!r}); supported: PNG, JPEG, PPM P6"
    )


_PPM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _decode_ppm(data):
    pos = 2  # past "P6"
    fields = []
    while len(fields) < 3:
        m = _PPM_TOKEN.match(data, pos)
        if m is None:
            raise DecodeError(f"PPM header truncated at offset {pos}")
        fields.append(m.group(1))
        pos = m.end()
    try:
        w, h, maxval = (int(f) for f in fields)
    except ValueError:
        raise DecodeError(f"non-numeric PPM header field near offset {pos}")
    if w < 1 or h < 1:
        raise DecodeError(f"bad PPM dimensions {w}x{h}")
    if maxval != 255:
        raise DecodeError(f"only maxval 255 PPM supported, got {maxval}")
    if pos >= len(data) or not chr(data[pos]).isspace():
        raise DecodeError(f"missing whitespace after PPM header at offset {pos}")
    pos += 1
    need = w * h * 3
    raster = data[pos : pos + need]
    if len(raster) < need:
        raise DecodeError(
            f"PPM raster truncated at offset {pos + len(raster)}: "
            f"need {need} bytes, have {len(raster)}"
        )
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w, 3).copy()


def encode_ppm(img):
    """Encode an RGB image as binary PPM (P6). Lossless round-trip."""
    img = _check_image(img)
    h, w = img.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + img.tobytes()


def decode_pgm(data):
    """Decode binary PGM (P5) bytes to a (H, W) uint8 array."""
    if len(data) < 3 or data[:2] != b"P5":
        raise DecodeError("not a binary PGM (P5) file")
    pos = 2
    fields = []
    while len(fields) < 3:
        m = _PPM_TOKEN.match(data, pos)
        if m is None:
            raise DecodeError(f"PGM header truncated at offset {pos}")
        fields.append(m.group(1))
        pos = m.end()
    w, h, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise DecodeError(f"only maxval 255 PGM supported, got {maxval}")
    pos += 1
    need = w * h
    raster = data[pos : pos + need]
    if len(raster) < need:
        raise DecodeError(f"PGM raster truncated: need {need} bytes, have {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


def encode_pgm(plane):
    plane = np.asarray(plane, dtype=np.uint8)
    h, w = plane.shape
    return b"P5\n%d %d\n255\n" % (w, h) + plane.tobytes()


def to_grayscale(img):
    """BT.601 luma: 0.299 R + 0.587 G + 0.114 B, unrounded float64."""
    img = _check_image(img).astype(np.float64)
    return 0.299 * img[:, :, 0] + 0.587 * img[:, :, 1] + 0.114 * img[:, :, 2]


def to_opponent(img):
    """Opponent color planes O1=(R-G)/sqrt2, O2=(R+G-2B)/sqrt6, O3=(R+G+B)/sqrt3."""
    img = _check_image(img).astype(np.float64)
    r, g, b = img[:, :, 0], img[:, :, 1], img[:, :, 2]
    o1 = (r - g) / np.sqrt(2.0)
    o2 = (r + g - 2.0 * b) / np.sqrt(6.0)
    o3 = (r + g + b) / np.sqrt(3.0)
    return o1, o2, o3


def from_opponent(o1, o2, o3):
    """Inverse of to_opponent, for round-trip checks."""
    r = o1 / np.sqrt(2.0) + o2 / np.sqrt(6.0) + o3 / np.sqrt(3.0)
    g = -o1 / np.sqrt(2.0) + o2 / np.sqrt(6.0) + o3 / np.sqrt(3.0)
    b = -2.0 * o2 / np.sqrt(6.0) + o3 / np.sqrt(3.0)
    return r, g, b


def crop(img, box):
    img = _check_image(img)
    box.validate(img.shape[1], img.shape[0])
    return img[box.y : box.y + box.h, box.x : box.x + box.w].copy()


def resize(img, new_w, new_h):
    """Bilinear resize; aspect ratio is the caller's responsibility."""
    img = _check_image(img)
    if new_w < 1 or new_h < 1:
        raise ArgumentError(f"target dimensions must be >= 1, got {new_w}x{new_h}")
    h, w = img.shape[:2]
    if (new_w, new_h) == (w, h):
        return img.copy()
    # Pixel-center aligned sampling grid.
    sx = (np.arange(new_w) + 0.5) * w / new_w - 0.5
    sy = (np.arange(new_h) + 0.5) * h / new_h - 0.5
    sx = np.clip(sx, 0, w - 1)
    sy = np.clip(sy, 0, h - 1)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[None, :, None]
    fy = (sy - y0)[:, None, None]
    src = img.astype(np.float64)
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy) + bot * fy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)
