"""PNG and binary-PPM image decoding, plus a minimal PNG encoder.

The decoder is self-contained (stdlib zlib only) and handles the PNG subset
that matters for ingest: bit depths 8 and 16 (16-bit samples truncated to
their high byte), color types grayscale, RGB, palette, grayscale+alpha and
RGBA, no interlacing. Alpha channels are dropped.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mediaseek.errors import CorruptFile, UnsupportedFormat

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass
class RasterImage:
    """Decoded RGB raster, 8 bits per channel, row-major."""

    array: np.ndarray  # uint8, shape (height, width, 3)

    def __post_init__(self) -> None:
        arr = np.asarray(self.array, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected (h, w, 3) uint8 array, got shape {arr.shape}")
        self.array = arr

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def pixels(self) -> bytes:
        return self.array.tobytes()


def load_image(path: str | Path) -> RasterImage:
    data = Path(path).read_bytes()
    if data.startswith(_PNG_SIGNATURE):
        return _decode_png(data)
    if data[:2] == b"P6":
        return _decode_ppm(data)
    if data[:1] == b"P":
        raise UnsupportedFormat(f"{path}: only binary PPM (P6) is supported")
    raise UnsupportedFormat(f"{path}: not a PNG or PPM file")


# ---------------------------------------------------------------------------
# PPM (P6)

def _decode_ppm(data: bytes) -> RasterImage:
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise CorruptFile("PPM: malformed header token")
        fields.append(int(token))
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise CorruptFile("PPM: missing header terminator")
    pos += 1  # single whitespace byte after maxval

    width, height, maxval = fields
    if width < 1 or height < 1:
        raise CorruptFile("PPM: non-positive dimensions")
    if maxval < 1 or maxval > 65535:
        raise CorruptFile(f"PPM: invalid maxval {maxval}")

    two_byte = maxval > 255
    expected = width * height * 3 * (2 if two_byte else 1)
    payload = data[pos : pos + expected]
    if len(payload) < expected:
        raise CorruptFile("PPM: truncated pixel payload")
    raw = np.frombuffer(payload, dtype=np.uint8)
    if two_byte:
        raw = raw.reshape(-1, 2)[:, 0]  # big-endian high byte
    return RasterImage(raw.reshape(height, width, 3).copy())


# ---------------------------------------------------------------------------
# PNG

def _decode_png(data: bytes) -> RasterImage:
    pos = len(_PNG_SIGNATURE)
    ihdr: tuple | None = None
    idat = bytearray()
    palette: np.ndarray | None = None
    seen_iend = False

    while pos < len(data):
        if pos + 8 > len(data):
            raise CorruptFile("PNG: truncated chunk header")
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        ctype = data[pos + 4 : pos + 8]
        body = data[pos + 8 : pos + 8 + length]
        if len(body) < length or pos + 12 + length > len(data):
            raise CorruptFile("PNG: truncated chunk body")
        (crc,) = struct.unpack(">I", data[pos + 8 + length : pos + 12 + length])
        if zlib.crc32(ctype + body) & 0xFFFFFFFF != crc:
            raise CorruptFile(f"PNG: bad CRC in {ctype!r} chunk")
        pos += 12 + length

        if ctype == b"IHDR":
            ihdr = struct.unpack(">IIBBBBB", body)
        elif ctype == b"PLTE":
            if length % 3 != 0:
                raise CorruptFile("PNG: palette size not a multiple of 3")
            palette = np.frombuffer(body, dtype=np.uint8).reshape(-1, 3)
        elif ctype == b"IDAT":
            idat.extend(body)
        elif ctype == b"IEND":
            seen_iend = True
            break

    if ihdr is None:
        raise CorruptFile("PNG: missing IHDR")
    if not seen_iend:
        raise CorruptFile("PNG: missing IEND")
    width, height, depth, color_type, compression, filt, interlace = ihdr
    if width < 1 or height < 1:
        raise CorruptFile("PNG: non-positive dimensions")
    if compression != 0 or filt != 0:
        raise CorruptFile("PNG: unknown compression/filter method")
    if interlace != 0:
        raise UnsupportedFormat("PNG: interlaced images are not supported")

    channels = {0: 1, 2: 3, 3: 1, 4: 2, 6: 4}.get(color_type)
    if channels is None:
        raise UnsupportedFormat(f"PNG: color type {color_type} not supported")
    if depth not in (8, 16) or (color_type == 3 and depth != 8):
        raise UnsupportedFormat(f"PNG: bit depth {depth} for color type {color_type} not supported")
    if color_type == 3 and palette is None:
        raise CorruptFile("PNG: palette image without PLTE chunk")

    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise CorruptFile(f"PNG: bad IDAT stream ({exc})") from exc

    sample_bytes = depth // 8
    bpp = channels * sample_bytes
    stride = width * bpp
    if len(raw) != height * (stride + 1):
        raise CorruptFile("PNG: decompressed size mismatch")

    scanlines = _defilter(raw, height, stride, bpp)
    samples = scanlines.reshape(height, width, channels, sample_bytes)[..., 0]

    if color_type == 0:
        rgb = np.repeat(samples, 3, axis=2)
    elif color_type == 2:
        rgb = samples
    elif color_type == 3:
        idx = samples[:, :, 0]
        if int(idx.max(initial=0)) >= len(palette):
            raise CorruptFile("PNG: palette index out of range")
        rgb = palette[idx]
    elif color_type == 4:
        rgb = np.repeat(samples[:, :, :1], 3, axis=2)
    else:  # 6
        rgb = samples[:, :, :3]
    return RasterImage(np.ascontiguousarray(rgb, dtype=np.uint8))


def _defilter(raw: bytes, height: int, stride: int, bpp: int) -> np.ndarray:
    """Reverse per-scanline PNG filtering; returns (height, stride) uint8."""
    out = np.zeros((height, stride), dtype=np.int32)
    buf = np.frombuffer(raw, dtype=np.uint8).reshape(height, stride + 1).astype(np.int32)
    for y in range(height):
        ftype = buf[y, 0]
        row = buf[y, 1:]
        prev = out[y - 1] if y > 0 else np.zeros(stride, dtype=np.int32)
        if ftype == 0:
            out[y] = row
        elif ftype == 1:  # Sub: cumulative sum per byte lane
            lanes = row.reshape(-1, bpp)
            out[y] = (np.cumsum(lanes, axis=0) % 256).reshape(-1)
        elif ftype == 2:  # Up
            out[y] = (row + prev) % 256
        elif ftype == 3:  # Average: left term forces a sequential pass
            cur = out[y]
            for x in range(stride):
                left = cur[x - bpp] if x >= bpp else 0
                cur[x] = (row[x] + ((left + prev[x]) >> 1)) % 256
        elif ftype == 4:  # Paeth
            cur = out[y]
            for x in range(stride):
                a = cur[x - bpp] if x >= bpp else 0
                b = prev[x]
                c = prev[x - bpp] if x >= bpp else 0
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                if pa <= pb and pa <= pc:
                    pred = a
                elif pb <= pc:
                    pred = b
                else:
                    pred = c
                cur[x] = (row[x] + pred) % 256
        else:
            raise CorruptFile(f"PNG: unknown filter type {ftype}")
    return out.astype(np.uint8)


def encode_png(img: RasterImage) -> bytes:
    """Deterministic RGB8 PNG encoding (filter 0, fixed zlib level)."""
    h, w = img.array.shape[:2]
    scanlines = bytearray()
    for y in range(h):
        scanlines.append(0)
        scanlines.extend(img.array[y].tobytes())
    idat = zlib.compress(bytes(scanlines), 6)

    def chunk(ctype: bytes, body: bytes) -> bytes:
        return (
            struct.pack(">I", len(body))
            + ctype
            + body
            + struct.pack(">I", zlib.crc32(ctype + body) & 0xFFFFFFFF)
        )

    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    return _PNG_SIGNATURE + chunk(b"IHDR", ihdr) + chunk(b"IDAT", idat) + chunk(b"IEND", b"")


def resize_bilinear(img: RasterImage, width: int, height: int) -> RasterImage:
    """Bilinear resampling with half-pixel-centre coordinate mapping."""
    src = img.array.astype(np.float64)
    h, w = src.shape[:2]
    ys = np.clip((np.arange(height) + 0.5) * h / height - 0.5, 0, h - 1)
    xs = np.clip((np.arange(width) + 0.5) * w / width - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy) + bot * fy
    return RasterImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))
