"""Minimal 8-bit grayscale BMP codec.

Handles exactly one flavor of the format: uncompressed, palette-indexed
8-bit BMP with a Windows BITMAPINFOHEADER, bottom-up row order, rows padded
to 4-byte boundaries, and an identity grayscale palette (entry i = (i,i,i)).
That is the on-disk representation used for elevation maps; everything else
is rejected with a distinct error.

Pixel arrays are uint8 with shape (rows, cols) where row 0 is the BOTTOM
image row, matching the heightmap convention that row index grows with the
world y coordinate.
"""

import struct

import numpy as np

_FILE_HEADER = struct.Struct("<2sIHHI")  # magic, file size, res1, res2, pixel offset
_INFO_HEADER = struct.Struct("<IiiHHIIiiII")
_INFO_SIZE = 40
_PALETTE_SIZE = 4 * 256
PIXEL_OFFSET = _FILE_HEADER.size + _INFO_SIZE + _PALETTE_SIZE


class BmpError(ValueError):
    """Base class for BMP parsing failures."""


class BmpHeaderError(BmpError):
    """File or info header is malformed or not the supported layout."""


class BmpDepthError(BmpError):
    """Bit depth is not 8 bits per pixel."""


class BmpCompressionError(BmpError):
    """Pixel data is compressed (only BI_RGB is supported)."""


class BmpPaletteError(BmpError):
    """Palette is not the identity grayscale ramp."""


def row_stride(width: int) -> int:
    """Bytes per stored pixel row, padded to a 4-byte boundary."""
    return (width + 3) & ~3


def encode_gray8(pixels: np.ndarray) -> bytes:
    """Serialize a uint8 (rows, cols) array to canonical BMP bytes.

    Row 0 of the array is written first, i.e. it becomes the bottom image
    row of the bottom-up file.
    """
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError(f"expected a 2-D pixel array, got shape {pixels.shape}")
    if pixels.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {pixels.dtype}")
    rows, cols = pixels.shape
    if rows < 1 or cols < 1:
        raise ValueError("pixel array must be non-empty")

    stride = row_stride(cols)
    image_size = stride * rows
    file_size = PIXEL_OFFSET + image_size

    parts = [
        _FILE_HEADER.pack(b"BM", file_size, 0, 0, PIXEL_OFFSET),
        _INFO_HEADER.pack(_INFO_SIZE, cols, rows, 1, 8, 0, image_size, 0, 0, 256, 0),
    ]
    palette = np.zeros((256, 4), dtype=np.uint8)
    palette[:, 0] = palette[:, 1] = palette[:, 2] = np.arange(256, dtype=np.uint8)
    parts.append(palette.tobytes())

    padded = np.zeros((rows, stride), dtype=np.uint8)
    padded[:, :cols] = pixels
    parts.append(padded.tobytes())
    return b"".join(parts)


def decode_gray8(data: bytes) -> np.ndarray:
    """Parse BMP bytes into a uint8 (rows, cols) array, row 0 = bottom row.

    Raises a distinct BmpError subclass for each rejection reason: malformed
    header, unsupported bit depth, compressed data, non-grayscale palette.
    """
    if len(data) < _FILE_HEADER.size + _INFO_SIZE:
        raise BmpHeaderError(f"file too short for BMP headers ({len(data)} bytes)")
    magic, file_size, _, _, pixel_offset = _FILE_HEADER.unpack_from(data, 0)
    if magic != b"BM":
        raise BmpHeaderError(f"bad magic {magic!r}, expected b'BM'")

    (info_size, width, height, planes, depth, compression, _image_size,
     _xppm, _yppm, colors_used, _colors_important) = _INFO_HEADER.unpack_from(
        data, _FILE_HEADER.size)
    if info_size != _INFO_SIZE:
        raise BmpHeaderError(
            f"unsupported info header size {info_size}, expected {_INFO_SIZE}")
    if planes != 1:
        raise BmpHeaderError(f"planes must be 1, got {planes}")
    if width < 1:
        raise BmpHeaderError(f"width must be positive, got {width}")
    if height < 1:
        # Negative height means top-down storage, which is outside the
        # supported subset.
        raise BmpHeaderError(f"height must be positive (bottom-up), got {height}")
    if depth != 8:
        raise BmpDepthError(f"bit depth must be 8, got {depth}")
    if compression != 0:
        raise BmpCompressionError(f"compression type {compression}, only BI_RGB supported")

    n_colors = colors_used if colors_used else 256
    if n_colors > 256:
        raise BmpHeaderError(f"palette declares {n_colors} colors, max is 256")
    palette_start = _FILE_HEADER.size + info_size
    palette_end = palette_start + 4 * n_colors
    if len(data) < palette_end:
        raise BmpHeaderError("file truncated inside palette")
    palette = np.frombuffer(data, dtype=np.uint8,
                            count=4 * n_colors, offset=palette_start)
    palette = palette.reshape(n_colors, 4)
    ramp = np.arange(n_colors, dtype=np.uint8)
    # Entries are stored B, G, R, reserved; all three channels must equal
    # the entry index. The reserved byte is ignored.
    if not (np.array_equal(palette[:, 0], ramp)
            and np.array_equal(palette[:, 1], ramp)
            and np.array_equal(palette[:, 2], ramp)):
        raise BmpPaletteError("palette is not the identity grayscale ramp")

    stride = row_stride(width)
    pixel_end = pixel_offset + stride * height
    if pixel_offset < palette_end or len(data) < pixel_end:
        raise BmpHeaderError("file truncated inside pixel data")
    raw = np.frombuffer(data, dtype=np.uint8,
                        count=stride * height, offset=pixel_offset)
    pixels = raw.reshape(height, stride)[:, :width]
    if n_colors < 256 and pixels.max(initial=0) >= n_colors:
        raise BmpPaletteError(
            f"pixel index {int(pixels.max())} exceeds palette size {n_colors}")
    if file_size not in (0, len(data)) and file_size < pixel_end:
        raise BmpHeaderError(f"declared file size {file_size} is inconsistent")
    return pixels.copy()
