"""Image carriers and file I/O shared by every pipeline stage.

Images are plain 2-D numpy arrays of float64, row-major, shape (height,
width). Loaders scale pixel values into [0, 1]; binary change maps are
2-D uint8 arrays over {0, 1} with 1 = changed.

Two on-disk formats are supported:

* binary PGM ("P5"), 8- or 16-bit, for inputs and human-viewable maps;
* a raw float32 sidecar ("SARF") for lossless intermediate images that
  8-bit quantization would corrupt. Layout: 4 magic bytes ``SARF``,
  little-endian u32 width, u32 height, u32 reserved (zero), then
  width*height little-endian IEEE-754 float32 values, row-major.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DegenerateInputError, FormatError, ParameterError

SARF_MAGIC = b"SARF"
_WHITESPACE = b" \t\r\n\x0b\x0c"


def as_image(values, name: str = "image") -> np.ndarray:
    """Coerce to a finite 2-D float64 array, raising ParameterError otherwise."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ParameterError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite values")
    return arr


def _next_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Return (token, start_offset, next_pos), skipping whitespace and # comments."""
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c in _WHITESPACE:
            pos += 1
        elif c == b"#":
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise FormatError(f"unterminated header comment at byte {pos}")
            pos = nl + 1
        else:
            break
    if pos >= n:
        raise FormatError(f"unexpected end of header at byte {pos}")
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], start, pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    token, start, pos = _next_token(data, pos)
    try:
        value = int(token)
    except ValueError:
        raise FormatError(f"invalid {what} {token!r} at byte {start}") from None
    if value <= 0:
        raise FormatError(f"{what} must be positive, got {value} at byte {start}")
    return value, pos


def load_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5) file, scaling pixel values to [0, 1].

    Supports maxval up to 65535 (two big-endian bytes per pixel above 255).
    Raises FormatError naming the byte offset on malformed headers, and on
    truncated pixel data.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    magic, start, pos = _next_token(data, 0)
    if magic != b"P5":
        raise FormatError(f"unsupported magic {magic!r} at byte {start}; only binary P5 is accepted")
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if maxval > 65535:
        raise FormatError(f"maxval {maxval} exceeds 65535")
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise FormatError(f"missing whitespace after maxval at byte {pos}")
    pos += 1  # exactly one whitespace byte separates header and pixel data

    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    payload = data[pos : pos + expected]
    if len(payload) != expected:
        raise FormatError(
            f"truncated pixel data: expected {expected} bytes after byte {pos}, got {len(payload)}"
        )
    pixels = np.frombuffer(payload, dtype=dtype).astype(np.float64)
    return (pixels / maxval).reshape(height, width)


def save_pgm(raster, path) -> None:
    """Write an image with values in [0, 1] as an 8-bit binary PGM (maxval 255)."""
    img = as_image(raster, "raster")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ParameterError(
            f"pixel values outside the [0, 1] range: min {img.min():.6g}, max {img.max():.6g}"
        )
    quantized = np.rint(img * 255.0).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(quantized.tobytes())


def save_f32(raster, path) -> None:
    """Write an image losslessly as a SARF raw-float32 sidecar file."""
    img = as_image(raster, "raster")
    height, width = img.shape
    header = SARF_MAGIC + struct.pack("<III", width, height, 0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(img.astype("<f4").tobytes())


def load_f32(path) -> np.ndarray:
    """Read a SARF raw-float32 file written by save_f32."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16:
        raise FormatError(f"file too short for a SARF header: {len(data)} bytes")
    if data[:4] != SARF_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {SARF_MAGIC!r}")
    width, height, _reserved = struct.unpack("<III", data[4:16])
    if width <= 0 or height <= 0:
        raise FormatError(f"invalid dimensions {width}x{height}")
    expected = 16 + 4 * width * height
    if len(data) != expected:
        raise FormatError(f"payload size mismatch: expected {expected} bytes, got {len(data)}")
    values = np.frombuffer(data[16:], dtype="<f4").astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise FormatError("payload contains non-finite values")
    return values.reshape(height, width)


def normalize_center(raster) -> np.ndarray:
    """Min-max scale an image to [0, 1] and subtract the mean of the result.

    Output has zero mean and range within [-1, 1]. A constant image has no
    contrast to normalize and raises DegenerateInputError.
    """
    img = as_image(raster, "raster")
    lo = img.min()
    hi = img.max()
    if hi <= lo:
        raise DegenerateInputError(f"constant image (all values {lo:.6g}): nothing to normalize")
    scaled = (img - lo) / (hi - lo)
    return scaled - scaled.mean()


def save_binary(labels, path) -> None:
    """Write a {0, 1} change map as a PGM with gray levels {0, 255}."""
    arr = np.asarray(labels)
    if arr.ndim != 2 or not np.isin(arr, (0, 1)).all():
        raise ParameterError("binary map must be a 2-D array over {0, 1}")
    save_pgm(arr.astype(np.float64), path)


def load_binary(path) -> np.ndarray:
    """Read a change-map PGM written by save_binary back to a {0, 1} uint8 array."""
    img = load_pgm(path)
    levels = np.unique(np.rint(img * 255.0))
    if not np.isin(levels, (0.0, 255.0)).all():
        raise FormatError(f"not a binary map: gray levels {levels.astype(int).tolist()}")
    return (img > 0.5).astype(np.uint8)
