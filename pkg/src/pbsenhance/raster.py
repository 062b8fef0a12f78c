"""Image containers, color conversions and lossless raster I/O.

Images are plain numpy arrays: an RGB image is a float64 ``(H, W, 3)`` array
with channels in [0, 1], a scalar field is a float64 ``(H, W)`` array.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

cv2.utils.logging.setLogLevel(cv2.utils.logging.LOG_LEVEL_SILENT)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class ImageIOError(OSError):
    pass


def check_rgb(img: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate an RGB raster and return it as float64."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"{name} has a zero dimension")
    if not np.all(np.isfinite(img)):
        raise ValueError(f"{name} contains non-finite values")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError(f"{name} has channel values outside [0, 1]")
    return img


@dataclass
class VideoSequence:
    frames: list[np.ndarray]
    fps: float = 30.0
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.frames:
            raise ValueError("a video needs at least one frame")
        shape = self.frames[0].shape
        for k, f in enumerate(self.frames):
            if f.shape != shape:
                raise ValueError(f"frame {k} has shape {f.shape}, expected {shape}")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames[0].shape[:2]


def _quantize8(values: np.ndarray) -> np.ndarray:
    # round half up
    return np.floor(values * 255.0 + 0.5).astype(np.uint8)


def _read_ppm(data: bytes) -> np.ndarray:
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageIOError("unreadable file: truncated PPM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte before the raster
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ImageIOError("unreadable file: malformed PPM header") from None
    if width < 1 or height < 1:
        raise ImageIOError("zero-dimension image")
    if not 0 < maxval < 65536:
        raise ImageIOError(f"unsupported format: PPM maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    count = width * height * 3
    raster = data[pos : pos + count * dtype.itemsize]
    if len(raster) < count * dtype.itemsize:
        raise ImageIOError("unreadable file: truncated PPM raster")
    pixels = np.frombuffer(raster, dtype=dtype).reshape(height, width, 3)
    return pixels.astype(np.float64) / maxval


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Read a PNG (8/16-bit) or binary PPM into a float RGB image in [0, 1].

    Grayscale files are replicated to three channels and alpha is dropped.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ImageIOError(f"unreadable file: {path}: {exc.strerror}") from exc
    if data[:2] == b"P6":
        return _read_ppm(data)
    if data[:8] != PNG_MAGIC:
        raise ImageIOError(f"unsupported format: {path}")
    raw = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageIOError(f"unreadable file: {path}")
    if raw.size == 0:
        raise ImageIOError("zero-dimension image")
    maxval = {np.dtype(np.uint8): 255.0, np.dtype(np.uint16): 65535.0}.get(raw.dtype)
    if maxval is None:
        raise ImageIOError(f"unsupported format: PNG sample type {raw.dtype}")
    if raw.ndim == 2:
        raw = np.repeat(raw[:, :, None], 3, axis=2)
    else:
        raw = raw[:, :, 2::-1] if raw.shape[2] >= 3 else np.repeat(raw[:, :, :1], 3, axis=2)
    return np.ascontiguousarray(raw, dtype=np.float64) / maxval


def save_image(img: np.ndarray, path: str | os.PathLike) -> None:
    """Write an 8-bit PNG or PPM (chosen by suffix), rounding half up."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"image must have shape (H, W, 3), got {img.shape}")
    if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("out-of-range channel value")
    path = Path(path)
    pixels = _quantize8(img)
    if path.suffix.lower() in (".ppm", ".pnm"):
        h, w = pixels.shape[:2]
        try:
            path.write_bytes(b"P6\n%d %d\n255\n" % (w, h) + pixels.tobytes())
        except OSError as exc:
            raise ImageIOError(f"cannot write {path}: {exc.strerror}") from exc
        return
    ok, buf = cv2.imencode(".png", np.ascontiguousarray(pixels[:, :, ::-1]))
    if not ok:
        raise ImageIOError(f"PNG encoding failed for {path}")
    try:
        path.write_bytes(buf.tobytes())
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc.strerror}") from exc


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def luminance(img: np.ndarray, space: str = "yuv_y") -> np.ndarray:
    """Luminance of an RGB image in [0, 1].

    ``yuv_y`` is the BT.601 luma; ``lab_l`` is CIE L* (D65 white) divided by 100.
    """
    img = np.asarray(img, dtype=np.float64)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    if space == "yuv_y":
        return np.clip(0.299 * r + 0.587 * g + 0.114 * b, 0.0, 1.0)
    if space == "lab_l":
        lin = _srgb_to_linear(img)
        # relative luminance; Y of the D65 white is 1
        y = 0.2126729 * lin[..., 0] + 0.7151522 * lin[..., 1] + 0.0721750 * lin[..., 2]
        delta = 6.0 / 29.0
        f = np.where(y > delta**3, np.cbrt(y), y / (3 * delta**2) + 4.0 / 29.0)
        return np.clip((116.0 * f - 16.0) / 100.0, 0.0, 1.0)
    raise ValueError(f"unknown luminance space {space!r}")


def dump_scalar_field(field: np.ndarray, path: str | os.PathLike) -> tuple[Path, Path]:
    """Write ``<stem>.png`` (8-bit gray) and ``<stem>.raw`` (float32 raster).

    The raw file is an ASCII ``"W H\\n"`` header followed by row-major
    little-endian float32 values.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2:
        raise ValueError("scalar field must be 2-D")
    if not np.all(np.isfinite(field)) or field.min() < 0.0 or field.max() > 1.0:
        raise ValueError("scalar field values must lie in [0, 1]")
    base = Path(path)
    if base.suffix.lower() in (".png", ".raw"):
        base = base.with_suffix("")
    png_path = base.with_name(base.name + ".png")
    raw_path = base.with_name(base.name + ".raw")
    h, w = field.shape
    ok, buf = cv2.imencode(".png", _quantize8(field))
    if not ok:
        raise ImageIOError(f"PNG encoding failed for {png_path}")
    try:
        png_path.write_bytes(buf.tobytes())
        raw_path.write_bytes(b"%d %d\n" % (w, h) + field.astype("<f4").tobytes())
    except OSError as exc:
        raise ImageIOError(f"cannot write {base}: {exc.strerror}") from exc
    return png_path, raw_path


def read_scalar_field(path: str | os.PathLike) -> np.ndarray:
    """Read a raw float raster written by :func:`dump_scalar_field`."""
    data = Path(path).read_bytes()
    newline = data.find(b"\n")
    if newline < 0:
        raise ImageIOError(f"unreadable file: {path}")
    try:
        w, h = (int(t) for t in data[:newline].split())
    except ValueError:
        raise ImageIOError(f"unreadable file: {path}") from None
    body = data[newline + 1 :]
    if len(body) != 4 * w * h:
        raise ImageIOError(f"unreadable file: {path}: expected {w * h} floats")
    return np.frombuffer(body, dtype="<f4").reshape(h, w).astype(np.float32)
