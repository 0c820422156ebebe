"""Frame image loading. PPM (P6) is built in; other formats go through Pillow."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .motdata import SequenceInfo

__all__ = ["FrameLoader", "read_ppm", "write_ppm"]


def write_ppm(path: str | Path, image: np.ndarray) -> None:
    img = np.ascontiguousarray(image, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) uint8 image")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    while True:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        break
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def read_ppm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, pos = _read_token(data, 0)
    if magic != b"P6":
        raise ValueError(f"{path}: not a binary PPM (magic {magic!r})")
    w, pos = _read_token(data, pos)
    h, pos = _read_token(data, pos)
    maxval, pos = _read_token(data, pos)
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PPM supported")
    pos += 1  # single whitespace after maxval
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return pixels.reshape(h, w, 3)


def read_image(path: str | Path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        return read_ppm(path)
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise ValueError(f"cannot decode {path.suffix} without Pillow") from exc
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


class FrameLoader:
    """Loads ``%06d<ext>`` frames from a sequence's image directory.

    Missing frames yield ``None`` so the tracker runs without appearance cues.
    """

    def __init__(self, seq_dir: str | Path, info: SequenceInfo):
        self.info = info
        self.image_dir = Path(seq_dir) / info.image_dir if info.image_dir else None

    def __call__(self, frame: int) -> np.ndarray | None:
        if self.image_dir is None:
            return None
        path = self.image_dir / f"{frame:06d}{self.info.image_ext}"
        if not path.exists():
            return None
        return read_image(path)
