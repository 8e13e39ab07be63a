"""Portable graymap (P2 ASCII / P5 binary) reading and writing."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class PgmError(ValueError):
    pass


@dataclass(frozen=True)
class PgmImage:
    pixels: np.ndarray      # (height, width) integers in [0, maxval]
    maxval: int = 255
    magic: str = "P5"
    comments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.size == 0:
            raise PgmError("pixels must be a non-empty 2-D array")
        if not 0 < self.maxval <= 65535:
            raise PgmError(f"maxval {self.maxval} outside 1..65535")
        if px.min() < 0 or px.max() > self.maxval:
            raise PgmError("pixel values outside [0, maxval]")
        if self.magic not in ("P2", "P5"):
            raise PgmError(f"unsupported magic {self.magic!r}")
        object.__setattr__(self, "pixels", px.astype(np.int64))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def _header_tokens(buf: bytes, count: int) -> tuple[list[bytes], list[str], int]:
    """First ``count`` whitespace-separated tokens, skipping # comments.
    Returns tokens, comments and the offset just past the last token."""
    tokens, comments = [], []
    i, n = 0, len(buf)
    while len(tokens) < count:
        while i < n and buf[i:i + 1].isspace():
            i += 1
        if i >= n:
            raise PgmError("truncated header")
        if buf[i:i + 1] == b"#":
            end = buf.find(b"\n", i)
            end = n if end < 0 else end
            comments.append(buf[i + 1:end].decode("latin-1").strip())
            i = end
            continue
        start = i
        while i < n and not buf[i:i + 1].isspace() and buf[i:i + 1] != b"#":
            i += 1
        tokens.append(buf[start:i])
    return tokens, comments, i


def parse_pgm(data: bytes) -> PgmImage:
    if data[:2] not in (b"P2", b"P5"):
        raise PgmError(f"bad magic {data[:2]!r}")
    try:
        tokens, comments, pos = _header_tokens(data, 4)
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise PgmError(f"malformed header: {exc}") from None
    if width < 1 or height < 1 or not 0 < maxval <= 65535:
        raise PgmError(f"bad dimensions {width}x{height} or maxval {maxval}")
    magic = tokens[0].decode()
    count = width * height
    if magic == "P2":
        body = data[pos:]
        vals = []
        for line in body.split(b"\n"):
            line = line.split(b"#", 1)[0]
            vals += line.split()
        if len(vals) < count:
            raise PgmError(f"expected {count} samples, found {len(vals)}")
        try:
            px = np.array([int(v) for v in vals[:count]], dtype=np.int64)
        except ValueError as exc:
            raise PgmError(f"bad sample: {exc}") from None
    else:
        pos += 1  # the single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        if len(data) - pos < need:
            raise PgmError(f"truncated payload: need {need} bytes, have {len(data) - pos}")
        px = np.frombuffer(data, dtype=dtype, count=count, offset=pos).astype(np.int64)
    if px.max(initial=0) > maxval:
        raise PgmError("sample exceeds maxval")
    return PgmImage(px.reshape(height, width), maxval, magic, tuple(comments))


def write_pgm(img: PgmImage, magic: str | None = None, keep_comments: bool = True) -> bytes:
    magic = magic or img.magic
    head = [magic]
    if keep_comments:
        head += [f"# {c}" for c in img.comments]
    head += [f"{img.width} {img.height}", str(img.maxval)]
    header = ("\n".join(head) + "\n").encode("latin-1")
    if magic == "P5":
        dtype = np.dtype(">u2") if img.maxval > 255 else np.dtype("u1")
        return header + img.pixels.astype(dtype).tobytes()
    if magic == "P2":
        rows = [" ".join(str(int(v)) for v in row) for row in img.pixels]
        return header + ("\n".join(rows) + "\n").encode()
    raise PgmError(f"unsupported magic {magic!r}")


def pixels_to_data(img: PgmImage) -> np.ndarray:
    """[0, maxval] -> [-1, 1], row-major."""
    return 2.0 * img.pixels.reshape(-1) / img.maxval - 1.0


def data_to_pixels(values: np.ndarray, maxval: int) -> np.ndarray:
    px = np.rint((np.asarray(values, dtype=float) + 1.0) / 2.0 * maxval)
    return np.clip(px, 0, maxval).astype(np.int64)
