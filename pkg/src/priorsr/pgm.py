"""Binary PGM (P5) image I/O.

Reads 8- or 16-bit files and normalizes by the stated maxval to [0, 1].
Writes 16-bit (maxval 65535, big-endian samples per the format), rounding
to the nearest level, so load(save(x)) matches x to within 1/131070.
"""

from __future__ import annotations

import numpy as np

from .imageops import as_image


def _read_token(f) -> bytes:
    # Tokens are separated by whitespace; '#' starts a comment to end of line.
    tok = b""
    while True:
        c = f.read(1)
        if c == b"":
            raise ValueError("unexpected end of PGM header")
        if c == b"#":
            while c not in (b"\n", b""):
                c = f.read(1)
            continue
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        if _read_token(f) != b"P5":
            raise ValueError(f"{path}: not a binary PGM (P5) file")
        width = int(_read_token(f))
        height = int(_read_token(f))
        maxval = int(_read_token(f))
        if width < 1 or height < 1 or not 0 < maxval < 65536:
            raise ValueError(f"{path}: invalid PGM dimensions or maxval")
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = f.read(width * height * dtype.itemsize)
        if len(raw) != width * height * dtype.itemsize:
            raise ValueError(f"{path}: truncated PGM raster")
        data = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    return data.astype(np.float64) / maxval


def write_pgm(path, img) -> None:
    a = np.clip(as_image(img), 0.0, 1.0)
    maxval = 65535
    levels = np.rint(a * maxval).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{a.shape[1]} {a.shape[0]}\n{maxval}\n".encode("ascii"))
        f.write(levels.tobytes())
