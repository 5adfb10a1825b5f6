"""ASCII netpbm (P1 bitmap / P2 graymap) reading and writing.

Symbols round-trip losslessly: a P1 file carries a binary alphabet, a P2
file an alphabet of maxval + 1 gray levels. P1 pixel digits may be packed
without whitespace, as the format allows.
"""

from __future__ import annotations

import numpy as np


def _tokens(text: str):
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        yield from line.split()


def parse_netpbm(text: str) -> tuple[np.ndarray, int]:
    """Parse P1/P2 text; returns (array, maxval)."""
    stripped = [ln.split("#", 1)[0] for ln in text.splitlines()]
    body = "\n".join(stripped)
    toks = body.split()
    if not toks:
        raise ValueError("empty image file")
    magic = toks[0]
    if magic == "P1":
        if len(toks) < 3:
            raise ValueError("truncated P1 header")
        width, height = int(toks[1]), int(toks[2])
        digits = "".join(toks[3:])
        if len(digits) != width * height:
            raise ValueError(
                f"P1 payload has {len(digits)} pixels, expected {width * height}"
            )
        arr = np.frombuffer(digits.encode("ascii"), dtype=np.uint8) - ord("0")
        if arr.size and arr.max() > 1:
            raise ValueError("P1 pixels must be 0 or 1")
        return arr.reshape(height, width).astype(np.int32), 1
    if magic == "P2":
        if len(toks) < 4:
            raise ValueError("truncated P2 header")
        width, height, maxval = int(toks[1]), int(toks[2]), int(toks[3])
        vals = [int(t) for t in toks[4:]]
        if len(vals) != width * height:
            raise ValueError(
                f"P2 payload has {len(vals)} pixels, expected {width * height}"
            )
        arr = np.array(vals, dtype=np.int32).reshape(height, width)
        if arr.size and (arr.min() < 0 or arr.max() > maxval):
            raise ValueError("P2 pixels out of range")
        return arr, maxval
    raise ValueError(f"unsupported magic {magic!r}, expected P1 or P2")


def read_netpbm(path: str) -> tuple[np.ndarray, int]:
    with open(path, "r", encoding="ascii") as fh:
        return parse_netpbm(fh.read())


def format_netpbm(array: np.ndarray, maxval: int) -> str:
    """Render P1 when maxval == 1, else P2. Lines stay under 70 chars."""
    a = np.asarray(array)
    if a.ndim != 2:
        raise ValueError("expected a 2-D array")
    if a.size and (a.min() < 0 or a.max() > maxval):
        raise ValueError("pixels out of range for maxval")
    height, width = a.shape
    if maxval == 1:
        lines = ["P1", f"{width} {height}"]
        for row in a:
            digits = "".join(str(int(v)) for v in row)
            lines.extend(digits[i:i + 64] for i in range(0, len(digits), 64))
    else:
        lines = ["P2", f"{width} {height}", f"{maxval}"]
        for row in a:
            toks = [str(int(v)) for v in row]
            cur = []
            n = 0
            for t in toks:
                if n + len(t) + bool(cur) > 68:
                    lines.append(" ".join(cur))
                    cur, n = [], 0
                cur.append(t)
                n += len(t) + 1
            if cur:
                lines.append(" ".join(cur))
    return "\n".join(lines) + "\n"


def write_netpbm(path: str, array: np.ndarray, maxval: int):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_netpbm(array, maxval))
