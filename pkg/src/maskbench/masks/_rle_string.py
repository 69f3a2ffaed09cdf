"""Printable-string codec for run-length counts.

This is the de-facto compressed format used by COCO-style results files:
LEB128-like, 5 value bits per character plus a continuation bit, offset by
48 into printable ASCII.  Runs at index 3 and beyond are delta-coded
against the run two positions earlier, which keeps alternating
background/foreground runs small.
"""

from __future__ import annotations

from ..errors import MalformedStringError


def compress_counts(counts) -> str:
    chars = []
    for i, count in enumerate(counts):
        x = int(count)
        if i > 2:
            x -= int(counts[i - 2])
        more = True
        while more:
            c = x & 0x1F
            x >>= 5
            # once the sign bit of this group is set, stop when the
            # remainder is pure sign extension
            more = (x != -1) if (c & 0x10) else (x != 0)
            if more:
                c |= 0x20
            chars.append(chr(c + 48))
    return "".join(chars)


def decompress_counts(s: str) -> list[int]:
    counts: list[int] = []
    p = 0
    n = len(s)
    while p < n:
        x = 0
        k = 0
        more = True
        while more:
            if p >= n:
                raise MalformedStringError("truncated compressed RLE string")
            c = ord(s[p]) - 48
            if c < 0 or c > 63:
                raise MalformedStringError(
                    f"invalid character {s[p]!r} at position {p}"
                )
            x |= (c & 0x1F) << (5 * k)
            more = bool(c & 0x20)
            p += 1
            k += 1
            if not more and (c & 0x10):
                x |= -1 << (5 * k)
        if len(counts) > 2:
            x += counts[-2]
        counts.append(x)
    return counts
