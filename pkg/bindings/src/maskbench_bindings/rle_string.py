"""Standalone codec for the compressed run-length strings in results files.

Wire format: each run length is written low bits first in 5-bit groups,
one printable character per group, offset by 48; bit 0x20 marks that
another group follows.  From the fourth run onward the stored value is
the difference against the run two positions earlier, so alternating
background/foreground runs stay short.  This module speaks only the
format and never imports the core package, which lets pipelines inspect
mask strings from results files on machines where the core is absent.
"""

from __future__ import annotations

from .errors import MalformedStringError


def rle_string_encode(counts) -> str:
    """Compress a list of run lengths into the printable-string form."""
    vals = [int(c) for c in counts]
    chars: list[str] = []
    for i, v in enumerate(vals):
        if v < 0:
            raise MalformedStringError(f"run lengths must be non-negative, got {v}")
        x = v - vals[i - 2] if i > 2 else v
        while True:
            group = x & 0x1F
            x >>= 5
            # a set high bit makes the group carry sign, so emission can
            # stop once the remainder is nothing but that sign
            done = (x == -1) if group & 0x10 else (x == 0)
            if not done:
                group |= 0x20
            chars.append(chr(group + 48))
            if done:
                break
    return "".join(chars)


def rle_string_decode(s: str, total: int | None = None) -> list[int]:
    """Expand a compressed string back into run lengths.

    ``total``, when given, must equal the sum of the decoded runs (for a
    whole-image mask that is height*width).  Any syntax problem, a run
    that resolves negative, or a total mismatch raises
    MalformedStringError.
    """
    counts: list[int] = []
    pos = 0
    while pos < len(s):
        x = 0
        shift = 0
        while True:
            if pos >= len(s):
                raise MalformedStringError("truncated compressed string")
            c = ord(s[pos]) - 48
            if not 0 <= c <= 63:
                raise MalformedStringError(
                    f"character {s[pos]!r} at position {pos} is out of range"
                )
            x |= (c & 0x1F) << shift
            shift += 5
            pos += 1
            if not c & 0x20:
                if c & 0x10:
                    x |= -1 << shift
                break
        if len(counts) > 2:
            x += counts[-2]
        if x < 0:
            raise MalformedStringError(f"run {len(counts)} decodes to {x}")
        counts.append(x)
    if total is not None and sum(counts) != total:
        raise MalformedStringError(
            f"runs sum to {sum(counts)}, expected {total}"
        )
    return counts


def rle_area(counts) -> int:
    """Foreground pixel count of a run list (the odd-indexed runs)."""
    return int(sum(counts[1::2]))
