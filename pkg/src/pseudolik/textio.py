"""Line-oriented key/value text format used by parameter and config files.

Grammar: one `key value...` entry per line, whitespace separated; blank lines
and lines starting with `#` are ignored.  Keys may not repeat.  All numeric
values are written with 17 significant digits so files round-trip float64
exactly.
"""

from __future__ import annotations

from .errors import ParseError


def format_floats(values) -> str:
    return " ".join(format(float(v), ".17g") for v in values)


def parse_kv_lines(text: str) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        key = toks[0]
        if key in out:
            raise ParseError(f"duplicate key {key!r}", line=lineno)
        if len(toks) < 2:
            raise ParseError(f"key {key!r} has no value", line=lineno)
        out[key] = toks[1:]
    return out


def take_floats(kv: dict[str, list[str]], key: str, count: int) -> list[float]:
    if key not in kv:
        raise ParseError(f"missing key {key!r}")
    toks = kv[key]
    if len(toks) != count:
        raise ParseError(f"key {key!r} expects {count} values, got {len(toks)}")
    try:
        return [float(t) for t in toks]
    except ValueError as exc:
        raise ParseError(f"key {key!r}: {exc}") from None


def take_int(kv: dict[str, list[str]], key: str) -> int:
    if key not in kv:
        raise ParseError(f"missing key {key!r}")
    toks = kv[key]
    if len(toks) != 1:
        raise ParseError(f"key {key!r} expects one value")
    try:
        return int(toks[0])
    except ValueError:
        raise ParseError(f"key {key!r}: not an integer: {toks[0]!r}") from None


def take_str(kv: dict[str, list[str]], key: str) -> str:
    if key not in kv:
        raise ParseError(f"missing key {key!r}")
    toks = kv[key]
    if len(toks) != 1:
        raise ParseError(f"key {key!r} expects one value")
    return toks[0]
