"""Flat config parsing and deterministic CSV output.

Config files are one `key = value` pair per line with `#` comments.  CSV uses
comma separation, `.` decimals, a header row, LF line endings and 17
significant digits, so reruns with the same inputs are byte-identical.
"""

from __future__ import annotations

from pathlib import Path

__all__ = ["fmt", "parse_config", "parse_config_text", "write_csv"]


def fmt(x) -> str:
    """Render a value for CSV: floats at 17 significant digits."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path, header, rows, footer: str = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
        if footer:
            fh.write(footer + "\n")


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_config(path) -> dict:
    return parse_config_text(Path(path).read_text())
