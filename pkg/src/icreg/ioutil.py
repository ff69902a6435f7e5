"""Small file-output helpers: round-trip float formatting and atomic writes."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path


def fmt17(x: float) -> str:
    """Decimal text with 17 significant digits; parses back to the same float64."""
    return format(float(x), ".17g")


def fmt_repr(x: float) -> str:
    """Shortest decimal that round-trips the float64 exactly."""
    return repr(float(x))


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write text to `path` via a temp file + rename so readers never see partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv_text(header: list[str], rows: list[list[str]], comment: str | None = None) -> str:
    """Render a CSV as text. `comment`, when given, becomes a leading '# ...' line."""
    lines = []
    if comment is not None:
        lines.append("# " + comment)
    lines.append(",".join(header))
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(
    path: str | Path, header: list[str], rows: list[list[str]], comment: str | None = None
) -> Path:
    """Render and atomically write a CSV file."""
    return atomic_write_text(path, write_csv_text(header, rows, comment))
