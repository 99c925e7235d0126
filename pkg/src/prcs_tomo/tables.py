"""'#'-headed comma-separated tables and key=value summary files."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .errors import ParseError

_KV = re.compile(r"^#\s*([A-Za-z_][A-Za-z0-9_.:-]*)\s*=\s*(.*?)\s*$")


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return ",".join(format_value(x) for x in v)
    return str(v)


def write_table(path, columns, data, meta=None, title=None) -> Path:
    path = Path(path)
    data = np.column_stack([np.asarray(c, dtype=float) for c in data])
    lines = [f"# {title}"] if title else []
    lines += [f"# {k}={format_value(v)}" for k, v in (meta or {}).items()]
    lines.append("# " + ",".join(columns))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")
    return path


def read_table(path):
    """Return (meta, columns, data) for a file written by ``write_table``."""
    path = Path(path)
    meta, rows, columns = {}, [], None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _KV.match(line)
                if m:
                    meta[m.group(1)] = m.group(2)
                elif "," in line:
                    columns = [c.strip() for c in line[1:].split(",")]
                continue
            try:
                row = [float(v) for v in line.split(",")]
            except ValueError:
                raise ParseError(f"malformed row {line!r}", path, lineno) from None
            if columns is not None and len(row) != len(columns):
                raise ParseError(f"expected {len(columns)} columns, got {len(row)}", path, lineno)
            rows.append(row)
    if columns is None:
        raise ParseError("missing column header", path)
    data = np.array(rows, dtype=float).reshape(-1, len(columns))
    return meta, columns, data


def write_summary(path, items, title=None) -> Path:
    path = Path(path)
    lines = [f"# {title}"] if title else []
    lines += [f"# {k}={format_value(v)}" for k, v in items.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_summary(path) -> dict:
    path = Path(path)
    out = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or not line.startswith("#"):
            if line:
                raise ParseError(f"unexpected line {line!r}", path, lineno)
            continue
        m = _KV.match(line)
        if m:
            out[m.group(1)] = m.group(2)
    return out
