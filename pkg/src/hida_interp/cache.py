"""On-disk cache of exact operator matrices.

Enabled when HIDA_INTERP_CACHE names a directory. Each matrix is one text file:
a header line with the key, a shape line, then one row per line with
';'-separated scalars. Writes go through a temporary file and os.replace so a
reader never sees a partial block.
"""
from __future__ import annotations

import hashlib
import os
import tempfile
from fractions import Fraction
from typing import Any

from .exact_arith import CyclotomicNumber, format_cyclotomic, format_rational, parse_cyclotomic

ENV_VAR = "HIDA_INTERP_CACHE"


def cache_dir() -> str | None:
    d = os.environ.get(ENV_VAR)
    return d or None


def _path(key: tuple) -> str | None:
    d = cache_dir()
    if d is None:
        return None
    h = hashlib.sha1(repr(key).encode()).hexdigest()[:24]
    return os.path.join(d, f"op_{h}.txt")


def _fmt(x: Any) -> str:
    if isinstance(x, CyclotomicNumber):
        return format_cyclotomic(x)
    if isinstance(x, Fraction):
        return format_rational(x)
    return str(int(x))


def _parse(s: str, kind: str):
    if kind == "CF":
        return parse_cyclotomic(s)
    if kind == "QQ":
        return Fraction(s)
    return int(s)


def load_matrix(key: tuple, kind: str):
    """Rows of the cached matrix, or None when absent or mismatched."""
    path = _path(key)
    if path is None or not os.path.exists(path):
        return None
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != repr(key):
        return None
    nrows, ncols = (int(x) for x in lines[1].split())
    rows = []
    for line in lines[2:2 + nrows]:
        rows.append([_parse(t, kind) for t in line.split(";")] if ncols else [])
    if len(rows) != nrows:
        return None
    return rows


def save_matrix(key: tuple, rows) -> None:
    path = _path(key)
    if path is None:
        return
    os.makedirs(os.path.dirname(path), exist_ok=True)
    rows = [list(r) for r in rows]
    ncols = len(rows[0]) if rows else 0
    body = [repr(key), f"{len(rows)} {ncols}"]
    body += [";".join(_fmt(x) for x in r) for r in rows]
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), prefix=".op_", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write("\n".join(body) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
