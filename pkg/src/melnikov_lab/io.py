"""CSV, JSON and ``key=value`` configuration files.

CSV output has a header row, numbers with 17 significant digits and LF line
endings, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .errors import ConfigError

__all__ = ["format_value", "csv_text", "write_text", "json_text", "read_config", "to_jsonable"]

PathLike = Union[str, Path]


def format_value(v) -> str:
    """Render one CSV cell: floats with ``%.17g``, booleans as ``true``/``false``."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for r in rows:
        w.writerow([format_value(v) for v in r])
    return buf.getvalue()


def to_jsonable(obj):
    """Convert numpy scalars and arrays (recursively) to plain Python."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def json_text(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_text(text: str, path: Optional[PathLike] = None, stream: Optional[TextIO] = None):
    """Write ``text`` to ``path`` with LF endings, or to ``stream``."""
    if path is None:
        stream.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_config(path: PathLike) -> Dict[str, str]:
    """Read a flat ``key=value`` file.

    Blank lines and lines starting with ``#`` are ignored; keys may use
    ``-`` or ``_``.  Repeated keys are an error.

    Raises
    ------
    ConfigError
        On a malformed line (the message names the line) or a missing file.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    out: Dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ConfigError(f"{path}:{n}: expected key=value, got {s!r}")
        key, value = (p.strip() for p in s.split("=", 1))
        key = key.replace("-", "_")
        if not key:
            raise ConfigError(f"{path}:{n}: empty key")
        if key in out:
            raise ConfigError(f"{path}:{n}: key {key!r} given twice")
        out[key] = value
    return out
