"""Deterministic CSV/JSON writers.

Every file opens with a comment line carrying the package version, the
seed, and a hash of the full run configuration; no timestamps or host
details, so reruns are byte-identical.
"""
from __future__ import annotations

import hashlib
import json
from typing import Optional

from . import __version__


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _meta_line(meta: dict) -> str:
    parts = [f"pivotal-lab {__version__}"]
    for key, val in meta.items():
        parts.append(f"{key}={val}")
    return "# " + " ".join(parts)


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)  # shortest round-trip form
    return str(v)


def write_csv(path, header: list, rows: list, meta: dict) -> None:
    lines = [_meta_line(meta), ",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, payload, meta: dict) -> None:
    doc = {"meta": {"tool": f"pivotal-lab {__version__}", **meta}, **payload}
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
