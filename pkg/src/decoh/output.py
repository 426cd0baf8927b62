"""Deterministic CSV and summary writers.

Floats are written with 17 significant digits so float64 values round-trip;
line endings are LF on every platform. Byte-identical inputs give
byte-identical CSVs.
"""
from __future__ import annotations

import os


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")


def write_summary(path, entries):
    """key=value lines, in the given order."""
    with open(path, "w", newline="") as fh:
        for key, value in entries:
            fh.write(f"{key}={format_value(value)}\n")


def ensure_writable_dir(path) -> bool:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError:
        return False
    return os.access(path, os.W_OK)
