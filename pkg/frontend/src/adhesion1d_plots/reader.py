"""Parsers for the solver's CSV output contract.

A run directory contains ``profile.csv`` (header ``x,u``, one row per cell)
and ``kymograph.csv`` (header ``t`` followed by the cell-center
coordinates, then one row per snapshot: time followed by the densities).
Parsing is strict: malformed content raises MalformedDataError naming the
file, row and column.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["MalformedDataError", "Profile", "Kymograph", "read_profile", "read_kymograph"]


class MalformedDataError(ValueError):
    pass


@dataclass
class Profile:
    x: np.ndarray
    u: np.ndarray


@dataclass
class Kymograph:
    x: np.ndarray
    t: np.ndarray
    u: np.ndarray  # shape (n_times, n_cells)


def _float(token: str, path, row, col) -> float:
    try:
        return float(token)
    except ValueError:
        raise MalformedDataError(
            f"{path}: row {row}, column {col}: cannot parse {token!r} as a number"
        ) from None


def read_profile(path: str | Path) -> Profile:
    path = Path(path)
    if not path.exists():
        raise MalformedDataError(f"{path}: no such file")
    lines = path.read_text().strip().splitlines()
    if not lines or lines[0].strip() != "x,u":
        raise MalformedDataError(f"{path}: row 1: expected header 'x,u'")
    xs, us = [], []
    for r, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise MalformedDataError(f"{path}: row {r}: expected 2 columns, got {len(parts)}")
        xs.append(_float(parts[0], path, r, 1))
        us.append(_float(parts[1], path, r, 2))
    if not xs:
        raise MalformedDataError(f"{path}: no data rows")
    return Profile(x=np.array(xs), u=np.array(us))


def read_kymograph(path: str | Path) -> Kymograph:
    path = Path(path)
    if not path.exists():
        raise MalformedDataError(f"{path}: no such file")
    lines = path.read_text().strip().splitlines()
    if not lines:
        raise MalformedDataError(f"{path}: empty file")
    header = lines[0].split(",")
    if header[0].strip() != "t":
        raise MalformedDataError(f"{path}: row 1, column 1: expected 't'")
    if len(header) < 2:
        raise MalformedDataError(f"{path}: row 1: header carries no cell coordinates")
    x = np.array([_float(tok, path, 1, c) for c, tok in enumerate(header[1:], start=2)])
    times, rows = [], []
    for r, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise MalformedDataError(
                f"{path}: row {r}: expected {len(header)} columns, got {len(parts)}"
            )
        times.append(_float(parts[0], path, r, 1))
        rows.append([_float(tok, path, r, c) for c, tok in enumerate(parts[1:], start=2)])
    if not rows:
        raise MalformedDataError(f"{path}: no snapshot rows")
    return Kymograph(x=x, t=np.array(times), u=np.array(rows))
