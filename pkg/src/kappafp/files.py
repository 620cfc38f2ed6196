"""Plain-text file formats: CSV tables, snapshots, manifests, configs, gnuplot stubs.

CSV files are UTF-8, comma separated, and start with '#'-prefixed comment
lines followed by one header row naming the columns.  Snapshots are
two-column CSV files (v, f).  Manifests are ``key=value`` lines.  Run
configurations are INI-style ``key = value`` files with one section per
scheme (see :mod:`kappafp.harness`).
"""

from __future__ import annotations

import configparser
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "write_csv",
    "read_csv",
    "write_snapshot",
    "read_snapshot",
    "write_manifest",
    "read_manifest",
    "read_config",
    "write_gnuplot",
]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()):
    """Write rows under a '#' comment block and a column header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(columns) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(x) for x in r) + "\n")
    return path


def read_csv(path):
    """Return (comments, columns, data) where data is a float array (rows x cols)."""
    comments, columns, rows = [], None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif columns is None:
                columns = line.split(",")
            elif line:
                rows.append([float(x) for x in line.split(",")])
    return comments, columns, np.array(rows, dtype=float).reshape(len(rows), len(columns or []))


def write_snapshot(path, v, f, comments: Sequence[str] = ()):
    """Two-column (v, f) CSV."""
    return write_csv(path, ["v", "f"], zip(np.asarray(v, float), np.asarray(f, float)), comments)


def read_snapshot(path):
    _, _, data = read_csv(path)
    return data[:, 0], data[:, 1]


def write_manifest(path, entries: dict):
    """key=value manifest, one entry per line, in insertion order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in entries.items():
            fh.write(f"{k}={_fmt(v)}\n")
    return path


def read_manifest(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#") and "=" in line:
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    return out


def read_config(path) -> dict:
    """Parse an INI-style config into {section: {key: str}}."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep key case (N, N_v, T)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    cp.read(path, encoding="utf-8")
    return {s: dict(cp.items(s)) for s in cp.sections()}


def write_gnuplot(path, data_file, xcol: str, ycols: Sequence[str], columns: Sequence[str],
                  logx: bool = False, logy: bool = True, title: str = ""):
    """Emit a gnuplot command file plotting ``ycols`` against ``xcol`` of a CSV file."""
    path = Path(path)
    xi = list(columns).index(xcol) + 1
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key autotitle columnhead",
    ]
    if title:
        lines.append(f"set title '{title}'")
    if logx:
        lines.append("set logscale x")
    if logy:
        lines.append("set logscale y")
    plots = [f"'{Path(data_file).name}' using {xi}:{list(columns).index(c) + 1} with linespoints"
             for c in ycols]
    lines.append("plot " + ", \\\n     ".join(plots))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
