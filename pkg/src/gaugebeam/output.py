"""
Deterministic file writers: CSV tables, SVG plots, the JSON manifest and an
output-directory lock.
"""
from __future__ import annotations

import hashlib
import json
import os
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .errors import ConfigError

CSV_HEADER = "# gaugebeam v1"
LOCK_NAME = ".gaugebeam.lock"


def format_value(x) -> str:
    x = float(x) + 0.0  # folds -0.0 into 0.0
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def write_csv(path, columns, data, mask=None):
    """Write a table; ``mask`` (True = excluded) adds a trailing ``mask`` column."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(columns):
        raise ValueError("data must be 2D with one column per name")
    names = list(columns)
    if mask is not None:
        names.append("mask")
        mask = np.asarray(mask, dtype=bool).reshape(-1)
    lines = [CSV_HEADER, ",".join(names)]
    for i, row in enumerate(data):
        cells = [format_value(v) for v in row]
        if mask is not None:
            cells.append("1" if mask[i] else "0")
        lines.append(",".join(cells))
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Read a file written by :func:`write_csv`; returns (columns, array)."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path} is not a gaugebeam CSV")
    columns = lines[1].split(",")
    rows = [[float(v) for v in line.split(",")] for line in lines[2:]]
    return columns, np.array(rows).reshape(len(rows), len(columns))


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(directory, payload: dict, files):
    """manifest.json with sorted keys and sha256 checksums of ``files``."""
    directory = Path(directory)
    body = dict(payload)
    body["files"] = {Path(f).name: sha256(directory / Path(f).name) for f in sorted(files)}
    text = json.dumps(_jsonable(body), sort_keys=True, indent=2) + "\n"
    (directory / "manifest.json").write_text(text, encoding="ascii")
    return directory / "manifest.json"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else format_value(x)
    return obj


@contextmanager
def locked_directory(directory, overwrite=False, expected=()):
    """Create ``directory`` and hold an exclusive lockfile inside it.

    Raises ConfigError if another run holds the lock or if any ``expected``
    output already exists and ``overwrite`` is False.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lock = directory / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as exc:
        raise ConfigError(f"output directory {str(directory)!r} is locked by another run "
                          f"(remove {LOCK_NAME} if stale)") from exc
    os.close(fd)
    try:
        if not overwrite:
            clash = sorted(n for n in expected if (directory / n).exists())
            if clash:
                raise ConfigError(f"output files exist in {str(directory)!r}: {clash}; "
                                  f"set overwrite = true in [output]")
        yield directory
    finally:
        lock.unlink(missing_ok=True)


# --------------------------------------------------------------------------
# SVG
# --------------------------------------------------------------------------

_W, _H = 640, 420
_PAD_L, _PAD_R, _PAD_T, _PAD_B = 70, 20, 40, 50
_PALETTE = ("#1f4e9c", "#c0392b", "#27ae60", "#8e44ad", "#d68910")


def _num(x):
    return "%.6g" % x


def _esc(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _finite_range(values):
    v = np.asarray(values, float)
    v = v[np.isfinite(v)]
    if not v.size:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def line_plot(path, x, series, title="", xlabel="", ylabel="", ylim=None):
    """Self-contained SVG line plot; ``series`` maps labels to y arrays.  NaNs break lines."""
    x = np.asarray(x, float)
    x0, x1 = _finite_range(x)
    y0, y1 = ylim if ylim is not None else _finite_range(np.concatenate([np.asarray(y, float).ravel()
                                                                       for y in series.values()]))
    pw, ph = _W - _PAD_L - _PAD_R, _H - _PAD_T - _PAD_B

    def sx(v):
        return _PAD_L + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return _PAD_T + (1 - (v - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<text x="{_W / 2}" y="22" text-anchor="middle" font-size="15" font-family="sans-serif">{_esc(title)}</text>',
           f'<rect x="{_PAD_L}" y="{_PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for k, (label, y) in enumerate(series.items()):
        y = np.clip(np.asarray(y, float), y0, y1)
        segs, cur = [], []
        for xi, yi in zip(x, y):
            if np.isfinite(xi) and np.isfinite(yi):
                cur.append(f"{_num(sx(xi))},{_num(sy(yi))}")
            elif cur:
                segs.append(cur)
                cur = []
        if cur:
            segs.append(cur)
        color = _PALETTE[k % len(_PALETTE)]
        for s in segs:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(s)}"/>')
        out.append(f'<text x="{_W - _PAD_R - 5}" y="{_PAD_T + 16 + 16 * k}" text-anchor="end" font-size="12" '
                   f'font-family="sans-serif" fill="{color}">{_esc(label)}</text>')
    out += [f'<text x="{_PAD_L}" y="{_H - 30}" font-size="11" font-family="sans-serif">{_num(x0)}</text>',
            f'<text x="{_W - _PAD_R}" y="{_H - 30}" text-anchor="end" font-size="11" font-family="sans-serif">{_num(x1)}</text>',
            f'<text x="{_W / 2}" y="{_H - 10}" text-anchor="middle" font-size="12" font-family="sans-serif">{_esc(xlabel)}</text>',
            f'<text x="{_PAD_L - 5}" y="{_PAD_T + 10}" text-anchor="end" font-size="11" font-family="sans-serif">{_num(y1)}</text>',
            f'<text x="{_PAD_L - 5}" y="{_PAD_T + ph}" text-anchor="end" font-size="11" font-family="sans-serif">{_num(y0)}</text>',
            f'<text x="14" y="{_PAD_T + ph / 2}" font-size="12" font-family="sans-serif" '
            f'transform="rotate(-90 14 {_PAD_T + ph / 2})" text-anchor="middle">{_esc(ylabel)}</text>',
            "</svg>"]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def _color(t):
    # linear blue -> white -> red
    t = float(np.clip(t, 0, 1))
    if t < 0.5:
        u = t / 0.5
        r, g, b = 40 + u * 215, 70 + u * 185, 160 + u * 95
    else:
        u = (t - 0.5) / 0.5
        r, g, b = 255 - u * 63, 255 - u * 198, 255 - u * 212
    return "#%02x%02x%02x" % (int(round(r)), int(round(g)), int(round(b)))


def heatmap(path, values, extent, title="", max_cells=128):
    """SVG heatmap of a 2D array indexed [ix, iy]; NaN cells are grey.  Min/max annotated."""
    v = np.asarray(values, float)
    step_x = max(1, int(np.ceil(v.shape[0] / max_cells)))
    step_y = max(1, int(np.ceil(v.shape[1] / max_cells)))
    v = v[::step_x, ::step_y]
    lo, hi = _finite_range(v)
    nx, ny = v.shape
    pw, ph = _W - _PAD_L - _PAD_R - 60, _H - _PAD_T - _PAD_B
    cw, ch = pw / nx, ph / ny
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<text x="{_W / 2}" y="22" text-anchor="middle" font-size="15" font-family="sans-serif">{_esc(title)}</text>']
    for i in range(nx):
        for j in range(ny):
            val = v[i, j]
            fill = "#bbbbbb" if not np.isfinite(val) else _color((val - lo) / (hi - lo))
            out.append(f'<rect x="{_num(_PAD_L + i * cw)}" y="{_num(_PAD_T + (ny - 1 - j) * ch)}" '
                       f'width="{_num(cw + 0.05)}" height="{_num(ch + 0.05)}" fill="{fill}"/>')
    (x0, x1), (y0, y1) = extent
    bar_x = _PAD_L + pw + 20
    for k in range(50):
        out.append(f'<rect x="{bar_x}" y="{_num(_PAD_T + ph * (1 - (k + 1) / 50))}" width="15" '
                   f'height="{_num(ph / 50 + 0.05)}" fill="{_color((k + 0.5) / 50)}"/>')
    out += [f'<text x="{bar_x + 18}" y="{_PAD_T + 10}" font-size="11" font-family="sans-serif">max {_num(hi)}</text>',
            f'<text x="{bar_x + 18}" y="{_PAD_T + ph}" font-size="11" font-family="sans-serif">min {_num(lo)}</text>',
            f'<text x="{_PAD_L}" y="{_H - 30}" font-size="11" font-family="sans-serif">x {_num(x0)} .. {_num(x1)}, '
            f'y {_num(y0)} .. {_num(y1)}</text>',
            "</svg>"]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
