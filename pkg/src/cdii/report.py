"""CSV tables and binary portable-pixmap (P6) heatmaps.

Color map: diverging blue-white-red, symmetric about zero. A value ``v`` is
scaled to ``s = v / max|field|`` in ``[-1, 1]``; ``s = -1`` is pure blue
``(0, 0, 255)``, ``0`` is white and ``+1`` pure red ``(255, 0, 0)``, with
linear ramps in between. NaN pixels are black. Row 0 of the image is the
largest ``x_2``; 3D fields are shown through their middle slice along ``x_3``.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ContainerError

__all__ = ["colormap", "write_ppm", "write_heatmaps", "write_csv"]


def colormap(s: np.ndarray) -> np.ndarray:
    """Map ``s`` in ``[-1, 1]`` to uint8 RGB, shape ``s.shape + (3,)``."""
    s = np.clip(np.nan_to_num(s, nan=0.0), -1.0, 1.0)
    pos, neg = np.clip(s, 0, 1), np.clip(-s, 0, 1)
    rgb = np.stack([1.0 - neg, 1.0 - pos - neg, 1.0 - pos], axis=-1)
    return np.round(255 * rgb).astype(np.uint8)


def _plane(values: np.ndarray) -> np.ndarray:
    if values.ndim == 3:
        values = values[:, :, values.shape[2] // 2]
    return values.T[::-1]  # x1 to the right, x2 upward


def write_ppm(path, values: np.ndarray, scale: float | None = None) -> Path:
    """Write one scalar node array as a heatmap."""
    img = _plane(np.asarray(values, dtype=float))
    finite = img[np.isfinite(img)]
    scale = scale or (float(np.max(np.abs(finite))) if finite.size else 1.0) or 1.0
    rgb = colormap(img / scale)
    rgb[~np.isfinite(img)] = 0
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(f"P6\n{rgb.shape[1]} {rgb.shape[0]}\n255\n".encode())
            fh.write(rgb.tobytes())
    except OSError as exc:
        raise ContainerError(f"cannot write {path}: {exc}") from exc
    return path


def write_heatmaps(out_dir, name: str, f) -> list[Path]:
    """One pixmap per component of a field, named ``name[_i[_j]].ppm``."""
    out_dir = Path(out_dir)
    grid_n = f.grid.n
    v = f.values
    comp = v.shape[grid_n:]
    paths = []
    for idx in np.ndindex(*comp) if comp else [()]:
        suffix = "".join(f"_{i + 1}" for i in idx)
        paths.append(write_ppm(out_dir / f"{name}{suffix}.ppm", v[(Ellipsis,) + idx]))
    return paths


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([f"{x:.10g}" if isinstance(x, float) else x for x in r])
    except OSError as exc:
        raise ContainerError(f"cannot write {path}: {exc}") from exc
    return path
