"""Static figure output: grayscale and signed-colormap PNGs, quiver SVGs.

Rendering is deterministic: fixed palettes, no timestamps, and a sidecar
text file recording the value range used for normalization.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

Array = np.ndarray

STYLE_KINDS = {
    "gray": ("magnitude", "label"),
    "signed-colormap": ("velocity", "phase"),
    "quiver": ("velocity",),
}


class RenderError(ValueError):
    pass


def check_style(style: str, kind: str) -> None:
    if style not in STYLE_KINDS:
        raise RenderError(f"unknown style {style!r}")
    if kind not in STYLE_KINDS[style]:
        raise RenderError(f"style {style!r} is incompatible with field kind {kind!r}")


def _write_range_sidecar(out_path, vmin: float, vmax: float) -> None:
    Path(str(out_path) + ".range.txt").write_text(f"vmin {vmin:.12g}\nvmax {vmax:.12g}\n")


def render_gray(values: Array, out_path) -> None:
    """Grayscale PNG normalized to the field's own range."""
    values = np.asarray(values, dtype=float)
    vmin, vmax = float(values.min()), float(values.max())
    span = vmax - vmin if vmax > vmin else 1.0
    img = np.round(255.0 * (values - vmin) / span).astype(np.uint8)
    Image.fromarray(img, mode="L").save(out_path, format="PNG")
    _write_range_sidecar(out_path, vmin, vmax)


def signed_colormap(values: Array, vmax: float) -> Array:
    """Blue-white-red palette, symmetric about zero; returns uint8 RGB."""
    t = np.clip(np.asarray(values, dtype=float) / vmax, -1.0, 1.0) if vmax > 0 else np.zeros_like(values)
    rgb = np.empty(t.shape + (3,), dtype=np.uint8)
    pos = np.clip(t, 0.0, 1.0)
    neg = np.clip(-t, 0.0, 1.0)
    rgb[..., 0] = np.round(255 * (1.0 - neg))
    rgb[..., 1] = np.round(255 * (1.0 - np.abs(t)))
    rgb[..., 2] = np.round(255 * (1.0 - pos))
    return rgb


def render_signed(values: Array, out_path) -> None:
    """Signed-colormap PNG: negative blue, zero white, positive red."""
    values = np.asarray(values, dtype=float)
    vmax = float(np.max(np.abs(values)))
    Image.fromarray(signed_colormap(values, vmax), mode="RGB").save(out_path, format="PNG")
    _write_range_sidecar(out_path, -vmax, vmax)


def render_quiver(vx: Array, vz: Array, out_path, stride: int = 4, scale: float | None = None) -> None:
    """Arrow plot of a planar velocity field as SVG; arrows are subsampled on
    a stride grid and degenerate (zero-length) arrows are omitted."""
    vx = np.asarray(vx, dtype=float)
    vz = np.asarray(vz, dtype=float)
    if vx.shape != vz.shape:
        raise RenderError(f"component shapes differ: {vx.shape} vs {vz.shape}")
    n1, n2 = vx.shape
    vmax = float(np.max(np.hypot(vx, vz)))
    if scale is None:
        scale = 0.9 * stride / vmax if vmax > 0 else 1.0
    cell = 8  # SVG pixels per image pixel
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{n2 * cell}" height="{n1 * cell}" '
        f'viewBox="0 0 {n2 * cell} {n1 * cell}">',
        f'<rect width="{n2 * cell}" height="{n1 * cell}" fill="white"/>',
    ]
    for i in range(0, n1, stride):
        for j in range(0, n2, stride):
            dx, dz = vx[i, j], vz[i, j]
            if dx == 0.0 and dz == 0.0:
                continue
            # image axis 0 = x (rows, SVG y), axis 1 = z (cols, SVG x)
            x0, y0 = (j + 0.5) * cell, (i + 0.5) * cell
            x1 = x0 + scale * dz * cell
            y1 = y0 + scale * dx * cell
            lines.append(
                f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
                'stroke="black" stroke-width="1"/>'
            )
            lines.append(f'<circle cx="{x1:.2f}" cy="{y1:.2f}" r="1.5" fill="black"/>')
    lines.append("</svg>")
    Path(out_path).write_text("\n".join(lines) + "\n")
    _write_range_sidecar(out_path, 0.0, vmax)


def render(values: Array, kind: str, style: str, out_path, values_y: Array | None = None, stride: int = 4) -> None:
    """Dispatch on style after checking style/kind compatibility."""
    check_style(style, kind)
    if style == "gray":
        render_gray(values, out_path)
    elif style == "signed-colormap":
        render_signed(values, out_path)
    else:
        if values_y is None:
            raise RenderError("quiver rendering needs both velocity components")
        render_quiver(values, values_y, out_path, stride=stride)
