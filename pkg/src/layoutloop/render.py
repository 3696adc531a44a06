"""Deterministic rasterization of layout docs to RGBA bitmaps and PNG bytes."""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import (
    ClassRegistry,
    ElementClass,
    LayoutDoc,
    default_colors,
    default_registry,
    load_class_config,
    validate_layout,
)

_BORDER_FACTOR = 0.6
_PNG_COMPRESS_LEVEL = 6

RGB = tuple[int, int, int]


@dataclass(frozen=True)
class Bitmap:
    """Row-major RGBA pixel buffer."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self) -> None:
        expected = self.width * self.height * 4
        if len(self.pixels) != expected:
            raise ValueError(f"pixel buffer is {len(self.pixels)} bytes, expected {expected}")

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width, 4)


class ColorLegend:
    """Class-id to fill color mapping, total over a registry, colors pairwise distinct."""

    def __init__(
        self,
        registry: ClassRegistry,
        colors: Mapping[int, RGB],
        background: RGB = (255, 255, 255),
    ) -> None:
        missing = [cls.name for cls in registry if cls.id not in colors]
        if missing:
            raise ValueError(f"legend missing colors for classes: {missing}")
        assigned = [tuple(colors[cls.id]) for cls in registry]
        if len(set(assigned)) != len(assigned):
            raise ValueError("legend colors must be pairwise distinct")
        self.registry = registry
        self.background: RGB = tuple(background)  # type: ignore[assignment]
        self._colors: dict[int, RGB] = {cls.id: tuple(colors[cls.id]) for cls in registry}  # type: ignore[misc]

    def color_for(self, cls: ElementClass | int) -> RGB:
        class_id = cls.id if isinstance(cls, ElementClass) else cls
        return self._colors[class_id]

    def border_for(self, cls: ElementClass | int) -> RGB:
        r, g, b = self.color_for(cls)
        return (int(r * _BORDER_FACTOR), int(g * _BORDER_FACTOR), int(b * _BORDER_FACTOR))

    def colors(self) -> dict[int, RGB]:
        return dict(self._colors)


def default_legend(registry: ClassRegistry | None = None) -> ColorLegend:
    registry = registry or default_registry()
    return ColorLegend(registry, default_colors())


def legend_from_config(path, background: RGB = (255, 255, 255)) -> tuple[ClassRegistry, ColorLegend]:
    registry, colors = load_class_config(path)
    return registry, ColorLegend(registry, colors, background)


def render(doc: LayoutDoc, legend: ColorLegend | None = None, scale: int = 1, *, lenient: bool = False) -> Bitmap:
    """Paint background, then each element as a solid rect with a 1px darker border,
    in element order. Pure function of its inputs; identical inputs give identical bytes.

    Invalid docs are rejected unless ``lenient=True``, which clips out-of-bounds
    rectangles instead (for looking at raw model output).
    """
    legend = legend or default_legend()
    if not isinstance(scale, int) or scale < 1:
        raise ValueError(f"scale must be a positive integer, got {scale!r}")
    if not lenient:
        report = validate_layout(doc)
        if not report.ok:
            first = report.violations[0]
            raise ValueError(f"invalid layout (element {first.index}: {first.message}); validate or use lenient mode")

    width = doc.canvas_w * scale
    height = doc.canvas_h * scale
    arr = np.empty((height, width, 4), dtype=np.uint8)
    arr[..., 0] = legend.background[0]
    arr[..., 1] = legend.background[1]
    arr[..., 2] = legend.background[2]
    arr[..., 3] = 255

    for el in doc.elements:
        x0, y0 = el.x, el.y
        x1, y1 = el.x + el.w, el.y + el.h
        if lenient:
            x0, y0 = max(x0, 0), max(y0, 0)
            x1, y1 = min(x1, doc.canvas_w), min(y1, doc.canvas_h)
            if x1 <= x0 or y1 <= y0:
                continue
        px0, py0, px1, py1 = x0 * scale, y0 * scale, x1 * scale, y1 * scale
        arr[py0:py1, px0:px1, :3] = legend.border_for(el.cls)
        if px1 - px0 > 2 and py1 - py0 > 2:
            arr[py0 + 1 : py1 - 1, px0 + 1 : px1 - 1, :3] = legend.color_for(el.cls)

    return Bitmap(width, height, arr.tobytes())


def _chunk(tag: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
    )


def encode_png(bitmap: Bitmap) -> bytes:
    """Minimal deterministic PNG encode: 8-bit RGBA, filter 0, fixed zlib level,
    no ancillary chunks (so no timestamps and byte-identical re-encodes)."""
    ihdr = struct.pack(">IIBBBBB", bitmap.width, bitmap.height, 8, 6, 0, 0, 0)
    stride = bitmap.width * 4
    raw = b"".join(
        b"\x00" + bitmap.pixels[y * stride : (y + 1) * stride] for y in range(bitmap.height)
    )
    idat = zlib.compress(raw, _PNG_COMPRESS_LEVEL)
    return b"\x89PNG\r\n\x1a\n" + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")


def render_png(doc: LayoutDoc, legend: ColorLegend | None = None, scale: int = 1, *, lenient: bool = False) -> bytes:
    return encode_png(render(doc, legend, scale, lenient=lenient))
