from __future__ import annotations

import numpy as np
import pytest

from layoutloop.core import ClassRegistry, Element, LayoutDoc, default_registry


@pytest.fixture(scope="session")
def registry() -> ClassRegistry:
    return default_registry()


def make_doc(*specs, canvas=(360, 800), registry=None) -> LayoutDoc:
    """Quick doc builder: specs are (NAME, x, y, w, h[, label]) tuples."""
    registry = registry or default_registry()
    elements = []
    for spec in specs:
        name, x, y, w, h = spec[:5]
        label = spec[5] if len(spec) > 5 else None
        elements.append(Element(registry.by_name(name), x, y, w, h, label))
    return LayoutDoc(canvas[0], canvas[1], tuple(elements))


def random_valid_doc(
    rng: np.random.Generator,
    registry=None,
    canvas=(360, 800),
    max_elements: int = 12,
    labels: bool = True,
) -> LayoutDoc:
    """Uniformly messy but valid layout: arbitrary in-bounds integer geometry."""
    registry = registry or default_registry()
    w_cap, h_cap = canvas
    classes = registry.classes
    count = int(rng.integers(0, max_elements + 1))
    elements = []
    for _ in range(count):
        cls = classes[int(rng.integers(0, len(classes)))]
        w = int(rng.integers(1, w_cap + 1))
        h = int(rng.integers(1, h_cap + 1))
        x = int(rng.integers(0, w_cap - w + 1))
        y = int(rng.integers(0, h_cap - h + 1))
        label = None
        if labels and rng.random() < 0.25:
            chars = 'abcXYZ09 _-"\\\''
            label = "".join(chars[int(rng.integers(0, len(chars)))] for _ in range(int(rng.integers(0, 8))))
        elements.append(Element(cls, x, y, w, h, label))
    return LayoutDoc(w_cap, h_cap, tuple(elements))
