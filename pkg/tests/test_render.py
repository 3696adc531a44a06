from __future__ import annotations

import io
from pathlib import Path

import numpy as np
import pytest

from layoutloop.core import LayoutDoc
from layoutloop.render import Bitmap, ColorLegend, default_legend, encode_png, render

from conftest import make_doc, random_valid_doc

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="module")
def legend():
    return default_legend()


class TestLegend:
    def test_total_over_registry(self, registry):
        colors = {cls.id: (cls.id, 0, 0) for cls in registry}
        del colors[3]
        with pytest.raises(ValueError, match="missing colors"):
            ColorLegend(registry, colors)

    def test_pairwise_distinct(self, registry):
        colors = {cls.id: (1, 2, 3) for cls in registry}
        with pytest.raises(ValueError, match="pairwise distinct"):
            ColorLegend(registry, colors)

    def test_border_is_darker(self, legend, registry):
        fill = legend.color_for(registry.by_name("BUTTON"))
        border = legend.border_for(registry.by_name("BUTTON"))
        assert all(b <= f for b, f in zip(border, fill))
        assert border != fill


class TestRender:
    def test_empty_doc_uniform_background(self, legend):
        bm = render(LayoutDoc(20, 10, ()), legend)
        arr = bm.to_array()
        assert (arr[..., :3] == np.array(legend.background)).all()
        assert (arr[..., 3] == 255).all()

    def test_full_cover_fill_inside_border(self, legend, registry):
        doc = make_doc(("BUTTON", 0, 0, 360, 800))
        arr = render(doc, legend).to_array()
        fill = legend.color_for(registry.by_name("BUTTON"))
        assert (arr[1:-1, 1:-1, :3] == np.array(fill)).all()
        assert tuple(arr[0, 0, :3]) == legend.border_for(registry.by_name("BUTTON"))

    def test_determinism(self, legend):
        rng = np.random.default_rng(2)
        doc = random_valid_doc(rng)
        assert render(doc, legend).pixels == render(doc, legend).pixels

    def test_z_order_occlusion(self, legend, registry):
        doc = make_doc(("BUTTON", 4, 4, 8, 8), ("TEXT", 0, 0, 16, 16), canvas=(16, 16))
        arr = render(doc, legend).to_array()
        button = np.array(legend.color_for(registry.by_name("BUTTON")))
        button_border = np.array(legend.border_for(registry.by_name("BUTTON")))
        occluded = arr[4:12, 4:12, :3]
        assert not (occluded == button).all(axis=-1).any()
        assert not (occluded == button_border).all(axis=-1).any()

    def test_scale_linearity(self, legend):
        doc = make_doc(("BUTTON", 1, 2, 3, 4), canvas=(10, 20))
        for k in (1, 2, 5):
            bm = render(doc, legend, scale=k)
            assert (bm.width, bm.height) == (10 * k, 20 * k)

    def test_invalid_doc_rejected(self, legend):
        doc = make_doc(("BUTTON", -4, 0, 10, 10))
        with pytest.raises(ValueError, match="invalid layout"):
            render(doc, legend)

    def test_lenient_clips(self, legend, registry):
        doc = make_doc(("BUTTON", -4, 0, 10, 10), canvas=(16, 16))
        arr = render(doc, legend, lenient=True).to_array()
        # pixels exist only inside the canvas; the clipped area carries the element
        assert tuple(arr[4, 3, :3]) == legend.color_for(registry.by_name("BUTTON"))

    def test_bad_scale(self, legend):
        with pytest.raises(ValueError, match="scale"):
            render(LayoutDoc(4, 4, ()), legend, scale=0)


class TestPng:
    def test_deterministic_encode(self, legend):
        bm = render(make_doc(("CARD", 2, 2, 10, 10), canvas=(16, 16)), legend)
        assert encode_png(bm) == encode_png(bm)

    def test_codec_round_trip(self, legend):
        from PIL import Image

        rng = np.random.default_rng(4)
        doc = random_valid_doc(rng, canvas=(40, 30))
        bm = render(doc, legend)
        im = Image.open(io.BytesIO(encode_png(bm)))
        assert im.size == (bm.width, bm.height)
        assert im.convert("RGBA").tobytes() == bm.pixels

    def test_one_pixel_bitmap(self):
        from PIL import Image

        bm = render(LayoutDoc(1, 1, ()), default_legend())
        im = Image.open(io.BytesIO(encode_png(bm)))
        assert im.size == (1, 1)

    def test_bitmap_length_checked(self):
        with pytest.raises(ValueError, match="pixel buffer"):
            Bitmap(2, 2, b"\x00" * 3)


class TestGolden:
    def test_small_scene(self, legend):
        doc = make_doc(
            ("BUTTON", 2, 2, 8, 6),
            ("TEXT", 6, 4, 10, 8),
            ("IMAGE", 0, 0, 4, 4),
            canvas=(24, 16),
        )
        assert encode_png(render(doc, legend, scale=4)) == (GOLDEN / "small_scene_x4.png").read_bytes()

    def test_mobile_scene(self, legend):
        doc = make_doc(
            ("APP_BAR", 0, 0, 360, 56),
            ("TEXT", 16, 72, 328, 32),
            ("CARD", 16, 120, 328, 160),
            ("IMAGE", 32, 136, 96, 96),
            ("BUTTON", 240, 240, 88, 32),
            ("NAV_BAR", 0, 744, 360, 56),
            ("FAB", 288, 664, 56, 56),
        )
        assert encode_png(render(doc, legend)) == (GOLDEN / "mobile_scene_x1.png").read_bytes()
