import numpy as np
import pytest

from carloc.core.errors import OutOfBounds
from carloc.core.geometry import BBox
from carloc.viz.render import GT_COLOR, PRED_COLOR, render_cam_panel, render_overlay, save_raster


def _image(h=40, w=60):
    return np.full((h, w, 3), 90, dtype=np.uint8)


def test_overlay_keeps_size_and_input():
    image = _image()
    out = render_overlay(image, BBox(5, 5, 20, 10))
    assert out.shape == image.shape
    assert (image == 90).all()


def test_prediction_border_carries_colour():
    out = render_overlay(_image(), BBox(5, 6, 20, 10))
    for y, x in [(6, 5), (6, 24), (15, 5), (15, 24), (7, 6), (10, 5)]:
        assert tuple(out[y, x]) == PRED_COLOR
    assert tuple(out[10, 15]) == (90, 90, 90)


def test_ground_truth_drawn_last():
    box = BBox(5, 5, 20, 10)
    out = render_overlay(_image(), box, gt=box)
    assert tuple(out[5, 5]) == GT_COLOR
    assert not (out == np.array(PRED_COLOR, dtype=np.uint8)).all(axis=2).any()


def test_overlay_rejects_outside_box():
    with pytest.raises(OutOfBounds):
        render_overlay(_image(), BBox(50, 5, 20, 10))


def test_panel_layouts():
    maps = [np.full((10, 12), 200, dtype=np.uint8) for _ in range(8)]
    assert render_cam_panel(maps, 8).shape == (10, 96)

    single = np.arange(30, dtype=np.uint8).reshape(5, 6)
    np.testing.assert_array_equal(render_cam_panel([single], 3), single)

    panel = render_cam_panel(maps[:5], 2)
    assert panel.shape == (30, 24)
    assert not panel[20:30, 12:24].any()
    assert (panel[20:30, 0:12] == 200).all()


def test_panel_pads_smaller_cells():
    panel = render_cam_panel([np.full((4, 4), 255, dtype=np.uint8), np.full((8, 6), 255, dtype=np.uint8)], 2)
    assert panel.shape == (8, 12)
    assert not panel[4:8, 0:6].any()


def test_save_raster(tmp_path):
    path = save_raster(render_overlay(_image(), BBox(1, 1, 5, 5)), tmp_path / "o.png")
    assert path.exists()
