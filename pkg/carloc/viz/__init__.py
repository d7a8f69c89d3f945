"""Box overlays and CAM panels."""

from carloc.viz.render import render_cam_panel, render_overlay, save_raster

__all__ = ["render_cam_panel", "render_overlay", "save_raster"]
