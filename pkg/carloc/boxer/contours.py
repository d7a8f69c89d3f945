"""Border following on binary images (OpenCV's Suzuki-Abe implementation).

Foreground is 8-connected. A contour's ``region_area`` is the pixel count of
the connected component it bounds, not the area of the traced polygon.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import cv2
import numpy as np

from carloc.core.errors import EmptyContourSet
from carloc.core.geometry import BBox


@dataclass(frozen=True)
class Contour:
    points: Tuple[Tuple[int, int], ...]
    region_area: int
    is_outer: bool = True

    @property
    def origin(self) -> Tuple[int, int]:
        """(row, col) of the first component pixel in raster order: its topmost, then leftmost, border point."""

        top = min(y for _, y in self.points)
        left = min(x for x, y in self.points if y == top)
        return top, left


def find_contours(b: np.ndarray) -> List[Contour]:
    """Outer borders of every 8-connected component, ordered by component origin."""

    binary = (np.asarray(b) > 0).astype(np.uint8)
    if not binary.any():
        return []
    # one pixel of background around the image so borders touching the edge are traced
    padded = cv2.copyMakeBorder(binary, 1, 1, 1, 1, cv2.BORDER_CONSTANT, value=0)
    contours, hierarchy = cv2.findContours(padded, cv2.RETR_CCOMP, cv2.CHAIN_APPROX_NONE, offset=(-1, -1))
    _, labels, stats, _ = cv2.connectedComponentsWithStats(binary, connectivity=8)

    found: List[Contour] = []
    for contour, links in zip(contours, hierarchy[0]):
        # in the two-level hierarchy, outer borders are the ones without a parent
        if links[3] != -1:
            continue
        points = tuple((int(x), int(y)) for x, y in contour[:, 0, :])
        x, y = points[0]
        area = int(stats[labels[y, x], cv2.CC_STAT_AREA])
        found.append(Contour(points=points, region_area=area, is_outer=True))
    found.sort(key=lambda c: c.origin)
    return found


def largest_contour(cs: Sequence[Contour]) -> Contour:
    """Maximal ``region_area``; ties go to the contour whose component comes first in raster order."""

    if not cs:
        raise EmptyContourSet("no contours to choose from")
    return min(cs, key=lambda c: (-c.region_area, c.origin))


def bounding_rect(c: Contour) -> BBox:
    pts = np.array(c.points, dtype=np.int32).reshape(-1, 1, 2)
    x, y, w, h = cv2.boundingRect(pts)
    return BBox(int(x), int(y), int(w), int(h))
