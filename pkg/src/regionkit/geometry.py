"""Bounding boxes, masks, and the geometry used by region matching.

Normalized boxes live on a fixed 1000x1000 grid so that coordinates written
into markup are resolution independent. A box covers the half-open region
[x1, x2) x [y1, y2): the area of [0, 0, 10, 10] is 100, and two boxes that
merely share an edge do not intersect.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .errors import DegenerateBoxError, InvalidBoxError

# Normalized coordinates are integers in [0, COORD_MAX].
COORD_MAX = 999
GRID_SIZE = 1000


@dataclass(frozen=True, order=True)
class BBox:
    """Axis-aligned box on the normalized grid."""

    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise InvalidBoxError(f"{name} must be an int, got {value!r}")
            if not 0 <= value <= COORD_MAX:
                raise InvalidBoxError(
                    f"{name}={value} outside the normalized range [0, {COORD_MAX}]"
                )
        if self.x1 >= self.x2 or self.y1 >= self.y2:
            raise DegenerateBoxError(
                f"box ({self.x1}, {self.y1}, {self.x2}, {self.y2}) has no area"
            )

    @property
    def area(self) -> int:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True, order=True)
class PixelBox:
    """Axis-aligned box in pixel coordinates of a source image."""

    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise InvalidBoxError(f"{name} must be an int, got {value!r}")
            if value < 0:
                raise InvalidBoxError(f"{name}={value} is negative")
        if self.x1 >= self.x2 or self.y1 >= self.y2:
            raise DegenerateBoxError(
                f"pixel box ({self.x1}, {self.y1}, {self.x2}, {self.y2}) has no area"
            )

    @property
    def area(self) -> int:
        return (self.x2 - self.x1) * (self.y2 - self.y1)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two normalized boxes, in [0, 1]."""
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def normalize_box(box: PixelBox, width: int, height: int) -> BBox:
    """Map a pixel box onto the normalized grid.

    Each axis scales independently by floor(v * 1000 / dim), clamped to
    COORD_MAX so that v == dim lands on the last cell. A box thinner than
    one grid cell collapses and is rejected.
    """
    if width <= 0 or height <= 0:
        raise InvalidBoxError(f"image size {width}x{height} is not positive")
    if box.x2 > width or box.y2 > height:
        raise InvalidBoxError(
            f"pixel box ({box.x1}, {box.y1}, {box.x2}, {box.y2}) exceeds "
            f"the {width}x{height} image"
        )

    def scale(v: int, dim: int) -> int:
        return min(COORD_MAX, (v * GRID_SIZE) // dim)

    x1, x2 = scale(box.x1, width), scale(box.x2, width)
    y1, y2 = scale(box.y1, height), scale(box.y2, height)
    if x1 >= x2 or y1 >= y2:
        raise DegenerateBoxError(
            f"pixel box ({box.x1}, {box.y1}, {box.x2}, {box.y2}) collapses "
            f"to zero area on the normalized grid"
        )
    return BBox(x1, y1, x2, y2)


class MaskGrid:
    """Binary occupancy grid stored row-major; any nonzero cell counts as set."""

    __slots__ = ("width", "height", "_cells")

    def __init__(self, width: int, height: int, cells: Iterable[int] | np.ndarray):
        if width <= 0 or height <= 0:
            raise ValueError(f"mask size {width}x{height} is not positive")
        arr = np.asarray(cells).ravel()
        if arr.size != width * height:
            raise ValueError(
                f"expected {width * height} cells for a {width}x{height} mask, "
                f"got {arr.size}"
            )
        object.__setattr__(self, "width", width)
        object.__setattr__(self, "height", height)
        object.__setattr__(self, "_cells", (arr != 0).astype(np.uint8))

    def __setattr__(self, name, value):
        raise AttributeError("MaskGrid is immutable")

    @classmethod
    def from_array(cls, array: np.ndarray | Sequence[Sequence[int]]) -> "MaskGrid":
        arr = np.asarray(array)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        return cls(arr.shape[1], arr.shape[0], arr)

    def to_array(self) -> np.ndarray:
        return self._cells.reshape(self.height, self.width).copy()

    def count_set(self) -> int:
        return int(self._cells.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, MaskGrid):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and bool(np.array_equal(self._cells, other._cells))
        )


def mask_to_boxes(mask: MaskGrid, min_area: int = 4) -> list[PixelBox]:
    """Tight boxes around 4-connected components with at least min_area pixels.

    Boxes come back ordered by (y1, x1), so output is deterministic for a
    given mask regardless of how labeling numbers the components.
    """
    grid = mask.to_array()
    labels, count = ndimage.label(grid)
    if count == 0:
        return []
    sizes = np.bincount(labels.ravel())
    boxes = []
    for index, slices in enumerate(ndimage.find_objects(labels), start=1):
        if slices is None or sizes[index] < min_area:
            continue
        ys, xs = slices
        boxes.append(PixelBox(int(xs.start), int(ys.start), int(xs.stop), int(ys.stop)))
    boxes.sort(key=lambda b: (b.y1, b.x1, b.y2, b.x2))
    return boxes
