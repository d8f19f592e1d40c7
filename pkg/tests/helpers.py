"""Shared builders and independent oracles for the test suite."""

from pathlib import Path

from cbiou.geometry import BoundingBox

SCENES = Path(__file__).resolve().parent.parent / "scenes"


def random_box(rng, span=500.0, min_size=0.5, max_size=60.0):
    return BoundingBox(
        float(rng.uniform(-span, span)),
        float(rng.uniform(-span, span)),
        float(rng.uniform(min_size, max_size)),
        float(rng.uniform(min_size, max_size)),
    )


def grid_cells(box):
    """Unit cells covered by a box with integer corners (oracle substrate)."""
    x0, y0 = round(box.x), round(box.y)
    x1, y1 = round(box.x + box.w), round(box.y + box.h)
    assert abs(box.x - x0) < 1e-9 and abs(box.y - y0) < 1e-9
    assert abs(box.x + box.w - x1) < 1e-9 and abs(box.y + box.h - y1) < 1e-9
    return {(i, j) for i in range(x0, x1) for j in range(y0, y1)}


def grid_iou(a, b):
    """Exact IoU for integer-corner boxes by counting unit cells."""
    ca, cb = grid_cells(a), grid_cells(b)
    return len(ca & cb) / len(ca | cb)


def static_box(x, y, w=10.0, h=10.0):
    return BoundingBox(x, y, w, h)
