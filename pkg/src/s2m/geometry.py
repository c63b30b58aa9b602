"""Box prompt type and rectangle helpers."""

from __future__ import annotations

from dataclasses import dataclass

from .validation import ValidationError


@dataclass(frozen=True)
class BoxPrompt:
    """Axis-aligned pixel rectangle with a confidence in [0, 1].

    (x0, y0) is the inclusive top-left corner, (x1, y1) the exclusive
    bottom-right corner.
    """

    x0: int
    y0: int
    x1: int
    y1: int
    confidence: float = 1.0

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValidationError(
                f"degenerate box ({self.x0},{self.y0},{self.x1},{self.y1})"
            )
        if self.x0 < 0 or self.y0 < 0:
            raise ValidationError("box coordinates must be non-negative")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def check_within(self, width: int, height: int) -> "BoxPrompt":
        if self.x1 > width or self.y1 > height:
            raise ValidationError(
                f"box ({self.x0},{self.y0},{self.x1},{self.y1}) exceeds "
                f"{width}x{height} frame"
            )
        return self


def box_iou(a: BoxPrompt, b: BoxPrompt) -> float:
    """Intersection-over-union of two pixel rectangles."""
    ix = max(0, min(a.x1, b.x1) - max(a.x0, b.x0))
    iy = max(0, min(a.y1, b.y1) - max(a.y0, b.y0))
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union if union else 0.0


def merge_boxes(a: BoxPrompt, b: BoxPrompt, confidence: float) -> BoxPrompt:
    """Joint bounding box of two rectangles."""
    return BoxPrompt(
        x0=min(a.x0, b.x0),
        y0=min(a.y0, b.y0),
        x1=max(a.x1, b.x1),
        y1=max(a.y1, b.y1),
        confidence=confidence,
    )
