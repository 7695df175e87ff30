"""Frame and clip containers.

A Frame is a luma plane in [0, 1] plus optional 4:2:0 chroma; a VideoClip is an
ordered list of same-geometry frames. Both are treated as immutable by every
operation in the package.
"""

from dataclasses import dataclass, field

import numpy as np

from .tensor_core import DEFAULT_DTYPE


def _clamped_plane(data) -> np.ndarray:
    plane = np.asarray(data, dtype=DEFAULT_DTYPE)
    if plane.ndim != 2:
        raise ValueError(f"plane must be 2D, got shape {plane.shape}")
    return np.clip(plane, 0.0, 1.0)


@dataclass
class Frame:
    """Luma plane (H, W) in [0, 1], optionally with two quarter-res chroma planes."""

    luma: np.ndarray
    chroma: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        self.luma = _clamped_plane(self.luma)
        if self.chroma is not None:
            u, v = self.chroma
            expect = (-(-self.height // 2), -(-self.width // 2))
            u, v = _clamped_plane(u), _clamped_plane(v)
            if u.shape != expect or v.shape != expect:
                raise ValueError(
                    f"chroma planes must be {expect} for a {self.height}x{self.width} frame, "
                    f"got {u.shape} and {v.shape}")
            self.chroma = (u, v)

    @property
    def height(self) -> int:
        return self.luma.shape[0]

    @property
    def width(self) -> int:
        return self.luma.shape[1]


@dataclass
class VideoClip:
    """Ordered frames sharing one geometry. frame_rate is informational only."""

    frames: list[Frame] = field(default_factory=list)
    frame_rate: tuple[int, int] = (30, 1)

    def __post_init__(self):
        if not self.frames:
            raise ValueError("a clip needs at least one frame")
        w, h = self.frames[0].width, self.frames[0].height
        for i, f in enumerate(self.frames):
            if (f.width, f.height) != (w, h):
                raise ValueError(f"frame {i} is {f.width}x{f.height}, expected {w}x{h}")

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i) -> Frame:
        return self.frames[i]

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    def window(self, center: int, size: int = 5) -> list[Frame]:
        """Frames centred on `center`; indices past either end replicate the edge frame."""
        half = size // 2
        last = len(self.frames) - 1
        return [self.frames[min(max(center + k, 0), last)] for k in range(-half, half + 1)]
